//! Networked play over the websocket protocol.

use std::time::Duration;

use futures::{SinkExt, StreamExt};
use hexcollab_core::protocol::{decode, encode, JoinRequest, Payload, SeqCounter, WireMessage};
use hexcollab_core::{Action, Observation, Role};
use tokio::net::TcpStream;
use tokio::time::timeout;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async_with_config, MaybeTlsStream, WebSocketStream};

use crate::{ClientError, StepResult};

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

#[derive(Debug, Clone)]
pub struct ConnectOptions {
    /// Server base, e.g. `ws://127.0.0.1:8080`.
    pub endpoint: String,
    pub lobby_id: String,
    pub display_name: String,
    pub leader_qualified: bool,
    pub is_bot: bool,
    pub record: bool,
    /// Limit for connecting and for waiting on any single server reply.
    pub timeout: Duration,
}

impl ConnectOptions {
    pub fn bot(endpoint: impl Into<String>, lobby_id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            lobby_id: lobby_id.into(),
            display_name: name.into(),
            leader_qualified: true,
            is_bot: true,
            record: true,
            timeout: Duration::from_secs(90),
        }
    }
}

pub struct Session {
    conn: Conn,
    pub game_id: String,
    pub role: Role,
    observation: Observation,
    finished: Option<(u32, bool)>,
    prompts: Vec<String>,
}

enum Incoming {
    Msg(Payload),
    Closed,
}

impl Session {
    /// Joins a lobby and waits until paired and the first observation
    /// has arrived.
    pub async fn connect(opts: ConnectOptions) -> Result<Session, ClientError> {
        let url = format!("{}/ws/{}", opts.endpoint.trim_end_matches('/'), opts.lobby_id);
        let (socket, _) = timeout(opts.timeout, connect_async_with_config(url.as_str(), None, true))
            .await
            .map_err(|_| ClientError::Timeout)?
            .map_err(|e| ClientError::Connect(e.to_string()))?;
        let mut raw = Conn {
            socket,
            seq: SeqCounter::default(),
            limit: opts.timeout,
        };
        raw.send(Payload::JoinLobby(JoinRequest {
            lobby_id: opts.lobby_id.clone(),
            display_name: opts.display_name.clone(),
            leader_qualified: opts.leader_qualified,
            is_bot: opts.is_bot,
            record: opts.record,
        }))
        .await?;
        let mut paired = None;
        let mut prompts = Vec::new();
        let observation = loop {
            match raw.recv().await? {
                Incoming::Closed => return Err(ClientError::Closed),
                Incoming::Msg(p) => match p {
                    Payload::Rejected { reason, .. } => return Err(ClientError::Rejected(reason)),
                    Payload::Error { code, message } => return Err(ClientError::Server { code, message }),
                    Payload::Paired { game_id, role } => paired = Some((game_id, role)),
                    Payload::TutorialPrompt { text, .. } => prompts.push(text),
                    Payload::StateSync { observation } if paired.is_some() => break *observation,
                    _ => {}
                },
            }
        };
        let (game_id, role) = paired.expect("paired before sync");
        Ok(Session {
            conn: raw,
            game_id,
            role,
            observation,
            finished: None,
            prompts,
        })
    }

    pub fn observation(&self) -> &Observation {
        &self.observation
    }

    pub fn is_over(&self) -> bool {
        self.finished.is_some()
    }

    /// Tutorial prompts received so far.
    pub fn prompts(&self) -> &[String] {
        &self.prompts
    }

    fn result(&self, rejected: Option<String>) -> StepResult {
        let (score, abandoned) = self.finished.unwrap_or((self.observation.turn.score, false));
        StepResult {
            observation: self.observation.clone(),
            turn: self.observation.turn,
            game_over: self.finished.is_some(),
            abandoned,
            score,
            rejected,
        }
    }

    /// Waits until it is this role's turn (or the game ends) without acting.
    pub async fn wait_turn(&mut self) -> Result<StepResult, ClientError> {
        while !self.observation.is_my_turn() && self.finished.is_none() {
            self.pump().await?;
        }
        Ok(self.result(None))
    }

    /// Submits `action` and returns at this role's next decision point.
    /// A rejected action comes back in-band with the state unchanged.
    pub async fn step(&mut self, action: Action) -> Result<StepResult, ClientError> {
        if self.finished.is_some() {
            return Err(ClientError::GameOver);
        }
        let seq = self.conn.send(Payload::PlayerAction { action }).await?;
        let mut acked = false;
        loop {
            match self.next().await? {
                Incoming::Closed => {
                    self.finished.get_or_insert((self.observation.turn.score, true));
                    return Ok(self.result(None));
                }
                Incoming::Msg(p) => match p {
                    Payload::ActionAck { in_reply_to } if in_reply_to == seq => acked = true,
                    Payload::Rejected {
                        reason,
                        in_reply_to: Some(r),
                    } if r == seq => return Ok(self.result(Some(reason))),
                    Payload::StateSync { observation } => {
                        self.observation = *observation;
                        if acked && self.observation.is_my_turn() {
                            return Ok(self.result(None));
                        }
                    }
                    Payload::GameOver { score, abandoned } => {
                        self.finished = Some((score, abandoned));
                        return Ok(self.result(None));
                    }
                    other => self.side_message(other)?,
                },
            }
        }
    }

    /// Reads one message and applies it.
    async fn pump(&mut self) -> Result<(), ClientError> {
        match self.next().await? {
            Incoming::Closed => {
                self.finished.get_or_insert((self.observation.turn.score, true));
            }
            Incoming::Msg(Payload::StateSync { observation }) => self.observation = *observation,
            Incoming::Msg(Payload::GameOver { score, abandoned }) => self.finished = Some((score, abandoned)),
            Incoming::Msg(other) => self.side_message(other)?,
        }
        Ok(())
    }

    fn side_message(&mut self, p: Payload) -> Result<(), ClientError> {
        match p {
            Payload::Error { code, message } => Err(ClientError::Server { code, message }),
            Payload::TutorialPrompt { text, .. } => {
                self.prompts.push(text);
                Ok(())
            }
            _ => Ok(()),
        }
    }

    async fn next(&mut self) -> Result<Incoming, ClientError> {
        self.conn.recv().await
    }

    /// Leaves the game, which ends it for the other player.
    pub async fn leave(mut self) -> Result<(), ClientError> {
        let _ = self.conn.send(Payload::LeaveGame).await;
        let _ = self.conn.socket.close(None).await;
        Ok(())
    }
}

struct Conn {
    socket: Socket,
    seq: SeqCounter,
    limit: Duration,
}

impl Conn {
    /// Sends a message and returns the seq it was stamped with.
    async fn send(&mut self, p: Payload) -> Result<u64, ClientError> {
        let seq = self.seq.next();
        let text = String::from_utf8(encode(&WireMessage::new(seq, p))).expect("canonical json is utf-8");
        self.socket
            .send(Message::Text(text.into()))
            .await
            .map_err(|e| ClientError::Connect(e.to_string()))?;
        Ok(seq)
    }

    /// Next protocol message; pings are answered here.
    async fn recv(&mut self) -> Result<Incoming, ClientError> {
        loop {
            let frame = timeout(self.limit, self.socket.next())
                .await
                .map_err(|_| ClientError::Timeout)?;
            let bytes = match frame {
                None | Some(Err(_)) | Some(Ok(Message::Close(_))) => return Ok(Incoming::Closed),
                Some(Ok(Message::Text(t))) => t.as_bytes().to_vec(),
                Some(Ok(Message::Binary(b))) => b.to_vec(),
                Some(Ok(_)) => continue,
            };
            let msg = decode(&bytes).map_err(|e| ClientError::Protocol(e.to_string()))?;
            if let Payload::Ping { nonce } = msg.body {
                self.send(Payload::Pong { nonce }).await?;
                continue;
            }
            return Ok(Incoming::Msg(msg.body));
        }
    }
}
