#![allow(dead_code)]

use std::path::Path;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use hexcollab_core::protocol::{decode, encode, JoinRequest, Payload, WireMessage};
use hexcollab_core::{GameConfig, GenConfig, Observation, Role};
use hexcollab_server::{LobbyConfig, PairingPolicy, RoomKind, Server, ServerConfig, Shared};
use tokio::net::TcpStream;
use tokio::time::timeout;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

pub const WAIT: Duration = Duration::from_secs(20);

/// A small-map config on an ephemeral port.
pub fn config(dir: &Path) -> ServerConfig {
    ServerConfig {
        port: 0,
        data_dir: dir.to_path_buf(),
        pool_size: 2,
        mapgen: GenConfig {
            rows: 14,
            cols: 14,
            town_count: 1,
            lake_count: 1,
            mountain_count: 1,
            card_count: 12,
            ..GenConfig::default()
        },
        game: GameConfig {
            card_count: 12,
            ..GameConfig::default()
        },
        ..ServerConfig::default()
    }
}

pub fn lobby(id: &str, policy: PairingPolicy, room: RoomKind, builtin_bot: bool) -> LobbyConfig {
    LobbyConfig {
        id: id.into(),
        policy,
        room,
        builtin_bot,
        scenario: None,
    }
}

pub async fn serve(config: ServerConfig) -> Server {
    hexcollab_server::start(config).await.unwrap()
}

pub async fn serve_with_ping(config: ServerConfig, ping: Duration) -> Server {
    let shared = Shared::new(config).unwrap().with_ping_interval(ping);
    hexcollab_server::app::start_shared(shared).await.unwrap()
}

/// A raw protocol client. Pings are answered unless `silent`.
pub struct Ws {
    socket: WebSocketStream<MaybeTlsStream<TcpStream>>,
    seq: u64,
    pub silent: bool,
}

impl Ws {
    pub async fn connect(url: &str) -> Ws {
        let (socket, _) = tokio_tungstenite::connect_async(url).await.unwrap();
        Ws {
            socket,
            seq: 0,
            silent: false,
        }
    }

    pub async fn send_raw(&mut self, text: &str) {
        self.socket.send(Message::Text(text.into())).await.unwrap();
    }

    pub async fn send(&mut self, p: Payload) -> u64 {
        self.seq += 1;
        let text = String::from_utf8(encode(&WireMessage::new(self.seq, p))).unwrap();
        self.send_raw(&text).await;
        self.seq
    }

    pub async fn join(&mut self, lobby: &str, name: &str, qualified: bool, bot: bool) -> u64 {
        self.send(Payload::JoinLobby(JoinRequest {
            lobby_id: lobby.into(),
            display_name: name.into(),
            leader_qualified: qualified,
            is_bot: bot,
            record: true,
        }))
        .await
    }

    /// Next message, or `None` once the server has closed the socket.
    pub async fn recv(&mut self) -> Option<Payload> {
        loop {
            let frame = timeout(WAIT, self.socket.next()).await.expect("server reply in time");
            let text = match frame {
                Some(Ok(Message::Text(t))) => t.to_string(),
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => return None,
                Some(Ok(_)) => continue,
            };
            let body = decode(text.as_bytes()).unwrap().body;
            match body {
                Payload::Ping { nonce } if !self.silent => {
                    self.send(Payload::Pong { nonce }).await;
                }
                Payload::Ping { .. } => {}
                other => return Some(other),
            }
        }
    }

    /// Skips messages until `pick` accepts one.
    pub async fn until<T>(&mut self, mut pick: impl FnMut(Payload) -> Option<T>) -> T {
        loop {
            let p = self.recv().await.expect("socket open");
            if let Some(t) = pick(p) {
                return t;
            }
        }
    }

    pub async fn paired(&mut self) -> (String, Role) {
        self.until(|p| match p {
            Payload::Paired { game_id, role } => Some((game_id, role)),
            _ => None,
        })
        .await
    }

    pub async fn sync(&mut self) -> Observation {
        self.until(|p| match p {
            Payload::StateSync { observation } => Some(*observation),
            _ => None,
        })
        .await
    }

    /// Sends an action and returns the reply to it: `Ok` on ack, the reason
    /// on rejection.
    pub async fn act(&mut self, action: hexcollab_core::Action) -> Result<(), String> {
        let seq = self.send(Payload::PlayerAction { action }).await;
        self.until(|p| match p {
            Payload::ActionAck { in_reply_to } if in_reply_to == seq => Some(Ok(())),
            Payload::Rejected {
                reason,
                in_reply_to: Some(r),
            } if r == seq => Some(Err(reason)),
            _ => None,
        })
        .await
    }

    pub async fn close(mut self) {
        let _ = self.socket.close(None).await;
    }
}
