//! The restricted instruction grammar spoken between scripted agents.
//!
//! ```text
//! instruction := clause (';' clause)*
//! clause      := "turn" ("left" | "right") | ("forward" | "backward") N
//!              | "goto" Q R | "card" Q R | "wait"
//! ```
//! Keywords are case-insensitive and whitespace is free.

use std::fmt;

use thiserror::Error;

use crate::hexgrid::HexCoord;

/// Longest run a single `forward N` / `backward N` may expand to.
pub const MAX_REPEAT: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Forward,
    Backward,
    TurnLeft,
    TurnRight,
    Goto(HexCoord),
    ToggleCardAt(HexCoord),
    Wait,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unparseable instruction clause {clause:?}: {reason}")]
pub struct ParseError {
    pub clause: String,
    pub reason: String,
}

pub fn parse_instruction(text: &str) -> Result<Vec<Command>, ParseError> {
    let mut out = Vec::new();
    let mut saw_clause = false;
    for raw in text.split([';', '\n']) {
        let clause = raw.trim();
        if clause.is_empty() {
            continue;
        }
        saw_clause = true;
        let lower = clause.to_ascii_lowercase();
        let words: Vec<&str> = lower.split_whitespace().collect();
        let err = |reason: &str| ParseError {
            clause: clause.to_string(),
            reason: reason.to_string(),
        };
        let coord = |q: &str, r: &str| -> Result<HexCoord, ParseError> {
            let q = q.parse().map_err(|_| err("bad coordinate"))?;
            let r = r.parse().map_err(|_| err("bad coordinate"))?;
            Ok(HexCoord::new(q, r))
        };
        match words.as_slice() {
            ["turn", "left"] => out.push(Command::TurnLeft),
            ["turn", "right"] => out.push(Command::TurnRight),
            [dir @ ("forward" | "backward"), n] => {
                let n: u32 = n.parse().map_err(|_| err("expected a step count"))?;
                if n == 0 || n > MAX_REPEAT {
                    return Err(err("step count must be between 1 and 64"));
                }
                let cmd = if *dir == "forward" {
                    Command::Forward
                } else {
                    Command::Backward
                };
                out.extend(std::iter::repeat_n(cmd, n as usize));
            }
            ["goto", q, r] => out.push(Command::Goto(coord(q, r)?)),
            ["card", q, r] => out.push(Command::ToggleCardAt(coord(q, r)?)),
            ["wait"] => out.push(Command::Wait),
            _ => return Err(err("not a recognized command")),
        }
    }
    if !saw_clause {
        return Err(ParseError {
            clause: String::new(),
            reason: "empty instruction".into(),
        });
    }
    Ok(out)
}

/// Renders commands back into grammar text, collapsing repeated steps.
pub fn render(commands: &[Command]) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < commands.len() {
        let c = commands[i];
        if matches!(c, Command::Forward | Command::Backward) {
            let mut n = 1;
            while i + n < commands.len() && commands[i + n] == c && n < MAX_REPEAT as usize {
                n += 1;
            }
            let word = if c == Command::Forward { "forward" } else { "backward" };
            parts.push(format!("{word} {n}"));
            i += n;
            continue;
        }
        parts.push(c.to_string());
        i += 1;
    }
    parts.join("; ")
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Forward => write!(f, "forward 1"),
            Command::Backward => write!(f, "backward 1"),
            Command::TurnLeft => write!(f, "turn left"),
            Command::TurnRight => write!(f, "turn right"),
            Command::Goto(c) => write!(f, "goto {} {}", c.q, c.r),
            Command::ToggleCardAt(c) => write!(f, "card {} {}", c.q, c.r),
            Command::Wait => write!(f, "wait"),
        }
    }
}
