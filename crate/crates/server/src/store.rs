//! Append-only event storage on disk.
//!
//! Layout of the data directory (also the layout inside an archive):
//! `records.index` holds one canonical JSON [`GameRecord`] per line, and
//! `game_<id>.events` holds one canonical JSON [`RecordedEvent`] per line.
//! Every append is flushed to disk before it returns.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use hexcollab_core::canonical::{from_canonical_str, to_canonical_string};
use hexcollab_core::events::{LogCursor, LogError};
use hexcollab_core::stats::{compute_stats, GameRecord, Stats};
use hexcollab_core::RecordedEvent;
use thiserror::Error;

pub const INDEX_FILE: &str = "records.index";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("game {game}: {source}")]
    Log { game: String, source: LogError },
    #[error("{path}:{line}: {reason}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("invalid game id {0:?}")]
    BadId(String),
    #[error("game {0} already has a record")]
    DuplicateRecord(String),
    #[error("append batch mixes games")]
    MixedBatch,
}

pub fn events_file(game_id: &str) -> String {
    format!("game_{game_id}.events")
}

/// Game ids double as file names.
pub fn valid_game_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

struct GameLog {
    cursor: LogCursor,
    file: File,
    events: Vec<RecordedEvent>,
}

pub struct FileStore {
    dir: PathBuf,
    logs: Mutex<HashMap<String, Arc<Mutex<GameLog>>>>,
    records: Mutex<RecordIndex>,
}

struct RecordIndex {
    file: File,
    order: Vec<String>,
    by_id: HashMap<String, GameRecord>,
}

impl FileStore {
    /// Opens (creating if needed) a data directory and loads its contents,
    /// checking every stored log for density and ordering.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let mut logs = HashMap::new();
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            let Some(id) = name.strip_prefix("game_").and_then(|n| n.strip_suffix(".events")) else {
                continue;
            };
            let log = load_log(&path, id)?;
            logs.insert(id.to_string(), Arc::new(Mutex::new(log)));
        }
        let index_path = dir.join(INDEX_FILE);
        let mut order = Vec::new();
        let mut by_id = HashMap::new();
        if index_path.exists() {
            for (i, line) in BufReader::new(File::open(&index_path)?).lines().enumerate() {
                let line = line?;
                if line.is_empty() {
                    continue;
                }
                let rec: GameRecord = from_canonical_str(&line).map_err(|e| StoreError::Corrupt {
                    path: index_path.clone(),
                    line: i + 1,
                    reason: e.to_string(),
                })?;
                if by_id.contains_key(&rec.game_id) {
                    return Err(StoreError::DuplicateRecord(rec.game_id));
                }
                order.push(rec.game_id.clone());
                by_id.insert(rec.game_id.clone(), rec);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&index_path)?;
        Ok(Self {
            dir,
            logs: Mutex::new(logs),
            records: Mutex::new(RecordIndex { file, order, by_id }),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn log(&self, game_id: &str) -> Result<Arc<Mutex<GameLog>>, StoreError> {
        if !valid_game_id(game_id) {
            return Err(StoreError::BadId(game_id.to_string()));
        }
        let mut logs = self.logs.lock().expect("store lock");
        if let Some(log) = logs.get(game_id) {
            return Ok(log.clone());
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.dir.join(events_file(game_id)))?;
        let log = Arc::new(Mutex::new(GameLog {
            cursor: LogCursor::new(),
            file,
            events: Vec::new(),
        }));
        logs.insert(game_id.to_string(), log.clone());
        Ok(log)
    }

    /// Appends a batch of events of one game. The batch is checked as a whole
    /// (dense seq, GameStart first, nothing after the end) and is durable
    /// when this returns. A rejected batch writes nothing.
    pub fn append(&self, batch: &[RecordedEvent]) -> Result<(), StoreError> {
        let Some(first) = batch.first() else {
            return Ok(());
        };
        if batch.iter().any(|e| e.game_id != first.game_id) {
            return Err(StoreError::MixedBatch);
        }
        let log = self.log(&first.game_id)?;
        let mut log = log.lock().expect("log lock");
        let mut cursor = log.cursor.clone();
        let mut text = String::new();
        for e in batch {
            cursor.advance(e).map_err(|source| StoreError::Log {
                game: first.game_id.clone(),
                source,
            })?;
            text.push_str(&to_canonical_string(e));
            text.push('\n');
        }
        log.file.write_all(text.as_bytes())?;
        log.file.sync_data()?;
        log.cursor = cursor;
        log.events.extend_from_slice(batch);
        Ok(())
    }

    /// Adds a game's summary to the index once the game has ended.
    pub fn finish(&self, record: GameRecord) -> Result<(), StoreError> {
        if !valid_game_id(&record.game_id) {
            return Err(StoreError::BadId(record.game_id));
        }
        let mut index = self.records.lock().expect("index lock");
        if index.by_id.contains_key(&record.game_id) {
            return Err(StoreError::DuplicateRecord(record.game_id));
        }
        let mut line = to_canonical_string(&record);
        line.push('\n');
        index.file.write_all(line.as_bytes())?;
        index.file.sync_data()?;
        index.order.push(record.game_id.clone());
        index.by_id.insert(record.game_id.clone(), record);
        Ok(())
    }

    pub fn record(&self, game_id: &str) -> Option<GameRecord> {
        self.records.lock().expect("index lock").by_id.get(game_id).cloned()
    }

    /// All records in the order the games ended.
    pub fn records(&self) -> Vec<GameRecord> {
        let index = self.records.lock().expect("index lock");
        index.order.iter().map(|id| index.by_id[id].clone()).collect()
    }

    pub fn events(&self, game_id: &str) -> Option<Vec<RecordedEvent>> {
        let log = self.logs.lock().expect("store lock").get(game_id).cloned()?;
        let events = log.lock().expect("log lock").events.clone();
        Some(events)
    }

    pub fn stats(&self) -> Stats {
        compute_stats(&self.records())
    }

    /// A tar archive holding the index and the log of every recorded game.
    pub fn export_archive(&self) -> Result<Vec<u8>, StoreError> {
        let records = self.records();
        let mut builder = tar::Builder::new(Vec::new());
        let mut index = String::new();
        for r in &records {
            index.push_str(&to_canonical_string(r));
            index.push('\n');
        }
        append_file(&mut builder, INDEX_FILE, index.as_bytes())?;
        for r in &records {
            let mut text = String::new();
            for e in self.events(&r.game_id).unwrap_or_default() {
                text.push_str(&to_canonical_string(&e));
                text.push('\n');
            }
            append_file(&mut builder, &events_file(&r.game_id), text.as_bytes())?;
        }
        Ok(builder.into_inner()?)
    }

    /// Unpacks an archive into `dir` and opens it as a store.
    pub fn import_archive(archive: impl Read, dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut tar = tar::Archive::new(archive);
        for entry in tar.entries()? {
            let mut entry = entry?;
            let path = entry.path()?.into_owned();
            let name = path.to_str().unwrap_or_default().to_string();
            let allowed = name == INDEX_FILE
                || name
                    .strip_prefix("game_")
                    .and_then(|n| n.strip_suffix(".events"))
                    .is_some_and(valid_game_id);
            if !allowed {
                return Err(StoreError::Corrupt {
                    path,
                    line: 0,
                    reason: "unexpected archive member".into(),
                });
            }
            entry.unpack(dir.join(&name))?;
        }
        Self::open(dir)
    }
}

fn append_file(builder: &mut tar::Builder<Vec<u8>>, name: &str, data: &[u8]) -> std::io::Result<()> {
    let mut header = tar::Header::new_gnu();
    header.set_size(data.len() as u64);
    header.set_mode(0o644);
    header.set_cksum();
    builder.append_data(&mut header, name, data)
}

fn load_log(path: &Path, id: &str) -> Result<GameLog, StoreError> {
    let mut cursor = LogCursor::new();
    let mut events = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let corrupt = |reason: String| StoreError::Corrupt {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let e: RecordedEvent = from_canonical_str(&line).map_err(|e| corrupt(e.to_string()))?;
        if e.game_id != id {
            return Err(corrupt(format!("event of game {:?}", e.game_id)));
        }
        cursor.advance(&e).map_err(|e| corrupt(e.to_string()))?;
        events.push(e);
    }
    let file = OpenOptions::new().append(true).open(path)?;
    Ok(GameLog { cursor, file, events })
}
