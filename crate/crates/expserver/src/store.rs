//! Append-only NDJSON event log and session recovery by replay.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use hanabi_core::agents::AgentSpec;
use hanabi_core::{DominanceLabel, Seat};
use serde::{Deserialize, Serialize};

use crate::session::{MoveOutcome, Session, HUMAN_SEAT};

pub const LOG_FILE: &str = "events.jsonl";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    SessionCreated {
        session: String,
        seed: u64,
        bots: [AgentSpec; 2],
        familiarity: Option<u8>,
        screened: bool,
    },
    Move {
        session: String,
        game: u8,
        turn: u32,
        seat: Seat,
        action_id: u8,
        label: DominanceLabel,
    },
    Questionable {
        session: String,
        game: u8,
        /// Turn of the bot move the click refers to.
        turn: u32,
        label: DominanceLabel,
    },
    BlockSurvey {
        session: String,
        block: u8,
        items: [u8; 8],
    },
    FinalSurvey {
        session: String,
        items: [u8; 7],
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub schema: u32,
    /// Milliseconds since the Unix epoch.
    pub at: u64,
    #[serde(flatten)]
    pub record: Record,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

/// Move records for one human move and the bot's reply.
pub fn move_records(session: &str, game: u8, human_turn: u32, outcome: &MoveOutcome) -> Vec<Record> {
    let mut out = vec![Record::Move {
        session: session.into(),
        game,
        turn: human_turn,
        seat: HUMAN_SEAT,
        action_id: outcome.human.to_move().action_id(),
        label: outcome.human_label,
    }];
    if let Some((event, label)) = &outcome.bot {
        out.push(Record::Move {
            session: session.into(),
            game,
            turn: human_turn + 1,
            seat: event.seat(),
            action_id: event.to_move().action_id(),
            label: *label,
        });
    }
    out
}

pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    pub fn open(dir: &Path) -> std::io::Result<EventLog> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(LOG_FILE);
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(EventLog { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes and flushes each record as one line.
    pub fn append(&mut self, records: &[Record]) -> std::io::Result<()> {
        let at = now_ms();
        let mut buf = Vec::new();
        for record in records {
            let entry = Entry { schema: crate::SCHEMA, at, record: record.clone() };
            serde_json::to_writer(&mut buf, &entry)?;
            buf.push(b'\n');
        }
        self.file.write_all(&buf)?;
        self.file.flush()
    }

    pub fn sync(&self) -> std::io::Result<()> {
        self.file.sync_all()
    }
}

pub fn read_log(path: &Path) -> Result<Vec<Entry>, String> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(format!("{}: {e}", path.display())),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| format!("{}: {e}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format!("{} line {}: {e}", path.display(), i + 1))?);
    }
    Ok(out)
}

/// Rebuilds sessions by replaying the log. Human moves are reapplied and
/// the bots recompute their replies, which must match what was logged.
pub fn recover(entries: &[Entry]) -> Result<Vec<Session>, String> {
    let mut sessions: Vec<Session> = Vec::new();
    fn find<'a>(sessions: &'a mut [Session], id: &str) -> Result<&'a mut Session, String> {
        sessions.iter_mut().find(|s| s.id == id).ok_or_else(|| format!("log refers to unknown session {id}"))
    }
    for (i, entry) in entries.iter().enumerate() {
        let fail = |e: String| format!("log entry {}: {e}", i + 1);
        match &entry.record {
            Record::SessionCreated { session, seed, bots, familiarity, screened } => {
                sessions.push(Session::new(session.clone(), *seed, bots.clone(), *familiarity, *screened));
            }
            Record::Move { session, game, turn, seat, action_id, label } => {
                let s = find(&mut sessions, session).map_err(fail)?;
                if *seat == HUMAN_SEAT {
                    let outcome = s.play(*game, *action_id).map_err(|e| fail(e.to_string()))?;
                    if outcome.human_label != *label {
                        return Err(fail(format!("human move at turn {turn} relabeled")));
                    }
                } else {
                    let g = s.game(*game).ok_or_else(|| fail(format!("bot move in unstarted game {game}")))?;
                    let replayed = g.bot_moves.iter().find(|m| m.turn == *turn);
                    if replayed.map(|m| (m.action_id, m.label)) != Some((*action_id, *label)) {
                        return Err(fail(format!("bot reply at turn {turn} does not replay")));
                    }
                }
            }
            Record::Questionable { session, game, turn, .. } => {
                let s = find(&mut sessions, session).map_err(fail)?;
                let flag = s.flag(*game).map_err(|e| fail(e.to_string()))?;
                if flag.turn != *turn {
                    return Err(fail("flag refers to a different bot move".into()));
                }
            }
            Record::BlockSurvey { session, block, items } => {
                let s = find(&mut sessions, session).map_err(fail)?;
                s.submit_block_survey(*block, *items).map_err(|e| fail(e.to_string()))?;
            }
            Record::FinalSurvey { session, items } => {
                let s = find(&mut sessions, session).map_err(fail)?;
                s.submit_final_survey(*items).map_err(|e| fail(e.to_string()))?;
            }
        }
    }
    Ok(sessions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::tests::bots;

    fn logged_session(log: &mut EventLog) -> Session {
        let mut s = Session::new("abc".into(), 11, bots(), Some(2), false);
        log.append(&[Record::SessionCreated {
            session: s.id.clone(),
            seed: s.seed,
            bots: s.bots.clone(),
            familiarity: s.familiarity,
            screened: false,
        }])
        .unwrap();
        for g in 1..=4 {
            s.game_mut(g).unwrap();
            while !s.game(g).unwrap().is_over() {
                let state = &s.game(g).unwrap().state;
                let (turn, id) = (state.turn_index(), state.legal_moves().last().unwrap().action_id());
                let out = s.play(g, id).unwrap();
                log.append(&move_records("abc", g, turn, &out)).unwrap();
                if g == 2 && s.game(g).unwrap().bot_moves.len() == 1 {
                    let f = s.flag(g).unwrap();
                    log.append(&[Record::Questionable { session: "abc".into(), game: g, turn: f.turn, label: f.label }])
                        .unwrap();
                }
            }
        }
        s.submit_block_survey(1, [3; 8]).unwrap();
        log.append(&[Record::BlockSurvey { session: "abc".into(), block: 1, items: [3; 8] }]).unwrap();
        s
    }

    #[test]
    fn log_replays_to_the_same_sessions() {
        let dir = tempfile::tempdir().unwrap();
        let mut log = EventLog::open(dir.path()).unwrap();
        let live = logged_session(&mut log);
        let entries = read_log(log.path()).unwrap();
        let recovered = recover(&entries).unwrap();
        assert_eq!(recovered.len(), 1);
        let r = &recovered[0];
        for (a, b) in live.games.iter().zip(&r.games) {
            assert_eq!(a.state.score(), b.state.score());
            assert_eq!(a.state.turn_index(), b.state.turn_index());
            assert_eq!(a.bot_moves, b.bot_moves);
            assert_eq!(a.flags, b.flags);
        }
        assert_eq!(r.block_surveys, live.block_surveys);
    }

    #[test]
    fn tampered_bot_move_is_detected() {
        let mut live = Session::new("x".into(), 1, bots(), None, false);
        let id = live.game_mut(1).unwrap().state.legal_moves()[0].action_id();
        let outcome = live.play(1, id).unwrap();
        let created =
            Record::SessionCreated { session: "x".into(), seed: 1, bots: bots(), familiarity: None, screened: false };
        let mut entries: Vec<Entry> = std::iter::once(created)
            .chain(move_records("x", 1, 0, &outcome))
            .map(|record| Entry { schema: crate::SCHEMA, at: 0, record })
            .collect();
        assert!(recover(&entries).is_ok());
        if let Record::Move { action_id, .. } = &mut entries.last_mut().unwrap().record {
            *action_id = (*action_id + 1) % 20;
        }
        assert!(recover(&entries).is_err());
    }
}
