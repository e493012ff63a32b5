//! Seeded game runner and cross-play tournaments.

mod config;
mod scores;
pub mod trace;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Agent, AgentError, AgentSpec};
use crate::engine::{GameState, Rules};
use crate::knowledge::KnowledgeMode;
use crate::rng::SHUFFLE_ALGORITHM;

pub use config::{config_hash, load_pool, validate_pool, TournamentConfig};
pub use scores::{algorithms, score_summary, AlgorithmScores, MeanStd};
pub use trace::{relabel, replay, AgentRef, DecisionContext, GameTrace, TurnAnnotator, TurnRecord, TRACE_SCHEMA};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("bad record in {path} line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> HarnessError {
        HarnessError::Io { path: path.display().to_string(), source }
    }
}

/// A game that could not be finished because an agent failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbortedGame {
    pub game_id: u64,
    pub deck_seed: u64,
    pub seats: [AgentRef; 2],
    pub turn_index: u32,
    pub seat: usize,
    pub error: String,
}

pub fn agent_ref(spec: &AgentSpec) -> AgentRef {
    AgentRef { name: spec.name.clone(), algorithm: spec.algorithm().to_string(), instance_seed: spec.seed }
}

/// Plays one game to the end. Agent failures and illegal moves abort it.
pub fn run_game(
    agents: [&mut dyn Agent; 2],
    seats: [AgentRef; 2],
    game_id: u64,
    deck_seed: u64,
    rules: Rules,
    mode: KnowledgeMode,
) -> Result<GameTrace, AbortedGame> {
    let mut state = GameState::with_rules(deck_seed, rules);
    let mut annotator = TurnAnnotator::new(mode);
    let mut turns = Vec::with_capacity(64);
    let mut turns_per_seat = [0u32; 2];
    let [a0, a1] = agents;
    let mut agents: [&mut dyn Agent; 2] = [a0, a1];

    let abort = |state: &GameState, seat: usize, error: String| AbortedGame {
        game_id,
        deck_seed,
        seats: seats.clone(),
        turn_index: state.turn_index(),
        seat,
        error,
    };

    for (seat, agent) in agents.iter_mut().enumerate() {
        agent.begin_game(seat, deck_seed).map_err(|e| abort(&state, seat, e.to_string()))?;
    }
    while !state.is_terminal() {
        let seat = state.current_seat();
        let obs = state.observation(seat);
        let mv = agents[seat].act(&obs).map_err(|e| abort(&state, seat, e.to_string()))?;
        if !state.is_legal(mv) {
            let err = AgentError::IllegalMove { action_id: mv.action_id() };
            return Err(abort(&state, seat, err.to_string()));
        }
        turns.push(annotator.annotate(&state, mv));
        let event = state.apply_move(mv).expect("move checked legal");
        annotator.after(&event);
        turns_per_seat[seat] += 1;
    }
    for agent in agents.iter_mut() {
        agent.end_game();
    }
    Ok(GameTrace {
        schema: TRACE_SCHEMA,
        game_id,
        deck_seed,
        seats,
        rules,
        knowledge_mode: mode,
        turns,
        score: state.score(),
        termination: state.status(),
        turns_per_seat,
    })
}

/// Outcome of a batch of games, completed and aborted, in game-id order.
#[derive(Clone, Debug, Default)]
pub struct GameBatch {
    pub traces: Vec<GameTrace>,
    pub aborted: Vec<AbortedGame>,
}

impl GameBatch {
    fn from_results(results: Vec<Result<GameTrace, AbortedGame>>) -> GameBatch {
        let mut batch = GameBatch::default();
        for r in results {
            match r {
                Ok(t) => batch.traces.push(t),
                Err(a) => batch.aborted.push(a),
            }
        }
        batch
    }
}

fn play_one(
    a: &AgentSpec,
    b: &AgentSpec,
    k: u64,
    game_id: u64,
    base_seed: u64,
    rules: Rules,
    mode: KnowledgeMode,
) -> Result<GameTrace, AbortedGame> {
    let deck_seed = base_seed.wrapping_add(k);
    // a sits first in even games
    let (first, second) = if k % 2 == 0 { (a, b) } else { (b, a) };
    let seats = [agent_ref(first), agent_ref(second)];
    let build = |spec: &AgentSpec, seat: usize| {
        spec.build().map_err(|e| AbortedGame {
            game_id,
            deck_seed,
            seats: seats.clone(),
            turn_index: 0,
            seat,
            error: e.to_string(),
        })
    };
    let mut p0 = build(first, 0)?;
    let mut p1 = build(second, 1)?;
    run_game([p0.as_mut(), p1.as_mut()], seats.clone(), game_id, deck_seed, rules, mode)
}

/// `n` games between `a` and `b` on deck seeds `base_seed..base_seed+n`,
/// alternating who sits first. Game ids start at `first_game_id`.
pub fn run_pairing(
    a: &AgentSpec,
    b: &AgentSpec,
    n: u64,
    base_seed: u64,
    rules: Rules,
    mode: KnowledgeMode,
    first_game_id: u64,
) -> GameBatch {
    let results: Vec<_> = (0..n)
        .into_par_iter()
        .map(|k| play_one(a, b, k, first_game_id + k, base_seed, rules, mode))
        .collect();
    GameBatch::from_results(results)
}

/// Games per ordered pairing, keyed by instance names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingResult {
    pub first: String,
    pub second: String,
    pub scores: Vec<u8>,
    pub aborted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TournamentResult {
    pub config: TournamentConfig,
    pub config_hash: String,
    pub shuffle_algorithm: String,
    pub pairings: Vec<PairingResult>,
    pub algorithms: Vec<AlgorithmScores>,
}

/// Plays every ordered pairing of the pool, self-play included. Each
/// pairing uses the same deck seeds.
pub fn run_tournament(config: &TournamentConfig) -> Result<(TournamentResult, GameBatch), HarnessError> {
    let pool = config.resolved_pool()?;
    let n = config.games_per_pairing;
    let pairs: Vec<(usize, usize)> =
        (0..pool.len()).flat_map(|i| (0..pool.len()).map(move |j| (i, j))).collect();
    let jobs: Vec<(usize, u64)> = (0..pairs.len()).flat_map(|p| (0..n).map(move |k| (p, k))).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(p, k)| {
            let (i, j) = pairs[p];
            let game_id = p as u64 * n + k;
            play_one(&pool[i], &pool[j], k, game_id, config.base_seed, config.rules, config.knowledge_mode)
        })
        .collect();
    let batch = GameBatch::from_results(results);

    let pairings = pairs
        .iter()
        .enumerate()
        .map(|(p, &(i, j))| {
            let range = p as u64 * n..(p as u64 + 1) * n;
            PairingResult {
                first: pool[i].name.clone(),
                second: pool[j].name.clone(),
                scores: batch.traces.iter().filter(|t| range.contains(&t.game_id)).map(|t| t.score).collect(),
                aborted: batch.aborted.iter().filter(|a| range.contains(&a.game_id)).count(),
            }
        })
        .collect();
    let result = TournamentResult {
        config: config.resolved()?,
        config_hash: config_hash(config),
        shuffle_algorithm: SHUFFLE_ALGORITHM.to_string(),
        pairings,
        algorithms: score_summary(&batch.traces, &pool),
    };
    Ok((result, batch))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| HarnessError::io(path, e.into()))?;
        out.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    }
    out.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| HarnessError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        items.push(item);
    }
    Ok(items)
}

pub const TRACES_FILE: &str = "traces.jsonl";
pub const ABORTED_FILE: &str = "aborted.jsonl";
pub const TOURNAMENT_FILE: &str = "tournament.json";

/// Writes traces, aborted games and the tournament summary into `dir`.
pub fn write_tournament(dir: &Path, result: &TournamentResult, batch: &GameBatch) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_jsonl(&dir.join(TRACES_FILE), &batch.traces)?;
    write_jsonl(&dir.join(ABORTED_FILE), &batch.aborted)?;
    let path = dir.join(TOURNAMENT_FILE);
    let text = serde_json::to_string_pretty(result).expect("tournament result serializes");
    std::fs::write(&path, text + "\n").map_err(|e| HarnessError::io(&path, e))
}

pub fn read_tournament(dir: &Path) -> Result<(TournamentResult, Vec<GameTrace>), HarnessError> {
    let path = dir.join(TOURNAMENT_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    let result = serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    Ok((result, read_jsonl(&dir.join(TRACES_FILE))?))
}
