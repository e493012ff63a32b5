//! Behavioral metrics from game traces: action and action-response
//! entropies, instantaneous coordination, context independence, and the
//! frequencies of dominated and dominant moves.

pub mod concepts;
pub mod info;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::AgentSpec;
use crate::harness::{relabel, score_summary, GameTrace, MeanStd};
use crate::knowledge::{DominanceLabel, KnowledgeMode};
use crate::moves::NUM_ACTIONS;

use concepts::{atom_mask, default_atoms, sample_formulas, Atom, ConceptError, Formula, FormulaSidecar};
use info::{context_independence, entropy, JointCounts};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Concepts(#[from] ConceptError),
    #[error("relabeling game {game_id}: {message}")]
    Relabel { game_id: u64, message: String },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("bad metrics table {path}: {message}")]
    Parse { path: String, message: String },
}

/// Unit over which entropies, IC and CI are computed before averaging.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// All games between one unordered pair of instances.
    #[default]
    Block,
    Game,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub granularity: Granularity,
    pub ci_formulas: usize,
    pub ci_seed: u64,
    pub ci_max_depth: usize,
    /// Recompute dominance labels and contexts under this knowledge mode
    /// instead of using those stored in the traces.
    pub relabel: Option<KnowledgeMode>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { granularity: Granularity::Block, ci_formulas: 500, ci_seed: 0, ci_max_depth: 3, relabel: None }
    }
}

/// Counts gathered for one algorithm over one block (or game).
#[derive(Clone, Debug)]
pub struct UnitCounts {
    pub actions: [u64; NUM_ACTIONS],
    /// (partner action at t, own action at t+1)
    pub responses: JointCounts,
    /// (own action at t, partner action at t+1)
    pub coordination: JointCounts,
    /// Atom truth mask -> action histogram at own decision points.
    pub contexts: HashMap<u64, [u64; NUM_ACTIONS]>,
}

impl UnitCounts {
    fn new() -> UnitCounts {
        UnitCounts {
            actions: [0; NUM_ACTIONS],
            responses: JointCounts::new(NUM_ACTIONS, NUM_ACTIONS),
            coordination: JointCounts::new(NUM_ACTIONS, NUM_ACTIONS),
            contexts: HashMap::new(),
        }
    }

    pub fn gather<'a>(
        games: impl IntoIterator<Item = &'a GameTrace>,
        algorithm: &str,
        atoms: &[Atom],
    ) -> UnitCounts {
        let mut u = UnitCounts::new();
        for t in games {
            let mine = t.seats_of(algorithm);
            let is_mine = |seat: u8| mine.contains(&(seat as usize));
            for (i, turn) in t.turns.iter().enumerate() {
                if !is_mine(turn.seat) {
                    continue;
                }
                let a = turn.action_id as usize;
                u.actions[a] += 1;
                let mask = atom_mask(atoms, &turn.context);
                u.contexts.entry(mask).or_insert([0; NUM_ACTIONS])[a] += 1;
                if let Some(prev) = i.checked_sub(1).map(|p| &t.turns[p]) {
                    if prev.seat != turn.seat {
                        u.responses.add(prev.action_id as usize, a);
                    }
                }
                if let Some(next) = t.turns.get(i + 1) {
                    if next.seat != turn.seat {
                        u.coordination.add(a, next.action_id as usize);
                    }
                }
            }
        }
        u
    }

    pub fn decisions(&self) -> u64 {
        self.actions.iter().sum()
    }

    pub fn ad_entropy(&self) -> f64 {
        entropy(&self.actions)
    }

    pub fn ard_entropy(&self) -> Option<f64> {
        (self.responses.total() > 0).then(|| self.responses.joint_entropy())
    }

    /// Mutual information, and whether the estimate is degenerate (fewer
    /// than two distinct own actions, reported as 0).
    pub fn instantaneous_coordination(&self) -> Option<(f64, bool)> {
        if self.coordination.total() == 0 {
            return None;
        }
        if self.coordination.distinct_rows() < 2 {
            return Some((0.0, true));
        }
        Some((self.coordination.mutual_information(), false))
    }

    /// Context independence over `formulas`, with the number of concepts
    /// that never held.
    pub fn context_independence(&self, formulas: &[Formula]) -> Option<(f64, usize)> {
        let rows: Vec<Vec<u64>> = formulas
            .iter()
            .map(|f| {
                let mut row = vec![0u64; NUM_ACTIONS];
                for (&mask, hist) in &self.contexts {
                    if f.eval(mask) {
                        for (r, h) in row.iter_mut().zip(hist) {
                            *r += h;
                        }
                    }
                }
                row
            })
            .collect();
        context_independence(&rows, &self.actions)
    }
}

/// Per-game fractions of an algorithm's own turns carrying each label, one
/// entry per (game, seat) it occupied.
pub fn dominance_fractions(traces: &[GameTrace], algorithm: &str) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for t in traces {
        for seat in t.seats_of(algorithm) {
            let own: Vec<_> = t.turns.iter().filter(|r| r.seat as usize == seat).collect();
            if own.is_empty() {
                continue;
            }
            let frac = |label: DominanceLabel| {
                own.iter().filter(|r| r.label == label).count() as f64 / own.len() as f64
            };
            out.push([
                frac(DominanceLabel::G1DiscardPlayable),
                frac(DominanceLabel::G2PlayUnplayable),
                frac(DominanceLabel::G3PlayPlayable),
            ]);
        }
    }
    out
}

/// Groups an algorithm's games into blocks keyed by the unordered pair of
/// instance names, or into single games.
pub fn units<'a>(traces: &'a [GameTrace], algorithm: &str, granularity: Granularity) -> Vec<Vec<&'a GameTrace>> {
    let mine = traces.iter().filter(|t| !t.seats_of(algorithm).is_empty());
    match granularity {
        Granularity::Game => mine.map(|t| vec![t]).collect(),
        Granularity::Block => {
            let mut blocks: BTreeMap<(String, String), Vec<&GameTrace>> = BTreeMap::new();
            for t in mine {
                let (a, b) = (&t.seats[0].name, &t.seats[1].name);
                let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
                blocks.entry(key).or_default().push(t);
            }
            blocks.into_values().collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub algorithm: String,
    pub self_play: Option<MeanStd>,
    pub intra_xp: Option<MeanStd>,
    pub inter_xp: Option<MeanStd>,
    pub ci: Option<MeanStd>,
    pub ic: Option<MeanStd>,
    pub ad_entropy: Option<MeanStd>,
    pub ard_entropy: Option<MeanStd>,
    pub g1: Option<MeanStd>,
    pub g2: Option<MeanStd>,
    pub g3: Option<MeanStd>,
    /// Units whose IC was reported as 0 for lack of distinct actions.
    pub ic_degenerate_units: usize,
    /// Concepts dropped for never holding, summed over units.
    pub ci_dropped_concepts: usize,
    pub units: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub config_hash: String,
    pub config: MetricsConfig,
    pub rows: Vec<MetricRow>,
}

pub fn algorithm_metrics(
    traces: &[GameTrace],
    algorithm: &str,
    formulas: &[Formula],
    atoms: &[Atom],
    granularity: Granularity,
) -> MetricRow {
    let (mut ad, mut ard, mut ic, mut ci) = (vec![], vec![], vec![], vec![]);
    let (mut degenerate, mut dropped, mut used) = (0, 0, 0);
    for unit in units(traces, algorithm, granularity) {
        let counts = UnitCounts::gather(unit.iter().copied(), algorithm, atoms);
        if counts.decisions() == 0 {
            log::warn!("{algorithm}: skipping a unit with no decisions");
            continue;
        }
        used += 1;
        ad.push(counts.ad_entropy());
        ard.extend(counts.ard_entropy());
        if let Some((value, degen)) = counts.instantaneous_coordination() {
            ic.push(value);
            degenerate += degen as usize;
        }
        if let Some((value, d)) = counts.context_independence(formulas) {
            ci.push(value);
            dropped += d;
        }
    }
    let fractions = dominance_fractions(traces, algorithm);
    let column = |k: usize| MeanStd::from_values(&fractions.iter().map(|f| f[k]).collect::<Vec<_>>());
    MetricRow {
        algorithm: algorithm.to_string(),
        self_play: None,
        intra_xp: None,
        inter_xp: None,
        ci: MeanStd::from_values(&ci),
        ic: MeanStd::from_values(&ic),
        ad_entropy: MeanStd::from_values(&ad),
        ard_entropy: MeanStd::from_values(&ard),
        g1: column(0),
        g2: column(1),
        g3: column(2),
        ic_degenerate_units: degenerate,
        ci_dropped_concepts: dropped,
        units: used,
    }
}

/// Computes the full report, one row per algorithm in pool order.
pub fn compute_report(
    traces: &[GameTrace],
    pool: &[AgentSpec],
    config: &MetricsConfig,
    config_hash: &str,
) -> Result<(MetricReport, FormulaSidecar), MetricsError> {
    let atoms = default_atoms();
    let formulas = sample_formulas(&atoms, config.ci_formulas, config.ci_max_depth, config.ci_seed)?;

    let relabeled;
    let traces = match config.relabel {
        Some(mode) => {
            relabeled = traces
                .par_iter()
                .map(|t| {
                    let turns = relabel(t, mode)
                        .map_err(|message| MetricsError::Relabel { game_id: t.game_id, message })?;
                    Ok(GameTrace { turns, knowledge_mode: mode, ..t.clone() })
                })
                .collect::<Result<Vec<_>, MetricsError>>()?;
            &relabeled[..]
        }
        None => traces,
    };

    let scores = score_summary(traces, pool);
    let rows = scores
        .par_iter()
        .map(|s| MetricRow {
            self_play: s.self_play,
            intra_xp: s.intra_xp,
            inter_xp: s.inter_xp,
            ..algorithm_metrics(traces, &s.algorithm, &formulas, &atoms, config.granularity)
        })
        .collect();
    let report = MetricReport { config_hash: config_hash.to_string(), config: config.clone(), rows };
    let sidecar = FormulaSidecar::new(&atoms, &formulas, config.ci_seed, config.ci_max_depth);
    Ok((report, sidecar))
}

/// First 16 hex digits of the SHA-256 of the trace source's hash together
/// with the metrics settings.
pub fn report_hash(source_hash: &str, config: &MetricsConfig) -> String {
    let canonical = serde_json::to_vec(&(source_hash, config)).expect("metrics config serializes");
    Sha256::digest(canonical).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub const CSV_HEADER: [&str; 12] = [
    "Agent",
    "Self-play",
    "Intra-XP",
    "Inter-XP",
    "CI",
    "IC",
    "AD-entropy",
    "ARD-entropy",
    "G1-dominated",
    "G2-dominated",
    "G3-dominant",
    "config_hash",
];

pub const NOT_APPLICABLE: &str = "NA";

pub fn format_cell(value: Option<MeanStd>) -> String {
    match value {
        Some(m) => format!("{:.6} ± {:.6}", m.mean, m.std),
        None => NOT_APPLICABLE.to_string(),
    }
}

/// Parses a "mean ± std" cell into (mean, std); `None` for NA.
pub fn parse_cell(cell: &str) -> Result<Option<(f64, f64)>, String> {
    let cell = cell.trim();
    if cell == NOT_APPLICABLE {
        return Ok(None);
    }
    let (mean, std) = cell.split_once('±').ok_or_else(|| format!("bad cell {cell:?}"))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}"));
    Ok(Some((num(mean)?, num(std)?)))
}

impl MetricRow {
    pub fn cells(&self) -> [Option<MeanStd>; 10] {
        [
            self.self_play,
            self.intra_xp,
            self.inter_xp,
            self.ci,
            self.ic,
            self.ad_entropy,
            self.ard_entropy,
            self.g1,
            self.g2,
            self.g3,
        ]
    }
}

pub fn write_report_csv(path: &Path, report: &MetricReport) -> Result<(), MetricsError> {
    let io = |e: csv::Error| MetricsError::Io { path: path.display().to_string(), message: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(CSV_HEADER).map_err(io)?;
    for row in &report.rows {
        let mut record = vec![row.algorithm.clone()];
        record.extend(row.cells().iter().map(|c| format_cell(*c)));
        record.push(report.config_hash.clone());
        w.write_record(&record).map_err(io)?;
    }
    w.flush().map_err(|e| MetricsError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// A metrics table read back from CSV: per agent, the ten metric columns
/// as (mean, std) or not-applicable.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricTable {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<Option<(f64, f64)>>)>,
    pub config_hash: Option<String>,
}

impl MetricTable {
    pub fn value(&self, agent: &str, column: &str) -> Option<f64> {
        let col = self.columns.iter().position(|c| c == column)?;
        let (_, cells) = self.rows.iter().find(|(a, _)| a == agent)?;
        cells[col].map(|(mean, _)| mean)
    }
}

pub fn read_report_csv(path: &Path) -> Result<MetricTable, MetricsError> {
    let err = |message: String| MetricsError::Parse { path: path.display().to_string(), message };
    let mut r = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let header: Vec<String> = r.headers().map_err(|e| err(e.to_string()))?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(err(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    let mut config_hash = None;
    for record in r.records() {
        let record = record.map_err(|e| err(e.to_string()))?;
        let cells = (1..11).map(|i| parse_cell(&record[i])).collect::<Result<Vec<_>, _>>().map_err(err)?;
        config_hash = Some(record[11].to_string());
        rows.push((record[0].to_string(), cells));
    }
    Ok(MetricTable { columns: CSV_HEADER[1..11].iter().map(|s| s.to_string()).collect(), rows, config_hash })
}
