//! Survey instruments and their derived scores, synthetic ratings with a
//! planted linear effect, and letter-value summaries of rating samples.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::metrics::MetricTable;

pub const LIKERT_MIN: u8 = 1;
pub const LIKERT_MAX: u8 = 7;

/// How a 7-point response (positions 1..=7) is scored before summing.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemCoding {
    #[default]
    ZeroToSix,
    OneToSeven,
}

impl ItemCoding {
    pub fn code(self, position: u8) -> u32 {
        match self {
            ItemCoding::ZeroToSix => u32::from(position) - 1,
            ItemCoding::OneToSeven => u32::from(position),
        }
    }

    fn position(self, coded: u32) -> u8 {
        match self {
            ItemCoding::ZeroToSix => (coded + 1) as u8,
            ItemCoding::OneToSeven => coded as u8,
        }
    }

    /// Range of the six-item teamwork sum.
    pub fn rating_range(self) -> (u32, u32) {
        (6 * self.code(LIKERT_MIN), 6 * self.code(LIKERT_MAX))
    }
}

fn check_positions(items: &[u8]) -> Result<(), StatsError> {
    match items.iter().find(|p| !(LIKERT_MIN..=LIKERT_MAX).contains(*p)) {
        Some(p) => Err(StatsError::Invalid(format!("item response {p} outside {LIKERT_MIN}..={LIKERT_MAX}"))),
        None => Ok(()),
    }
}

/// One participant's post-block survey about one bot. Items B1..B8 are
/// stored as raw 7-point positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamworkRating {
    pub participant: String,
    pub bot: String,
    pub block: u8,
    pub items: [u8; 8],
}

impl TeamworkRating {
    pub fn new(participant: &str, bot: &str, block: u8, items: [u8; 8]) -> Result<TeamworkRating, StatsError> {
        check_positions(&items)?;
        Ok(TeamworkRating { participant: participant.into(), bot: bot.into(), block, items })
    }

    /// Sum of B3..B8.
    pub fn rating(&self, coding: ItemCoding) -> u32 {
        self.items[2..].iter().map(|&p| coding.code(p)).sum()
    }
}

pub type RatingRecord = TeamworkRating;

/// Post-experiment preference between the first and second bot. Position 1
/// is "definitely the first bot", 7 "definitely the second bot".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonRating {
    pub participant: String,
    pub items: [u8; 7],
}

impl ComparisonRating {
    pub fn new(participant: &str, items: [u8; 7]) -> Result<ComparisonRating, StatsError> {
        check_positions(&items)?;
        Ok(ComparisonRating { participant: participant.into(), items })
    }

    /// Each item coded -3..=3 (neutral 0, positive toward the second bot).
    pub fn coded(&self) -> [i32; 7] {
        self.items.map(|p| i32::from(p) - 4)
    }

    pub fn sum(&self) -> i32 {
        self.coded().iter().sum()
    }
}

const RATING_HEADER: [&str; 11] = ["participant", "bot", "block", "b1", "b2", "b3", "b4", "b5", "b6", "b7", "b8"];

fn io_err(path: &Path, e: impl ToString) -> StatsError {
    StatsError::Io { path: path.display().to_string(), message: e.to_string() }
}

pub fn write_ratings(path: &Path, ratings: &[TeamworkRating]) -> Result<(), StatsError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(RATING_HEADER).map_err(|e| io_err(path, e))?;
    for r in ratings {
        let mut rec = vec![r.participant.clone(), r.bot.clone(), r.block.to_string()];
        rec.extend(r.items.iter().map(|p| p.to_string()));
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_ratings(path: &Path) -> Result<Vec<TeamworkRating>, StatsError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| io_err(path, e))?.iter().map(String::from).collect();
    if header != RATING_HEADER {
        return Err(io_err(path, format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let bad = |e: std::num::ParseIntError| io_err(path, format!("record {}: {e}", line + 1));
        let block = rec[2].parse().map_err(bad)?;
        let mut items = [0u8; 8];
        for (i, item) in items.iter_mut().enumerate() {
            *item = rec[3 + i].parse().map_err(bad)?;
        }
        out.push(TeamworkRating::new(&rec[0], &rec[1], block, items)?);
    }
    Ok(out)
}

/// Ratings generated as `intercept + slope * metric(bot) + noise`, rounded
/// and clamped to the coding's range, then spread over the six summed items.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub metric: String,
    pub slope: f64,
    pub intercept: f64,
    pub noise_sd: f64,
    pub participants_per_bot: usize,
    pub seed: u64,
    pub coding: ItemCoding,
}

pub fn synthetic_ratings(table: &MetricTable, spec: &SyntheticSpec) -> Result<Vec<TeamworkRating>, StatsError> {
    if !table.columns.contains(&spec.metric) {
        return Err(StatsError::Invalid(format!("unknown metric column {:?}", spec.metric)));
    }
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| StatsError::Invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = spec.coding.rating_range();
    let item_lo = spec.coding.code(LIKERT_MIN);
    let mut out = Vec::new();
    let mut participant = 0usize;
    for (bot, _) in &table.rows {
        let Some(x) = table.value(bot, &spec.metric) else { continue };
        for _ in 0..spec.participants_per_bot {
            let target = spec.intercept + spec.slope * x + noise.sample(&mut rng);
            let total = (target.round().max(lo as f64).min(hi as f64)) as u32;
            let above = total - lo;
            let mut items = [4u8; 8];
            for k in 0..6 {
                let share = above / 6 + u32::from(k < (above % 6) as usize);
                items[2 + k] = spec.coding.position(item_lo + share);
            }
            out.push(TeamworkRating::new(&format!("p{participant:04}"), bot, (participant % 2) as u8 + 1, items)?);
            participant += 1;
        }
    }
    Ok(out)
}

/// One level of a letter-value summary: the median ("M") has lower == upper.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LetterValue {
    pub letter: String,
    pub depth: f64,
    pub lower: f64,
    pub upper: f64,
}

const LETTERS: [&str; 12] = ["M", "F", "E", "D", "C", "B", "A", "Z", "Y", "X", "W", "V"];

fn at_depth(sorted: &[f64], depth: f64) -> (f64, f64) {
    let n = sorted.len();
    let lo = depth.floor() as usize;
    let get = |d: usize| (sorted[d - 1], sorted[n - d]);
    if depth.fract() == 0.0 {
        get(lo)
    } else {
        let (a, b) = (get(lo), get(lo + 1));
        ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0)
    }
}

/// Letter values down to floor(log2 n) - 3 levels past the median (at
/// least the fourths), stopping early when depths reach the extremes.
pub fn letter_values(values: &[f64]) -> Vec<LetterValue> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n == 0 {
        return Vec::new();
    }
    let levels = ((n as f64).log2().floor() as i64 - 3).max(1) as usize;
    let mut out = Vec::new();
    let mut depth = (n as f64 + 1.0) / 2.0;
    for letter in LETTERS.iter().take(levels + 1) {
        let (lower, upper) = at_depth(&sorted, depth);
        out.push(LetterValue { letter: letter.to_string(), depth, lower, upper });
        if depth <= 1.0 {
            break;
        }
        depth = (depth.floor() + 1.0) / 2.0;
    }
    out
}

/// Per-bot letter values of the teamwork rating, one row per level.
pub fn write_letter_values_csv(path: &Path, ratings: &[TeamworkRating], coding: ItemCoding) -> Result<(), StatsError> {
    let mut bots: Vec<&str> = ratings.iter().map(|r| r.bot.as_str()).collect();
    bots.sort();
    bots.dedup();
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["bot", "n", "letter", "depth", "lower", "upper"]).map_err(|e| io_err(path, e))?;
    for bot in bots {
        let values: Vec<f64> =
            ratings.iter().filter(|r| r.bot == bot).map(|r| f64::from(r.rating(coding))).collect();
        for lv in letter_values(&values) {
            let rec = [
                bot.to_string(),
                values.len().to_string(),
                lv.letter,
                lv.depth.to_string(),
                lv.lower.to_string(),
                lv.upper.to_string(),
            ];
            w.write_record(&rec).map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}
