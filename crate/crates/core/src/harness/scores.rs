//! Self-play, intra-algorithm and inter-algorithm cross-play scores.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentKind, AgentSpec};

use super::GameTrace;

/// Mean and sample standard deviation (0 for a single value).
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn from_values(values: &[f64]) -> Option<MeanStd> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, std, n })
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.std)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmScores {
    pub algorithm: String,
    pub kind: AgentKind,
    pub instances: Vec<String>,
    pub self_play: Option<MeanStd>,
    /// Games between distinct instances of the algorithm. Only defined for
    /// seeded kinds with at least two instances.
    pub intra_xp: Option<MeanStd>,
    /// Games against every other algorithm in the pool, pooled.
    pub inter_xp: Option<MeanStd>,
}

/// Pool algorithms in order of first appearance.
pub fn algorithms(pool: &[AgentSpec]) -> Vec<(String, AgentKind, Vec<String>)> {
    let mut out: Vec<(String, AgentKind, Vec<String>)> = Vec::new();
    for spec in pool {
        match out.iter_mut().find(|(a, _, _)| a == spec.algorithm()) {
            Some(entry) => entry.2.push(spec.name.clone()),
            None => out.push((spec.algorithm().to_string(), spec.kind, vec![spec.name.clone()])),
        }
    }
    out
}

pub fn score_summary(traces: &[GameTrace], pool: &[AgentSpec]) -> Vec<AlgorithmScores> {
    algorithms(pool)
        .into_iter()
        .map(|(algorithm, kind, instances)| {
            let mut sp = Vec::new();
            let mut intra = Vec::new();
            let mut inter = Vec::new();
            for t in traces {
                let hits = t.seats_of(&algorithm).len();
                let score = t.score as f64;
                match hits {
                    2 if t.is_self_play() => sp.push(score),
                    2 => intra.push(score),
                    1 => inter.push(score),
                    _ => {}
                }
            }
            let intra_defined = !kind.is_rule_based() && instances.len() >= 2;
            AlgorithmScores {
                self_play: MeanStd::from_values(&sp),
                intra_xp: if intra_defined { MeanStd::from_values(&intra) } else { None },
                inter_xp: MeanStd::from_values(&inter),
                algorithm,
                kind,
                instances,
            }
        })
        .collect()
}
