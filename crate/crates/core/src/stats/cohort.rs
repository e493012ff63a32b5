//! Per-metric regressions of teamwork rating over rater cohorts.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ratings::{ItemCoding, TeamworkRating};
use super::{bonferroni_threshold, linear_regression, parabolic_fit, StatsError};
use crate::agents::{AgentKind, AgentSpec};
use crate::harness::algorithms;
use crate::metrics::MetricTable;

/// Metrics given a straight-line fit.
pub const LINEAR_METRICS: [&str; 9] = [
    "Self-play",
    "Intra-XP",
    "Inter-XP",
    "CI",
    "AD-entropy",
    "ARD-entropy",
    "G1-dominated",
    "G2-dominated",
    "G3-dominant",
];

/// Fitted with a downward parabola instead.
pub const PARABOLIC_METRIC: &str = "IC";

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cohort {
    All,
    NoRandom,
}

impl Cohort {
    pub const BOTH: [Cohort; 2] = [Cohort::All, Cohort::NoRandom];

    pub fn label(self) -> &'static str {
        match self {
            Cohort::All => "all",
            Cohort::NoRandom => "no-random",
        }
    }

    pub fn parse(s: &str) -> Option<Cohort> {
        Cohort::BOTH.into_iter().find(|c| c.label() == s)
    }
}

/// Which rated bots are uniformly random, and which are hand-written rather
/// than trained (random bots count as hand-written).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AgentRoles {
    pub random: BTreeSet<String>,
    pub non_trainable: BTreeSet<String>,
}

impl AgentRoles {
    /// Roles keyed by algorithm label, the key of metric table rows.
    pub fn from_pool(pool: &[AgentSpec]) -> AgentRoles {
        let mut roles = AgentRoles::default();
        for (algorithm, kind, _) in algorithms(pool) {
            if kind == AgentKind::Random {
                roles.random.insert(algorithm.clone());
            }
            if kind != AgentKind::External {
                roles.non_trainable.insert(algorithm);
            }
        }
        roles
    }

    fn admits(&self, cohort: Cohort, metric: &str, bot: &str) -> bool {
        if metric == "Intra-XP" && self.non_trainable.contains(bot) {
            return false;
        }
        cohort == Cohort::All || !self.random.contains(bot)
    }
}

/// One output line. Linear rows fill r, m, intercept, p and significant;
/// parabolic rows fill r, a, b, c. Unfittable rows carry only a note.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub metric: String,
    pub cohort: Cohort,
    pub kind: String,
    pub n: usize,
    pub r: Option<f64>,
    pub m: Option<f64>,
    pub intercept: Option<f64>,
    pub p: Option<f64>,
    pub significant: Option<bool>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub note: String,
}

impl RegressionRow {
    fn empty(metric: &str, cohort: Cohort, kind: &str, n: usize) -> RegressionRow {
        RegressionRow {
            metric: metric.into(),
            cohort,
            kind: kind.into(),
            n,
            r: None,
            m: None,
            intercept: None,
            p: None,
            significant: None,
            a: None,
            b: None,
            c: None,
            note: String::new(),
        }
    }
}

/// Every rating is one observation, paired with its bot's mean metric.
fn observations(
    table: &MetricTable,
    ratings: &[TeamworkRating],
    roles: &AgentRoles,
    cohort: Cohort,
    metric: &str,
    coding: ItemCoding,
) -> (Vec<f64>, Vec<f64>) {
    ratings
        .iter()
        .filter(|r| roles.admits(cohort, metric, &r.bot))
        .filter_map(|r| Some((table.value(&r.bot, metric)?, f64::from(r.rating(coding)))))
        .unzip()
}

/// Linear fits of every metric in both cohorts (significance judged at
/// alpha over the number of linear fits), then the parabolic fits.
pub fn cohort_regressions(
    table: &MetricTable,
    ratings: &[TeamworkRating],
    roles: &AgentRoles,
    coding: ItemCoding,
    alpha: f64,
) -> Vec<RegressionRow> {
    let threshold = bonferroni_threshold(alpha, LINEAR_METRICS.len() * Cohort::BOTH.len());
    let mut rows = Vec::new();
    for metric in LINEAR_METRICS {
        for cohort in Cohort::BOTH {
            let (x, y) = observations(table, ratings, roles, cohort, metric, coding);
            let mut row = RegressionRow::empty(metric, cohort, "linear", x.len());
            match linear_regression(&x, &y) {
                Ok(fit) => {
                    row.r = Some(fit.r);
                    row.m = Some(fit.slope);
                    row.intercept = Some(fit.intercept);
                    row.p = Some(fit.p);
                    row.significant = Some(fit.p < threshold);
                }
                Err(e) => row.note = e.to_string(),
            }
            rows.push(row);
        }
    }
    for cohort in Cohort::BOTH {
        let (x, y) = observations(table, ratings, roles, cohort, PARABOLIC_METRIC, coding);
        let mut row = RegressionRow::empty(PARABOLIC_METRIC, cohort, "parabolic", x.len());
        match parabolic_fit(&x, &y) {
            Ok(fit) => {
                row.r = Some(fit.r);
                row.a = Some(fit.a);
                row.b = Some(fit.b);
                row.c = Some(fit.c);
                if fit.constraint_violated {
                    row.note = "constraint violated: data curve upward".into();
                }
            }
            Err(e) => row.note = e.to_string(),
        }
        rows.push(row);
    }
    rows
}

pub const REGRESSION_HEADER: [&str; 13] =
    ["metric", "cohort", "kind", "n", "r", "m", "intercept", "p", "significant", "a", "b", "c", "note"];

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "NA".into())
}

/// Shortest round-trip form, in exponent notation for tiny p-values.
fn num_cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_else(|| "NA".into())
}

fn io_err(path: &Path, e: impl ToString) -> StatsError {
    StatsError::Io { path: path.display().to_string(), message: e.to_string() }
}

pub fn write_regressions_csv(path: &Path, rows: &[RegressionRow]) -> Result<(), StatsError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(REGRESSION_HEADER).map_err(|e| io_err(path, e))?;
    for r in rows {
        let rec = [
            r.metric.clone(),
            r.cohort.label().into(),
            r.kind.clone(),
            r.n.to_string(),
            num_cell(r.r),
            num_cell(r.m),
            num_cell(r.intercept),
            num_cell(r.p),
            cell(r.significant),
            num_cell(r.a),
            num_cell(r.b),
            num_cell(r.c),
            r.note.clone(),
        ];
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_regressions_csv(path: &Path) -> Result<Vec<RegressionRow>, StatsError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header: Vec<String> = rd.headers().map_err(|e| io_err(path, e))?.iter().map(String::from).collect();
    if header != REGRESSION_HEADER {
        return Err(io_err(path, format!("unexpected header {header:?}")));
    }
    let num = |s: &str| -> Result<Option<f64>, StatsError> {
        if s == "NA" {
            return Ok(None);
        }
        s.parse().map(Some).map_err(|e| io_err(path, format!("bad number {s:?}: {e}")))
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let cohort = Cohort::parse(&rec[1]).ok_or_else(|| io_err(path, format!("bad cohort {:?}", &rec[1])))?;
        let significant = match &rec[8] {
            "NA" => None,
            s => Some(s.parse().map_err(|e| io_err(path, format!("bad flag {s:?}: {e}")))?),
        };
        rows.push(RegressionRow {
            metric: rec[0].into(),
            cohort,
            kind: rec[2].into(),
            n: rec[3].parse().map_err(|e| io_err(path, format!("bad count: {e}")))?,
            r: num(&rec[4])?,
            m: num(&rec[5])?,
            intercept: num(&rec[6])?,
            p: num(&rec[7])?,
            significant,
            a: num(&rec[9])?,
            b: num(&rec[10])?,
            c: num(&rec[11])?,
            note: rec[12].into(),
        });
    }
    Ok(rows)
}
