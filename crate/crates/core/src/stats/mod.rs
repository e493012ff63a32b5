//! Regression of subjective teamwork ratings on objective behavior metrics:
//! single-variable least squares with a two-sided t-test on the slope,
//! Bonferroni thresholds, and a vertex-form quadratic fit.

pub mod cohort;
pub mod ratings;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

pub use cohort::{cohort_regressions, read_regressions_csv, write_regressions_csv, AgentRoles, Cohort, RegressionRow};
pub use ratings::{
    letter_values, read_ratings, synthetic_ratings, write_letter_values_csv, write_ratings, ComparisonRating,
    ItemCoding, LetterValue, RatingRecord, SyntheticSpec, TeamworkRating,
};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} observations, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("x has no variance")]
    DegenerateX,
    #[error("x and y lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("{0}")]
    Invalid(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
    /// Two-sided p-value of the slope t-test.
    pub p: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
}

struct Moments {
    n: f64,
    mean_x: f64,
    mean_y: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

fn moments(x: &[f64], y: &[f64]) -> Moments {
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - mean_x, yi - mean_y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    Moments { n, mean_x, mean_y, sxx, syy, sxy }
}

fn check_lengths(x: &[f64], y: &[f64], need: usize) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < need {
        return Err(StatsError::TooFew { need, got: x.len() });
    }
    Ok(())
}

/// Pearson correlation; 0 when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let m = moments(x, y);
    if m.sxx == 0.0 || m.syy == 0.0 {
        return 0.0;
    }
    (m.sxy / (m.sxx * m.syy).sqrt()).clamp(-1.0, 1.0)
}

/// Two-sided p-value for a correlation `r` over `n` points.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Least-squares fit of y on x.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<LinearFit, StatsError> {
    check_lengths(x, y, 3)?;
    let m = moments(x, y);
    if m.sxx == 0.0 {
        return Err(StatsError::DegenerateX);
    }
    let slope = m.sxy / m.sxx;
    let intercept = m.mean_y - slope * m.mean_x;
    let r = pearson(x, y);
    let sse = (m.syy - slope * m.sxy).max(0.0);
    let slope_se = (sse / (m.n - 2.0) / m.sxx).sqrt();
    Ok(LinearFit { n: x.len(), slope, intercept, r, p: correlation_p_value(r, x.len()), slope_se })
}

pub fn bonferroni_threshold(alpha: f64, k: usize) -> f64 {
    assert!(k > 0, "Bonferroni correction over zero tests");
    alpha / k as f64
}

/// y = a (x + b)^2 + c. A downward opening parabola is expected; when the
/// data curve upward the unconstrained fit is kept and flagged.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParabolicFit {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Correlation of fitted against observed y.
    pub r: f64,
    pub constraint_violated: bool,
}

impl ParabolicFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.a * (x + self.b).powi(2) + self.c
    }
}

fn solve3(mut m: [[f64; 4]; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

pub fn parabolic_fit(x: &[f64], y: &[f64]) -> Result<ParabolicFit, StatsError> {
    check_lengths(x, y, 4)?;
    let m = moments(x, y);
    let mut distinct = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(StatsError::DegenerateX);
    }
    // Fit in standardized u = (x - mean) / scale for conditioning.
    let scale = (m.sxx / m.n).sqrt();
    let mut normal = [[0.0; 4]; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let u = (xi - m.mean_x) / scale;
        let basis = [u * u, u, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                normal[i][j] += basis[i] * basis[j];
            }
            normal[i][3] += basis[i] * yi;
        }
    }
    let [qa, qb, qc] = solve3(normal).ok_or(StatsError::DegenerateX)?;
    if qa == 0.0 {
        return Err(StatsError::Invalid("fitted curve has no curvature".into()));
    }
    // In u: qa (u + qb/2qa)^2 + qc - qb^2/4qa; then map back to x.
    let a = qa / (scale * scale);
    let b = -m.mean_x + scale * qb / (2.0 * qa);
    let c = qc - qb * qb / (4.0 * qa);
    let mut fit = ParabolicFit { n: x.len(), a, b, c, r: 0.0, constraint_violated: a >= 0.0 };
    let fitted: Vec<f64> = x.iter().map(|&xi| fit.predict(xi)).collect();
    fit.r = pearson(&fitted, y);
    Ok(fit)
}

pub fn residual_sum_of_squares(x: &[f64], y: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    x.iter().zip(y).map(|(&xi, &yi)| (yi - f(xi)).powi(2)).sum()
}
