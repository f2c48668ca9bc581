use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{brownian_increment, RandomOracle, ThetaPath};

/// Monte Carlo estimate of an `Lᵖ` norm with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub p: f64,
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl ErrorEstimate {
    /// `(mean |Δ|^p)^{1/p}`; the standard error propagates the sample
    /// standard error of the p-th moment through `m ↦ m^{1/p}`.
    pub fn from_deltas(deltas: &[f64], p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Argument(format!("p must be positive, got {p}")));
        }
        if deltas.is_empty() {
            return Err(Error::Argument("no samples".into()));
        }
        let n = deltas.len() as f64;
        let powers: Vec<f64> = deltas.iter().map(|d| d.abs().powf(p)).collect();
        let mean = powers.iter().sum::<f64>() / n;
        let var = if deltas.len() > 1 {
            powers.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let value = mean.powf(1.0 / p);
        let stderr = if mean > 0.0 { mean.powf(1.0 / p - 1.0) / p * (var / n).sqrt() } else { 0.0 };
        Ok(ErrorEstimate { p, value, stderr, samples: deltas.len() })
    }
}

/// `Lᵖ` distance between `u_ref` and `approx` under the uniform measure on
/// `[a, b]^d`, sampled with the box-point stream of `seed`.
pub fn lp_error(
    u_ref: impl Fn(&[f64]) -> f64 + Sync,
    approx: impl Fn(&[f64]) -> f64 + Sync,
    (a, b): (f64, f64),
    d: usize,
    p: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ErrorEstimate> {
    if n_samples < 2 {
        return Err(Error::Argument("need at least two samples".into()));
    }
    if !(a < b) {
        return Err(Error::Argument(format!("empty box [{a}, {b}]")));
    }
    let oracle = RandomOracle::new(seed);
    let deltas: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let x = oracle.box_point(i, a, b, d);
            approx(&x) - u_ref(&x)
        })
        .collect();
    ErrorEstimate::from_deltas(&deltas, p)
}

/// `E‖W_s‖^{2γ} = (2s)^γ ∏_{k<γ} (d/2 + k)`.
pub fn brownian_moment(d: usize, s: f64, gamma: u32) -> f64 {
    (0..gamma).map(|k| d as f64 / 2.0 + k as f64).product::<f64>() * (2.0 * s).powi(gamma as i32)
}

/// Empirical versus exact Brownian norm moment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub d: usize,
    pub s: f64,
    pub gamma: u32,
    pub samples: usize,
    pub expected: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub rel_err: f64,
    pub passed: bool,
}

/// Compares the `2γ`-th norm moment of the oracle's Brownian increments
/// with the closed form; passes within 3 standard errors or 3% relative.
pub fn brownian_moment_check(d: usize, s: f64, gamma: u32, n_samples: usize, seed: u64) -> Result<MomentReport> {
    if !(1..=3).contains(&gamma) {
        return Err(Error::Argument(format!("gamma must be 1, 2 or 3, got {gamma}")));
    }
    if n_samples < 10_000 {
        return Err(Error::Argument(format!("need at least 10^4 samples, got {n_samples}")));
    }
    if !(s >= 0.0 && s.is_finite()) || d == 0 {
        return Err(Error::Argument("need s >= 0 and d >= 1".into()));
    }
    let oracle = RandomOracle::new(seed);
    let values: Vec<f64> = (0..n_samples as i64)
        .into_par_iter()
        .map(|i| {
            let w = brownian_increment(&oracle, &ThetaPath::new(vec![i]), s, d);
            w.iter().map(|v| v * v).sum::<f64>().powi(gamma as i32)
        })
        .collect();
    let n = n_samples as f64;
    let empirical = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - empirical).powi(2)).sum::<f64>() / (n - 1.0);
    let stderr = (var / n).sqrt();
    let expected = brownian_moment(d, s, gamma);
    let diff = (empirical - expected).abs();
    let rel_err = if expected > 0.0 { diff / expected } else { diff };
    let passed = diff <= (3.0 * stderr).max(0.03 * expected);
    Ok(MomentReport { d, s, gamma, samples: n_samples, expected, empirical, stderr, rel_err, passed })
}
