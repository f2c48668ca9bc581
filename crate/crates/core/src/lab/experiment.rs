use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use super::problem::{engine_setup, reference_gate, reference_solution, Direction, EngineFns, PdeProblem};
use super::stats::ErrorEstimate;
use crate::error::{Error, Result};
use crate::mlp::mlp_estimate_batch;
use crate::oracle::RandomOracle;

pub const CSV_HEADER: &str = "n,M,seed,p,error,wall_ms";

/// One `(level, seed)` result.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub p: f64,
    pub error: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentOptions {
    /// Number of evaluation points drawn uniformly on the box.
    pub points: usize,
    /// Seed of the box-point stream.
    pub point_seed: u64,
    /// Evaluation time; defaults to 0 for terminal and `T` for initial problems.
    pub t: Option<f64>,
    /// Record wall-clock time; off gives `wall_ms = 0` and byte-stable output.
    pub timing: bool,
    /// Replace the estimator by the reference itself.
    pub self_test: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions { points: 256, point_seed: 0, t: None, timing: true, self_test: false }
    }
}

impl ExperimentOptions {
    fn eval_time(&self, problem: &PdeProblem) -> f64 {
        self.t.unwrap_or(match problem.direction {
            Direction::Terminal => 0.0,
            Direction::Initial => problem.horizon,
        })
    }
}

/// The evaluation points of an experiment.
pub fn eval_points(problem: &PdeProblem, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let oracle = RandomOracle::new(seed);
    (0..count as u64).map(|i| oracle.box_point(i, problem.box_a, problem.box_b, problem.d)).collect()
}

/// Empirical `Lᵖ` norm of the reference over the given points.
pub fn reference_lp_norm(problem: &PdeProblem, t: f64, points: &[Vec<f64>], p: f64) -> Result<f64> {
    let refs = points.iter().map(|x| reference_solution(problem, t, x)).collect::<Result<Vec<_>>>()?;
    Ok(ErrorEstimate::from_deltas(&refs, p)?.value)
}

/// Empirical `Lᵖ` error of the estimator for every `(level, seed)` pair, in
/// the order levels-major, seeds-minor.
pub fn convergence_experiment(
    problem: &PdeProblem,
    levels: &[(usize, usize)],
    seeds: &[u64],
    p: f64,
    opts: &ExperimentOptions,
) -> Result<Vec<ConvergenceRow>> {
    problem.validate()?;
    reference_gate(problem)?;
    if opts.points == 0 {
        return Err(Error::Argument("need at least one evaluation point".into()));
    }
    let t = opts.eval_time(problem);
    let points = eval_points(problem, opts.points, opts.point_seed);
    let refs = points.iter().map(|x| reference_solution(problem, t, x)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = levels.iter().flat_map(|&(n, m)| seeds.iter().map(move |_| (n, m))).collect();
    let seeds_of = |j: usize| seeds[j % seeds.len()];
    jobs.par_iter()
        .enumerate()
        .map(|(j, &(n, m))| {
            let seed = seeds_of(j);
            let start = Instant::now();
            let values = if opts.self_test {
                refs.clone()
            } else {
                let (cfg, rescaled) = engine_setup(problem, n, m, t)?;
                mlp_estimate_batch(&cfg, &points, &[seed], &EngineFns { problem: &rescaled })?.remove(0)
            };
            let wall_ms = if opts.timing { start.elapsed().as_millis() as u64 } else { 0 };
            let deltas: Vec<f64> = values.iter().zip(&refs).map(|(v, r)| v - r).collect();
            let full = ErrorEstimate::from_deltas(&deltas, p)?;
            let half = ErrorEstimate::from_deltas(&deltas, p / 2.0)?;
            if half.value > full.value * (1.0 + 1e-12) {
                return Err(Error::Check(format!(
                    "L^{} error {} exceeds L^{p} error {} on the same samples",
                    p / 2.0,
                    half.value,
                    full.value
                )));
            }
            Ok(ConvergenceRow { n, m, seed, p, error: full.value, wall_ms })
        })
        .collect()
}

/// Writes the header and one line per row.
pub fn write_csv<W: Write>(rows: &[ConvergenceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.n, r.m, r.seed, r.p, r.error, r.wall_ms)?;
    }
    Ok(())
}
