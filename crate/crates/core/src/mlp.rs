//! Full-history recursive multilevel Picard estimator for
//! `∂_t u + ½Δu + f(u) = 0`, `u(T, ·) = g`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{Activation, Network};
use crate::oracle::{brownian_increment, uniform_time, RandomOracle, Sampler, ThetaPath};

/// Level, base, horizon, evaluation time and dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpConfig {
    pub n: usize,
    pub m: usize,
    pub horizon: f64,
    pub t: f64,
    pub d: usize,
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Argument("M must be positive".into()));
        }
        if self.d == 0 {
            return Err(Error::Argument("dimension must be positive".into()));
        }
        if !(self.horizon.is_finite() && self.t >= 0.0 && self.t <= self.horizon) {
            return Err(Error::Argument(format!("need 0 <= t <= T, got t={} T={}", self.t, self.horizon)));
        }
        (self.m as u128)
            .checked_pow(self.n as u32)
            .filter(|&v| v <= usize::MAX as u128)
            .ok_or_else(|| Error::Argument("M^n overflows".into()))?;
        Ok(())
    }
}

/// Nonlinearity `f` and terminal datum `g`.
pub trait ProblemFns: Sync {
    fn f(&self, u: f64) -> f64;
    fn g(&self, x: &[f64]) -> f64;
}

/// [`ProblemFns`] from two closures.
pub struct FnProblem<F, G> {
    pub f: F,
    pub g: G,
}

impl<F, G> ProblemFns for FnProblem<F, G>
where
    F: Fn(f64) -> f64 + Sync,
    G: Fn(&[f64]) -> f64 + Sync,
{
    fn f(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    fn g(&self, x: &[f64]) -> f64 {
        (self.g)(x)
    }
}

/// `f` and `g` given as realizations of networks.
pub struct NetProblem<'a> {
    pub f_net: &'a Network,
    pub g_net: &'a Network,
    pub activation: Activation,
}

impl ProblemFns for NetProblem<'_> {
    fn f(&self, u: f64) -> f64 {
        self.f_net.realize_scalar(&self.activation, &[u]).expect("scalar nonlinearity net")
    }

    fn g(&self, x: &[f64]) -> f64 {
        self.g_net.realize_scalar(&self.activation, x).expect("datum net matches dimension")
    }
}

fn shifted(x: &[f64], w: &[f64]) -> Vec<f64> {
    x.iter().zip(w).map(|(a, b)| a + b).collect()
}

/// `U_n^θ(t, x)`.
pub fn mlp_eval<P, S>(cfg: &MlpConfig, x: &[f64], theta: &ThetaPath, fns: &P, sampler: &S) -> Result<f64>
where
    P: ProblemFns + ?Sized,
    S: Sampler + ?Sized,
{
    cfg.validate()?;
    if x.len() != cfg.d {
        return Err(Error::InputShape { expected: cfg.d, got: x.len() });
    }
    Ok(level(cfg.n, cfg.m, cfg.horizon, cfg.t, x, theta, fns, sampler))
}

#[allow(clippy::too_many_arguments)]
fn level<P, S>(n: usize, m: usize, horizon: f64, t: f64, x: &[f64], theta: &ThetaPath, fns: &P, s: &S) -> f64
where
    P: ProblemFns + ?Sized,
    S: Sampler + ?Sized,
{
    if n == 0 {
        return 0.0;
    }
    let d = x.len();
    let mn = m.pow(n as u32);
    let mut g_sum = 0.0;
    for k in 1..=mn {
        let w = brownian_increment(s, &theta.child(0, -(k as i64)), horizon - t, d);
        g_sum += fns.g(&shifted(x, &w));
    }
    let mut total = g_sum / mn as f64;
    for i in 0..n {
        let mi = m.pow((n - i) as u32);
        let mut acc = 0.0;
        for k in 1..=mi {
            let th = theta.child(i as i64, k as i64);
            let r = uniform_time(s, &th, t, horizon);
            let y = shifted(x, &brownian_increment(s, &th, r - t, d));
            let mut term = fns.f(level(i, m, horizon, r, &y, &th, fns, s));
            if i >= 1 {
                let th_neg = theta.child(-(i as i64), k as i64);
                term -= fns.f(level(i - 1, m, horizon, r, &y, &th_neg, fns, s));
            }
            acc += term;
        }
        total += (horizon - t) / mi as f64 * acc;
    }
    total
}

/// Estimates for every `(seed, point)` pair at the root path; row `i` holds
/// the values for `seeds[i]`.
pub fn mlp_estimate_batch<P: ProblemFns + ?Sized>(
    cfg: &MlpConfig,
    points: &[Vec<f64>],
    seeds: &[u64],
    fns: &P,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    if let Some(bad) = points.iter().find(|p| p.len() != cfg.d) {
        return Err(Error::InputShape { expected: cfg.d, got: bad.len() });
    }
    if points.is_empty() {
        return Ok(vec![Vec::new(); seeds.len()]);
    }
    let root = ThetaPath::root();
    let jobs: Vec<(usize, usize)> =
        (0..seeds.len()).flat_map(|s| (0..points.len()).map(move |p| (s, p))).collect();
    let flat: Vec<f64> = jobs
        .par_iter()
        .map(|&(s, p)| {
            let oracle = RandomOracle::new(seeds[s]);
            level(cfg.n, cfg.m, cfg.horizon, cfg.t, &points[p], &root, fns, &oracle)
        })
        .collect();
    Ok(flat.chunks(points.len()).map(<[f64]>::to_vec).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, m: usize) -> MlpConfig {
        MlpConfig { n, m, horizon: 1.0, t: 0.25, d: 2 }
    }

    #[test]
    fn level_zero_is_zero() {
        let p = FnProblem { f: |u: f64| u + 1.0, g: |x: &[f64]| x[0] + 10.0 };
        let o = RandomOracle::new(1);
        assert_eq!(mlp_eval(&cfg(0, 3), &[0.3, 0.4], &ThetaPath::root(), &p, &o).unwrap(), 0.0);
    }

    #[test]
    fn single_sample_unroll() {
        let p = FnProblem { f: |_: f64| 0.0, g: |x: &[f64]| x[0] * x[0] - x[1] };
        let o = RandomOracle::new(11);
        let x = [0.5, -1.0];
        let th = ThetaPath::root();
        let w = brownian_increment(&o, &th.child(0, -1), 0.75, 2);
        let expected = (x[0] + w[0]).powi(2) - (x[1] + w[1]);
        assert_eq!(mlp_eval(&cfg(1, 1), &x, &th, &p, &o).unwrap(), expected);
    }

    #[test]
    fn constant_nonlinearity() {
        let p = FnProblem { f: |_: f64| 3.0, g: |_: &[f64]| 0.0 };
        let o = RandomOracle::new(2);
        let v = mlp_eval(&cfg(1, 2), &[0.0, 0.0], &ThetaPath::root(), &p, &o).unwrap();
        assert!((v - 0.75 * 3.0).abs() < 1e-15);
    }

    #[test]
    fn batch_layout() {
        let p = FnProblem { f: |u: f64| 0.5 * u, g: |x: &[f64]| x[0] + x[1] };
        let pts = vec![vec![0.1, 0.2], vec![1.0, -1.0], vec![0.0, 3.0]];
        let rows = mlp_estimate_batch(&cfg(2, 2), &pts, &[4, 9], &p).unwrap();
        assert_eq!(rows.len(), 2);
        for (row, seed) in rows.iter().zip([4, 9]) {
            for (v, x) in row.iter().zip(&pts) {
                let single =
                    mlp_eval(&cfg(2, 2), x, &ThetaPath::root(), &p, &RandomOracle::new(seed)).unwrap();
                assert_eq!(v.to_bits(), single.to_bits());
            }
        }
        let swapped = mlp_estimate_batch(&cfg(2, 2), &pts, &[9, 4], &p).unwrap();
        assert_eq!(swapped[0], rows[1]);
        assert_eq!(swapped[1], rows[0]);
        let zero = mlp_estimate_batch(&cfg(0, 2), &pts, &[1, 2], &p).unwrap();
        assert!(zero.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn invalid_config() {
        let p = FnProblem { f: |u: f64| u, g: |_: &[f64]| 0.0 };
        let o = RandomOracle::new(0);
        let mut c = cfg(1, 1);
        c.t = 2.0;
        assert!(mlp_eval(&c, &[0.0, 0.0], &ThetaPath::root(), &p, &o).is_err());
        assert!(mlp_eval(&cfg(1, 1), &[0.0], &ThetaPath::root(), &p, &o).is_err());
    }
}
