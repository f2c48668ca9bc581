use std::collections::HashSet;
use std::sync::Mutex;

use picardnets::mlp::*;
use picardnets::oracle::{RandomOracle, SampleKind, Sampler, ThetaPath};

/// Records every primitive draw made by the estimator.
struct Logging {
    inner: RandomOracle,
    log: Mutex<Vec<(char, Vec<i64>)>>,
}

impl Sampler for Logging {
    fn time_uniform(&self, theta: &ThetaPath) -> f64 {
        self.log.lock().unwrap().push(('t', theta.entries().to_vec()));
        self.inner.time_uniform(theta)
    }

    fn gaussian(&self, theta: &ThetaPath, d: usize) -> Vec<f64> {
        self.log.lock().unwrap().push(('w', theta.entries().to_vec()));
        self.inner.gaussian(theta, d)
    }
}

fn quadratic() -> FnProblem<impl Fn(f64) -> f64 + Sync, impl Fn(&[f64]) -> f64 + Sync> {
    FnProblem { f: |u: f64| 0.5 * u, g: |x: &[f64]| x.iter().map(|v| v * v).sum() }
}

/// Number of time draws and Gaussian draws of level `n`.
fn draw_counts(n: usize, m: usize) -> (usize, usize) {
    if n == 0 {
        return (0, 0);
    }
    let (mut times, mut gauss) = (0, m.pow(n as u32));
    for i in 0..n {
        let (ct, cw) = draw_counts(i, m);
        let (pt, pw) = if i >= 1 { draw_counts(i - 1, m) } else { (0, 0) };
        let mi = m.pow((n - i) as u32);
        times += mi * (1 + ct + pt);
        gauss += mi * (1 + cw + pw);
    }
    (times, gauss)
}

#[test]
fn correction_terms_reuse_the_samples_of_their_partner() {
    let (n, m) = (3, 2);
    let s = Logging { inner: RandomOracle::new(8), log: Mutex::new(Vec::new()) };
    let cfg = MlpConfig { n, m, horizon: 1.0, t: 0.1, d: 2 };
    mlp_eval(&cfg, &[0.3, -0.2], &ThetaPath::root(), &quadratic(), &s).unwrap();
    let log = s.log.into_inner().unwrap();
    let unique: HashSet<_> = log.iter().cloned().collect();
    assert_eq!(unique.len(), log.len(), "a sample was drawn twice");
    let (times, gauss) = draw_counts(n, m);
    assert_eq!(log.iter().filter(|e| e.0 == 't').count(), times);
    assert_eq!(log.iter().filter(|e| e.0 == 'w').count(), gauss);
    for (kind, path) in &log {
        if *kind == 't' {
            assert!(unique.contains(&('w', path.clone())), "time draw at {path:?} without its increment");
        }
        let tail = &path[path.len() - 2..];
        // (θ, -i, k) only roots the correction's subtree; its r and W come from (θ, i, k).
        assert!(!(tail[0] < 0 && tail[1] > 0), "draw at correction path {path:?}");
    }
}

#[test]
fn without_nonlinearity_it_is_plain_monte_carlo() {
    let oracle = RandomOracle::new(21);
    let g = |x: &[f64]| (x[0] - 0.5 * x[1]).cos() + x[2];
    let fns = FnProblem { f: |_: f64| 0.0, g };
    for (n, m) in [(1, 4), (2, 3), (3, 2)] {
        let cfg = MlpConfig { n, m, horizon: 2.0, t: 0.5, d: 3 };
        let x = [0.1, 0.7, -0.4];
        let got = mlp_eval(&cfg, &x, &ThetaPath::root(), &fns, &oracle).unwrap();
        let mn = m.pow(n as u32);
        let scale = 1.5f64.sqrt();
        let want = (1..=mn as i64)
            .map(|k| {
                let z = oracle.normals(SampleKind::Brownian, &ThetaPath::new(vec![0, 0, -k]), 3);
                let y: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a + scale * b).collect();
                g(&y)
            })
            .sum::<f64>()
            / mn as f64;
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
    }
}

#[test]
fn estimates_are_deterministic_per_seed() {
    let cfg = MlpConfig { n: 2, m: 3, horizon: 1.0, t: 0.0, d: 2 };
    let x = [0.4, 0.9];
    let a = mlp_eval(&cfg, &x, &ThetaPath::root(), &quadratic(), &RandomOracle::new(5)).unwrap();
    let b = mlp_eval(&cfg, &x, &ThetaPath::root(), &quadratic(), &RandomOracle::new(5)).unwrap();
    let c = mlp_eval(&cfg, &x, &ThetaPath::root(), &quadratic(), &RandomOracle::new(6)).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    assert_ne!(a, c);
}

#[test]
fn batch_rows_match_single_evaluations() {
    let cfg = MlpConfig { n: 2, m: 2, horizon: 1.0, t: 0.0, d: 2 };
    let points = vec![vec![0.0, 0.0], vec![0.5, -0.5], vec![1.0, 2.0]];
    let seeds = [3, 4];
    let rows = mlp_estimate_batch(&cfg, &points, &seeds, &quadratic()).unwrap();
    for (row, &seed) in rows.iter().zip(&seeds) {
        for (v, x) in row.iter().zip(&points) {
            let single = mlp_eval(&cfg, x, &ThetaPath::root(), &quadratic(), &RandomOracle::new(seed)).unwrap();
            assert_eq!(v.to_bits(), single.to_bits());
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    assert_eq!(pool.install(|| mlp_estimate_batch(&cfg, &points, &seeds, &quadratic()).unwrap()), rows);
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn variance_shrinks_with_the_level() {
    let x = vec![vec![0.5, 0.5]];
    let variance = |level: usize, block: u64| {
        let cfg = MlpConfig { n: level, m: level, horizon: 1.0, t: 0.0, d: 2 };
        let seeds: Vec<u64> = (0..40).map(|i| 1000 * block + i).collect();
        let rows = mlp_estimate_batch(&cfg, &x, &seeds, &quadratic()).unwrap();
        let vals: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64
    };
    let med: Vec<f64> = (1..=3).map(|level| median((0..5).map(|b| variance(level, b)).collect())).collect();
    assert!(med[0] > med[1] && med[1] > med[2], "{med:?}");
}

#[test]
fn invalid_configurations_are_rejected() {
    let fns = quadratic();
    let o = RandomOracle::new(1);
    let bad = [
        MlpConfig { n: 1, m: 0, horizon: 1.0, t: 0.0, d: 2 },
        MlpConfig { n: 1, m: 2, horizon: 1.0, t: 1.5, d: 2 },
        MlpConfig { n: 1, m: 2, horizon: 1.0, t: 0.0, d: 0 },
    ];
    for cfg in bad {
        assert!(mlp_eval(&cfg, &[0.0, 0.0], &ThetaPath::root(), &fns, &o).is_err());
    }
    let cfg = MlpConfig { n: 1, m: 2, horizon: 1.0, t: 0.0, d: 2 };
    assert!(mlp_eval(&cfg, &[0.0], &ThetaPath::root(), &fns, &o).is_err());
}
