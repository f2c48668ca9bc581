#![allow(dead_code)]

use std::cell::Cell;

use picardnets::oracle::{RandomOracle, SampleKind, ThetaPath};
use picardnets::{Activation, Layer, Network};

/// Counter-based uniform draws for test fixtures.
pub struct Draws {
    oracle: RandomOracle,
    tag: i64,
    next: Cell<i64>,
}

impl Draws {
    pub fn new(seed: u64, tag: i64) -> Self {
        Draws { oracle: RandomOracle::new(seed), tag, next: Cell::new(0) }
    }

    pub fn uniform(&self) -> f64 {
        self.next.set(self.next.get() + 1);
        self.oracle.uniform(SampleKind::Probe, &ThetaPath::new(vec![self.tag, self.next.get()]), 0)
    }

    pub fn range(&self, a: f64, b: f64) -> f64 {
        a + (b - a) * self.uniform()
    }

    pub fn below(&self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    pub fn vec(&self, n: usize, a: f64, b: f64) -> Vec<f64> {
        (0..n).map(|_| self.range(a, b)).collect()
    }

    pub fn net(&self, dims: &[usize]) -> Network {
        let layers = dims
            .windows(2)
            .map(|w| {
                let scale = 1.0 / (w[0] as f64).sqrt();
                Layer::new(w[1], w[0], self.vec(w[0] * w[1], -scale, scale), self.vec(w[1], -0.5, 0.5)).unwrap()
            })
            .collect();
        Network::new(layers).unwrap()
    }

    /// Random dims of the given depth with widths in `1..=4`.
    pub fn dims(&self, input: usize, output: usize, depth: usize) -> Vec<usize> {
        let mut dims = vec![input];
        for _ in 1..depth {
            dims.push(1 + self.below(4));
        }
        dims.push(output);
        dims
    }
}

pub fn activations() -> Vec<Activation> {
    vec![Activation::Relu, Activation::LeakyRelu(0.1), Activation::Softplus]
}

/// Functoriality tolerance: exact arithmetic up to rounding for
/// piecewise-linear activations, looser for softplus.
pub fn tol(act: &Activation) -> f64 {
    if act.is_piecewise_linear() {
        1e-10
    } else {
        1e-8
    }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

pub fn all_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| close(*x, *y, tol))
}

use picardnets::calculus::*;
use picardnets::identity::default_identity;

fn realize(net: &Network, act: &Activation, x: &[f64]) -> Vec<f64> {
    net.realize(act, x).unwrap()
}

fn expect(name: &str, got: &[f64], want: &[f64], tol: f64) -> Result<(), String> {
    if all_close(got, want, tol) {
        Ok(())
    } else {
        Err(format!("{name}: got {got:?}, want {want:?}"))
    }
}

/// Checks the realization semantics of every calculus operation on one
/// family of random networks drawn from `draws`, at `inputs` random points.
pub fn check_operations(draws: &Draws, act: &Activation, inputs: usize) -> Result<(), String> {
    let tol = tol(act);
    let d = 1 + draws.below(3);
    let depth = 1 + draws.below(3);
    let dims = draws.dims(d, 1, depth);
    let a = draws.net(&dims);
    let b = draws.net(&dims);
    let dims_c = draws.dims(1, 1, 1 + draws.below(3));
    let c = draws.net(&dims_c);
    let sq_dims = draws.dims(d, d, 1 + draws.below(2));
    let sq = draws.net(&sq_dims);
    let deep = draws.net(&draws.dims(d, 1, depth + 1 + draws.below(2)));
    let j = default_identity(act);
    let lambda = draws.range(-3.0, 3.0);
    let n_pow = draws.below(4);
    let h = draws.vec(2, -2.0, 2.0);
    let ts = draws.vec(2, -2.0, 2.0);
    let shifts = vec![draws.vec(d, -1.0, 1.0), draws.vec(d, -1.0, 1.0)];

    let comp = compose(&c, &a).map_err(|e| e.to_string())?;
    let pow = power(&sq, n_pow).map_err(|e| e.to_string())?;
    let ext = extend(depth + 3, &j, &a).map_err(|e| e.to_string())?;
    let par = parallelize(&[a.clone(), b.clone()]).map_err(|e| e.to_string())?;
    let sum = sum_same_depth(&[a.clone(), b.clone()]).map_err(|e| e.to_string())?;
    let literal = sum_same_depth_literal(&[a.clone(), b.clone()]).map_err(|e| e.to_string())?;
    let scaled = scalar_mul(lambda, &a);
    let lin_same = linear_combination_same(&h, &ts, &shifts, &[a.clone(), b.clone()]).map_err(|e| e.to_string())?;
    let diff = sum_diff_depth(&[a.clone(), deep.clone()], &j, act).map_err(|e| e.to_string())?;
    let lin_diff = linear_combination_diff(&h, &shifts, &[a.clone(), deep.clone()], &j, act).map_err(|e| e.to_string())?;
    let fin = fan_in(d, 2);
    let fout = fan_out(d, 3);
    let wrap = activation_wrapper(d);
    let zero = zero_net(d);
    let ident = identity_affine(d);
    let sh = scaled_shift(lambda, &shifts[0]);

    if sum.layers() != literal.layers()
        || sum.layers().iter().zip(literal.layers()).any(|(x, y)| {
            x.weights().iter().zip(y.weights()).any(|(p, q)| p.to_bits() != q.to_bits())
                || x.bias().iter().zip(y.bias()).any(|(p, q)| p.to_bits() != q.to_bits())
        })
    {
        return Err("sum_same_depth differs from the literal composition".into());
    }
    if par.dims().iter().skip(1).zip(a.dims().iter().skip(1).zip(b.dims().iter().skip(1))).any(|(p, (x, y))| *p != x + y)
    {
        return Err(format!("parallelize dims {:?}", par.dims()));
    }
    if ext.depth() != depth + 3 || diff.depth() != deep.depth() {
        return Err("extension depth".into());
    }

    for _ in 0..inputs {
        let x = draws.vec(d, -3.0, 3.0);
        let ra = realize(&a, act, &x);
        let rb = realize(&b, act, &x);
        let rdeep = realize(&deep, act, &x);
        expect("compose", &realize(&comp, act, &x), &realize(&c, act, &ra), tol)?;
        let mut it = x.clone();
        for _ in 0..n_pow {
            it = realize(&sq, act, &it);
        }
        expect("power", &realize(&pow, act, &x), &it, tol)?;
        expect("extend", &realize(&ext, act, &x), &ra, tol)?;
        let mut xx = x.clone();
        xx.extend(draws.vec(d, -3.0, 3.0));
        let rb2 = realize(&b, act, &xx[d..]);
        expect("parallelize", &realize(&par, act, &xx), &[ra[0], rb2[0]], tol)?;
        expect("sum_same_depth", &realize(&sum, act, &x), &[ra[0] + rb[0]], tol)?;
        expect("scalar_mul", &realize(&scaled, act, &x), &[lambda * ra[0]], tol)?;
        let at = |net: &Network, k: usize| {
            let y: Vec<f64> = x.iter().zip(&shifts[k]).map(|(v, s)| ts[k] * v + s).collect();
            realize(net, act, &y)[0]
        };
        expect("linear_combination_same", &realize(&lin_same, act, &x), &[h[0] * at(&a, 0) + h[1] * at(&b, 1)], tol)?;
        expect("sum_diff_depth", &realize(&diff, act, &x), &[ra[0] + rdeep[0]], tol)?;
        let sx = |k: usize| -> Vec<f64> { x.iter().zip(&shifts[k]).map(|(v, s)| v + s).collect() };
        let want = h[0] * realize(&a, act, &sx(0))[0] + h[1] * realize(&deep, act, &sx(1))[0];
        expect("linear_combination_diff", &realize(&lin_diff, act, &x), &[want], tol)?;
        let fin_want: Vec<f64> = (0..d).map(|i| xx[i] + xx[d + i]).collect();
        expect("fan_in", &realize(&fin, act, &xx), &fin_want, tol)?;
        expect("fan_out", &realize(&fout, act, &x), &[x.clone(), x.clone(), x.clone()].concat(), tol)?;
        let wrapped: Vec<f64> = x.iter().map(|v| act.apply(*v)).collect();
        expect("activation_wrapper", &realize(&wrap, act, &x), &wrapped, tol)?;
        expect("zero_net", &realize(&zero, act, &x), &[0.0], tol)?;
        expect("identity_affine", &realize(&ident, act, &x), &x, tol)?;
        let shifted: Vec<f64> = x.iter().zip(&shifts[0]).map(|(v, s)| lambda * v + s).collect();
        expect("scaled_shift", &realize(&sh, act, &x), &shifted, tol)?;
    }
    Ok(())
}

use picardnets::compiler::CompileInputs;
use picardnets::mlp::MlpConfig;

/// Compiler inputs with small random `G: R^d -> R` and `F: R -> R`.
pub fn small_inputs(d: usize, m: usize, n: usize, act: Activation, seed: u64, g_depth: usize) -> CompileInputs {
    let draws = Draws::new(seed, 71);
    let mut g_dims = vec![d];
    g_dims.extend(std::iter::repeat(3).take(g_depth - 1));
    g_dims.push(1);
    CompileInputs {
        cfg: MlpConfig { n, m, horizon: 1.0, t: 0.0, d },
        g_net: draws.net(&g_dims),
        f_net: draws.net(&[1, 2, 1]),
        j_net: default_identity(&act),
        activation: act,
        oracle: RandomOracle::new(seed),
        allow_large: false,
    }
}

/// Uniform probes on `[-1, 1]^d`.
pub fn probes(draws: &Draws, d: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| draws.vec(d, -1.0, 1.0)).collect()
}
