//! Piecewise-linear interpolation and shallow-network approximation of
//! one-dimensional Lipschitz functions.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::calculus::{activation_wrapper, affine_scalar, compose, scalar_mul, sum_same_depth};
use crate::error::{Error, Result};
use crate::network::{Activation, Network};

/// Strictly increasing knots `x_0 < … < x_K`, `K >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Argument("a grid needs at least two knots".into()));
        }
        if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Argument("grid knots must be finite and strictly increasing".into()));
        }
        Ok(Grid { points })
    }

    /// `x_k = -b + 2kb/K`.
    pub fn symmetric(b: f64, k: usize) -> Result<Self> {
        Grid::new((0..=k).map(|i| -b + 2.0 * i as f64 * b / k as f64).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of cells `K`.
    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }
}

/// A real function with a declared global Lipschitz constant.
#[derive(Clone)]
pub struct LipschitzFn {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    lipschitz: f64,
}

impl LipschitzFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, lipschitz: f64) -> Result<Self> {
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::Argument(format!("Lipschitz constant must be finite and >= 0, got {lipschitz}")));
        }
        Ok(LipschitzFn { f: Arc::new(f), lipschitz })
    }

    /// `sin`, `cos`, `abs` or `tanh`, each 1-Lipschitz.
    pub fn named(name: &str) -> Result<Self> {
        let f: fn(f64) -> f64 = match name {
            "sin" => f64::sin,
            "cos" => f64::cos,
            "abs" => f64::abs,
            "tanh" => f64::tanh,
            _ => return Err(Error::Argument(format!("unknown function {name:?}"))),
        };
        LipschitzFn::new(f, 1.0)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Same function with a larger declared constant.
    pub fn with_lipschitz(&self, lipschitz: f64) -> Result<Self> {
        let f = Arc::clone(&self.f);
        LipschitzFn::new(move |x| f(x), lipschitz)
    }
}

impl fmt::Debug for LipschitzFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzFn").field("lipschitz", &self.lipschitz).finish_non_exhaustive()
    }
}

/// Parameters of a uniform-grid approximation together with its size bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxGuarantee {
    pub eps: f64,
    pub q: f64,
    pub b: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub width: usize,
    pub params: usize,
    pub lipschitz: f64,
    /// Multiplier of `ε max{1,|x|^q}` in the pointwise error guarantee.
    pub error_factor: f64,
    /// Sup error bound `2Lb/K` on `[-b, b]` (ReLU and leaky ReLU).
    pub core_error: f64,
    pub width_bound: f64,
    pub params_bound: f64,
    /// Input scaling of the softplus construction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl ApproxGuarantee {
    /// Checks `width <= width_bound`, `params <= params_bound` and the
    /// defining relations of `b` and `K`.
    pub fn check(&self) -> Result<()> {
        if !(self.width as f64 <= self.width_bound) {
            return Err(Error::Bound(format!("width {} exceeds {}", self.width, self.width_bound)));
        }
        if !(self.params as f64 <= self.params_bound) {
            return Err(Error::Bound(format!("params {} exceed {}", self.params, self.params_bound)));
        }
        let lo = 2.0 * self.lipschitz * self.b / self.eps;
        if !((self.k as f64) >= lo * (1.0 - 1e-12) && (self.k as f64) <= (lo + 1.0).max(1.0) * (1.0 + 1e-12)) {
            return Err(Error::Bound(format!("K = {} outside [{lo}, {}]", self.k, lo + 1.0)));
        }
        let lhs = (2.0 * self.lipschitz).max(1.0);
        let rhs = self.eps * self.b.powf(self.q - 1.0);
        if !((lhs - rhs).abs() <= 1e-9 * lhs) {
            return Err(Error::Bound(format!("max{{1,2L}} = {lhs} but eps b^(q-1) = {rhs}")));
        }
        Ok(())
    }
}

/// Clamped piecewise-linear interpolation of `values` at the grid knots.
pub fn lin_interp(grid: &Grid, values: &[f64], x: f64) -> f64 {
    let p = &grid.points;
    assert_eq!(values.len(), p.len(), "one value per knot");
    if x <= p[0] {
        return values[0];
    }
    if x >= p[p.len() - 1] {
        return values[values.len() - 1];
    }
    // First knot strictly greater than x; 1 <= k <= K.
    let k = p.partition_point(|&v| v <= x);
    let (x0, x1) = (p[k - 1], p[k]);
    values[k - 1] + (x - x0) / (x1 - x0) * (values[k] - values[k - 1])
}

/// Brute-force lower estimate of the modulus of continuity: the largest
/// `|f(x)-f(y)|` over sample pairs with `|x-y| <= h`.
pub fn empirical_modulus(f: impl Fn(f64) -> f64, samples: &[f64], h: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> = samples.iter().map(|&x| (x, f(x))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if pts[j].0 - pts[i].0 > h {
                break;
            }
            best = best.max((pts[j].1 - pts[i].1).abs());
        }
    }
    best
}

/// `A_{1,f0} ∘ ⊕_k h_k ⊛ (𝔦_1 ∘ A_{α_k, β_k})`.
fn shallow_sum(f0: f64, terms: &[(f64, f64, f64)]) -> Result<Network> {
    let unit = activation_wrapper(1);
    let parts = terms
        .iter()
        .map(|&(h, alpha, beta)| Ok(scalar_mul(h, &compose(&unit, &affine_scalar(alpha, beta))?)))
        .collect::<Result<Vec<_>>>()?;
    compose(&affine_scalar(1.0, f0), &sum_same_depth(&parts)?)
}

/// Slope changes `c_k` of the interpolant on an arbitrary grid.
pub fn relu_coefficients(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let x = &grid.points;
    let f = values;
    let kk = grid.cells();
    (0..=kk)
        .map(|k| {
            let up = (f[(k + 1).min(kk)] - f[k]) / (x[(k + 1).min(kk)] - x[k.min(kk - 1)]);
            let down = (f[k] - f[k.saturating_sub(1)]) / (x[k.max(1)] - x[k.saturating_sub(1)]);
            up - down
        })
        .collect()
}

/// ReLU network realizing [`lin_interp`] on the whole real line.
pub fn interp_net_relu(grid: &Grid, values: &[f64]) -> Result<Network> {
    if values.len() != grid.points.len() {
        return Err(Error::Argument(format!(
            "{} values for {} knots",
            values.len(),
            grid.points.len()
        )));
    }
    let c = relu_coefficients(grid, values);
    let terms: Vec<_> = grid.points.iter().zip(&c).map(|(&xk, &ck)| (ck, 1.0, -xk)).collect();
    shallow_sum(values[0], &terms)
}

/// Interpolant of `values` on `grid` for the given activation. ReLU and
/// leaky ReLU reproduce [`lin_interp`] exactly; softplus smooths every kink
/// with sharpness `64/h_min`, where `h_min` is the smallest cell.
pub fn interp_net(grid: &Grid, values: &[f64], act: &Activation) -> Result<Network> {
    if values.len() != grid.points.len() {
        return Err(Error::Argument(format!("{} values for {} knots", values.len(), grid.points.len())));
    }
    let c = relu_coefficients(grid, values);
    let knots = grid.points.iter().zip(&c);
    let terms: Vec<(f64, f64, f64)> = match *act {
        Activation::Relu => knots.map(|(&xk, &ck)| (ck, 1.0, -xk)).collect(),
        Activation::LeakyRelu(alpha) => leaky_terms(knots.map(|(&x, &c)| (x, c)), alpha),
        Activation::Softplus => {
            let h_min = grid.points.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            let beta = 64.0 / h_min;
            knots.map(|(&xk, &ck)| (ck / beta, beta, -beta * xk)).collect()
        }
        Activation::Repu(_) => {
            return Err(Error::Activation("piecewise-linear interpolants need a ReLU-type or softplus activation".into()))
        }
    };
    shallow_sum(values[0], &terms)
}

/// Writes `c max{x - x_k, 0}` as two leaky units for every `(x_k, c)`:
/// first all units with negated input, then all with positive input.
fn leaky_terms(knots: impl Iterator<Item = (f64, f64)> + Clone, alpha: f64) -> Vec<(f64, f64, f64)> {
    let s = (1.0 - alpha).abs() / (1.0 - alpha);
    let denom = (1.0 - alpha) * (1.0 - alpha * alpha);
    let abs = (1.0 - alpha).abs();
    knots
        .clone()
        .map(|(xk, ck)| (ck * abs * alpha / denom, -s, s * xk))
        .chain(knots.map(|(xk, ck)| (ck * abs / denom, s, -s * xk)))
        .collect()
}

struct Uniform {
    b: f64,
    k: usize,
    knots: Vec<f64>,
    values: Vec<f64>,
    c: Vec<f64>,
    /// `(max{1,2L}/ε)^{q/(q-1)}`.
    growth: f64,
}

fn uniform_setup(f: &LipschitzFn, q: f64, eps: f64) -> Result<Uniform> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Argument(format!("eps must lie in (0,1], got {eps}")));
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::Argument(format!("q must be a finite number above 1, got {q}")));
    }
    let l = f.lipschitz();
    let m = (2.0 * l).max(1.0);
    let b = (m / eps).powf(1.0 / (q - 1.0));
    let k = ((2.0 * l * b / eps).ceil() as usize).max(1);
    let grid = Grid::symmetric(b, k)?;
    let values: Vec<f64> = grid.points.iter().map(|&x| f.eval(x)).collect();
    let c = (0..=k)
        .map(|i| {
            let up = values[(i + 1).min(k)];
            let down = values[i.saturating_sub(1)];
            k as f64 * (up - 2.0 * values[i] + down) / (2.0 * b)
        })
        .collect();
    Ok(Uniform { b, k, knots: grid.points, values, c, growth: (m / eps).powf(q / (q - 1.0)) })
}

fn guarantee(u: &Uniform, f: &LipschitzFn, q: f64, eps: f64, net: &Network) -> ApproxGuarantee {
    ApproxGuarantee {
        eps,
        q,
        b: u.b,
        k: u.k,
        width: net.dim_at(1),
        params: net.param_count(),
        lipschitz: f.lipschitz(),
        error_factor: 1.0,
        core_error: 2.0 * f.lipschitz() * u.b / u.k as f64,
        width_bound: 2.0 * u.growth + 1.0,
        params_bound: 12.0 * u.growth,
        beta: None,
    }
}

/// ReLU interpolant of `f` on the uniform grid over `[-b, b]`.
pub fn approx_net_relu(f: &LipschitzFn, q: f64, eps: f64) -> Result<(Network, ApproxGuarantee)> {
    let u = uniform_setup(f, q, eps)?;
    let terms: Vec<_> = u.knots.iter().zip(&u.c).map(|(&xk, &ck)| (ck, 1.0, -xk)).collect();
    let net = shallow_sum(u.values[0], &terms)?;
    let g = guarantee(&u, f, q, eps, &net);
    Ok((net, g))
}

/// Leaky-ReLU version: each ReLU kink is written as two leaky units.
pub fn approx_net_leaky(
    f: &LipschitzFn,
    q: f64,
    eps: f64,
    alpha: f64,
) -> Result<(Network, ApproxGuarantee)> {
    Activation::leaky(alpha)?;
    let u = uniform_setup(f, q, eps)?;
    let terms = leaky_terms(u.knots.iter().copied().zip(u.c.iter().copied()), alpha);
    let net = shallow_sum(u.values[0], &terms)?;
    let mut g = guarantee(&u, f, q, eps, &net);
    g.width_bound = 4.0 * u.growth + 2.0;
    g.params_bound = 24.0 * u.growth;
    Ok((net, g))
}

/// Softplus version with input sharpness `β = max{2, 2K²L ln2/ε}`.
pub fn approx_net_softplus(f: &LipschitzFn, q: f64, eps: f64) -> Result<(Network, ApproxGuarantee)> {
    let u = uniform_setup(f, q, eps)?;
    let kf = u.k as f64;
    let beta = (2.0 * kf * kf * f.lipschitz() * std::f64::consts::LN_2 / eps).max(2.0);
    let terms: Vec<_> = u.knots.iter().zip(&u.c).map(|(&xk, &ck)| (ck / beta, beta, -beta * xk)).collect();
    let net = shallow_sum(u.values[0], &terms)?;
    let mut g = guarantee(&u, f, q, eps, &net);
    g.error_factor = 2.0;
    g.beta = Some(beta);
    Ok((net, g))
}

/// Dispatches to the approximation matching `act`.
pub fn approx_net(f: &LipschitzFn, q: f64, eps: f64, act: &Activation) -> Result<(Network, ApproxGuarantee)> {
    match *act {
        Activation::Relu => approx_net_relu(f, q, eps),
        Activation::LeakyRelu(alpha) => approx_net_leaky(f, q, eps, alpha),
        Activation::Softplus => approx_net_softplus(f, q, eps),
        Activation::Repu(_) => Err(Error::Activation("no RePU approximation construction".into())),
    }
}

/// Largest `|g(x)-g(y)|/|x-y|` over the given pairs.
pub fn max_difference_quotient(g: impl Fn(f64) -> f64, pairs: &[(f64, f64)]) -> f64 {
    pairs
        .iter()
        .filter(|(x, y)| x != y)
        .map(|&(x, y)| (g(x) - g(y)).abs() / (x - y).abs())
        .fold(0.0, f64::max)
}
