use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mlp::{mlp_eval, MlpConfig, ProblemFns};
use crate::oracle::{RandomOracle, SampleKind, ThetaPath};

/// The semilinear term `f`.
#[derive(Clone)]
pub enum Nonlinearity {
    Zero,
    Linear(f64),
    Custom { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, lipschitz: f64 },
}

impl Nonlinearity {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear(l) => l * u,
            Nonlinearity::Custom { f, .. } => f(u),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear(l) => l.abs(),
            Nonlinearity::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    /// `κ f`.
    pub fn scaled(&self, kappa: f64) -> Nonlinearity {
        match self {
            Nonlinearity::Zero => Nonlinearity::Zero,
            Nonlinearity::Linear(l) => Nonlinearity::Linear(kappa * l),
            Nonlinearity::Custom { f, lipschitz } => {
                let f = Arc::clone(f);
                Nonlinearity::Custom { f: Arc::new(move |u| kappa * f(u)), lipschitz: kappa.abs() * lipschitz }
            }
        }
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Zero => write!(f, "Zero"),
            Nonlinearity::Linear(l) => write!(f, "Linear({l})"),
            Nonlinearity::Custom { lipschitz, .. } => write!(f, "Custom(L={lipschitz})"),
        }
    }
}

/// Terminal or initial datum `g`.
#[derive(Clone)]
pub enum Datum {
    /// `‖x‖²`.
    Quadratic,
    /// `exp(-‖x‖²/2)`.
    GaussianBump,
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl Datum {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Datum::Quadratic => x.iter().map(|v| v * v).sum(),
            Datum::GaussianBump => (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp(),
            Datum::Custom(g) => g(x),
        }
    }
}

impl fmt::Debug for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Datum::Quadratic => write!(f, "Quadratic"),
            Datum::GaussianBump => write!(f, "GaussianBump"),
            Datum::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// `Terminal`: `∂_t u + 𝔠Δu + f(u) = 0`, `u(T) = g`.
/// `Initial`: `∂_t u = 𝔠Δu + f(u)`, `u(0) = g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Terminal,
    Initial,
}

#[derive(Debug, Clone)]
pub struct PdeProblem {
    pub d: usize,
    pub horizon: f64,
    pub diffusion: f64,
    pub f: Nonlinearity,
    pub g: Datum,
    pub box_a: f64,
    pub box_b: f64,
    pub direction: Direction,
}

impl PdeProblem {
    /// `g = ‖x‖²`, `f(u) = λu`, box `[0,1]^d`, terminal condition.
    pub fn heat_quadratic(d: usize, diffusion: f64, horizon: f64, lambda: f64) -> Self {
        PdeProblem {
            d,
            horizon,
            diffusion,
            f: if lambda == 0.0 { Nonlinearity::Zero } else { Nonlinearity::Linear(lambda) },
            g: Datum::Quadratic,
            box_a: 0.0,
            box_b: 1.0,
            direction: Direction::Terminal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Argument("dimension must be positive".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Argument(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.diffusion > 0.0 && self.diffusion.is_finite()) {
            return Err(Error::Argument(format!("diffusion must be positive, got {}", self.diffusion)));
        }
        if !(self.box_a < self.box_b) {
            return Err(Error::Argument(format!("empty box [{}, {}]", self.box_a, self.box_b)));
        }
        if let Nonlinearity::Custom { f, lipschitz } = &self.f {
            // Spot check of the declared constant on a fixed set of pairs.
            for i in 0..64 {
                let x = -10.0 + 20.0 * i as f64 / 63.0;
                let y = x + 0.37;
                if (f(x) - f(y)).abs() > lipschitz * (x - y).abs() * (1.0 + 1e-9) {
                    return Err(Error::Argument(format!("nonlinearity exceeds Lipschitz constant {lipschitz} near {x}")));
                }
            }
        }
        Ok(())
    }

    /// `(t, horizon)` in terminal-condition form for an evaluation time `t`.
    fn terminal_time(&self, t: f64) -> f64 {
        match self.direction {
            Direction::Terminal => t,
            Direction::Initial => self.horizon - t,
        }
    }
}

/// Rescales time so the generator becomes `½Δ`: `T' = 2𝔠T`, `f' = f/(2𝔠)`,
/// `𝓊(s, x) = u(s/(2𝔠), x)`. The inverse maps `s ↦ s/(2𝔠)`.
pub fn time_rescale(problem: &PdeProblem) -> Result<PdeProblem> {
    problem.validate()?;
    let scale = 2.0 * problem.diffusion;
    Ok(PdeProblem {
        horizon: scale * problem.horizon,
        diffusion: 0.5,
        f: problem.f.scaled(1.0 / scale),
        ..problem.clone()
    })
}

/// Closed form for `g = ‖x‖²` with `f = 0` or `f(u) = λu`:
/// `u = e^{λτ}(‖x‖² + 2𝔠dτ)` where `τ` is the time to the datum.
pub fn reference_solution(problem: &PdeProblem, t: f64, x: &[f64]) -> Result<f64> {
    let lambda = match (&problem.f, &problem.g) {
        (Nonlinearity::Zero, Datum::Quadratic) => 0.0,
        (Nonlinearity::Linear(l), Datum::Quadratic) => *l,
        (f, g) => return Err(Error::NoReference(format!("f = {f:?}, g = {g:?}"))),
    };
    if x.len() != problem.d {
        return Err(Error::InputShape { expected: problem.d, got: x.len() });
    }
    let tau = match problem.direction {
        Direction::Terminal => problem.horizon - t,
        Direction::Initial => t,
    };
    let sq: f64 = x.iter().map(|v| v * v).sum();
    Ok((lambda * tau).exp() * (sq + 2.0 * problem.diffusion * problem.d as f64 * tau))
}

/// Central-difference residual of the PDE for the closed-form reference.
/// Time uses step `h`, space uses `√h` so that both differences amplify
/// rounding by the same factor `1/h`.
pub fn pde_residual(problem: &PdeProblem, t: f64, x: &[f64], h: f64) -> Result<f64> {
    let u = |t: f64, x: &[f64]| reference_solution(problem, t, x);
    let u0 = u(t, x)?;
    let dt = (u(t + h, x)? - u(t - h, x)?) / (2.0 * h);
    let hx = h.sqrt();
    let mut lap = 0.0;
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + hx;
        let up = u(t, &y)?;
        y[i] = x[i] - hx;
        let down = u(t, &y)?;
        y[i] = x[i];
        lap += (up - 2.0 * u0 + down) / (hx * hx);
    }
    let rhs = problem.diffusion * lap + problem.f.eval(u0);
    Ok(match problem.direction {
        Direction::Terminal => (dt + rhs).abs(),
        Direction::Initial => (dt - rhs).abs(),
    })
}

/// Refuses to proceed unless the reference satisfies the PDE to `1e-6` at
/// 16 pseudo-random interior points.
pub fn reference_gate(problem: &PdeProblem) -> Result<()> {
    let oracle = RandomOracle::new(0x5eed);
    let h = 1e-4;
    for i in 0..16 {
        let th = ThetaPath::new(vec![i]);
        let t = h + (problem.horizon - 2.0 * h) * oracle.uniform(SampleKind::Probe, &th, 0);
        let x = oracle.box_point(i as u64, problem.box_a, problem.box_b, problem.d);
        let r = pde_residual(problem, t, &x, h)?;
        if !(r <= 1e-6) {
            return Err(Error::Check(format!("reference residual {r:e} at t={t}, x={x:?}")));
        }
    }
    Ok(())
}

/// `f` and `g` of a problem already rescaled to the `½Δ` generator.
pub struct EngineFns<'a> {
    pub problem: &'a PdeProblem,
}

impl ProblemFns for EngineFns<'_> {
    fn f(&self, u: f64) -> f64 {
        self.problem.f.eval(u)
    }

    fn g(&self, x: &[f64]) -> f64 {
        self.problem.g.eval(x)
    }
}

/// Engine configuration and rescaled problem for evaluating `u(t, ·)`.
pub fn engine_setup(problem: &PdeProblem, n: usize, m: usize, t: f64) -> Result<(MlpConfig, PdeProblem)> {
    if !(0.0..=problem.horizon).contains(&t) {
        return Err(Error::Argument(format!("t = {t} outside [0, {}]", problem.horizon)));
    }
    let rescaled = time_rescale(problem)?;
    let s = 2.0 * problem.diffusion * problem.terminal_time(t);
    let cfg = MlpConfig { n, m, horizon: rescaled.horizon, t: s.min(rescaled.horizon), d: problem.d };
    Ok((cfg, rescaled))
}

/// MLP estimate of `u(t, x)` with the root path and the given seed.
pub fn estimate(problem: &PdeProblem, n: usize, m: usize, t: f64, x: &[f64], seed: u64) -> Result<f64> {
    let (cfg, rescaled) = engine_setup(problem, n, m, t)?;
    mlp_eval(&cfg, x, &ThetaPath::root(), &EngineFns { problem: &rescaled }, &RandomOracle::new(seed))
}
