//! Compilation of the Picard estimator into one explicit network whose
//! realization reproduces the estimator on the same random draws.

use serde::Serialize;

use crate::calculus::{check_identity, compose, scalar_mul, shift, sum_diff_depth_unchecked, sum_same_depth, zero_net};
use crate::error::{Error, Result};
use crate::mlp::{mlp_eval, MlpConfig, NetProblem};
use crate::network::{Activation, Layer, Network};
use crate::oracle::{brownian_increment, uniform_time, RandomOracle, ThetaPath};

/// Default ceiling on the parameter bound accepted by [`compile_mlp`].
pub const MAX_BOUND_PARAMS: u128 = 100_000_000;

/// Everything the compiled network depends on.
#[derive(Debug, Clone)]
pub struct CompileInputs {
    pub cfg: MlpConfig,
    pub g_net: Network,
    pub f_net: Network,
    pub j_net: Network,
    pub activation: Activation,
    pub oracle: RandomOracle,
    /// Skip the [`MAX_BOUND_PARAMS`] guard.
    pub allow_large: bool,
}

impl CompileInputs {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        self.activation.validate()?;
        let j = &self.j_net;
        if j.depth() != 2 || j.input_dim() != 1 || j.output_dim() != 1 {
            return Err(Error::Interface(format!("identity network must have dims (1,w,1), got {:?}", j.dims())));
        }
        check_identity(j, &self.activation)?;
        if self.g_net.input_dim() != self.cfg.d || self.g_net.output_dim() != 1 {
            return Err(Error::Interface(format!(
                "datum network must map R^{} to R, got {:?}",
                self.cfg.d,
                self.g_net.dims()
            )));
        }
        if self.f_net.input_dim() != 1 || self.f_net.output_dim() != 1 {
            return Err(Error::Interface(format!(
                "nonlinearity network must map R to R, got {:?}",
                self.f_net.dims()
            )));
        }
        Ok(())
    }

    /// `max{𝔡, |||𝒟(F)|||, |||𝒟(G)|||}`.
    pub fn width_base(&self) -> usize {
        self.j_net.dim_at(1).max(self.f_net.max_width()).max(self.g_net.max_width())
    }

    /// `(bound_depth, bound_width, bound_params)` for level `cfg.n`.
    pub fn bounds(&self) -> (u128, u128, u128) {
        let n = self.cfg.n as u32;
        let depth = self.j_net.dim_at(1).max(self.g_net.depth()) as u128
            + n as u128 * self.f_net.hidden_count() as u128;
        let base = self.width_base() as u128;
        let growth = (3 * self.cfg.m as u128).saturating_pow(n);
        let width = base.saturating_mul(growth);
        let params = 2u128
            .saturating_mul(depth)
            .saturating_mul(base * base)
            .saturating_mul(growth.saturating_mul(growth));
        (depth, width, params)
    }
}

/// `𝐔^θ_{n,t}` for `n = inputs.cfg.n`.
pub fn compile_mlp(inputs: &CompileInputs, theta: &ThetaPath, t: f64) -> Result<Network> {
    let mut cfg = inputs.cfg;
    cfg.t = t;
    CompileInputs { cfg, ..inputs.clone() }.validate()?;
    let (_, _, params) = inputs.bounds();
    if params > MAX_BOUND_PARAMS && !inputs.allow_large {
        return Err(Error::TooLarge { bound: params, limit: MAX_BOUND_PARAMS });
    }
    compile_level(inputs, inputs.cfg.n, theta, t)
}

fn compile_level(inp: &CompileInputs, n: usize, theta: &ThetaPath, t: f64) -> Result<Network> {
    let d = inp.cfg.d;
    if n == 0 {
        return Ok(zero_net(d));
    }
    let (m, horizon, j) = (inp.cfg.m, inp.cfg.horizon, &inp.j_net);
    let mn = m.pow(n as u32);
    let block1 = (1..=mn)
        .map(|k| {
            let w = brownian_increment(&inp.oracle, &theta.child(0, -(k as i64)), horizon - t, d);
            Ok(scalar_mul(1.0 / mn as f64, &compose(&inp.g_net, &shift(&w))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let block1 = sum_same_depth(&block1)?;

    let mut block2 = Vec::with_capacity(n);
    let mut block3 = Vec::with_capacity(n);
    for i in 0..n {
        let mi = m.pow((n - i) as u32);
        let mut plus = Vec::with_capacity(mi);
        let mut minus = Vec::with_capacity(mi);
        for k in 1..=mi {
            let th = theta.child(i as i64, k as i64);
            let r = uniform_time(&inp.oracle, &th, t, horizon);
            let w = brownian_increment(&inp.oracle, &th, r - t, d);
            let child = compile_level(inp, i, &th, r)?;
            plus.push(compose(&compose(&inp.f_net, &child)?, &shift(&w))?);
            let th_neg = theta.child(-(i as i64), k as i64);
            let child = compile_level(inp, i.saturating_sub(1), &th_neg, r)?;
            minus.push(compose(&compose(&inp.f_net, &child)?, &shift(&w))?);
        }
        let indicator = if i >= 1 { 1.0 } else { 0.0 };
        block2.push(scalar_mul((horizon - t) / mi as f64, &sum_diff_depth_unchecked(&plus, j)?));
        block3.push(scalar_mul((t - horizon) * indicator / mi as f64, &sum_diff_depth_unchecked(&minus, j)?));
    }
    let block2 = sum_diff_depth_unchecked(&block2, j)?;
    let block3 = sum_diff_depth_unchecked(&block3, j)?;
    sum_diff_depth_unchecked(&[block1, block2, block3], j)
}

/// Actual sizes of a compiled network next to the proven bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SizeReport {
    pub dims: Vec<usize>,
    pub depth: usize,
    pub max_width: usize,
    pub params: usize,
    pub bound_depth: u128,
    pub bound_width: u128,
    pub bound_params: u128,
}

impl SizeReport {
    pub fn within_bounds(&self) -> bool {
        self.depth as u128 <= self.bound_depth
            && self.max_width as u128 <= self.bound_width
            && self.params as u128 <= self.bound_params
    }
}

/// Sizes of `compiled`; fails if any bound is violated.
pub fn size_report(inputs: &CompileInputs, compiled: &Network) -> Result<SizeReport> {
    let (bound_depth, bound_width, bound_params) = inputs.bounds();
    let report = SizeReport {
        dims: compiled.dims(),
        depth: compiled.depth(),
        max_width: compiled.max_width(),
        params: compiled.param_count(),
        bound_depth,
        bound_width,
        bound_params,
    };
    if !report.within_bounds() {
        return Err(Error::Bound(format!("{report:?}")));
    }
    Ok(report)
}

/// Outcome of comparing the compiled network with the estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub probes: usize,
    pub max_residual: f64,
    pub tol: f64,
}

/// Checks `|ℛ(𝐔)(x) - U(x)| <= tol (1 + |U(x)|)` at every probe, where the
/// estimator uses the realizations of `F` and `G` and the same oracle.
pub fn verify_equivalence(
    inputs: &CompileInputs,
    theta: &ThetaPath,
    t: f64,
    probes: &[Vec<f64>],
    tol: f64,
) -> Result<EquivalenceReport> {
    let net = compile_mlp(inputs, theta, t)?;
    verify_compiled(inputs, &net, theta, t, probes, tol)
}

/// [`verify_equivalence`] against an already compiled network.
pub fn verify_compiled(
    inputs: &CompileInputs,
    net: &Network,
    theta: &ThetaPath,
    t: f64,
    probes: &[Vec<f64>],
    tol: f64,
) -> Result<EquivalenceReport> {
    let fns = NetProblem { f_net: &inputs.f_net, g_net: &inputs.g_net, activation: inputs.activation };
    let cfg = MlpConfig { t, ..inputs.cfg };
    let mut max_residual: f64 = 0.0;
    for x in probes {
        let reference = mlp_eval(&cfg, x, theta, &fns, &inputs.oracle)?;
        let value = net.realize_scalar(&inputs.activation, x)?;
        let residual = (value - reference).abs() / (1.0 + reference.abs());
        if !(residual <= tol) {
            return Err(Error::Equivalence { probe: x.clone(), residual, tol });
        }
        max_residual = max_residual.max(residual);
    }
    Ok(EquivalenceReport { probes: probes.len(), max_residual, tol })
}

/// Drops hidden units whose outgoing weights are all zero. Such units never
/// influence the output, so the realization is unchanged for any activation.
pub fn prune_zero_blocks(net: &Network) -> Network {
    let mut layers: Vec<Layer> = net.layers().to_vec();
    for k in (0..layers.len() - 1).rev() {
        let next = &layers[k + 1];
        let keep: Vec<usize> =
            (0..next.cols()).filter(|&c| (0..next.rows()).any(|r| next.weight(r, c) != 0.0)).collect();
        if keep.len() == next.cols() || keep.is_empty() {
            continue;
        }
        let next = &layers[k + 1];
        let w: Vec<f64> = (0..next.rows()).flat_map(|r| keep.iter().map(move |&c| next.weight(r, c))).collect();
        let pruned_next = Layer::new(next.rows(), keep.len(), w, next.bias().to_vec()).expect("subset of columns");
        let cur = &layers[k];
        let w: Vec<f64> = keep.iter().flat_map(|&r| cur.row(r).iter().copied()).collect();
        let b: Vec<f64> = keep.iter().map(|&r| cur.bias()[r]).collect();
        let pruned_cur = Layer::new(keep.len(), cur.cols(), w, b).expect("subset of rows");
        layers[k + 1] = pruned_next;
        layers[k] = pruned_cur;
    }
    Network::new(layers).expect("pruning keeps the chain consistent")
}
