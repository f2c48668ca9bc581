//! One-hidden-layer networks realizing the real identity, one per activation.

use crate::calculus::{activation_wrapper, affine_scalar, compose, scalar_mul, sum_same_depth};
use crate::error::{Error, Result};
use crate::network::{Activation, Layer, Network};

/// Largest accepted infinity-norm condition number of the node system.
pub const MAX_CONDITION: f64 = 1e12;

/// Activation plus optional interpolation nodes (RePU and pure powers only).
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityNetSpec {
    pub activation: Activation,
    pub nodes: Option<Vec<f64>>,
}

impl IdentityNetSpec {
    pub fn build(&self) -> Result<Network> {
        match (&self.activation, &self.nodes) {
            (Activation::Repu(g), Some(nodes)) => identity_repu(*g, nodes),
            (act, None) => Ok(default_identity(act)),
            (act, Some(_)) => Err(Error::Argument(format!("{act} identity takes no nodes"))),
        }
    }
}

/// `I_γ = (((1, -1)ᵀ, 0), ((1, (-1)^γ), 0))`.
pub fn monomial_net(gamma: u32) -> Network {
    let sign = if gamma % 2 == 0 { 1.0 } else { -1.0 };
    Network::new(vec![
        Layer::new(2, 1, vec![1.0, -1.0], vec![0.0, 0.0]).expect("2x1"),
        Layer::new(1, 2, vec![1.0, sign], vec![0.0]).expect("1x2"),
    ])
    .expect("chained")
}

/// `(1 + α)⁻¹ ⊛ I_1` under the leaky ReLU with slope `α`.
pub fn identity_leaky(alpha: f64) -> Result<Network> {
    Activation::leaky(alpha)?;
    Ok(scalar_mul(1.0 / (1.0 + alpha), &monomial_net(1)))
}

/// `I_1`, since `ln(1+eˣ) - ln(1+e⁻ˣ) = x`.
pub fn identity_softplus() -> Network {
    monomial_net(1)
}

/// Solves `1_{γ}(k) c_0 + Σ_i c_i b_i^k = 1_{γ-1}(k)/γ` for `k = 0..=γ`.
pub fn node_coefficients(gamma: u32, nodes: &[f64]) -> Result<Vec<f64>> {
    let g = gamma as usize;
    if gamma < 2 {
        return Err(Error::Argument(format!("power must be at least 2, got {gamma}")));
    }
    if nodes.len() != g {
        return Err(Error::Argument(format!("need {g} nodes, got {}", nodes.len())));
    }
    if nodes.windows(2).any(|w| !(w[0] < w[1])) || nodes.iter().any(|b| !b.is_finite()) {
        return Err(Error::Argument("nodes must be finite and strictly increasing".into()));
    }
    let a = node_matrix(gamma, nodes);
    let mut rhs = vec![0.0; g + 1];
    rhs[g - 1] = 1.0 / gamma as f64;
    let lu = Lu::factor(&a, g + 1)?;
    let inv_norm = (0..=g)
        .map(|j| {
            let mut e = vec![0.0; g + 1];
            e[j] = 1.0;
            lu.solve(&e)
        })
        .fold(vec![0.0; g + 1], |mut acc, col| {
            acc.iter_mut().zip(&col).for_each(|(s, c)| *s += c.abs());
            acc
        })
        .into_iter()
        .fold(0.0, f64::max);
    let a_norm = a.chunks(g + 1).map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let estimate = a_norm * inv_norm;
    if !(estimate <= MAX_CONDITION) {
        return Err(Error::IllConditioned { estimate });
    }
    Ok(lu.solve(&rhs))
}

/// Row `k` is `(1_{γ}(k), b_1^k, …, b_γ^k)`.
pub fn node_matrix(gamma: u32, nodes: &[f64]) -> Vec<f64> {
    let g = gamma as usize;
    let mut a = Vec::with_capacity((g + 1) * (g + 1));
    for k in 0..=g {
        a.push(if k == g { 1.0 } else { 0.0 });
        a.extend(nodes.iter().map(|b| b.powi(k as i32)));
    }
    a
}

/// Max-norm residual of the node system for given coefficients.
pub fn node_residual(gamma: u32, nodes: &[f64], c: &[f64]) -> f64 {
    let g = gamma as usize;
    let a = node_matrix(gamma, nodes);
    (0..=g)
        .map(|k| {
            let lhs: f64 = a[k * (g + 1)..(k + 1) * (g + 1)].iter().zip(c).map(|(x, y)| x * y).sum();
            let rhs = if k + 1 == g { 1.0 / gamma as f64 } else { 0.0 };
            (lhs - rhs).abs()
        })
        .fold(0.0, f64::max)
}

/// LU factorization with partial pivoting of a small dense matrix.
struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(a: &[f64], n: usize) -> Result<Self> {
        let mut a = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
                .expect("nonempty range");
            if a[pivot * n + col] == 0.0 {
                return Err(Error::IllConditioned { estimate: f64::INFINITY });
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                }
                perm.swap(pivot, col);
            }
            for i in col + 1..n {
                let factor = a[i * n + col] / a[col * n + col];
                a[i * n + col] = factor;
                for j in col + 1..n {
                    a[i * n + j] -= factor * a[col * n + j];
                }
            }
        }
        Ok(Lu { n, a, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.a[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.a[i * n + j] * x[j];
            }
            x[i] /= self.a[i * n + i];
        }
        x
    }
}

fn assemble(c: &[f64], nodes: &[f64], unit: &Network) -> Result<Network> {
    let terms: Vec<Network> = nodes
        .iter()
        .zip(&c[1..])
        .map(|(&b, &ci)| Ok(scalar_mul(ci, &compose(unit, &affine_scalar(1.0, b))?)))
        .collect::<Result<_>>()?;
    compose(&affine_scalar(1.0, c[0]), &sum_same_depth(&terms)?)
}

/// `A_{1,c_0} ∘ ⊕_i c_i ⊛ (I_γ ∘ A_{1,b_i})`: the identity under RePU(γ).
pub fn identity_repu(gamma: u32, nodes: &[f64]) -> Result<Network> {
    let c = node_coefficients(gamma, nodes)?;
    assemble(&c, nodes, &monomial_net(gamma))
}

/// Same coefficients with `𝔦_1` in place of `I_γ`: the identity under the
/// pure power `x ↦ x^γ`, which is evaluated through [`Network::realize_with`].
pub fn identity_power(gamma: u32, nodes: &[f64]) -> Result<Network> {
    let c = node_coefficients(gamma, nodes)?;
    assemble(&c, nodes, &activation_wrapper(1))
}

/// Nodes `(1, 2, …, γ)`.
pub fn default_nodes(gamma: u32) -> Vec<f64> {
    (1..=gamma).map(f64::from).collect()
}

/// Identity network for any supported activation.
pub fn default_identity(act: &Activation) -> Network {
    match *act {
        Activation::Relu => identity_leaky(0.0).expect("slope 0 is valid"),
        Activation::LeakyRelu(a) => identity_leaky(a).expect("validated activation"),
        Activation::Softplus => identity_softplus(),
        Activation::Repu(g) => {
            identity_repu(g, &default_nodes(g)).expect("integer nodes are well conditioned")
        }
    }
}
