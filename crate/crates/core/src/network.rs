//! Dense feedforward networks and their realizations.
//!
//! A network is a list of affine layers `(W_k, B_k)`; the realization applies
//! the activation after every layer but the last.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Elementwise activation function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
    Repu(u32),
    Softplus,
}

impl Activation {
    pub fn leaky(alpha: f64) -> Result<Self> {
        let a = Activation::LeakyRelu(alpha);
        a.validate()?;
        Ok(a)
    }

    pub fn repu(gamma: u32) -> Result<Self> {
        let a = Activation::Repu(gamma);
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Activation::LeakyRelu(a) if !(a.is_finite() && a >= 0.0 && a != 1.0) => Err(
                Error::Activation(format!("leaky slope must lie in [0,inf) without 1, got {a}")),
            ),
            Activation::Repu(g) if g < 2 => {
                Err(Error::Activation(format!("RePU power must be at least 2, got {g}")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu(a) => {
                if x >= 0.0 {
                    x
                } else {
                    a * x
                }
            }
            Activation::Repu(g) => x.max(0.0).powi(g as i32),
            Activation::Softplus => softplus(x),
        }
    }

    /// Global Lipschitz constant, if the activation has one.
    pub fn lipschitz(&self) -> Option<f64> {
        match *self {
            Activation::Relu | Activation::Softplus => Some(1.0),
            Activation::LeakyRelu(a) => Some(a.max(1.0)),
            Activation::Repu(_) => None,
        }
    }

    /// True for the piecewise-linear members of the family.
    pub fn is_piecewise_linear(&self) -> bool {
        matches!(self, Activation::Relu | Activation::LeakyRelu(_))
    }
}

/// `ln(1 + e^x)` without overflow for large `|x|`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Relu => write!(f, "relu"),
            Activation::LeakyRelu(a) => write!(f, "leaky:{a}"),
            Activation::Repu(g) => write!(f, "repu:{g}"),
            Activation::Softplus => write!(f, "softplus"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (tag, arg) = match s.split_once(':') {
            Some((t, a)) => (t, Some(a)),
            None => (s, None),
        };
        let act = match (tag.to_ascii_lowercase().as_str(), arg) {
            ("relu", None) => Activation::Relu,
            ("softplus", None) => Activation::Softplus,
            ("leaky", Some(a)) => Activation::LeakyRelu(
                a.parse().map_err(|_| Error::Activation(format!("bad leaky slope {a:?}")))?,
            ),
            ("repu", Some(g)) => Activation::Repu(
                g.parse().map_err(|_| Error::Activation(format!("bad RePU power {g:?}")))?,
            ),
            _ => return Err(Error::Activation(format!("unknown activation {s:?}"))),
        };
        act.validate()?;
        Ok(act)
    }
}

/// One affine layer; `weights` is `rows x cols`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("layer shape {rows}x{cols} has a zero side")));
        }
        if weights.len() != rows * cols {
            return Err(Error::Shape(format!(
                "weight buffer has {} entries, expected {rows}x{cols}",
                weights.len()
            )));
        }
        if bias.len() != rows {
            return Err(Error::Shape(format!("bias has {} entries, expected {rows}", bias.len())));
        }
        Ok(Layer { rows, cols, weights, bias })
    }

    /// Builds a layer from a list of rows.
    pub fn from_rows(rows: &[Vec<f64>], bias: Vec<f64>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged weight rows".into()));
        }
        Layer::new(rows.len(), cols, rows.concat(), bias)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.cols..(i + 1) * self.cols]
    }

    /// `W x + B` written into `out`.
    pub fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.cols).zip(&self.bias).map(|(row, b)| {
            row.iter().zip(x).fold(0.0, |acc, (w, xi)| acc + w * xi) + b
        }));
    }

    pub fn into_parts(self) -> (usize, usize, Vec<f64>, Vec<f64>) {
        (self.rows, self.cols, self.weights, self.bias)
    }

    fn frobenius(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Feedforward network `((W_1,B_1),…,(W_L,B_L))` with `L >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("a network needs at least one layer".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[1].cols != pair[0].rows {
                return Err(Error::Shape(format!(
                    "layer {} has {} inputs but layer {} has {} outputs",
                    k + 2,
                    pair[1].cols,
                    k + 1,
                    pair[0].rows
                )));
            }
        }
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    /// `(l_0, l_1, …, l_L)`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].cols).chain(self.layers.iter().map(|l| l.rows)).collect()
    }

    /// `l_n` for `n <= L`, zero beyond the output layer.
    pub fn dim_at(&self, n: usize) -> usize {
        match n {
            0 => self.layers[0].cols,
            n if n <= self.layers.len() => self.layers[n - 1].rows,
            _ => 0,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.rows * (l.cols + 1)).sum()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].rows
    }

    pub fn hidden_count(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn max_width(&self) -> usize {
        self.dims().into_iter().max().unwrap_or(0)
    }

    pub fn realize(&self, act: &Activation, x: &[f64]) -> Result<Vec<f64>> {
        self.realize_with(|v| act.apply(v), x)
    }

    /// Scalar-output convenience wrapper around [`Network::realize`].
    pub fn realize_scalar(&self, act: &Activation, x: &[f64]) -> Result<f64> {
        let y = self.realize(act, x)?;
        if y.len() != 1 {
            return Err(Error::Interface(format!("expected one output, network has {}", y.len())));
        }
        Ok(y[0])
    }

    /// Realization under an arbitrary elementwise function.
    pub fn realize_with<F: Fn(f64) -> f64>(&self, act: F, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::InputShape { expected: self.input_dim(), got: x.len() });
        }
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.apply_into(&cur, &mut next);
            if k < last {
                next.iter_mut().for_each(|v| *v = act(*v));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Upper bound on the Lipschitz constant of the realization in the
    /// Euclidean norm: product of Frobenius norms times the activation's
    /// constant for each hidden layer.
    pub fn lipschitz_bound(&self, act: &Activation) -> Option<f64> {
        let lip = act.lipschitz()?;
        let norms: f64 = self.layers.iter().map(Layer::frobenius).product();
        Some(norms * lip.powi(self.hidden_count() as i32))
    }

    pub fn to_file(&self, act: Option<&Activation>) -> NetworkFile {
        NetworkFile {
            dims: self.dims(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile { w: l.weights.clone(), b: l.bias.clone() })
                .collect(),
            activation: act.map(ToString::to_string),
        }
    }

    /// JSON text; floats use shortest round-trip decimals.
    pub fn to_json(&self, act: Option<&Activation>) -> String {
        serde_json::to_string(&self.to_file(act)).expect("finite network serializes")
    }

    pub fn from_json(text: &str) -> Result<(Network, Option<Activation>)> {
        let file: NetworkFile =
            serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
        file.into_network()
    }
}

/// On-disk network layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub dims: Vec<usize>,
    pub layers: Vec<LayerFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFile {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl NetworkFile {
    pub fn into_network(self) -> Result<(Network, Option<Activation>)> {
        if self.dims.len() != self.layers.len() + 1 {
            return Err(Error::Serde(format!(
                "{} dims given for {} layers",
                self.dims.len(),
                self.layers.len()
            )));
        }
        let layers = self
            .layers
            .into_iter()
            .enumerate()
            .map(|(k, l)| Layer::new(self.dims[k + 1], self.dims[k], l.w, l.b))
            .collect::<Result<Vec<_>>>()?;
        let act = self.activation.as_deref().map(str::parse).transpose()?;
        Ok((Network::new(layers)?, act))
    }
}
