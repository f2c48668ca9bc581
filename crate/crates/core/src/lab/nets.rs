use crate::calculus::{affine, affine_scalar, compose, sum_same_depth, zero_net};
use crate::error::{Error, Result};
use crate::identity::monomial_net;
use crate::interp::{interp_net, Grid};
use crate::network::{Activation, Network};

use super::problem::Nonlinearity;

/// Half-width of the interval on which [`quadratic_net`] interpolates `y²`.
pub const QUADRATIC_RADIUS: f64 = 4.0;
/// Cells of the one-dimensional `y²` interpolant.
pub const QUADRATIC_CELLS: usize = 32;

/// A network for `‖x‖²`: exact under RePU(2), otherwise the sum over
/// coordinates of a piecewise-linear interpolant of `y²` on
/// `[-QUADRATIC_RADIUS, QUADRATIC_RADIUS]` (constant outside).
pub fn quadratic_net(d: usize, act: &Activation) -> Result<Network> {
    let unit = match act {
        Activation::Repu(2) => monomial_net(2),
        Activation::Repu(g) => {
            return Err(Error::Activation(format!("no quadratic datum network for RePU({g})")))
        }
        _ => {
            let grid = Grid::symmetric(QUADRATIC_RADIUS, QUADRATIC_CELLS)?;
            let values: Vec<f64> = grid.points().iter().map(|y| y * y).collect();
            interp_net(&grid, &values, act)?
        }
    };
    let terms = (0..d)
        .map(|i| {
            let mut row = vec![0.0; d];
            row[i] = 1.0;
            compose(&unit, &affine(1, d, row, vec![0.0])?)
        })
        .collect::<Result<Vec<_>>>()?;
    sum_same_depth(&terms)
}

/// Depth-one network for `f = 0` or `f(u) = λu`.
pub fn nonlinearity_net(f: &Nonlinearity) -> Result<Network> {
    match f {
        Nonlinearity::Zero => Ok(zero_net(1)),
        Nonlinearity::Linear(l) => Ok(affine_scalar(*l, 0.0)),
        Nonlinearity::Custom { .. } => Err(Error::Argument("custom nonlinearities have no network form".into())),
    }
}
