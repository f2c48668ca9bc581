//! Algebra of networks: composition, powers, extensions, parallelization,
//! sums and scalar multiples. Every constructor works on the weights; the
//! matching statements about realizations are checked in the tests.

use crate::error::{Error, Result};
use crate::network::{Activation, Layer, Network};

/// Dense product `A B` of row-major matrices, skipping zero entries of `A`.
fn matmul(a: &[f64], a_rows: usize, a_cols: usize, b: &[f64], b_cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; a_rows * b_cols];
    for i in 0..a_rows {
        let out_row = &mut out[i * b_cols..(i + 1) * b_cols];
        for k in 0..a_cols {
            let aik = a[i * a_cols + k];
            if aik == 0.0 {
                continue;
            }
            let b_row = &b[k * b_cols..(k + 1) * b_cols];
            for (o, bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    out
}

/// `(W1 W2, W1 B2 + B1)`: the affine map of `outer` applied after `inner`.
fn merge(outer: &Layer, inner: &Layer) -> Layer {
    let weights = matmul(outer.weights(), outer.rows(), outer.cols(), inner.weights(), inner.cols());
    let mut bias = matmul(outer.weights(), outer.rows(), outer.cols(), inner.bias(), 1);
    for (b, b1) in bias.iter_mut().zip(outer.bias()) {
        *b += b1;
    }
    Layer::new(outer.rows(), inner.cols(), weights, bias).expect("merged shapes are consistent")
}

/// `phi1 ∘ phi2`: `phi2` is applied first and its output layer is merged with
/// the input layer of `phi1`.
pub fn compose(phi1: &Network, phi2: &Network) -> Result<Network> {
    if phi1.input_dim() != phi2.output_dim() {
        return Err(Error::Composition { inner_out: phi2.output_dim(), outer_in: phi1.input_dim() });
    }
    let (outer, inner) = (phi1.layers(), phi2.layers());
    let big_l = inner.len();
    let merged = merge(&outer[0], &inner[big_l - 1]);
    let layers: Vec<Layer> = match (outer.len() > 1, big_l > 1) {
        (true, true) => inner[..big_l - 1]
            .iter()
            .cloned()
            .chain(std::iter::once(merged))
            .chain(outer[1..].iter().cloned())
            .collect(),
        (true, false) => std::iter::once(merged).chain(outer[1..].iter().cloned()).collect(),
        (false, true) => inner[..big_l - 1].iter().cloned().chain(std::iter::once(merged)).collect(),
        (false, false) => vec![merged],
    };
    Network::new(layers)
}

/// `phi^{•n}`, with `phi^{•0}` the affine identity on the output space.
pub fn power(phi: &Network, n: usize) -> Result<Network> {
    if phi.input_dim() != phi.output_dim() {
        return Err(Error::Interface(format!(
            "power needs a square interface, got {} -> {}",
            phi.input_dim(),
            phi.output_dim()
        )));
    }
    let mut acc = identity_affine(phi.output_dim());
    for _ in 0..n {
        acc = compose(phi, &acc)?;
    }
    Ok(acc)
}

/// Extends `phi` to depth `target` by post-composing powers of `psi`.
pub fn extend(target: usize, psi: &Network, phi: &Network) -> Result<Network> {
    if phi.depth() > target {
        return Err(Error::Depth(format!("cannot extend depth {} to {target}", phi.depth())));
    }
    if phi.output_dim() != psi.input_dim() || psi.input_dim() != psi.output_dim() {
        return Err(Error::Interface(format!(
            "extension network maps {} -> {} but the network outputs {}",
            psi.input_dim(),
            psi.output_dim(),
            phi.output_dim()
        )));
    }
    compose(&power(psi, target - phi.depth())?, phi)
}

/// Block-diagonal stacking of networks of equal depth.
pub fn parallelize(nets: &[Network]) -> Result<Network> {
    let first = nets.first().ok_or_else(|| Error::Argument("nothing to parallelize".into()))?;
    if nets.iter().any(|n| n.depth() != first.depth()) {
        return Err(Error::Depth("parallelization needs equal depths".into()));
    }
    let layers = (0..first.depth())
        .map(|k| block_diagonal(nets.iter().map(|n| &n.layers()[k])))
        .collect::<Result<Vec<_>>>()?;
    Network::new(layers)
}

fn block_diagonal<'a>(blocks: impl Iterator<Item = &'a Layer> + Clone) -> Result<Layer> {
    let rows: usize = blocks.clone().map(|l| l.rows()).sum();
    let cols: usize = blocks.clone().map(|l| l.cols()).sum();
    let mut w = vec![0.0; rows * cols];
    let mut b = Vec::with_capacity(rows);
    let (mut r0, mut c0) = (0, 0);
    for l in blocks {
        for i in 0..l.rows() {
            w[(r0 + i) * cols + c0..(r0 + i) * cols + c0 + l.cols()].copy_from_slice(l.row(i));
        }
        b.extend_from_slice(l.bias());
        r0 += l.rows();
        c0 += l.cols();
    }
    Layer::new(rows, cols, w, b)
}

/// The depth-one network `(W, B)` with `W` given row-major.
pub fn affine(rows: usize, cols: usize, w: Vec<f64>, b: Vec<f64>) -> Result<Network> {
    Network::new(vec![Layer::new(rows, cols, w, b)?])
}

fn scaled_identity(n: usize, lambda: f64) -> Vec<f64> {
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        w[i * n + i] = lambda;
    }
    w
}

/// `(I_n, 0)`.
pub fn identity_affine(n: usize) -> Network {
    affine(n, n, scaled_identity(n, 1.0), vec![0.0; n]).expect("square identity")
}

/// `(t I_n, B)`, the map `x ↦ t x + B`.
pub fn scaled_shift(t: f64, shift: &[f64]) -> Network {
    let n = shift.len();
    affine(n, n, scaled_identity(n, t), shift.to_vec()).expect("square shift")
}

/// `(I_n, B)`.
pub fn shift(shift_by: &[f64]) -> Network {
    scaled_shift(1.0, shift_by)
}

/// One-dimensional affine map `x ↦ w x + b`.
pub fn affine_scalar(w: f64, b: f64) -> Network {
    affine(1, 1, vec![w], vec![b]).expect("1x1 layer")
}

/// The zero network `((0 … 0), 0)` from `R^d` to `R`.
pub fn zero_net(d: usize) -> Network {
    affine(1, d, vec![0.0; d], vec![0.0]).expect("zero row")
}

/// `(I_m I_m … I_m)`: sums `n` blocks of size `m`.
pub fn fan_in(m: usize, n: usize) -> Network {
    let cols = m * n;
    let mut w = vec![0.0; m * cols];
    for i in 0..m {
        for j in 0..n {
            w[i * cols + j * m + i] = 1.0;
        }
    }
    affine(m, cols, w, vec![0.0; m]).expect("fan-in shape")
}

/// Transpose of [`fan_in`]: copies the input `n` times.
pub fn fan_out(m: usize, n: usize) -> Network {
    let rows = m * n;
    let mut w = vec![0.0; rows * m];
    for j in 0..n {
        for i in 0..m {
            w[(j * m + i) * m + i] = 1.0;
        }
    }
    affine(rows, m, w, vec![0.0; rows]).expect("fan-out shape")
}

/// Sum of networks sharing depth, input and output widths: the network
/// `fan_in ∘ parallelize ∘ fan_out`. Its layers are written down directly
/// (stacked first layer, block-diagonal middle layers, concatenated last
/// layer), which is bit-for-bit what [`sum_same_depth_literal`] computes but
/// never materializes the block-diagonal first and last layers.
pub fn sum_same_depth(nets: &[Network]) -> Result<Network> {
    let (i, o) = sum_interface(nets)?;
    let depth = nets[0].depth();
    if nets.iter().any(|n| n.depth() != depth) {
        return Err(Error::Depth("parallelization needs equal depths".into()));
    }
    // `+ 0.0` maps -0.0 to 0.0, as accumulation in the literal products does.
    if depth == 1 {
        let mut w = vec![0.0; o * i];
        let mut b = vec![0.0; o];
        for net in nets {
            let l = &net.layers()[0];
            for (acc, v) in w.iter_mut().zip(l.weights()) {
                *acc += *v + 0.0;
            }
            for (acc, v) in b.iter_mut().zip(l.bias()) {
                *acc += *v + 0.0;
            }
        }
        b.iter_mut().for_each(|v| *v += 0.0);
        return affine(o, i, w, b);
    }
    let first: Vec<&Layer> = nets.iter().map(|n| &n.layers()[0]).collect();
    let rows: usize = first.iter().map(|l| l.rows()).sum();
    let w: Vec<f64> = first.iter().flat_map(|l| l.weights().iter().map(|v| v + 0.0)).collect();
    let b: Vec<f64> = first.iter().flat_map(|l| l.bias().iter().map(|v| v + 0.0)).collect();
    let mut layers = vec![Layer::new(rows, i, w, b)?];
    for k in 1..depth - 1 {
        layers.push(block_diagonal(nets.iter().map(|n| &n.layers()[k]))?);
    }
    let last: Vec<&Layer> = nets.iter().map(|n| &n.layers()[depth - 1]).collect();
    let cols: usize = last.iter().map(|l| l.cols()).sum();
    let mut w = Vec::with_capacity(o * cols);
    for r in 0..o {
        for l in &last {
            w.extend(l.row(r).iter().map(|v| v + 0.0));
        }
    }
    let mut b = vec![0.0; o];
    for l in &last {
        for (acc, v) in b.iter_mut().zip(l.bias()) {
            *acc += *v;
        }
    }
    b.iter_mut().for_each(|v| *v += 0.0);
    layers.push(Layer::new(o, cols, w, b)?);
    Network::new(layers)
}

/// `fan_in ∘ (parallelize ∘ fan_out)` evaluated as written.
pub fn sum_same_depth_literal(nets: &[Network]) -> Result<Network> {
    let (i, o) = sum_interface(nets)?;
    let n = nets.len();
    let stacked = parallelize(nets)?;
    compose(&fan_in(o, n), &compose(&stacked, &fan_out(i, n))?)
}

fn sum_interface(nets: &[Network]) -> Result<(usize, usize)> {
    let first = nets.first().ok_or_else(|| Error::Argument("empty sum".into()))?;
    let (i, o) = (first.input_dim(), first.output_dim());
    if nets.iter().any(|n| n.input_dim() != i || n.output_dim() != o) {
        return Err(Error::Interface("summands need equal input and output widths".into()));
    }
    Ok((i, o))
}

/// `λ ⊛ phi = (λ I, 0) ∘ phi`.
pub fn scalar_mul(lambda: f64, phi: &Network) -> Network {
    let o = phi.output_dim();
    let scale = affine(o, o, scaled_identity(o, lambda), vec![0.0; o]).expect("square scale");
    compose(&scale, phi).expect("interfaces match by construction")
}

/// `⊕_k h_k ⊛ (phi_k ∘ (t_k I, B_k))`: realizes `Σ h_k phi_k(t_k x + B_k)`.
pub fn linear_combination_same(
    h: &[f64],
    t: &[f64],
    shifts: &[Vec<f64>],
    phis: &[Network],
) -> Result<Network> {
    check_lengths(phis.len(), &[h.len(), t.len(), shifts.len()])?;
    let dims = phis.first().map(Network::dims);
    if phis.iter().any(|p| Some(p.dims()) != dims) {
        return Err(Error::Interface("linear combination needs equal dims".into()));
    }
    let terms = phis
        .iter()
        .zip(h.iter().zip(t))
        .zip(shifts)
        .map(|((phi, (&hk, &tk)), bk)| {
            if bk.len() != phi.input_dim() {
                return Err(Error::Interface(format!(
                    "shift of length {} for input width {}",
                    bk.len(),
                    phi.input_dim()
                )));
            }
            Ok(scalar_mul(hk, &compose(phi, &scaled_shift(tk, bk))?))
        })
        .collect::<Result<Vec<_>>>()?;
    sum_same_depth(&terms)
}

fn check_lengths(n: usize, others: &[usize]) -> Result<()> {
    if n == 0 {
        return Err(Error::Argument("empty combination".into()));
    }
    if others.iter().any(|&m| m != n) {
        return Err(Error::Argument("coefficient lists differ in length".into()));
    }
    Ok(())
}

/// Number of probe points used by [`check_identity`].
pub const IDENTITY_PROBES: usize = 32;

/// Verifies that `j` realizes the identity under `act` on deterministic
/// probe points. Probes span `[-1e6, 1e6]`, or `[-5, 5]` for RePU where
/// cancellation among powers makes far probes meaningless.
pub fn check_identity(j: &Network, act: &Activation) -> Result<()> {
    if j.hidden_count() != 1 {
        return Err(Error::Interface(format!(
            "identity network needs one hidden layer, has {}",
            j.hidden_count()
        )));
    }
    let m = j.input_dim();
    if j.output_dim() != m {
        return Err(Error::Interface("identity network must be square".into()));
    }
    let radius: f64 = if matches!(act, Activation::Repu(_)) { 5.0 } else { 1e6 };
    for p in 0..IDENTITY_PROBES {
        let s = (p as f64 + 0.5) / IDENTITY_PROBES as f64 * 2.0 - 1.0;
        // Mix magnitudes: cubic spacing places half of the probes near zero.
        let base = radius * s * s * s.abs();
        let x: Vec<f64> = (0..m).map(|i| base * (1.0 - 0.5 * i as f64 / m as f64)).collect();
        let y = j.realize(act, &x)?;
        for (xi, yi) in x.iter().zip(&y) {
            if !((yi - xi).abs() <= 1e-8 * xi.abs().max(1.0)) {
                return Err(Error::NotIdentity { x: *xi, got: *yi });
            }
        }
    }
    Ok(())
}

/// `⊞_J`: extends every network to the maximal depth with powers of the
/// identity network `j`, then sums.
pub fn sum_diff_depth(nets: &[Network], j: &Network, act: &Activation) -> Result<Network> {
    check_identity(j, act)?;
    sum_diff_depth_unchecked(nets, j)
}

/// [`sum_diff_depth`] for callers that already ran [`check_identity`].
pub fn sum_diff_depth_unchecked(nets: &[Network], j: &Network) -> Result<Network> {
    let depth = nets
        .iter()
        .map(Network::depth)
        .max()
        .ok_or_else(|| Error::Argument("empty sum".into()))?;
    let extended = nets.iter().map(|n| extend(depth, j, n)).collect::<Result<Vec<_>>>()?;
    sum_same_depth(&extended)
}

/// `⊞_J h_k ⊛ (phi_k ∘ (I, B_k))` for networks of arbitrary depths.
pub fn linear_combination_diff(
    h: &[f64],
    shifts: &[Vec<f64>],
    phis: &[Network],
    j: &Network,
    act: &Activation,
) -> Result<Network> {
    check_lengths(phis.len(), &[h.len(), shifts.len()])?;
    let terms = phis
        .iter()
        .zip(h)
        .zip(shifts)
        .map(|((phi, &hk), bk)| Ok(scalar_mul(hk, &compose(phi, &shift(bk))?)))
        .collect::<Result<Vec<_>>>()?;
    sum_diff_depth(&terms, j, act)
}

/// `𝔦_n = ((I_n, 0), (I_n, 0))`: realizes the activation componentwise.
pub fn activation_wrapper(n: usize) -> Network {
    let layer = || Layer::new(n, n, scaled_identity(n, 1.0), vec![0.0; n]).expect("square");
    Network::new(vec![layer(), layer()]).expect("chained squares")
}
