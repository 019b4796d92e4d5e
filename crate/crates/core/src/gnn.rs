//! Graph feature extractor over sparse matrices.
//!
//! A matrix is treated as a weighted graph: nodes are rows, edges are
//! stored entries. Each node starts with twelve scale-invariant statistics
//! of its row; K rounds of message passing multiply the feature matrix by
//! a row-normalized edge-weight matrix and push every row through a small
//! MLP. The readout sums the per-layer column means into one fixed-width
//! graph feature vector.
//!
//! Every derived input (node features and edge weights) is rounded
//! through f32. The statistics involve logarithms and divisions whose
//! last bits wobble under global matrix scaling and across platforms;
//! the rounding absorbs that wobble so the extractor output is a pure
//! function of the quantized inputs, bit for bit.

use crate::error::{Error, Result};
use crate::mlp::{DenseMat, Mlp, MlpCache, MlpGrads};
use crate::rng::Rng;
use crate::sparse::CsrMatrix;

/// Width of the initial node-feature rows.
pub const FEATURE_DIM: usize = 9;

/// Default message-passing depth and layer widths.
pub const GCIN_LAYERS: usize = 2;
pub const GCIN_HIDDEN: usize = 4;
pub const GCIN_WIDTH: usize = 4;

/// Thresholds for the per-node cliff features: each gives the fraction
/// of a row's neighbors whose magnitude clears that share of the row's
/// strongest off-diagonal entry. Strength-of-connection filters rows by
/// exactly this ratio, so the fractions locate where a row's neighbor
/// set thins out as the threshold sweeps from 0 to 1.
const CLIFF_ANCHORS: [f64; 6] = [0.02, 0.05, 0.12, 0.25, 0.5, 0.9];

/// Identifies the feature-extractor definition a model was trained
/// against; stored in model files and checked before inference.
pub const FEATURE_FINGERPRINT: &str =
    "v3:d9:sign,negfrac,mass,cliff6;edges=rowmax;quant=f32";

fn q(v: f64) -> f64 {
    v as f32 as f64
}

/// Computes the nine per-node statistics from the matrix rows.
///
/// Neighbors are stored off-diagonal entries with nonzero value. The
/// features, in order: diagonal sign; fraction of negative off-diagonal
/// entries; off-diagonal mass `sum|a_ik| / |a_ii|` clamped to `[0, 4]`
/// and divided by 4; and one cliff fraction per entry of
/// [`CLIFF_ANCHORS`]. Every statistic is local to its row and invariant
/// under scaling the matrix by any positive constant.
pub fn init_node_features(a: &CsrMatrix) -> Result<DenseMat> {
    if a.n_rows != a.n_cols {
        return Err(Error::InvalidMatrix(format!(
            "node features need a square matrix, got {}x{}",
            a.n_rows, a.n_cols
        )));
    }
    let n = a.n_rows;
    let mut x = DenseMat::zeros(n, FEATURE_DIM);
    let mut mags: Vec<f64> = Vec::with_capacity(32);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut diag = 0.0f64;
        let mut off_abs_max = 0.0f64;
        let mut off_abs_sum = 0.0f64;
        let mut negatives = 0usize;
        mags.clear();
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                diag = v;
                continue;
            }
            if v == 0.0 {
                continue;
            }
            let m = v.abs();
            mags.push(m);
            off_abs_max = off_abs_max.max(m);
            off_abs_sum += m;
            if v < 0.0 {
                negatives += 1;
            }
        }
        if diag == 0.0 {
            return Err(Error::InvalidMatrix(format!(
                "zero or missing diagonal in row {i}"
            )));
        }
        let mut clears = [0usize; CLIFF_ANCHORS.len()];
        if off_abs_max > 0.0 {
            for &m in &mags {
                let r = m / off_abs_max;
                for (t, &anchor) in CLIFF_ANCHORS.iter().enumerate() {
                    if r >= anchor {
                        clears[t] += 1;
                    }
                }
            }
        }
        let deg = mags.len();
        let row = x.row_mut(i);
        row[0] = q(diag.signum());
        row[1] = q(if deg == 0 {
            0.0
        } else {
            negatives as f64 / deg as f64
        });
        row[2] = q((off_abs_sum / diag.abs()).clamp(0.0, 4.0) / 4.0);
        for (t, &c) in clears.iter().enumerate() {
            row[3 + t] = q(if deg == 0 { 0.0 } else { c as f64 / deg as f64 });
        }
    }
    Ok(x)
}

/// Builds the message-passing weights: each row of `a` divided by its
/// largest absolute entry (diagonal included), so every weight lies in
/// `[-1, 1]` and the result ignores global scaling. The diagonal is
/// always present in the pattern even when `a` stores none there.
pub fn edge_weights(a: &CsrMatrix) -> Result<CsrMatrix> {
    if a.n_rows != a.n_cols {
        return Err(Error::InvalidMatrix(format!(
            "edge weights need a square matrix, got {}x{}",
            a.n_rows, a.n_cols
        )));
    }
    let n = a.n_rows;
    let cap = a.row_ptr[n] + n;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(cap);
    let mut values = Vec::with_capacity(cap);
    row_ptr.push(0);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let row_max = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if row_max == 0.0 {
            return Err(Error::InvalidMatrix(format!(
                "row {i} has no nonzero entries to normalize"
            )));
        }
        let mut wrote_diag = false;
        for (&j, &v) in cols.iter().zip(vals) {
            if j > i && !wrote_diag {
                col_idx.push(i);
                values.push(0.0);
                wrote_diag = true;
            }
            if j == i {
                wrote_diag = true;
            }
            col_idx.push(j);
            values.push(q(v / row_max));
        }
        if !wrote_diag {
            col_idx.push(i);
            values.push(0.0);
        }
        row_ptr.push(col_idx.len());
    }
    Ok(CsrMatrix {
        n_rows: n,
        n_cols: n,
        row_ptr,
        col_idx,
        values,
    })
}

/// The stacked per-layer MLPs of the extractor.
///
/// Layer output widths all agree so the readout sum is well-typed; each
/// layer's input width matches its predecessor's output width.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GcinParams {
    pub layers: Vec<Mlp>,
}

impl GcinParams {
    pub fn new(layers: Vec<Mlp>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::InvalidParameter(
                "extractor needs at least one layer".into(),
            ));
        };
        let width = first.out_dim();
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[1].in_dim() != pair[0].out_dim() {
                return Err(Error::InvalidParameter(format!(
                    "layer {} input width {} does not match layer {} output width {}",
                    k + 2,
                    pair[1].in_dim(),
                    k + 1,
                    pair[0].out_dim()
                )));
            }
        }
        if let Some((k, l)) = layers
            .iter()
            .enumerate()
            .find(|(_, l)| l.out_dim() != width)
        {
            return Err(Error::InvalidParameter(format!(
                "layer {} output width {} breaks the shared readout width {width}",
                k + 1,
                l.out_dim()
            )));
        }
        Ok(GcinParams { layers })
    }

    /// Random extractor with `k` layers of shape `in -> hidden -> width`.
    pub fn init(
        input: usize,
        hidden: usize,
        width: usize,
        k: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "extractor needs at least one layer".into(),
            ));
        }
        let mut layers = Vec::with_capacity(k);
        for l in 0..k {
            let d_in = if l == 0 { input } else { width };
            layers.push(Mlp::xavier(&[d_in, hidden, width], rng)?);
        }
        GcinParams::new(layers)
    }

    /// The default architecture used by the trained selector.
    pub fn default_init(rng: &mut Rng) -> Self {
        GcinParams::init(FEATURE_DIM, GCIN_HIDDEN, GCIN_WIDTH, GCIN_LAYERS, rng)
            .expect("default widths are valid")
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[0].out_dim()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Mlp::n_params).sum()
    }

    pub fn write_params(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            l.write_params(out);
        }
    }

    pub fn read_params(&mut self, src: &[f64], pos: &mut usize) -> Result<()> {
        for l in &mut self.layers {
            l.read_params(src, pos)?;
        }
        Ok(())
    }
}

/// Intermediates recorded by [`gcin_forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct GcinCache {
    n: usize,
    mlp_caches: Vec<MlpCache>,
}

fn csr_times_dense(w: &CsrMatrix, x: &DenseMat) -> DenseMat {
    let mut out = DenseMat::zeros(w.n_rows, x.cols);
    for i in 0..w.n_rows {
        let (cols, vals) = w.row(i);
        let orow = out.row_mut(i);
        for (&j, &v) in cols.iter().zip(vals) {
            for (oc, xc) in orow.iter_mut().zip(x.row(j)) {
                *oc += v * xc;
            }
        }
    }
    out
}

fn check_finite(m: &DenseMat, layer: usize) -> Result<()> {
    if m.data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { layer })
    }
}

/// Runs the extractor: K rounds of `X <- MLP_k(W X)` followed by the
/// readout `sum_k mean_rows(X_k)`. Finiteness is checked after every
/// layer and the offending layer is named in the error; layer 0 is the
/// input feature matrix.
pub fn gcin_forward(
    w: &CsrMatrix,
    x0: &DenseMat,
    params: &GcinParams,
) -> Result<(Vec<f64>, GcinCache)> {
    let n = w.n_rows;
    if w.n_cols != n {
        return Err(Error::InvalidMatrix(format!(
            "edge weights must be square, got {}x{}",
            w.n_rows, w.n_cols
        )));
    }
    if x0.rows != n || x0.cols != params.in_dim() {
        return Err(Error::DimensionMismatch(format!(
            "features are {}x{}, expected {}x{}",
            x0.rows,
            x0.cols,
            n,
            params.in_dim()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidMatrix("empty graph".into()));
    }
    check_finite(x0, 0)?;
    let width = params.out_dim();
    let mut xg = vec![0.0; width];
    let mut x = x0.clone();
    let mut mlp_caches = Vec::with_capacity(params.layers.len());
    for (k, layer) in params.layers.iter().enumerate() {
        let m = csr_times_dense(w, &x);
        check_finite(&m, k + 1)?;
        let cache = layer.forward(&m)?;
        x = cache.output().clone();
        check_finite(&x, k + 1)?;
        for c in 0..width {
            let mut sum = 0.0;
            for i in 0..n {
                sum += x.get(i, c);
            }
            xg[c] += sum / n as f64;
        }
        mlp_caches.push(cache);
    }
    if !xg.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            layer: params.layers.len(),
        });
    }
    Ok((xg, GcinCache { n, mlp_caches }))
}

/// One affine stage over `n` row-major rows, optionally squashed.
/// Mirrors the inner loop of [`Mlp::forward`] exactly so both paths
/// produce the same bits: each output accumulates `b[o] + sum_k w·a` in
/// ascending `k`. The four-wide case carries all outputs through one
/// pass so their accumulation chains run independently.
fn infer_stage(
    input: &[f64],
    n: usize,
    w: &[f64],
    b: &[f64],
    din: usize,
    dout: usize,
    squash: bool,
    out: &mut [f64],
) {
    if dout == 4 && w.len() == 4 * din {
        let (w0, w1) = (&w[..din], &w[din..2 * din]);
        let (w2, w3) = (&w[2 * din..3 * din], &w[3 * din..]);
        for (a, orow) in input
            .chunks_exact(din)
            .zip(out.chunks_exact_mut(4))
            .take(n)
        {
            let (mut z0, mut z1, mut z2, mut z3) = (b[0], b[1], b[2], b[3]);
            for k in 0..din {
                let ak = a[k];
                z0 += w0[k] * ak;
                z1 += w1[k] * ak;
                z2 += w2[k] * ak;
                z3 += w3[k] * ak;
            }
            if squash {
                orow[0] = Mlp::squash_hidden(z0);
                orow[1] = Mlp::squash_hidden(z1);
                orow[2] = Mlp::squash_hidden(z2);
                orow[3] = Mlp::squash_hidden(z3);
            } else {
                orow.copy_from_slice(&[z0, z1, z2, z3]);
            }
        }
        return;
    }
    for i in 0..n {
        let a = &input[i * din..(i + 1) * din];
        let orow = &mut out[i * dout..(i + 1) * dout];
        for o in 0..dout {
            let wrow = &w[o * din..(o + 1) * din];
            let mut z = b[o];
            for (wk, ak) in wrow.iter().zip(a) {
                z += wk * ak;
            }
            orow[o] = if squash { Mlp::squash_hidden(z) } else { z };
        }
    }
}

/// Inference-only twin of [`gcin_forward`]: the same arithmetic in the
/// same order, so the readout is bitwise identical, but nothing is
/// cached and the only allocations are a few flat buffers reused across
/// layers. Prediction on a large matrix is bounded by the solve it
/// steers, so this path stays deliberately lean.
pub fn gcin_infer(w: &CsrMatrix, x0: &DenseMat, params: &GcinParams) -> Result<Vec<f64>> {
    let n = w.n_rows;
    if w.n_cols != n {
        return Err(Error::InvalidMatrix(format!(
            "edge weights must be square, got {}x{}",
            w.n_rows, w.n_cols
        )));
    }
    if x0.rows != n || x0.cols != params.in_dim() {
        return Err(Error::DimensionMismatch(format!(
            "features are {}x{}, expected {}x{}",
            x0.rows,
            x0.cols,
            n,
            params.in_dim()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidMatrix("empty graph".into()));
    }
    check_finite(x0, 0)?;
    let width = params.out_dim();
    let mut xg = vec![0.0; width];
    let mut x: Vec<f64> = Vec::new();
    let mut msg: Vec<f64> = Vec::new();
    let mut ha: Vec<f64> = Vec::new();
    let mut hb: Vec<f64> = Vec::new();
    for (k, layer) in params.layers.iter().enumerate() {
        let din = layer.in_dim();
        msg.clear();
        msg.resize(n * din, 0.0);
        {
            let xin: &[f64] = if k == 0 { &x0.data } else { &x };
            for i in 0..n {
                let (cols, vals) = w.row(i);
                let orow = &mut msg[i * din..(i + 1) * din];
                for (&j, &v) in cols.iter().zip(vals) {
                    for (oc, xc) in orow.iter_mut().zip(&xin[j * din..(j + 1) * din]) {
                        *oc += v * xc;
                    }
                }
            }
        }
        if !msg.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { layer: k + 1 });
        }
        let stages = layer.weights.len();
        for l in 0..stages {
            let last = l + 1 == stages;
            let din_l = layer.dims[l];
            let dout_l = layer.dims[l + 1];
            let wl = &layer.weights[l];
            let bl = &layer.biases[l];
            if last {
                x.clear();
                x.resize(n * dout_l, 0.0);
                let input: &[f64] = if l == 0 {
                    &msg
                } else if l % 2 == 1 {
                    &ha
                } else {
                    &hb
                };
                infer_stage(input, n, wl, bl, din_l, dout_l, false, &mut x);
            } else if l % 2 == 0 {
                ha.clear();
                ha.resize(n * dout_l, 0.0);
                let input: &[f64] = if l == 0 { &msg } else { &hb };
                infer_stage(input, n, wl, bl, din_l, dout_l, true, &mut ha);
            } else {
                hb.clear();
                hb.resize(n * dout_l, 0.0);
                infer_stage(&ha, n, wl, bl, din_l, dout_l, true, &mut hb);
            }
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { layer: k + 1 });
        }
        for (c, out) in xg.iter_mut().enumerate() {
            let mut sum = 0.0;
            for i in 0..n {
                sum += x[i * width + c];
            }
            *out += sum / n as f64;
        }
    }
    if !xg.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            layer: params.layers.len(),
        });
    }
    Ok(xg)
}

/// Gradients of a scalar loss w.r.t. every extractor parameter, given
/// the upstream gradient at the readout. The message-passing adjoint of
/// `M = W X` is `W^T dM`, applied while walking the layers backwards;
/// each layer also receives its direct readout share `d_xg / n`.
pub fn gcin_backward(
    w: &CsrMatrix,
    params: &GcinParams,
    cache: &GcinCache,
    d_xg: &[f64],
) -> Result<Vec<MlpGrads>> {
    if cache.mlp_caches.len() != params.layers.len() {
        return Err(Error::DimensionMismatch(
            "cache does not match extractor depth".into(),
        ));
    }
    if d_xg.len() != params.out_dim() {
        return Err(Error::DimensionMismatch(format!(
            "upstream gradient width {}, readout width {}",
            d_xg.len(),
            params.out_dim()
        )));
    }
    let n = cache.n;
    let wt = w.transpose();
    let mut grads: Vec<Option<MlpGrads>> = vec![None; params.layers.len()];
    let mut carried: Option<DenseMat> = None;
    for k in (0..params.layers.len()).rev() {
        let width = params.layers[k].out_dim();
        let mut d_x = DenseMat::zeros(n, width);
        for i in 0..n {
            for (slot, g) in d_x.row_mut(i).iter_mut().zip(d_xg) {
                *slot = g / n as f64;
            }
        }
        if let Some(c) = carried.take() {
            for (slot, v) in d_x.data.iter_mut().zip(&c.data) {
                *slot += v;
            }
        }
        let (g, d_m) = params.layers[k].backward(&cache.mlp_caches[k], &d_x)?;
        grads[k] = Some(g);
        if k > 0 {
            carried = Some(csr_times_dense(&wt, &d_m));
        }
    }
    Ok(grads.into_iter().map(|g| g.expect("filled above")).collect())
}
