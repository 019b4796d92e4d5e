//! Small dense multilayer perceptrons with hand-written reverse-mode
//! gradients.
//!
//! A network is a chain of affine layers with hyperbolic-tangent
//! activations between them and a linear final layer. Forward passes run
//! on row-major batches and cache every activation so the backward pass
//! can produce exact gradients for all weights, biases, and inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Row-major dense matrix used for feature batches and activations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch(
                    "ragged rows in dense matrix".into(),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(DenseMat {
            rows: n,
            cols,
            data,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }
}

/// Affine-chain network; `dims` lists the layer widths input-first.
///
/// `weights[l]` holds layer `l` row-major with shape
/// `dims[l + 1] x dims[l]`; every layer except the last is followed by
/// the softsign squash (see [`Mlp::squash_hidden`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Activations recorded by [`Mlp::forward`]: `activations[0]` is the
/// input batch and `activations[l + 1]` the output of layer `l`.
#[derive(Clone, Debug)]
pub struct MlpCache {
    activations: Vec<DenseMat>,
}

impl MlpCache {
    pub fn output(&self) -> &DenseMat {
        self.activations.last().expect("cache always has layers")
    }
}

/// Parameter gradients with the same shapes as the network they came from.
#[derive(Clone, Debug)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_of(mlp: &Mlp) -> Self {
        MlpGrads {
            weights: mlp.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: mlp.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn accumulate(&mut self, other: &MlpGrads) {
        for (mine, theirs) in self.weights.iter_mut().zip(&other.weights) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                *m += t;
            }
        }
        for (mine, theirs) in self.biases.iter_mut().zip(&other.biases) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                *m += t;
            }
        }
    }

    pub fn write_flat(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
    }
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "an MLP needs at least input and output widths, got {dims:?}"
        )));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidParameter(format!(
            "zero-width MLP layer in {dims:?}"
        )));
    }
    Ok(())
}

impl Mlp {
    /// All-zero parameters; useful as a neutral starting point in tests.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        validate_dims(dims)?;
        let weights = dims
            .windows(2)
            .map(|w| vec![0.0; w[0] * w[1]])
            .collect();
        let biases = dims[1..].iter().map(|&d| vec![0.0; d]).collect();
        Ok(Mlp {
            dims: dims.to_vec(),
            weights,
            biases,
        })
    }

    /// Glorot-uniform weights (`±sqrt(6 / (fan_in + fan_out))`), zero
    /// biases.
    pub fn xavier(dims: &[usize], rng: &mut Rng) -> Result<Self> {
        let mut mlp = Mlp::zeros(dims)?;
        for (l, w) in mlp.weights.iter_mut().enumerate() {
            let bound = (6.0 / (dims[l] + dims[l + 1]) as f64).sqrt();
            for v in w.iter_mut() {
                *v = rng.uniform(-bound, bound);
            }
        }
        Ok(mlp)
    }

    pub fn in_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn out_dim(&self) -> usize {
        *self.dims.last().expect("validated dims")
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Appends all parameters to `out`, layer by layer, weights before
    /// biases. The order is the flat-vector contract shared with
    /// [`Mlp::read_params`] and [`MlpGrads::write_flat`].
    pub fn write_params(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
    }

    /// Reads parameters back from a flat vector, advancing `pos`.
    pub fn read_params(&mut self, src: &[f64], pos: &mut usize) -> Result<()> {
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for slot in w.iter_mut().chain(b.iter_mut()) {
                let v = src.get(*pos).ok_or_else(|| {
                    Error::InvalidParameter("flat parameter vector too short".into())
                })?;
                *slot = *v;
                *pos += 1;
            }
        }
        Ok(())
    }

    /// Hidden-layer nonlinearity: softsign `z / (1 + |z|)`. Bounded like
    /// tanh but costs a single division, which matters on large graphs
    /// where inference runs it once per hidden unit per node. The
    /// derivative is recoverable from the stored activation alone:
    /// `1 / (1 + |z|)^2 = (1 - |f(z)|)^2`.
    #[inline]
    pub(crate) fn squash_hidden(z: f64) -> f64 {
        z / (1.0 + z.abs())
    }

    /// Runs the batch through the network, returning the output and the
    /// cached activations needed by [`Mlp::backward`].
    pub fn forward(&self, x: &DenseMat) -> Result<MlpCache> {
        if x.cols != self.in_dim() {
            return Err(Error::DimensionMismatch(format!(
                "MLP expects input width {}, got {}",
                self.in_dim(),
                x.cols
            )));
        }
        let n = x.rows;
        let last = self.weights.len() - 1;
        let mut activations = vec![x.clone()];
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let (din, dout) = (self.dims[l], self.dims[l + 1]);
            let prev = &activations[l];
            let mut next = DenseMat::zeros(n, dout);
            for i in 0..n {
                let a = prev.row(i);
                let out = next.row_mut(i);
                for o in 0..dout {
                    let wrow = &w[o * din..(o + 1) * din];
                    let mut z = b[o];
                    for (wk, ak) in wrow.iter().zip(a) {
                        z += wk * ak;
                    }
                    out[o] = if l < last { Self::squash_hidden(z) } else { z };
                }
            }
            activations.push(next);
        }
        Ok(MlpCache { activations })
    }

    /// Reverse-mode pass: gradients of a scalar loss w.r.t. all
    /// parameters and the input batch, given `d_out = dLoss/dOutput`.
    /// Gradients are summed over batch rows; any batch averaging belongs
    /// in `d_out`.
    pub fn backward(&self, cache: &MlpCache, d_out: &DenseMat) -> Result<(MlpGrads, DenseMat)> {
        let out = cache.output();
        if d_out.rows != out.rows || d_out.cols != out.cols {
            return Err(Error::DimensionMismatch(format!(
                "upstream gradient is {}x{}, output was {}x{}",
                d_out.rows, d_out.cols, out.rows, out.cols
            )));
        }
        let n = d_out.rows;
        let mut grads = MlpGrads::zeros_of(self);
        let mut delta = d_out.clone();
        for l in (0..self.weights.len()).rev() {
            let (din, dout) = (self.dims[l], self.dims[l + 1]);
            let a_in = &cache.activations[l];
            let mut d_in = DenseMat::zeros(n, din);
            let gw = &mut grads.weights[l];
            let gb = &mut grads.biases[l];
            for i in 0..n {
                let a = a_in.row(i);
                let d = delta.row(i);
                for o in 0..dout {
                    let doi = d[o];
                    gb[o] += doi;
                    let wrow = &self.weights[l][o * din..(o + 1) * din];
                    let grow = &mut gw[o * din..(o + 1) * din];
                    let din_row = d_in.row_mut(i);
                    for k in 0..din {
                        grow[k] += doi * a[k];
                        din_row[k] += doi * wrow[k];
                    }
                }
            }
            if l > 0 {
                // The stored activation is a = z / (1 + |z|), so the
                // derivative through the nonlinearity is (1 - |a|)^2.
                let act = &cache.activations[l];
                for (di, ai) in d_in.data.iter_mut().zip(&act.data) {
                    let s = 1.0 - ai.abs();
                    *di *= s * s;
                }
            }
            delta = d_in;
        }
        Ok((grads, delta))
    }
}
