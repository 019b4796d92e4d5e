//! Learned threshold selector: feature extractor plus prediction head,
//! trained end to end against grid-search labels.
//!
//! The head maps the graph feature vector to a scalar which is squashed
//! onto the label grid's range `[0.01, 0.99]`. Training minimizes mean
//! squared error with adaptive per-parameter steps built from
//! exponential moving averages of the gradient and its square, both
//! bias-corrected. All randomness (initialization, the validation split,
//! epoch shuffles) derives from one config seed, and gradient reduction
//! uses a fixed order, so a training run is reproducible bit for bit.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::{
    edge_weights, gcin_backward, gcin_forward, gcin_infer, init_node_features, GcinParams,
    FEATURE_FINGERPRINT, GCIN_WIDTH,
};
use crate::mlp::{DenseMat, Mlp};
use crate::rng::{derive_seed, Rng};
use crate::sparse::CsrMatrix;

/// Hidden width of the prediction head.
pub const HEAD_HIDDEN: usize = 32;

/// Model file schema version.
pub const MODEL_VERSION: u32 = 1;

/// Training-loop settings; all fields have working defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 8,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
            validation_fraction: 0.2,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1), got {b}"
                )));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidParameter(format!(
                "validation fraction must lie in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// One labeled training matrix.
#[derive(Clone, Debug)]
pub struct TrainExample {
    pub matrix_id: String,
    pub a: CsrMatrix,
    pub theta_opt: f64,
}

/// Trained selector: extractor, head, and training metadata.
///
/// `train_loss[0]` / `val_loss[0]` are the pre-training losses; entry
/// `e` holds the loss after epoch `e`. `best_epoch` indexes the entry
/// whose parameters this model carries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedModel {
    pub version: u32,
    pub fingerprint: String,
    pub gcin: GcinParams,
    pub head: Mlp,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
    pub seed: u64,
}

impl TrainedModel {
    fn validate(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported model version {}, this build reads {MODEL_VERSION}",
                self.version
            )));
        }
        if self.fingerprint != FEATURE_FINGERPRINT {
            return Err(Error::FingerprintMismatch {
                found: self.fingerprint.clone(),
                expected: FEATURE_FINGERPRINT.to_string(),
            });
        }
        if self.head.in_dim() != self.gcin.out_dim() || self.head.out_dim() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "head maps {} -> {}, extractor emits width {}",
                self.head.in_dim(),
                self.head.out_dim(),
                self.gcin.out_dim()
            )));
        }
        Ok(())
    }
}

fn sigmoid(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

fn squash(s: f64) -> f64 {
    0.01 + 0.98 * sigmoid(s)
}

/// Mean squared error between predictions and targets.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "loss needs equal nonempty lengths, got {} and {}",
            pred.len(),
            target.len()
        )));
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / pred.len() as f64)
}

struct Prepared {
    w: CsrMatrix,
    x0: DenseMat,
    label: f64,
}

fn prepare(a: &CsrMatrix, label: f64) -> Result<Prepared> {
    Ok(Prepared {
        w: edge_weights(a)?,
        x0: init_node_features(a)?,
        label,
    })
}

fn predict_prepared(gcin: &GcinParams, head: &Mlp, p: &Prepared) -> Result<f64> {
    let xg = gcin_infer(&p.w, &p.x0, gcin)?;
    let row = DenseMat {
        rows: 1,
        cols: xg.len(),
        data: xg,
    };
    let s = head.forward(&row)?.output().get(0, 0);
    let theta = squash(s);
    if !theta.is_finite() {
        return Err(Error::NonFinite {
            layer: gcin.layers.len() + 1,
        });
    }
    Ok(theta)
}

/// Predicted threshold for `a`, always inside `[0.01, 0.99]`.
pub fn predict_theta(model: &TrainedModel, a: &CsrMatrix) -> Result<f64> {
    model.validate()?;
    predict_prepared(&model.gcin, &model.head, &prepare(a, 0.0)?)
}

fn flatten(gcin: &GcinParams, head: &Mlp) -> Vec<f64> {
    let mut flat = Vec::with_capacity(gcin.n_params() + head.n_params());
    gcin.write_params(&mut flat);
    head.write_params(&mut flat);
    flat
}

fn unflatten(flat: &[f64], gcin: &mut GcinParams, head: &mut Mlp) -> Result<()> {
    let mut pos = 0;
    gcin.read_params(flat, &mut pos)?;
    head.read_params(flat, &mut pos)?;
    debug_assert_eq!(pos, flat.len());
    Ok(())
}

/// Squared error and flat parameter gradient of
/// `scale * (prediction - label)^2` for one example.
fn example_grad(
    gcin: &GcinParams,
    head: &Mlp,
    ex: &Prepared,
    scale: f64,
) -> Result<(f64, Vec<f64>)> {
    let (xg, gcache) = gcin_forward(&ex.w, &ex.x0, gcin)?;
    let row = DenseMat {
        rows: 1,
        cols: xg.len(),
        data: xg,
    };
    let hcache = head.forward(&row)?;
    let s = hcache.output().get(0, 0);
    let sig = sigmoid(s);
    let err = squash(s) - ex.label;
    let d_s = scale * 2.0 * err * 0.98 * sig * (1.0 - sig);
    let d_out = DenseMat {
        rows: 1,
        cols: 1,
        data: vec![d_s],
    };
    let (head_grads, d_xg) = head.backward(&hcache, &d_out)?;
    let gcin_grads = gcin_backward(&ex.w, gcin, &gcache, d_xg.row(0))?;
    let mut flat = Vec::with_capacity(gcin.n_params() + head.n_params());
    for g in &gcin_grads {
        g.write_flat(&mut flat);
    }
    head_grads.write_flat(&mut flat);
    Ok((err * err, flat))
}

fn set_loss(gcin: &GcinParams, head: &Mlp, set: &[usize], prepared: &[Prepared]) -> Result<f64> {
    let mut sum = 0.0;
    for &i in set {
        let e = predict_prepared(gcin, head, &prepared[i])? - prepared[i].label;
        sum += e * e;
    }
    Ok(sum / set.len() as f64)
}

/// Fresh head with a zeroed output stage. Before the first update the
/// selector emits exactly 0.5, the center of the threshold grid, so an
/// untrained or barely-trained model coincides with the default
/// threshold instead of scattering initialization noise around it. The
/// hidden stage keeps its random draw, which gives the zero output
/// weights nonzero gradients from step one.
fn init_head(rng: &mut Rng) -> Result<Mlp> {
    let mut head = Mlp::xavier(&[GCIN_WIDTH, HEAD_HIDDEN, 1], rng)?;
    if let Some(w) = head.weights.last_mut() {
        w.iter_mut().for_each(|v| *v = 0.0);
    }
    if let Some(b) = head.biases.last_mut() {
        b.iter_mut().for_each(|v| *v = 0.0);
    }
    Ok(head)
}

/// Trains extractor and head end to end on the labeled examples.
///
/// A `validation_fraction` share of the examples is held out (seeded
/// shuffle) and the returned parameters are those of the epoch with the
/// lowest validation loss; with no holdout the training loss decides.
/// Any non-finite loss or activation aborts with the epoch and batch
/// identified.
pub fn train(examples: &[TrainExample], cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if examples.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "training needs at least 2 labeled matrices, got {}",
            examples.len()
        )));
    }
    for ex in examples {
        if !(ex.theta_opt > 0.0 && ex.theta_opt < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "label for {:?} is {}, expected a threshold in (0, 1)",
                ex.matrix_id, ex.theta_opt
            )));
        }
    }
    let prepared: Vec<Prepared> = examples
        .iter()
        .map(|ex| prepare(&ex.a, ex.theta_opt))
        .collect::<Result<_>>()?;

    let mut init_rng = Rng::new(derive_seed(cfg.seed, 1));
    let mut gcin = GcinParams::default_init(&mut init_rng);
    let mut head = init_head(&mut init_rng)?;

    let mut indices: Vec<usize> = (0..examples.len()).collect();
    Rng::new(derive_seed(cfg.seed, 2)).shuffle(&mut indices);
    let n_val = (cfg.validation_fraction * examples.len() as f64).floor() as usize;
    let (val_set, train_set) = indices.split_at(n_val);
    let (val_set, train_set) = (val_set.to_vec(), train_set.to_vec());

    let n_params = gcin.n_params() + head.n_params();
    let mut m = vec![0.0; n_params];
    let mut v = vec![0.0; n_params];
    let mut step = 0u32;
    let mut shuffle_rng = Rng::new(derive_seed(cfg.seed, 3));

    let monitored = |train: f64, val: Option<f64>| val.unwrap_or(train);
    let eval = |gcin: &GcinParams, head: &Mlp, epoch: usize, batch: usize| {
        let wrap = |e| match e {
            Error::NonFinite { .. } => Error::TrainingDiverged { epoch, batch },
            other => other,
        };
        let train = set_loss(gcin, head, &train_set, &prepared).map_err(wrap)?;
        let val = if val_set.is_empty() {
            None
        } else {
            Some(set_loss(gcin, head, &val_set, &prepared).map_err(wrap)?)
        };
        if !train.is_finite() || val.is_some_and(|v| !v.is_finite()) {
            return Err(Error::TrainingDiverged { epoch, batch });
        }
        Ok((train, val))
    };

    let mut train_loss = Vec::with_capacity(cfg.epochs + 1);
    let mut val_loss = Vec::new();
    let n_batches = train_set.len().div_ceil(cfg.batch_size);
    let (t0, v0) = eval(&gcin, &head, 0, 0)?;
    train_loss.push(t0);
    if let Some(v0) = v0 {
        val_loss.push(v0);
    }
    let mut best = (monitored(t0, v0), 0usize, flatten(&gcin, &head));

    let mut order = train_set.clone();
    for epoch in 0..cfg.epochs {
        shuffle_rng.shuffle(&mut order);
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let scale = 1.0 / batch.len() as f64;
            let results: Vec<Result<(f64, Vec<f64>)>> = batch
                .par_iter()
                .map(|&i| example_grad(&gcin, &head, &prepared[i], scale))
                .collect();
            let mut batch_loss = 0.0;
            let mut grad = vec![0.0; n_params];
            for r in results {
                let (sq, g) = r.map_err(|e| match e {
                    Error::NonFinite { .. } => Error::TrainingDiverged { epoch, batch: b },
                    other => other,
                })?;
                batch_loss += sq * scale;
                for (gi, gv) in grad.iter_mut().zip(&g) {
                    *gi += gv;
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, batch: b });
            }
            step += 1;
            let mut params = flatten(&gcin, &head);
            let bc1 = 1.0 - cfg.beta1.powi(step as i32);
            let bc2 = 1.0 - cfg.beta2.powi(step as i32);
            for k in 0..n_params {
                m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * grad[k];
                v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                params[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
            }
            unflatten(&params, &mut gcin, &mut head)?;
        }
        let (t, vl) = eval(&gcin, &head, epoch, n_batches)?;
        train_loss.push(t);
        if let Some(vl) = vl {
            val_loss.push(vl);
        }
        let score = monitored(t, vl);
        if score < best.0 {
            best = (score, epoch + 1, flatten(&gcin, &head));
        }
    }

    unflatten(&best.2, &mut gcin, &mut head)?;
    Ok(TrainedModel {
        version: MODEL_VERSION,
        fingerprint: FEATURE_FINGERPRINT.to_string(),
        gcin,
        head,
        train_loss,
        val_loss,
        best_epoch: best.1,
        seed: cfg.seed,
    })
}

/// Writes the model as pretty JSON; parameters survive bit for bit.
pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(model).expect("model serialization cannot fail");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Loads a model file, rejecting unknown versions and models trained
/// against a different feature extractor.
pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let model: TrainedModel = serde_json::from_str(&text)
        .map_err(|e| Error::from_json(&path.display().to_string(), &text, &e))?;
    model.validate()?;
    Ok(model)
}
