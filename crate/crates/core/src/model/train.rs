//! Mini-batch training and held-out evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::network::ToyModel;
use crate::error::{FcsnError, Result};
use crate::fourier::CoefficientVector;
use crate::grid::Grid;
use crate::loss::{coefficient_weights, LossBreakdown, LossConfig};
use crate::mask::BinaryMask;
use crate::metrics::{evaluate_pair, EvalRecord};
use crate::raster::{rasterize, DEFAULT_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 8,
            epochs: 500,
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.batch_size >= 1
            && self.learning_rate >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.adam_epsilon > 0.0;
        if !ok {
            return Err(FcsnError::InvalidParameter(format!("invalid training config {self:?}")));
        }
        Ok(())
    }
}

/// One training example.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub image: Grid,
    pub coeffs: CoefficientVector,
}

/// Runs mini-batch Adam and returns the mean per-item loss of every epoch.
///
/// The coefficient weights are computed once from the whole training set.
/// Batches are drawn from a per-epoch shuffle seeded by `cfg.seed`, and each
/// batch gradient is summed item by item in batch order, so the run is
/// reproducible bit for bit.
pub fn fit(model: &mut ToyModel, data: &[TrainSample], cfg: &TrainConfig, loss_cfg: &LossConfig) -> Result<Vec<LossBreakdown>> {
    cfg.validate()?;
    loss_cfg.validate()?;
    if data.is_empty() {
        return Err(FcsnError::EmptyDataset);
    }
    let targets: Vec<CoefficientVector> = data.iter().map(|s| s.coeffs.clone()).collect();
    let weights = coefficient_weights(&targets, loss_cfg.epsilon)?;
    let n_params = model.params().len();
    let mut adam = Adam::new(n_params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; n_params];
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = LossBreakdown::default();
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            grad.fill(0.0);
            let mut batch_loss = LossBreakdown::default();
            for &i in batch {
                let item = model.accumulate_gradient(
                    &data[i].image,
                    &data[i].coeffs,
                    &weights,
                    loss_cfg,
                    batch.len(),
                    &mut grad,
                    None,
                )?;
                batch_loss.add(&item);
            }
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(FcsnError::NonFiniteLoss { epoch, batch: b });
            }
            adam.step(model.params_mut(), &grad);
            epoch_loss.add(&batch_loss.scaled(batch.len() as f64));
        }
        history.push(epoch_loss.scaled(1.0 / data.len() as f64));
    }
    Ok(history)
}

/// An image with its reference mask, for evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EvalItem<'a> {
    pub id: &'a str,
    pub image: &'a Grid,
    pub truth: &'a BinaryMask,
}

/// Predicts, rasterises at the reference mask resolution and scores each item.
pub fn evaluate(model: &ToyModel, items: &[EvalItem<'_>]) -> Result<Vec<EvalRecord>> {
    items
        .iter()
        .map(|item| {
            let pred = model.forward(item.image)?;
            let (h, w) = item.truth.shape();
            let mask = rasterize(&pred.coeffs, h, w, DEFAULT_SAMPLES)?.mask;
            evaluate_pair(item.id, item.truth, &mask)
        })
        .collect()
}

/// Seeded 80/20 split of `0..n` into (train, held-out) index lists.
pub fn holdout_split(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (n * 4).div_ceil(5);
    let test = order.split_off(n_train);
    (order, test)
}

/// Writes the loss history as CSV: `epoch,l1,l2,js,total`.
pub fn history_csv(history: &[LossBreakdown]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "l1", "l2", "js", "total"]).expect("csv write");
    for (e, l) in history.iter().enumerate() {
        w.serialize((e + 1, l.l1, l.l2, l.js, l.total)).expect("csv write");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("utf8")
}
