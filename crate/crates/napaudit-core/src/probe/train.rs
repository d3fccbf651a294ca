use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::dataset::{assemble_probe_dataset, ProbeDataset, Split};
use super::model::{loss_and_grad, AdamState, ProbeModel, Regularization};
use crate::error::{Error, Result};
use crate::groups::GroupAssignment;
use crate::nap::ActivationSource;
use crate::seed;
use crate::tensor::DownsampleMethod;

/// Probe protocol: sampling, downsampling, model and optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub max_per_group: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub regularization: Regularization,
    pub method: DownsampleMethod,
    pub max_hw: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            max_per_group: 128,
            epochs: 50,
            batch_size: 32,
            regularization: Regularization::default(),
            method: DownsampleMethod::Subsample,
            max_hw: 8,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

/// Per-epoch metrics, evaluated without dropout on the full splits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearningCurves {
    pub train_accuracy: Vec<f64>,
    /// `None` when the dataset has no validation examples.
    pub val_accuracy: Vec<Option<f64>>,
    /// Mean mini-batch training loss, including dropout and penalties.
    pub train_loss: Vec<f64>,
}

impl LearningCurves {
    pub fn epochs(&self) -> usize {
        self.train_accuracy.len()
    }
}

/// Predicted class for each example of `split`, paired with its label.
pub fn predict(model: &ProbeModel, pd: &ProbeDataset, split: Split) -> Vec<(usize, usize)> {
    let mut scratch = vec![0.0; model.classes];
    pd.indices(split)
        .into_iter()
        .map(|i| (pd.labels[i], model.predict_one(pd.row(i), &mut scratch)))
        .collect()
}

/// Fraction of correct argmax predictions on `split`.
pub fn evaluate(model: &ProbeModel, pd: &ProbeDataset, split: Split) -> Result<f64> {
    let pairs = predict(model, pd, split);
    if pairs.is_empty() {
        return Err(Error::Argument(format!("the {} split is empty", split.name())));
    }
    Ok(pairs.iter().filter(|(y, p)| y == p).count() as f64 / pairs.len() as f64)
}

/// Mini-batch training with a fresh shuffle every epoch.
pub fn train_probe(pd: &ProbeDataset, config: &ProbeConfig, seed: u64) -> Result<(ProbeModel, LearningCurves)> {
    let mut train = pd.indices(Split::Train);
    if train.is_empty() {
        return Err(Error::Argument(
            "probe training needs at least one training example".into(),
        ));
    }
    if config.batch_size == 0 {
        return Err(Error::Argument("batch size must be positive".into()));
    }
    let has_val = pd.split.contains(&Split::Val);
    let mut init_rng = seed::rng(seed::substream(seed, 0));
    let mut model = ProbeModel::init(pd.dim, pd.num_classes, &mut init_rng);
    model.optimizer = AdamState::new(pd.dim, pd.num_classes).with_hyper(
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.epsilon,
    );
    let mut curves = LearningCurves::default();
    let mut rng = seed::rng(seed::substream(seed, 1));
    let mut rows: Vec<&[f32]> = Vec::with_capacity(config.batch_size);
    let mut labels: Vec<usize> = Vec::with_capacity(config.batch_size);
    for epoch in 0..config.epochs {
        train.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, batch) in train.chunks(config.batch_size).enumerate() {
            rows.clear();
            labels.clear();
            rows.extend(batch.iter().map(|&i| pd.row(i)));
            labels.extend(batch.iter().map(|&i| pd.labels[i]));
            let (loss, grads) = loss_and_grad(&model, &rows, &labels, &config.regularization, Some(&mut rng))
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}, batch {b}: {e}")))?;
            model.apply_gradients(&grads);
            if !model.is_finite() {
                return Err(Error::NonFinite(format!(
                    "probe parameters diverged at epoch {epoch}, batch {b}"
                )));
            }
            loss_sum += loss * batch.len() as f64;
        }
        curves.train_loss.push(loss_sum / train.len() as f64);
        curves.train_accuracy.push(evaluate(&model, pd, Split::Train)?);
        curves.val_accuracy.push(if has_val {
            Some(evaluate(&model, pd, Split::Val)?)
        } else {
            None
        });
    }
    Ok((model, curves))
}

/// End-of-training accuracies of one probe.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub layer_id: u32,
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
    pub curves: LearningCurves,
}

/// Trains one probe per layer with the identical protocol and seed, so every
/// layer sees the same sampled examples and splits.
pub fn layer_sweep<S: ActivationSource>(
    layers: &[(u32, S)],
    assignment: &GroupAssignment,
    config: &ProbeConfig,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    layers
        .iter()
        .map(|(layer_id, source)| {
            let pd = assemble_probe_dataset(
                source,
                *layer_id,
                assignment,
                config.method,
                config.max_hw,
                config.max_per_group,
                seed::substream(seed, 0),
            )?;
            let (model, curves) = train_probe(&pd, config, seed::substream(seed, 1))?;
            let val_accuracy = if pd.split.contains(&Split::Val) {
                Some(evaluate(&model, &pd, Split::Val)?)
            } else {
                None
            };
            Ok(SweepRow {
                layer_id: *layer_id,
                train_accuracy: evaluate(&model, &pd, Split::Train)?,
                val_accuracy,
                curves,
            })
        })
        .collect()
}
