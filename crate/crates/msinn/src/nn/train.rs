//! Mini-batch training loop.

use crate::error::{Error, Result};
use crate::nn::adam::{AdamParams, AdamState};
use crate::nn::loss::{binary_accuracy_batch, mse_loss_batch};
use crate::nn::model::{Gradients, MlpModel};
use crate::scalar::Scalar;
use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Training hyperparameters.
///
/// The defaults are the standard recipe used throughout this crate:
/// mini-batches of 30, Adam at `lr = 0.001`, dropout 0.1, 3000 epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Dropout rate installed into the model for the duration of training
    /// (applied at the model's configured dropout placements).
    pub dropout_rate: f64,
    /// Seed for everything stochastic in a run: parameter initialization,
    /// per-epoch shuffling, and dropout masks.
    pub rng_seed: u64,
    #[serde(default)]
    pub adam: AdamParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 3000,
            batch_size: 30,
            learning_rate: 0.001,
            dropout_rate: 0.1,
            rng_seed: 42,
            adam: AdamParams::default(),
        }
    }
}

impl TrainConfig {
    /// Checks hyperparameter ranges (epochs may be zero).
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        self.adam.validate()
    }
}

/// Metrics recorded at the end of one epoch.
///
/// Training-side numbers are running averages over that epoch's mini-batches
/// (dropout active, parameters moving), weighted by batch size. Evaluation
/// numbers come from a full inference pass over the held-out set and are
/// `None` when no evaluation set was supplied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub eval_loss: Option<f64>,
    pub eval_accuracy: Option<f64>,
}

/// Per-epoch metrics for a whole training run, in epoch order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    /// Stats of the final epoch, if any epoch ran.
    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

/// Trains `model` on `(inputs, targets)` with mini-batch Adam.
///
/// One row per sample. The run is fully deterministic given
/// `config.rng_seed`: parameters are (re)initialized with Glorot draws from
/// the seeded generator, each epoch shuffles sample indices with it, and
/// dropout masks are drawn from it in batch order. With `epochs == 0` the
/// model is left exactly at its fresh initialization.
///
/// `eval` optionally supplies a held-out `(inputs, targets)` pair that is
/// scored by a full inference pass (dropout off) after every epoch.
///
/// On success the model is marked trained. A non-finite loss or gradient
/// aborts the run with an error and leaves the model unusable.
pub fn train<T: Scalar>(
    model: &mut MlpModel<T>,
    inputs: &Array2<T>,
    targets: &Array2<T>,
    eval: Option<(&Array2<T>, &Array2<T>)>,
    config: &TrainConfig,
) -> Result<TrainHistory> {
    config.validate()?;
    let n = inputs.nrows();
    if n == 0 {
        return Err(Error::InvalidConfig("training set is empty".into()));
    }
    if targets.nrows() != n {
        return Err(Error::ShapeMismatch {
            context: "training targets rows",
            expected: n,
            actual: targets.nrows(),
        });
    }
    if inputs.ncols() != model.in_dim() {
        return Err(Error::ShapeMismatch {
            context: "training input width",
            expected: model.in_dim(),
            actual: inputs.ncols(),
        });
    }
    if targets.ncols() != model.out_dim() {
        return Err(Error::ShapeMismatch {
            context: "training target width",
            expected: model.out_dim(),
            actual: targets.ncols(),
        });
    }
    if let Some((ex, ey)) = eval {
        if ex.nrows() != ey.nrows() || ex.ncols() != model.in_dim() || ey.ncols() != model.out_dim()
        {
            return Err(Error::ShapeMismatch {
                context: "evaluation set",
                expected: model.in_dim(),
                actual: ex.ncols(),
            });
        }
    }
    if config.batch_size > n {
        return Err(Error::InvalidConfig(format!(
            "batch_size {} exceeds training set size {n}",
            config.batch_size
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    model.set_dropout_rate(T::from_f64_lossy(config.dropout_rate))?;
    model.init_glorot(&mut rng);
    let mut adam = AdamState::new(model, config.adam)?;
    let lr = T::from_f64_lossy(config.learning_rate);

    let mut indices: Vec<usize> = (0..n).collect();
    let mut history = TrainHistory::default();
    let mut grads = Gradients::zeros_like(model);

    for epoch in 1..=config.epochs {
        indices.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut acc_sum = 0.0;
        for chunk in indices.chunks(config.batch_size) {
            let batch_x = inputs.select(Axis(0), chunk);
            let batch_y = targets.select(Axis(0), chunk);
            let cache = model.forward_training(&batch_x, &mut rng)?;
            let loss = mse_loss_batch(cache.prediction(), &batch_y)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            let acc = binary_accuracy_batch(cache.prediction(), &batch_y)?;
            loss_sum += loss.to_f64_lossy() * chunk.len() as f64;
            acc_sum += acc * chunk.len() as f64;
            model.backward_into(&cache, &batch_y, &mut grads)?;
            adam.step(model, &grads, lr)?;
        }

        let (eval_loss, eval_accuracy) = match eval {
            Some((ex, ey)) => {
                let pred = model.forward_batch(ex)?;
                let loss = mse_loss_batch(&pred, ey)?.to_f64_lossy();
                let acc = binary_accuracy_batch(&pred, ey)?;
                (Some(loss), Some(acc))
            }
            None => (None, None),
        };
        history.epochs.push(EpochStats {
            train_loss: loss_sum / n as f64,
            train_accuracy: acc_sum / n as f64,
            eval_loss,
            eval_accuracy,
        });
    }

    model.set_trained(true);
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::activation::Activation;
    use crate::nn::layer::DenseLayer;
    use ndarray::Array2;

    fn toy_model() -> MlpModel<f64> {
        let layers = vec![
            DenseLayer::zeros(2, 8, Activation::Relu),
            DenseLayer::zeros(8, 1, Activation::Identity),
        ];
        MlpModel::new(layers, &[], 0.0).unwrap()
    }

    /// y = x0 + 2 x1 over a small grid.
    fn linear_data(n: usize) -> (Array2<f64>, Array2<f64>) {
        let x = Array2::from_shape_fn((n, 2), |(i, j)| {
            let v = (i * 2 + j) as f64 / n as f64;
            v - 0.5
        });
        let y = Array2::from_shape_fn((n, 1), |(i, _)| x[[i, 0]] + 2.0 * x[[i, 1]]);
        (x, y)
    }

    #[test]
    fn zero_epochs_leaves_fresh_initialization() {
        let (x, y) = linear_data(16);
        let mut trained = toy_model();
        let config = TrainConfig {
            epochs: 0,
            batch_size: 4,
            rng_seed: 99,
            dropout_rate: 0.0,
            ..TrainConfig::default()
        };
        let history = train(&mut trained, &x, &y, None, &config).unwrap();
        assert!(history.epochs.is_empty());

        let mut reference = toy_model();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        reference.init_glorot(&mut rng);
        for (a, b) in trained.layers().iter().zip(reference.layers()) {
            assert_eq!(a.weights(), b.weights());
            assert_eq!(a.biases(), b.biases());
        }
    }

    #[test]
    fn identical_seeds_give_bitwise_identical_runs() {
        let (x, y) = linear_data(24);
        let config = TrainConfig {
            epochs: 5,
            batch_size: 5, // uneven: exercises the short final batch
            rng_seed: 7,
            dropout_rate: 0.0,
            ..TrainConfig::default()
        };
        let mut m1 = toy_model();
        let h1 = train(&mut m1, &x, &y, Some((&x, &y)), &config).unwrap();
        let mut m2 = toy_model();
        let h2 = train(&mut m2, &x, &y, Some((&x, &y)), &config).unwrap();
        assert_eq!(h1, h2);
        for (a, b) in m1.layers().iter().zip(m2.layers()) {
            assert_eq!(a.weights(), b.weights());
        }
    }

    #[test]
    fn different_seeds_diverge() {
        let (x, y) = linear_data(24);
        let base = TrainConfig {
            epochs: 2,
            batch_size: 6,
            dropout_rate: 0.0,
            ..TrainConfig::default()
        };
        let mut m1 = toy_model();
        let c1 = TrainConfig {
            rng_seed: 1,
            ..base.clone()
        };
        train(&mut m1, &x, &y, None, &c1).unwrap();
        let mut m2 = toy_model();
        let c2 = TrainConfig {
            rng_seed: 2,
            ..base
        };
        train(&mut m2, &x, &y, None, &c2).unwrap();
        assert_ne!(m1.layers()[0].weights(), m2.layers()[0].weights());
    }

    #[test]
    fn learns_a_linear_map() {
        let (x, y) = linear_data(64);
        let mut model = toy_model();
        let config = TrainConfig {
            epochs: 500,
            batch_size: 8,
            learning_rate: 0.01,
            dropout_rate: 0.0,
            rng_seed: 3,
            ..TrainConfig::default()
        };
        let history = train(&mut model, &x, &y, None, &config).unwrap();
        let final_loss = history.last().unwrap().train_loss;
        assert!(final_loss < 1e-3, "final loss {final_loss}");
        assert!(model.is_trained());
    }

    #[test]
    fn history_has_one_entry_per_epoch_with_eval_metrics() {
        let (x, y) = linear_data(20);
        let mut model = toy_model();
        let config = TrainConfig {
            epochs: 3,
            batch_size: 5,
            dropout_rate: 0.0,
            ..TrainConfig::default()
        };
        let history = train(&mut model, &x, &y, Some((&x, &y)), &config).unwrap();
        assert_eq!(history.epochs.len(), 3);
        assert!(history.epochs.iter().all(|e| e.eval_loss.is_some()));
    }

    #[test]
    fn divergence_is_reported_as_non_finite_loss() {
        // An absurd learning rate with identity activations overflows f64
        // within a few steps; the loop must stop with an error rather than
        // silently producing NaN parameters.
        let (x, y) = linear_data(16);
        let mut model = toy_model();
        let config = TrainConfig {
            epochs: 50,
            batch_size: 4,
            learning_rate: 1e150,
            dropout_rate: 0.0,
            rng_seed: 5,
            ..TrainConfig::default()
        };
        let err = train(&mut model, &x, &y, None, &config).unwrap_err();
        assert!(
            matches!(
                err,
                Error::NonFiniteLoss { .. } | Error::NonFiniteGradient { .. }
            ),
            "unexpected error {err:?}"
        );
    }

    #[test]
    fn oversized_batch_is_rejected() {
        let (x, y) = linear_data(4);
        let mut model = toy_model();
        let config = TrainConfig {
            batch_size: 8,
            epochs: 1,
            ..TrainConfig::default()
        };
        assert!(train(&mut model, &x, &y, None, &config).is_err());
    }
}
