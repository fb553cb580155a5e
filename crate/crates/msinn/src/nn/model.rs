//! Multilayer perceptron: forward passes, cached training pass, backprop.

use crate::error::{Error, Result};
use crate::nn::activation::Activation;
use crate::nn::dropout;
use crate::nn::layer::DenseLayer;
use crate::scalar::Scalar;
use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, Axis, Zip};
use rand::Rng;

/// Feed-forward network of dense layers with optional inverted dropout
/// between them.
///
/// `dropout_after` lists the indices of layers whose *output* is passed
/// through dropout during training; dropout is inactive at inference.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    layers: Vec<DenseLayer<T>>,
    dropout_after: Vec<usize>,
    dropout_rate: T,
    trained: bool,
}

/// Per-layer parameter gradients, shaped exactly like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads<T> {
    pub weights: Array2<T>,
    pub biases: Array1<T>,
}

/// Gradients for every layer of a model, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<LayerGrads<T>>,
}

impl<T: Scalar> Gradients<T> {
    /// Zeroed gradients shaped like `model`'s parameters, reusable across
    /// [`MlpModel::backward_into`] calls to avoid per-batch allocation.
    pub fn zeros_like(model: &MlpModel<T>) -> Self {
        Gradients {
            layers: model
                .layers()
                .iter()
                .map(|layer| LayerGrads {
                    weights: Array2::zeros(layer.weights().dim()),
                    biases: Array1::zeros(layer.biases().len()),
                })
                .collect(),
        }
    }
}

/// Intermediate values captured by a training forward pass, consumed by
/// [`MlpModel::backward`].
#[derive(Debug, Clone)]
pub struct BatchCache<T> {
    /// The input batch, shape `(batch, in_dim)`.
    input: Array2<T>,
    /// Post-activation output of each layer, before dropout.
    outputs: Vec<Array2<T>>,
    /// Dropout mask applied to each layer's output (`None` where dropout is
    /// not configured).
    masks: Vec<Option<Array2<T>>>,
    /// Network output after any final dropout, shape `(batch, out_dim)`.
    prediction: Array2<T>,
}

impl<T: Scalar> BatchCache<T> {
    /// Network predictions for the cached batch.
    pub fn prediction(&self) -> &Array2<T> {
        &self.prediction
    }
}

impl<T: Scalar> MlpModel<T> {
    /// Assembles a model from layers plus a dropout placement.
    ///
    /// Validates that consecutive layer dimensions chain, that dropout
    /// indices refer to existing layers, and that the rate is in `[0, 1)`.
    pub fn new(
        layers: Vec<DenseLayer<T>>,
        dropout_after: &[usize],
        dropout_rate: T,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig(
                "model needs at least one layer".into(),
            ));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::ShapeMismatch {
                    context: "consecutive layer dimensions",
                    expected: pair[0].out_dim(),
                    actual: pair[1].in_dim(),
                });
            }
        }
        dropout::validate_rate(dropout_rate)?;
        let mut dropout_after = dropout_after.to_vec();
        dropout_after.sort_unstable();
        dropout_after.dedup();
        if let Some(&bad) = dropout_after.iter().find(|&&i| i >= layers.len()) {
            return Err(Error::InvalidConfig(format!(
                "dropout after layer {bad} but model has {} layers",
                layers.len()
            )));
        }
        Ok(MlpModel {
            layers,
            dropout_after,
            dropout_rate,
            trained: false,
        })
    }

    /// Layers in forward order.
    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer<T>] {
        &mut self.layers
    }

    /// Indices of layers followed by dropout during training.
    pub fn dropout_after(&self) -> &[usize] {
        &self.dropout_after
    }

    /// Dropout rate used by training forward passes.
    pub fn dropout_rate(&self) -> T {
        self.dropout_rate
    }

    pub(crate) fn set_dropout_rate(&mut self, rate: T) -> Result<()> {
        dropout::validate_rate(rate)?;
        self.dropout_rate = rate;
        Ok(())
    }

    /// Width of the input layer.
    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    /// Width of the output layer.
    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// Total number of trainable parameters.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// Whether the model has been trained (or loaded from a weights file).
    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub(crate) fn set_trained(&mut self, trained: bool) {
        self.trained = trained;
    }

    /// Reinitializes all parameters with Glorot uniform draws from `rng`,
    /// layer by layer in forward order, and clears the trained flag.
    pub fn init_glorot<R: Rng>(&mut self, rng: &mut R) {
        for layer in &mut self.layers {
            layer.init_glorot(rng);
        }
        self.trained = false;
    }

    /// Inference pass over one input vector (dropout inactive).
    pub fn forward(&self, input: ArrayView1<'_, T>) -> Result<Array1<T>> {
        let mut a = self.layers[0].forward(input)?;
        for layer in &self.layers[1..] {
            a = layer.forward(a.view())?;
        }
        Ok(a)
    }

    /// Inference pass over a batch with one sample per row.
    pub fn forward_batch(&self, input: &Array2<T>) -> Result<Array2<T>> {
        let mut a = self.layers[0].forward_batch(input)?;
        for layer in &self.layers[1..] {
            a = layer.forward_batch(&a)?;
        }
        Ok(a)
    }

    /// Training pass: applies dropout where configured and captures the
    /// intermediate values needed for backpropagation.
    ///
    /// Dropout masks are drawn from `rng` in layer order; each mask consumes
    /// one `f64` draw per element in row-major order.
    pub fn forward_training<R: Rng>(
        &self,
        batch: &Array2<T>,
        rng: &mut R,
    ) -> Result<BatchCache<T>> {
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut masks: Vec<Option<Array2<T>>> = vec![None; self.layers.len()];
        let mut a = batch.clone();
        for (k, layer) in self.layers.iter().enumerate() {
            let y = layer.forward_batch(&a)?;
            a = if self.dropout_after.contains(&k) && self.dropout_rate > T::zero() {
                let mask = dropout::sample_mask(y.dim(), self.dropout_rate, rng);
                let dropped = &y * &mask;
                masks[k] = Some(mask);
                dropped
            } else {
                y.clone()
            };
            outputs.push(y);
        }
        Ok(BatchCache {
            input: batch.clone(),
            outputs,
            masks,
            prediction: a,
        })
    }

    /// Backpropagates the mean-squared-error loss through a cached training
    /// pass, returning parameter gradients for every layer.
    ///
    /// The loss is the mean over all `batch * out_dim` output entries of the
    /// squared residual, matching [`crate::nn::mse_loss_batch`].
    pub fn backward(&self, cache: &BatchCache<T>, targets: &Array2<T>) -> Result<Gradients<T>> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_into(cache, targets, &mut grads)?;
        Ok(grads)
    }

    /// [`MlpModel::backward`] writing into a caller-owned gradient buffer,
    /// so a training loop can reuse one allocation for every batch.
    pub fn backward_into(
        &self,
        cache: &BatchCache<T>,
        targets: &Array2<T>,
        grads: &mut Gradients<T>,
    ) -> Result<()> {
        let pred = &cache.prediction;
        if targets.dim() != pred.dim() {
            return Err(Error::ShapeMismatch {
                context: "backward targets",
                expected: pred.len(),
                actual: targets.len(),
            });
        }
        if grads.layers.len() != self.layers.len()
            || grads
                .layers
                .iter()
                .zip(&self.layers)
                .any(|(g, l)| g.weights.dim() != l.weights().dim())
        {
            return Err(Error::ShapeMismatch {
                context: "gradient buffer layers",
                expected: self.layers.len(),
                actual: grads.layers.len(),
            });
        }
        let batch = pred.nrows();
        let norm = T::from_f64_lossy(2.0 / (batch * pred.ncols()) as f64);
        // Gradient of the loss w.r.t. the network output.
        let mut d_a = (pred - targets) * norm;

        for k in (0..self.layers.len()).rev() {
            // Through dropout: replay the mask on the gradient.
            if let Some(mask) = &cache.masks[k] {
                d_a *= mask;
            }
            // Through the activation, using the derivative written in terms
            // of the cached post-activation output.
            let y = &cache.outputs[k];
            match self.layers[k].activation() {
                Activation::Relu => Zip::from(&mut d_a).and(y).for_each(|d, &y| {
                    if y <= T::zero() {
                        *d = T::zero();
                    }
                }),
                Activation::Sigmoid => Zip::from(&mut d_a).and(y).for_each(|d, &y| {
                    *d *= y * (T::one() - y);
                }),
                Activation::Identity => {}
            }
            let dz = d_a;

            // The layer's input: the batch itself for layer 0, otherwise the
            // previous layer's output with its dropout mask re-applied.
            let masked_input;
            let input: &Array2<T> = if k == 0 {
                &cache.input
            } else if let Some(mask) = &cache.masks[k - 1] {
                masked_input = &cache.outputs[k - 1] * mask;
                &masked_input
            } else {
                &cache.outputs[k - 1]
            };

            general_mat_mul(
                T::one(),
                &dz.t(),
                input,
                T::zero(),
                &mut grads.layers[k].weights,
            );
            grads.layers[k].biases.assign(&dz.sum_axis(Axis(0)));

            d_a = if k > 0 {
                dz.dot(self.layers[k].weights())
            } else {
                dz // final iteration; value unused
            };
        }
        Ok(())
    }
}
