//! Fully connected layer.

use crate::error::{Error, Result};
use crate::nn::activation::Activation;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;

/// Dense layer computing `activation(W x + b)`.
///
/// Weights are stored row-major with one row per output unit, so `W` has
/// shape `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    weights: Array2<T>,
    biases: Array1<T>,
    activation: Activation,
}

impl<T: Scalar> DenseLayer<T> {
    /// Creates a layer with all parameters zero.
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        DenseLayer {
            weights: Array2::zeros((out_dim, in_dim)),
            biases: Array1::zeros(out_dim),
            activation,
        }
    }

    /// Builds a layer from explicit parameters.
    ///
    /// Rejects empty dimensions and non-finite parameter values.
    pub fn from_parts(
        weights: Array2<T>,
        biases: Array1<T>,
        activation: Activation,
    ) -> Result<Self> {
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::InvalidConfig(
                "dense layer dimensions must be nonzero".into(),
            ));
        }
        if biases.len() != weights.nrows() {
            return Err(Error::ShapeMismatch {
                context: "dense layer biases",
                expected: weights.nrows(),
                actual: biases.len(),
            });
        }
        if weights.iter().chain(biases.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "dense layer parameters must be finite".into(),
            ));
        }
        Ok(DenseLayer {
            weights,
            biases,
            activation,
        })
    }

    /// Input width.
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    /// Output width.
    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    /// Activation applied after the affine map.
    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Weight matrix, shape `(out_dim, in_dim)`.
    pub fn weights(&self) -> &Array2<T> {
        &self.weights
    }

    /// Bias vector, length `out_dim`.
    pub fn biases(&self) -> &Array1<T> {
        &self.biases
    }

    pub(crate) fn weights_mut(&mut self) -> &mut Array2<T> {
        &mut self.weights
    }

    pub(crate) fn biases_mut(&mut self) -> &mut Array1<T> {
        &mut self.biases
    }

    /// Number of trainable parameters (`in_dim * out_dim + out_dim`).
    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    /// Applies the layer to one input vector.
    pub fn forward(&self, input: ArrayView1<'_, T>) -> Result<Array1<T>> {
        if input.len() != self.in_dim() {
            return Err(Error::ShapeMismatch {
                context: "dense layer input",
                expected: self.in_dim(),
                actual: input.len(),
            });
        }
        let mut z = self.weights.dot(&input);
        z += &self.biases;
        z.mapv_inplace(|v| self.activation.apply(v));
        Ok(z)
    }

    /// Applies the layer to a batch with one sample per row.
    ///
    /// Input shape `(batch, in_dim)`, output shape `(batch, out_dim)`.
    pub fn forward_batch(&self, input: &Array2<T>) -> Result<Array2<T>> {
        if input.ncols() != self.in_dim() {
            return Err(Error::ShapeMismatch {
                context: "dense layer batch input",
                expected: self.in_dim(),
                actual: input.ncols(),
            });
        }
        let mut z = input.dot(&self.weights.t());
        for mut row in z.axis_iter_mut(Axis(0)) {
            row += &self.biases;
        }
        z.mapv_inplace(|v| self.activation.apply(v));
        Ok(z)
    }

    /// Glorot (Xavier) uniform initialization.
    ///
    /// Weights are drawn uniformly from `[-limit, limit]` with
    /// `limit = sqrt(6 / (in_dim + out_dim))`; biases are set to zero. Draws
    /// are consumed in row-major weight order, one `f64` per entry regardless
    /// of the scalar type, so initialization patterns are reproducible across
    /// `f32` and `f64`.
    pub fn init_glorot<R: Rng>(&mut self, rng: &mut R) {
        let limit = (6.0 / (self.in_dim() + self.out_dim()) as f64).sqrt();
        for w in self.weights.iter_mut() {
            let u = rng.random::<f64>(); // uniform in [0, 1)
            *w = T::from_f64_lossy((2.0 * u - 1.0) * limit);
        }
        self.biases.fill(T::zero());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_computes_affine_map_then_activation() {
        // 2x2 identity weights, bias [1, -1], relu.
        let w = array![[1.0, 0.0], [0.0, 1.0]];
        let b = array![1.0, -1.0];
        let layer = DenseLayer::from_parts(w, b, Activation::Relu).unwrap();
        let y = layer.forward(array![2.0, -3.0].view()).unwrap();
        assert_eq!(y, array![3.0, 0.0]); // relu([3, -4])
    }

    #[test]
    fn zero_input_yields_activated_bias() {
        let w = array![[0.5, 0.5]];
        let b = array![-2.0];
        let layer = DenseLayer::from_parts(w, b, Activation::Sigmoid).unwrap();
        let y = layer.forward(array![0.0, 0.0].view()).unwrap();
        assert!((y[0] - 1.0 / (1.0 + 2.0f64.exp())).abs() < 1e-15);
    }

    #[test]
    fn forward_matches_naive_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut layer = DenseLayer::<f64>::zeros(4, 3, Activation::Identity);
        layer.init_glorot(&mut rng);
        let x = array![0.3, -1.2, 0.7, 2.0];
        let y = layer.forward(x.view()).unwrap();
        for j in 0..3 {
            let mut acc = layer.biases()[j];
            for i in 0..4 {
                acc += layer.weights()[[j, i]] * x[i];
            }
            let rel = (y[j] - acc).abs() / acc.abs().max(1e-12);
            assert!(rel < 1e-12, "output {j}: {} vs {acc}", y[j]);
        }
    }

    #[test]
    fn batch_forward_agrees_with_per_sample_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut layer = DenseLayer::<f64>::zeros(3, 5, Activation::Sigmoid);
        layer.init_glorot(&mut rng);
        let batch = array![[0.1, 0.2, 0.3], [-1.0, 0.5, 2.0], [0.0, 0.0, 0.0]];
        let out = layer.forward_batch(&batch).unwrap();
        for (row_in, row_out) in batch.outer_iter().zip(out.outer_iter()) {
            let single = layer.forward(row_in).unwrap();
            for (a, b) in single.iter().zip(row_out.iter()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let layer = DenseLayer::<f64>::zeros(4, 3, Activation::Relu);
        let err = layer.forward(array![1.0, 2.0].view()).unwrap_err();
        assert!(matches!(
            err,
            Error::ShapeMismatch {
                expected: 4,
                actual: 2,
                ..
            }
        ));
    }

    #[test]
    fn non_finite_parameters_are_rejected() {
        let w = array![[f64::NAN]];
        let b = array![0.0];
        assert!(DenseLayer::from_parts(w, b, Activation::Relu).is_err());
    }

    #[test]
    fn glorot_init_respects_bounds_and_zeroes_biases() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut layer = DenseLayer::<f64>::zeros(300, 300, Activation::Relu);
        layer.init_glorot(&mut rng);
        let limit = (6.0 / 600.0f64).sqrt();
        assert!(layer.weights().iter().all(|w| w.abs() <= limit));
        assert!(layer.biases().iter().all(|&b| b == 0.0));
        // Spread should fill a reasonable portion of the range.
        let max = layer
            .weights()
            .iter()
            .cloned()
            .fold(0.0f64, |a, w| a.max(w.abs()));
        assert!(max > 0.9 * limit);
    }
}
