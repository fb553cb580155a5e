//! Adam optimizer.
//!
//! Standard Adam with bias-corrected first and second moment estimates:
//!
//! ```text
//! m <- b1 m + (1 - b1) g          v <- b2 v + (1 - b2) g^2
//! theta <- theta - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
//! ```

use crate::error::{Error, Result};
use crate::nn::model::{Gradients, MlpModel};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

/// Adam hyperparameters. The defaults are the conventional
/// `beta1 = 0.9`, `beta2 = 0.999`, `epsilon = 1e-8`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamParams {
    /// Checks the parameters are in their valid ranges.
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "adam parameters out of range: beta1={}, beta2={}, epsilon={}",
                self.beta1, self.beta2, self.epsilon
            )))
        }
    }
}

/// Per-tensor moment estimates.
#[derive(Debug, Clone)]
struct Moments<T> {
    weights_m: Array2<T>,
    weights_v: Array2<T>,
    biases_m: Array1<T>,
    biases_v: Array1<T>,
}

/// Optimizer state: first/second moments for every parameter tensor plus the
/// global step counter.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    moments: Vec<Moments<T>>,
    step_count: u64,
    beta1: T,
    beta2: T,
    epsilon: T,
    // Running powers beta^t, updated once per step.
    beta1_pow: T,
    beta2_pow: T,
}

impl<T: Scalar> AdamState<T> {
    /// Zero-initialized state shaped like `model`'s parameters.
    pub fn new(model: &MlpModel<T>, params: AdamParams) -> Result<Self> {
        params.validate()?;
        let moments = model
            .layers()
            .iter()
            .map(|layer| Moments {
                weights_m: Array2::zeros(layer.weights().dim()),
                weights_v: Array2::zeros(layer.weights().dim()),
                biases_m: Array1::zeros(layer.biases().len()),
                biases_v: Array1::zeros(layer.biases().len()),
            })
            .collect();
        Ok(AdamState {
            moments,
            step_count: 0,
            beta1: T::from_f64_lossy(params.beta1),
            beta2: T::from_f64_lossy(params.beta2),
            epsilon: T::from_f64_lossy(params.epsilon),
            beta1_pow: T::one(),
            beta2_pow: T::one(),
        })
    }

    /// Number of completed steps.
    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one Adam update to every model parameter in place.
    ///
    /// Rejects gradients containing non-finite values (reported with the
    /// offending layer index); the model must not be used further after that
    /// error since the update may have been partially applied.
    pub fn step(
        &mut self,
        model: &mut MlpModel<T>,
        grads: &Gradients<T>,
        learning_rate: T,
    ) -> Result<()> {
        if grads.layers.len() != self.moments.len() {
            return Err(Error::ShapeMismatch {
                context: "adam gradients",
                expected: self.moments.len(),
                actual: grads.layers.len(),
            });
        }
        self.step_count += 1;
        self.beta1_pow *= self.beta1;
        self.beta2_pow *= self.beta2;
        // Bias corrections as reciprocal factors so the inner loop stays
        // multiply-only (plus the one unavoidable sqrt and divide). Keeping
        // the loop branch-free lets it vectorize; the finiteness scan runs
        // as its own cheap pass beforehand.
        let inv_bc1 = T::one() / (T::one() - self.beta1_pow);
        let inv_bc2 = T::one() / (T::one() - self.beta2_pow);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let one = T::one();

        for (k, (layer, moments)) in model
            .layers_mut()
            .iter_mut()
            .zip(self.moments.iter_mut())
            .enumerate()
        {
            let g = &grads.layers[k];
            let finite =
                g.weights.iter().all(|x| x.is_finite()) && g.biases.iter().all(|x| x.is_finite());
            if !finite {
                return Err(Error::NonFiniteGradient { layer: k });
            }
            let scalar_update = |theta: &mut T, g: T, m: &mut T, v: &mut T| {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let m_hat = *m * inv_bc1;
                let v_hat = *v * inv_bc2;
                *theta -= learning_rate * m_hat / (v_hat.sqrt() + eps);
            };
            // The hot path runs over equal-length contiguous slices so the
            // indexed loop compiles to branch-free element-wise code; the
            // Zip fallback covers gradients a caller built from views.
            let slice_update = |theta: &mut [T], g: &[T], m: &mut [T], v: &mut [T]| {
                let len = theta.len();
                assert!(g.len() == len && m.len() == len && v.len() == len);
                for i in 0..len {
                    let gi = g[i];
                    let mi = b1 * m[i] + (one - b1) * gi;
                    let vi = b2 * v[i] + (one - b2) * gi * gi;
                    m[i] = mi;
                    v[i] = vi;
                    let m_hat = mi * inv_bc1;
                    let v_hat = vi * inv_bc2;
                    theta[i] -= learning_rate * m_hat / (v_hat.sqrt() + eps);
                }
            };
            match (
                layer.weights_mut().as_slice_mut(),
                g.weights.as_slice(),
                moments.weights_m.as_slice_mut(),
                moments.weights_v.as_slice_mut(),
            ) {
                (Some(t), Some(g), Some(m), Some(v)) => slice_update(t, g, m, v),
                _ => Zip::from(layer.weights_mut())
                    .and(&g.weights)
                    .and(&mut moments.weights_m)
                    .and(&mut moments.weights_v)
                    .for_each(|t, &g, m, v| scalar_update(t, g, m, v)),
            }
            match (
                layer.biases_mut().as_slice_mut(),
                g.biases.as_slice(),
                moments.biases_m.as_slice_mut(),
                moments.biases_v.as_slice_mut(),
            ) {
                (Some(t), Some(g), Some(m), Some(v)) => slice_update(t, g, m, v),
                _ => Zip::from(layer.biases_mut())
                    .and(&g.biases)
                    .and(&mut moments.biases_m)
                    .and(&mut moments.biases_v)
                    .for_each(|t, &g, m, v| scalar_update(t, g, m, v)),
            }
        }
        Ok(())
    }
}
