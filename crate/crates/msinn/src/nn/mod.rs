//! Dense neural networks: layers, activations, dropout, Adam, training, and
//! weight serialization.
//!
//! Everything here is written against [`crate::scalar::Scalar`] so the same
//! code runs in `f32` or `f64`. Randomness is always drawn as `f64` from a
//! caller-supplied generator in a documented order, which makes training runs
//! reproducible from a single seed.

mod activation;
mod adam;
mod dropout;
mod layer;
mod loss;
mod model;
mod train;
mod weights_io;

pub use activation::{relu, sigmoid, Activation};
pub use adam::{AdamParams, AdamState};
pub use dropout::dropout_forward;
pub use layer::DenseLayer;
pub use loss::{binary_accuracy, binary_accuracy_batch, mse_loss, mse_loss_batch};
pub use model::{BatchCache, Gradients, LayerGrads, MlpModel};
pub use train::{train, EpochStats, TrainConfig, TrainHistory};
pub use weights_io::{load_model, read_model, save_model, write_model, WEIGHTS_FORMAT};
