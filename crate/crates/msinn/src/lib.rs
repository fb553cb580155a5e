//! Inverse design of notch-filter metasurfaces with small neural networks.
//!
//! A metasurface unit cell here is a 32x32 binary copper mask tiled from
//! sixteen 8x8 ring patterns, each drawn from a palette of eight codes. A
//! deterministic analytic surrogate maps any cell to its reflection spectrum
//! (4-45 GHz); notches of that spectrum — frequency, depth, bandwidth —
//! form a 24-element feature vector. Two multilayer perceptrons invert that
//! mapping: a *restricted* network that emits the sixteen 3-bit tile codes
//! directly, and a *non-restricted* network that emits all 1024 pixels and
//! is legalized by nearest-tile projection.
//!
//! The crate is organized bottom-up:
//!
//! - [`nn`]: dense networks, backpropagation, Adam, dropout, training loop,
//!   and a text weights format — no external ML dependencies.
//! - [`codec`]: tile bitmaps, 3-bit code packing, cell assembly, pixel
//!   projection, and mask export.
//! - [`surrogate`]: the analytic reflection model and its closed-form notch
//!   predictions.
//! - [`spectral`]: notch extraction and the normalized feature encoding.
//! - [`dataset`]: seeded corpus generation, splits, and the `MSDS/1` file
//!   format.
//! - [`designer`]: the two architectures, training, design, evaluation, and
//!   model bundles.
//! - [`plot`]: standalone SVG spectrum rendering.
//!
//! Numeric code is generic over [`scalar::Scalar`] (implemented for `f32`
//! and `f64`); the aliases below fix the crate-default precision. Every
//! stochastic step is driven by seeded, stream-keyed generators, so equal
//! seeds give bitwise-equal corpora, models, and metrics.
//!
//! Simulating one cell and reading off its notch:
//!
//! ```
//! use msinn::codec::UnitCellCodes;
//! use msinn::spectral::extract_notches;
//! use msinn::surrogate::simulate;
//! use msinn::SurrogateConfig;
//!
//! let cell = UnitCellCodes::new([2; 16])?;
//! let spectrum = simulate(&cell, &SurrogateConfig::default());
//! let notches = extract_notches(&spectrum);
//! assert_eq!(notches.len(), 1);
//! assert!((notches.notches()[0].freq_ghz - 16.0).abs() < 0.05);
//! # Ok::<(), msinn::Error>(())
//! ```

pub mod codec;
pub mod dataset;
pub mod designer;
pub mod error;
pub mod nn;
pub mod plot;
pub mod scalar;
pub mod spectral;
pub mod surrogate;

pub use error::{Error, Result};

/// Crate-default scalar precision.
pub type Real = f64;
/// Default-precision network.
pub type Model = nn::MlpModel<Real>;
/// Default-precision reflection spectrum.
pub type Spectrum = surrogate::Spectrum<Real>;
/// Default-precision simulator configuration.
pub type SurrogateConfig = surrogate::SurrogateConfig<Real>;
/// Default-precision notch.
pub type Notch = spectral::Notch<Real>;
/// Default-precision design target.
pub type Target = spectral::DesignTarget<Real>;
/// Default-precision feature vector.
pub type Features = spectral::FeatureVector<Real>;
/// Default-precision corpus.
pub type Dataset = dataset::Dataset<Real>;
/// Default-precision design report.
pub type DesignReport = designer::DesignReport<Real>;
