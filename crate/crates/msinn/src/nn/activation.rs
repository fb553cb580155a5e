//! Elementwise activation functions and their derivatives.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Activation applied elementwise after a dense layer's affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// `max(0, x)`.
    Relu,
    /// Logistic function `1 / (1 + e^(-x))`.
    Sigmoid,
    /// Pass-through (used by tests and as an escape hatch; the shipped
    /// architectures use only relu and sigmoid).
    Identity,
}

impl Activation {
    /// Applies the activation to one value.
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => relu(x),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed in terms of the activation *output* `y`.
    ///
    /// For relu the derivative at exactly zero output is taken as 0 (the
    /// convention that matches `relu(0) = 0` being treated as "off").
    pub fn grad_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => y * (T::one() - y),
            Activation::Identity => T::one(),
        }
    }

    /// Short stable name used in serialized weight files.
    pub fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }

    /// Inverse of [`Activation::tag`].
    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::InvalidConfig(format!(
                "unknown activation tag {other:?}"
            ))),
        }
    }
}

/// Rectified linear unit: `x` for positive inputs, exactly zero otherwise.
pub fn relu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Logistic sigmoid `1 / (1 + e^(-x))`, saturated to the open interval (0, 1).
///
/// The two-branch form never exponentiates a positive argument, so it cannot
/// overflow for any finite input. Where the exact value would round to 0 or 1
/// (|x| beyond roughly 37 for the upper end, or where `e^x` underflows for
/// very negative `x`), the result is clamped to the nearest representable
/// value inside (0, 1) so downstream logic can rely on the open range.
pub fn sigmoid<T: Scalar>(x: T) -> T {
    let one = T::one();
    let y = if x >= T::zero() {
        one / (one + (-x).exp())
    } else {
        let e = x.exp();
        e / (one + e)
    };
    // Saturate the closed endpoints back into (0, 1).
    y.max(T::min_positive_value()).min(one - T::epsilon())
}
