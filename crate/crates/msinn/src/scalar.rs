//! Floating-point scalar abstraction.
//!
//! All numeric code in this crate is generic over [`Scalar`], which is any
//! IEEE-754 float with the arithmetic and conversion traits the pipeline
//! needs. `f32` and `f64` implement it; the crate root exports concrete
//! aliases over [`crate::Real`] (`f64`) which the standard pipeline uses.

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};

/// Floating-point scalar usable throughout the crate.
///
/// The bound set is the union of what the linear algebra (`ndarray` products
/// and broadcast operations), the optimizer arithmetic, and the text
/// serialization requires. The trait has no methods of its own beyond two
/// conversion helpers; implementations are provided for `f32` and `f64`.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + ScalarOperand
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type, rounding if needed.
    ///
    /// Panics on values that have no finite representation (never the case
    /// for the fixed constants this crate converts).
    fn from_f64_lossy(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 constant converts to scalar")
    }

    /// Widens this scalar to `f64` (exact for `f32` and `f64`).
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar widens to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
