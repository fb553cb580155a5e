//! Inverted dropout.
//!
//! During training each unit is zeroed independently with probability `rate`
//! and the survivors are scaled by `1 / (1 - rate)`, so the layer's expected
//! output is unchanged and inference needs no rescaling. At inference time
//! dropout is a no-op.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;

/// Checks that a dropout rate lies in `[0, 1)`.
pub fn validate_rate<T: Scalar>(rate: T) -> Result<()> {
    if rate >= T::zero() && rate < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )))
    }
}

/// Applies inverted dropout to one vector.
///
/// Returns the masked output together with the mask itself (entries are `0`
/// or `1 / (1 - rate)`); the same mask must be replayed on the gradient in
/// the backward pass. With `training == false` the input is returned
/// unchanged and the mask is all ones.
///
/// Mask randomness is always drawn as `f64`, one draw per element in index
/// order, so the kept/dropped pattern for a given RNG state is identical for
/// every scalar type.
pub fn dropout_forward<T: Scalar, R: Rng>(
    input: ArrayView1<'_, T>,
    rate: T,
    training: bool,
    rng: &mut R,
) -> Result<(Array1<T>, Array1<T>)> {
    validate_rate(rate)?;
    if !training || rate == T::zero() {
        return Ok((input.to_owned(), Array1::ones(input.len())));
    }
    let mask = sample_mask((1, input.len()), rate, rng);
    let mask = mask
        .into_shape_with_order(input.len())
        .expect("row reshape");
    let output = &input * &mask;
    Ok((output, mask))
}

/// Samples an inverted-dropout mask of the given shape in row-major order.
///
/// The caller is responsible for `rate` being in `[0, 1)`.
pub(crate) fn sample_mask<T: Scalar, R: Rng>(
    shape: (usize, usize),
    rate: T,
    rng: &mut R,
) -> Array2<T> {
    let keep_scale = T::one() / (T::one() - rate);
    let rate_f64 = rate.to_f64_lossy();
    Array2::from_shape_simple_fn(shape, || {
        if rng.random::<f64>() < rate_f64 {
            T::zero()
        } else {
            keep_scale
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rate_is_identity_with_unit_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = array![1.0, -2.0, 3.0];
        let (y, m) = dropout_forward(x.view(), 0.0, true, &mut rng).unwrap();
        assert_eq!(y, x);
        assert_eq!(m, array![1.0, 1.0, 1.0]);
    }

    #[test]
    fn inference_mode_passes_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = array![1.0, -2.0, 3.0];
        let (y, m) = dropout_forward(x.view(), 0.9, false, &mut rng).unwrap();
        assert_eq!(y, x);
        assert_eq!(m, array![1.0, 1.0, 1.0]);
    }

    #[test]
    fn rates_outside_unit_interval_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = array![1.0, 2.0];
        assert!(dropout_forward(x.view(), 1.0, true, &mut rng).is_err());
        assert!(dropout_forward(x.view(), 1.5, true, &mut rng).is_err());
        assert!(dropout_forward(x.view(), -0.1, true, &mut rng).is_err());
    }

    #[test]
    fn surviving_entries_are_scaled_and_mask_matches_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = Array1::from_elem(1000, 2.0f64);
        let (y, m) = dropout_forward(x.view(), 0.25, true, &mut rng).unwrap();
        let scale = 1.0 / 0.75;
        for (&yi, &mi) in y.iter().zip(m.iter()) {
            assert!(mi == 0.0 || (mi - scale).abs() < 1e-15);
            assert_eq!(yi, 2.0 * mi);
        }
    }

    #[test]
    fn drop_fraction_and_expectation_converge() {
        // 10^5 draws at rate 0.5: the dropped fraction lands within +-0.01
        // and the scaled mean stays within 1% of the input mean.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let x = Array1::from_elem(n, 1.0);
        let (y, m) = dropout_forward(x.view(), 0.5, true, &mut rng).unwrap();
        let dropped = m.iter().filter(|&&mi| mi == 0.0).count() as f64 / n as f64;
        assert!((dropped - 0.5).abs() < 0.01, "dropped fraction {dropped}");
        let mean = y.sum() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "scaled mean {mean}");
    }

    #[test]
    fn mask_pattern_is_identical_for_f32_and_f64() {
        let shape = (4, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m64 = sample_mask::<f64, _>(shape, 0.3, &mut rng);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m32 = sample_mask::<f32, _>(shape, 0.3, &mut rng);
        for (a, b) in m64.iter().zip(m32.iter()) {
            assert_eq!(*a == 0.0, *b == 0.0);
        }
    }
}
