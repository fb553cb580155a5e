//! Loss and accuracy metrics.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::{Array2, ArrayView1};

/// Mean squared error between two equal-length vectors:
/// `(1/N) * sum((pred - actual)^2)`.
pub fn mse_loss<T: Scalar>(pred: ArrayView1<'_, T>, actual: ArrayView1<'_, T>) -> Result<T> {
    if pred.len() != actual.len() {
        return Err(Error::ShapeMismatch {
            context: "mse_loss",
            expected: pred.len(),
            actual: actual.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidConfig("mse_loss over empty vectors".into()));
    }
    let mut acc = T::zero();
    for (&p, &a) in pred.iter().zip(actual.iter()) {
        let r = p - a;
        acc += r * r;
    }
    Ok(acc / T::from_f64_lossy(pred.len() as f64))
}

/// Mean squared error over a batch, averaged across **all** entries
/// (`batch * width`), i.e. the mean of the per-sample MSE values.
pub fn mse_loss_batch<T: Scalar>(pred: &Array2<T>, actual: &Array2<T>) -> Result<T> {
    if pred.dim() != actual.dim() {
        return Err(Error::ShapeMismatch {
            context: "mse_loss_batch",
            expected: pred.len(),
            actual: actual.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidConfig(
            "mse_loss_batch over empty batch".into(),
        ));
    }
    let mut acc = T::zero();
    for (&p, &a) in pred.iter().zip(actual.iter()) {
        let r = p - a;
        acc += r * r;
    }
    Ok(acc / T::from_f64_lossy(pred.len() as f64))
}

/// Fraction of entries whose thresholded values agree.
///
/// Both predictions and reference values are binarized at 0.5 (values equal
/// to the threshold count as 1, consistently with the bit decoder). Intended
/// for targets that are exact 0/1 bits; the result is in `[0, 1]`.
pub fn binary_accuracy<T: Scalar>(
    pred: ArrayView1<'_, T>,
    actual: ArrayView1<'_, T>,
) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(Error::ShapeMismatch {
            context: "binary_accuracy",
            expected: pred.len(),
            actual: actual.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidConfig(
            "binary_accuracy over empty vectors".into(),
        ));
    }
    let half = T::from_f64_lossy(0.5);
    let agree = pred
        .iter()
        .zip(actual.iter())
        .filter(|(&p, &a)| (p >= half) == (a >= half))
        .count();
    Ok(agree as f64 / pred.len() as f64)
}

/// [`binary_accuracy`] over every entry of a batch.
pub fn binary_accuracy_batch<T: Scalar>(pred: &Array2<T>, actual: &Array2<T>) -> Result<f64> {
    if pred.dim() != actual.dim() {
        return Err(Error::ShapeMismatch {
            context: "binary_accuracy_batch",
            expected: pred.len(),
            actual: actual.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidConfig(
            "binary_accuracy_batch over empty batch".into(),
        ));
    }
    let half = T::from_f64_lossy(0.5);
    let agree = pred
        .iter()
        .zip(actual.iter())
        .filter(|(&p, &a)| (p >= half) == (a >= half))
        .count();
    Ok(agree as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_loss_on_identical_vectors() {
        let v = array![0.2, 0.8, 0.5];
        assert_eq!(mse_loss(v.view(), v.view()).unwrap(), 0.0);
    }

    #[test]
    fn unit_residual_halves_over_two_entries() {
        let pred = array![1.0, 0.0];
        let actual = array![0.0, 0.0];
        assert_eq!(mse_loss(pred.view(), actual.view()).unwrap(), 0.5);
    }

    #[test]
    fn loss_matches_reference_loop() {
        let pred = array![0.1f64, 0.4, -0.3, 2.0, 0.0, 1.5, -1.1];
        let actual = array![0.0f64, 0.5, -0.2, 1.0, 0.1, 1.5, -1.0];
        let mut acc = 0.0;
        for i in 0..7 {
            acc += (pred[i] - actual[i]) * (pred[i] - actual[i]);
        }
        let expected = acc / 7.0;
        let got = mse_loss(pred.view(), actual.view()).unwrap();
        assert!((got - expected).abs() < 1e-14);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let a = array![1.0, 2.0];
        let b = array![1.0];
        assert!(mse_loss(a.view(), b.view()).is_err());
        assert!(binary_accuracy(a.view(), b.view()).is_err());
    }

    #[test]
    fn batch_loss_averages_over_all_entries() {
        let pred = array![[1.0, 0.0], [0.0, 0.0]];
        let actual = array![[0.0, 0.0], [0.0, 2.0]];
        // Residuals squared: 1, 0, 0, 4 -> mean 1.25.
        assert_eq!(mse_loss_batch(&pred, &actual).unwrap(), 1.25);
    }

    #[test]
    fn accuracy_counts_threshold_agreement() {
        let actual = array![1.0, 0.0, 1.0, 0.0];
        assert_eq!(
            binary_accuracy(array![0.9, 0.1, 0.8, 0.2].view(), actual.view()).unwrap(),
            1.0
        );
        assert_eq!(
            binary_accuracy(array![0.1, 0.9, 0.2, 0.8].view(), actual.view()).unwrap(),
            0.0
        );
        assert_eq!(
            binary_accuracy(array![0.9, 0.1, 0.2, 0.2].view(), actual.view()).unwrap(),
            0.75
        );
    }

    #[test]
    fn threshold_ties_count_as_one() {
        // 0.5 binarizes to 1 on both sides.
        let pred = array![0.5];
        assert_eq!(
            binary_accuracy(pred.view(), array![1.0].view()).unwrap(),
            1.0
        );
        assert_eq!(
            binary_accuracy(pred.view(), array![0.0].view()).unwrap(),
            0.0
        );
    }
}
