use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vector::{GradientBatch, Vector};

pub(crate) fn cmp<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// Median of a scalar sample; the mean of the two middle order statistics when
/// the count is even.
pub fn median_1d<T: Scalar>(values: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(Error::Empty("median of an empty sample"));
    }
    let mut scratch = values.to_vec();
    Ok(median_in_place(&mut scratch))
}

/// Expected O(n) selection; reorders `values`.
pub(crate) fn median_in_place<T: Scalar>(values: &mut [T]) -> T {
    let n = values.len();
    let mid = n / 2;
    let (lower, &mut upper, _) = values.select_nth_unstable_by(mid, cmp);
    if n % 2 == 1 {
        upper
    } else {
        // everything left of `mid` is <= upper; its maximum is the lower middle
        let below = lower.iter().copied().fold(T::neg_infinity(), T::max);
        (below + upper) / T::of(2.0)
    }
}

/// Coordinate-wise median of the batch, O(m d) expected time.
pub fn coormed<T: Scalar>(batch: &GradientBatch<T>) -> Vector<T> {
    let gradients = batch.gradients();
    let mut column = vec![T::zero(); gradients.len()];
    (0..batch.dim())
        .map(|j| {
            for (slot, g) in column.iter_mut().zip(gradients) {
                *slot = g[j];
            }
            median_in_place(&mut column)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(rows: &[&[f64]]) -> GradientBatch<f64> {
        GradientBatch::from_vectors(rows.iter().map(|r| Vector::new(r.to_vec())).collect()).unwrap()
    }

    #[test]
    fn scalar_medians() {
        assert_eq!(median_1d(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median_1d(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(median_1d(&[5.0]).unwrap(), 5.0);
        assert_eq!(median_1d(&[4.0f32, 1.0]).unwrap(), 2.5f32);
        assert!(median_1d::<f64>(&[]).is_err());
    }

    #[test]
    fn even_count_with_duplicates() {
        assert_eq!(median_1d(&[2.0, 2.0, 2.0, 9.0]).unwrap(), 2.0);
        assert_eq!(median_1d(&[-1.0, 7.0, -1.0, 7.0]).unwrap(), 3.0);
    }

    #[test]
    fn coordinatewise() {
        assert_eq!(
            coormed(&batch(&[&[1.0, 10.0], &[2.0, 20.0], &[3.0, 30.0]])),
            Vector::new(vec![2.0, 20.0])
        );
        assert_eq!(
            coormed(&batch(&[&[1.0, 1.0], &[2.0, 2.0], &[1e9, -1e9]])),
            Vector::new(vec![2.0, 1.0])
        );
        assert_eq!(coormed(&batch(&[&[4.0, -4.0]])), Vector::new(vec![4.0, -4.0]));
    }
}
