use crate::aggregators::median::cmp;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vector::{mean_of, GradientBatch, Vector};

/// Batch positions ordered by worker id. Sums run in this order so results do
/// not depend on the order in which gradients arrived.
pub(crate) fn worker_order<T: Scalar>(batch: &GradientBatch<T>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..batch.m()).collect();
    order.sort_by_key(|&p| batch.ids()[p]);
    order
}

pub fn mean<T: Scalar>(batch: &GradientBatch<T>) -> Vector<T> {
    let gradients = batch.gradients();
    mean_of(worker_order(batch).into_iter().map(|p| &gradients[p]))
        .expect("batches are nonempty and dimension-checked")
}

/// Per coordinate, drops the `trim` largest and `trim` smallest values and
/// averages the remaining `m - 2 * trim`.
pub fn trimmed_mean<T: Scalar>(batch: &GradientBatch<T>, trim: usize) -> Result<Vector<T>> {
    let m = batch.m();
    if 2 * trim >= m {
        return Err(Error::Precondition {
            rule: "trimmed mean",
            requirement: "2q < m",
            m,
            q: trim,
        });
    }
    let gradients = batch.gradients();
    let kept = T::of_usize(m - 2 * trim);
    let mut column = vec![T::zero(); m];
    Ok((0..batch.dim())
        .map(|j| {
            for (slot, g) in column.iter_mut().zip(gradients) {
                *slot = g[j];
            }
            column.sort_unstable_by(cmp);
            column[trim..m - trim].iter().copied().sum::<T>() / kept
        })
        .collect())
}
