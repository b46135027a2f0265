//! Dense parameter vectors and the per-iteration gradient batch.

use std::ops::Index;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A dense d-dimensional vector holding model weights or a gradient.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector<T>(Vec<T>);

impl<T: Scalar> Vector<T> {
    pub fn new(values: Vec<T>) -> Self {
        Vector(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![T::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    /// True when no entry is NaN or infinite.
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn l2_norm(&self) -> T {
        l2_norm(self)
    }

    pub fn scaled(&self, a: T) -> Self {
        Vector(self.0.iter().map(|&v| a * v).collect())
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            })
        }
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: Scalar> FromIterator<T> for Vector<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Vector(iter.into_iter().collect())
    }
}

impl<T: Scalar> From<Vec<T>> for Vector<T> {
    fn from(values: Vec<T>) -> Self {
        Vector(values)
    }
}

/// Returns `a * x + y`.
pub fn vec_axpy<T: Scalar>(a: T, x: &Vector<T>, y: &Vector<T>) -> Result<Vector<T>> {
    x.check_dim(y.dim())?;
    Ok(x.iter().zip(y.iter()).map(|(&xi, &yi)| a * xi + yi).collect())
}

pub fn l2_norm<T: Scalar>(x: &Vector<T>) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}

pub fn dot<T: Scalar>(x: &Vector<T>, y: &Vector<T>) -> Result<T> {
    x.check_dim(y.dim())?;
    Ok(x.iter().zip(y.iter()).map(|(&a, &b)| a * b).sum())
}

/// Squared Euclidean distance. Callers guarantee equal dimensions.
pub(crate) fn squared_distance<T: Scalar>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let diff = a - b;
            diff * diff
        })
        .sum()
}

/// Arithmetic mean of equally sized vectors, summed in the given order.
pub fn mean_of<'a, T, I>(vectors: I) -> Result<Vector<T>>
where
    T: Scalar,
    I: IntoIterator<Item = &'a Vector<T>>,
{
    let mut iter = vectors.into_iter();
    let first = iter.next().ok_or(Error::Empty("mean of zero vectors"))?;
    let mut acc = first.as_slice().to_vec();
    let mut count = 1usize;
    for v in iter {
        v.check_dim(acc.len())?;
        for (a, &b) in acc.iter_mut().zip(v.iter()) {
            *a += b;
        }
        count += 1;
    }
    let n = T::of_usize(count);
    for a in &mut acc {
        *a /= n;
    }
    Ok(Vector(acc))
}

/// The m gradients received by the parameter server in one iteration,
/// each tagged with the sending worker's id.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBatch<T> {
    ids: Vec<usize>,
    gradients: Vec<Vector<T>>,
    dim: usize,
}

impl<T: Scalar> GradientBatch<T> {
    /// Builds a batch from `(worker_id, gradient)` pairs. Worker ids must be a
    /// permutation of `0..m` and all gradients must share one dimension.
    pub fn new(entries: Vec<(usize, Vector<T>)>) -> Result<Self> {
        let m = entries.len();
        if m == 0 {
            return Err(Error::Empty("gradient batch"));
        }
        let dim = entries[0].1.dim();
        let mut seen = vec![false; m];
        let mut ids = Vec::with_capacity(m);
        let mut gradients = Vec::with_capacity(m);
        for (id, g) in entries {
            if id >= m || seen[id] {
                return Err(Error::InvalidBatch(format!(
                    "worker ids must be a permutation of 0..{m}; got {id} (duplicate or out of range)"
                )));
            }
            seen[id] = true;
            g.check_dim(dim)?;
            ids.push(id);
            gradients.push(g);
        }
        Ok(GradientBatch { ids, gradients, dim })
    }

    /// Batch whose i-th gradient comes from worker i.
    pub fn from_vectors(gradients: Vec<Vector<T>>) -> Result<Self> {
        Self::new(gradients.into_iter().enumerate().collect())
    }

    pub fn m(&self) -> usize {
        self.gradients.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn gradients(&self) -> &[Vector<T>] {
        &self.gradients
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Vector<T>)> {
        self.ids.iter().copied().zip(self.gradients.iter())
    }

    /// The gradient sent by worker `id`.
    pub fn by_worker(&self, id: usize) -> Option<&Vector<T>> {
        self.ids
            .iter()
            .position(|&i| i == id)
            .map(|pos| &self.gradients[pos])
    }

    /// Same batch with entries reordered by `order` (positions into this batch).
    pub fn permuted(&self, order: &[usize]) -> Self {
        GradientBatch {
            ids: order.iter().map(|&p| self.ids[p]).collect(),
            gradients: order.iter().map(|&p| self.gradients[p].clone()).collect(),
            dim: self.dim,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[f64]) -> Vector<f64> {
        Vector::new(values.to_vec())
    }

    #[test]
    fn axpy_sgd_step() {
        let out = vec_axpy(-0.1, &v(&[0.5, -0.5]), &v(&[1.0, 1.0])).unwrap();
        assert_eq!(out, v(&[0.95, 1.05]));
    }

    #[test]
    fn axpy_zero_scale_and_unit_scale() {
        assert_eq!(
            vec_axpy(0.0, &v(&[7.0, -9.0]), &v(&[2.0, 3.0])).unwrap(),
            v(&[2.0, 3.0])
        );
        assert_eq!(
            vec_axpy(1.0, &v(&[1.0, 2.0, 3.0]), &Vector::zeros(3)).unwrap(),
            v(&[1.0, 2.0, 3.0])
        );
    }

    #[test]
    fn axpy_rejects_mismatched_dims() {
        let err = vec_axpy(1.0, &v(&[1.0]), &v(&[1.0, 2.0])).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                found: 1
            }
        ));
    }

    #[test]
    fn norms() {
        assert_eq!(l2_norm(&v(&[3.0, 4.0])), 5.0);
        assert_eq!(l2_norm(&Vector::<f64>::zeros(17)), 0.0);
        assert_eq!(l2_norm(&v(&[1.0, 1.0, 1.0, 1.0])), 2.0);
        assert_eq!(l2_norm(&Vector::new(vec![3.0f32, 4.0])), 5.0f32);
    }

    #[test]
    fn batch_rejects_bad_ids_and_dims() {
        assert!(GradientBatch::new(vec![(0, v(&[1.0])), (0, v(&[2.0]))]).is_err());
        assert!(GradientBatch::new(vec![(0, v(&[1.0])), (2, v(&[2.0]))]).is_err());
        assert!(GradientBatch::new(vec![(0, v(&[1.0])), (1, v(&[2.0, 3.0]))]).is_err());
        assert!(GradientBatch::<f64>::new(vec![]).is_err());
        let b = GradientBatch::new(vec![(1, v(&[1.0])), (0, v(&[2.0]))]).unwrap();
        assert_eq!(b.by_worker(0), Some(&v(&[2.0])));
    }
}
