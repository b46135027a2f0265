use crate::error::{DataError, Result};
use crate::scalar::Scalar;

/// Labeled samples stored as a dense row-major `n x f` feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    features: Vec<T>,
    labels: Vec<usize>,
    feature_dim: usize,
    classes: usize,
}

impl<T: Scalar> Dataset<T> {
    /// Validates shapes, label range and finiteness. `classes` must cover every label.
    pub fn new(
        features: Vec<T>,
        labels: Vec<usize>,
        feature_dim: usize,
        classes: usize,
    ) -> Result<Self, DataError> {
        let n = labels.len();
        if n == 0 {
            return Err(DataError::Invalid("a dataset needs at least one sample".into()));
        }
        if feature_dim == 0 {
            return Err(DataError::Invalid("feature dimension must be positive".into()));
        }
        if features.len() != n * feature_dim {
            return Err(DataError::Invalid(format!(
                "{} feature values for {n} samples of dimension {feature_dim}",
                features.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(DataError::Invalid(format!(
                "label {bad} outside [0, {classes})"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Invalid("non-finite feature value".into()));
        }
        Ok(Dataset {
            features,
            labels,
            feature_dim,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[T] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Same features, new labels (validated against the class count).
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self, DataError> {
        if labels.len() != self.len() {
            return Err(DataError::Invalid(format!(
                "{} labels for {} samples",
                labels.len(),
                self.len()
            )));
        }
        Dataset::new(self.features.clone(), labels, self.feature_dim, self.classes)
    }

    /// The first `n` samples (all of them when `n >= len`).
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.clamp(1, self.len());
        Dataset {
            features: self.features[..n * self.feature_dim].to_vec(),
            labels: self.labels[..n].to_vec(),
            feature_dim: self.feature_dim,
            classes: self.classes,
        }
    }

    /// Overrides the class count, e.g. so a subset that happens to miss the
    /// highest label still has the full output layer.
    pub fn with_classes(mut self, classes: usize) -> Result<Self, DataError> {
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= classes) {
            return Err(DataError::Invalid(format!(
                "label {bad} outside [0, {classes})"
            )));
        }
        self.classes = classes;
        Ok(self)
    }
}
