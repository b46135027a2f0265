//! Multi-class logistic (softmax) regression.
//!
//! Parameters are laid out class by class: for class `c` the block
//! `[c * (f + 1), (c + 1) * (f + 1))` holds `f` feature weights followed by
//! the class bias, so `d = C * (f + 1)`.

use crate::scalar::Scalar;
use crate::tasks::Dataset;

pub fn param_dim(feature_dim: usize, classes: usize) -> usize {
    classes * (feature_dim + 1)
}

/// Reusable buffers for per-sample work.
pub(crate) struct Scratch<T> {
    nonzero: Vec<(usize, T)>,
    logits: Vec<T>,
}

impl<T: Scalar> Scratch<T> {
    pub(crate) fn new(classes: usize) -> Self {
        Scratch {
            nonzero: Vec::new(),
            logits: vec![T::zero(); classes],
        }
    }

    /// Fills `logits` for sample `x`. Zero features are skipped, which matters
    /// for sparse inputs such as MNIST digits.
    fn forward(&mut self, w: &[T], x: &[T], classes: usize) {
        let f = x.len();
        self.nonzero.clear();
        self.nonzero
            .extend(x.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(j, &v)| (j, v)));
        for c in 0..classes {
            let block = &w[c * (f + 1)..(c + 1) * (f + 1)];
            let mut z = block[f];
            for &(j, v) in &self.nonzero {
                z += block[j] * v;
            }
            self.logits[c] = z;
        }
    }

    /// Turns `logits` into probabilities in place and returns log-sum-exp.
    fn softmax(&mut self) -> T {
        let max = self
            .logits
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for z in &mut self.logits {
            *z = (*z - max).exp();
            total += *z;
        }
        for p in &mut self.logits {
            *p /= total;
        }
        max + total.ln()
    }
}

/// Adds the unregularized cross-entropy gradient of sample `i` into `grad`.
pub(crate) fn accumulate_sample<T: Scalar>(
    w: &[T],
    data: &Dataset<T>,
    i: usize,
    scratch: &mut Scratch<T>,
    grad: &mut [T],
) {
    let f = data.feature_dim();
    let classes = data.classes();
    scratch.forward(w, data.row(i), classes);
    scratch.softmax();
    let label = data.label(i);
    for c in 0..classes {
        let mut coef = scratch.logits[c];
        if c == label {
            coef -= T::one();
        }
        if coef.is_zero() {
            continue;
        }
        let block = &mut grad[c * (f + 1)..(c + 1) * (f + 1)];
        for &(j, v) in &scratch.nonzero {
            block[j] += coef * v;
        }
        block[f] += coef;
    }
}

/// Mean cross-entropy gradient over `indices` plus `l2_reg * w`.
pub(crate) fn gradient_over<T, I>(w: &[T], data: &Dataset<T>, l2_reg: T, indices: I) -> Vec<T>
where
    T: Scalar,
    I: IntoIterator<Item = usize>,
{
    let mut grad = vec![T::zero(); w.len()];
    let mut scratch = Scratch::new(data.classes());
    let mut count = 0usize;
    for i in indices {
        accumulate_sample(w, data, i, &mut scratch, &mut grad);
        count += 1;
    }
    let n = T::of_usize(count.max(1));
    for (g, &wi) in grad.iter_mut().zip(w) {
        *g = *g / n + l2_reg * wi;
    }
    grad
}

/// Mean cross-entropy over the whole dataset plus `(l2_reg / 2) * ||w||^2`.
pub(crate) fn loss<T: Scalar>(w: &[T], data: &Dataset<T>, l2_reg: T) -> T {
    let mut scratch = Scratch::new(data.classes());
    let mut total = T::zero();
    for i in 0..data.len() {
        scratch.forward(w, data.row(i), data.classes());
        let label_logit = scratch.logits[data.label(i)];
        let lse = scratch.softmax();
        total += lse - label_logit;
    }
    let reg = if l2_reg.is_zero() {
        T::zero()
    } else {
        l2_reg * w.iter().map(|&v| v * v).sum::<T>() / T::of(2.0)
    };
    total / T::of_usize(data.len()) + reg
}

/// Predicted class: the largest logit, ties resolved toward the lowest index.
pub(crate) fn predict<T: Scalar>(w: &[T], x: &[T], classes: usize, scratch: &mut Scratch<T>) -> usize {
    scratch.forward(w, x, classes);
    let mut best = 0;
    for c in 1..classes {
        if scratch.logits[c] > scratch.logits[best] {
            best = c;
        }
    }
    best
}
