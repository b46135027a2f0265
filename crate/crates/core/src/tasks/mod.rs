//! Training tasks: loss, exact and stochastic gradients, and dataset loading.
//!
//! Two tasks are supported. The quadratic task `F(w) = ||w - w*||^2 / 2` has a
//! known gradient and tunable Gaussian gradient noise, which makes it the
//! vehicle for convergence checks. The softmax-regression task trains a
//! linear classifier with per-class bias on a labeled dataset; mini-batches
//! are drawn i.i.d. with replacement.

mod dataset;
mod delimited;
mod idx;
pub(crate) mod mlr;

use std::sync::Arc;

pub use dataset::Dataset;
pub use delimited::load_csv;
pub use idx::{load_idx, write_idx, IMAGES_MAGIC, LABELS_MAGIC};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::vector::Vector;

/// Stream id reserved for drawing a synthetic quadratic optimum.
const OPTIMUM_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTask<T> {
    optimum: Vector<T>,
    noise_std: f64,
}

impl<T: Scalar> QuadraticTask<T> {
    pub fn new(optimum: Vector<T>, noise_std: f64) -> Result<Self> {
        if optimum.dim() == 0 {
            return Err(Error::param("optimum", "dimension must be at least 1"));
        }
        if !(noise_std.is_finite() && noise_std >= 0.0) {
            return Err(Error::param("noise_std", format!("{noise_std} must be non-negative")));
        }
        Ok(QuadraticTask { optimum, noise_std })
    }

    pub fn optimum(&self) -> &Vector<T> {
        &self.optimum
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }
}

#[derive(Debug, Clone)]
pub struct MlrTask<T> {
    data: Arc<Dataset<T>>,
    batch_size: usize,
    l2_reg: f64,
}

impl<T: Scalar> MlrTask<T> {
    pub fn new(data: Arc<Dataset<T>>, batch_size: usize, l2_reg: f64) -> Result<Self> {
        if data.classes() < 2 {
            return Err(Error::param("classes", "softmax regression needs at least 2 classes"));
        }
        if batch_size == 0 || batch_size > data.len() {
            return Err(Error::param(
                "batch_size",
                format!("{batch_size} must lie in [1, {}]", data.len()),
            ));
        }
        if !(l2_reg.is_finite() && l2_reg >= 0.0) {
            return Err(Error::param("l2_reg", format!("{l2_reg} must be non-negative")));
        }
        Ok(MlrTask {
            data,
            batch_size,
            l2_reg,
        })
    }

    pub fn data(&self) -> &Arc<Dataset<T>> {
        &self.data
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn l2_reg(&self) -> f64 {
        self.l2_reg
    }

    /// Same task on a different dataset (e.g. a label-flipped local view).
    pub fn with_data(&self, data: Arc<Dataset<T>>) -> Result<Self> {
        Self::new(data, self.batch_size, self.l2_reg)
    }

    /// Regularized mean gradient over an explicit list of sample indices.
    pub fn gradient_on(&self, w: &Vector<T>, indices: &[usize]) -> Result<Vector<T>> {
        w.check_dim(self.dim())?;
        Ok(mlr::gradient_over(w.as_slice(), &self.data, T::of(self.l2_reg), indices.iter().copied()).into())
    }

    fn dim(&self) -> usize {
        mlr::param_dim(self.data.feature_dim(), self.data.classes())
    }
}

#[derive(Debug, Clone)]
pub enum TaskSpec<T> {
    Quadratic(QuadraticTask<T>),
    Mlr(MlrTask<T>),
}

impl<T: Scalar> TaskSpec<T> {
    /// Parameter dimension d.
    pub fn dim(&self) -> usize {
        match self {
            TaskSpec::Quadratic(q) => q.optimum.dim(),
            TaskSpec::Mlr(m) => m.dim(),
        }
    }

    pub fn as_mlr(&self) -> Option<&MlrTask<T>> {
        match self {
            TaskSpec::Mlr(m) => Some(m),
            TaskSpec::Quadratic(_) => None,
        }
    }
}

/// Exact gradient: `w - w*` for the quadratic task, the full-dataset mean for softmax regression.
pub fn full_gradient<T: Scalar>(task: &TaskSpec<T>, w: &Vector<T>) -> Result<Vector<T>> {
    w.check_dim(task.dim())?;
    Ok(match task {
        TaskSpec::Quadratic(q) => w
            .iter()
            .zip(q.optimum.iter())
            .map(|(&wi, &oi)| wi - oi)
            .collect(),
        TaskSpec::Mlr(m) => {
            mlr::gradient_over(w.as_slice(), &m.data, T::of(m.l2_reg), 0..m.data.len()).into()
        }
    })
}

pub fn loss<T: Scalar>(task: &TaskSpec<T>, w: &Vector<T>) -> Result<T> {
    w.check_dim(task.dim())?;
    Ok(match task {
        TaskSpec::Quadratic(q) => {
            let sq: T = w
                .iter()
                .zip(q.optimum.iter())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            sq / T::of(2.0)
        }
        TaskSpec::Mlr(m) => mlr::loss(w.as_slice(), &m.data, T::of(m.l2_reg)),
    })
}

/// Fraction of `eval` samples whose largest logit is the true label
/// (ties go to the lowest class index).
pub fn accuracy<T: Scalar>(task: &MlrTask<T>, w: &Vector<T>, eval: &Dataset<T>) -> Result<f64> {
    w.check_dim(task.dim())?;
    if eval.feature_dim() != task.data.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: task.data.feature_dim(),
            found: eval.feature_dim(),
        });
    }
    if eval.classes() > task.data.classes() {
        return Err(Error::param(
            "eval",
            format!(
                "evaluation set has {} classes, model has {}",
                eval.classes(),
                task.data.classes()
            ),
        ));
    }
    let classes = task.data.classes();
    let mut scratch = mlr::Scratch::new(classes);
    let correct = (0..eval.len())
        .filter(|&i| mlr::predict(w.as_slice(), eval.row(i), classes, &mut scratch) == eval.label(i))
        .count();
    Ok(correct as f64 / eval.len() as f64)
}

/// Quadratic task whose optimum is uniform in `[-scale, scale]^d`, drawn from `seed`.
pub fn make_synthetic_quadratic<T: Scalar>(
    dim: usize,
    scale: f64,
    noise_std: f64,
    seed: u64,
) -> Result<TaskSpec<T>> {
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(Error::param("scale", format!("{scale} must be non-negative")));
    }
    let mut rng = RngStream::new(seed, OPTIMUM_STREAM);
    let optimum = (0..dim).map(|_| T::of(rng.uniform(-scale, scale))).collect();
    Ok(TaskSpec::Quadratic(QuadraticTask::new(optimum, noise_std)?))
}

/// A worker's stochastic gradient source: a task plus the worker's private stream.
#[derive(Debug, Clone)]
pub struct GradientOracle<T> {
    task: TaskSpec<T>,
    rng: RngStream,
}

impl<T: Scalar> GradientOracle<T> {
    pub fn new(task: TaskSpec<T>, rng: RngStream) -> Self {
        GradientOracle { task, rng }
    }

    pub fn task(&self) -> &TaskSpec<T> {
        &self.task
    }

    /// One unbiased gradient estimate at `w`.
    pub fn stochastic_gradient(&mut self, w: &Vector<T>) -> Result<Vector<T>> {
        w.check_dim(self.task.dim())?;
        match &self.task {
            TaskSpec::Quadratic(q) => {
                let std = q.noise_std;
                Ok(w.iter()
                    .zip(q.optimum.iter())
                    .map(|(&wi, &oi)| {
                        let noise = if std > 0.0 {
                            T::of(std * self.rng.standard_normal())
                        } else {
                            T::zero()
                        };
                        wi - oi + noise
                    })
                    .collect())
            }
            TaskSpec::Mlr(m) => {
                let n = m.data.len();
                let rng = &mut self.rng;
                let indices = (0..m.batch_size).map(|_| rng.index(n));
                Ok(mlr::gradient_over(w.as_slice(), &m.data, T::of(m.l2_reg), indices).into())
            }
        }
    }
}
