//! Lipschitz-inspired coordinate-wise median screening.
//!
//! Each iteration takes the coordinate-wise median `u_k` of the received
//! gradients and keeps exactly those gradients `g_i` with
//!
//! ```text
//! |g_i[j] - u_{k-1}[j]| <= gamma * |u_k[j] - u_{k-1}[j]| + delta   for every j
//! ```
//!
//! A benign gradient moves with the true gradient, whose change between
//! iterations is bounded by its Lipschitz constant, so it stays inside a band
//! proportional to how far the median moved. The aggregate is the mean of the
//! kept gradients. The rule never needs the number of Byzantine workers and
//! costs O(m d) per iteration.
//!
//! On the first iteration (no previous median) the aggregate is `u_0` itself.
//! If nothing passes the screen, the aggregate falls back to `u_k`.

use crate::aggregators::mean::worker_order;
use crate::aggregators::median::coormed;
use crate::aggregators::AggregationResult;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vector::{mean_of, GradientBatch, Vector};

/// Absolute slack added to the right-hand side of the screen, so a median
/// that did not move (common in floating point) does not reject everything
/// over rounding noise.
pub const DEFAULT_DELTA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LicmState<T> {
    prev_median: Option<Vector<T>>,
    gamma: T,
    delta: T,
}

impl<T: Scalar> LicmState<T> {
    pub fn new(gamma: T, delta: T) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= T::one()) {
            return Err(Error::param("gamma", format!("{gamma} must be a finite value >= 1")));
        }
        if !(delta.is_finite() && delta >= T::zero()) {
            return Err(Error::param("delta", format!("{delta} must be non-negative")));
        }
        Ok(LicmState {
            prev_median: None,
            gamma,
            delta,
        })
    }

    pub fn with_default_delta(gamma: T) -> Result<Self> {
        Self::new(gamma, T::of(DEFAULT_DELTA))
    }

    /// State as it would be after an iteration whose median was `prev_median`.
    pub fn with_prev_median(mut self, prev_median: Vector<T>) -> Self {
        self.prev_median = Some(prev_median);
        self
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn prev_median(&self) -> Option<&Vector<T>> {
        self.prev_median.as_ref()
    }

    /// Runs one aggregation and advances the state in place.
    pub fn step(&mut self, batch: &GradientBatch<T>) -> Result<AggregationResult<T>> {
        let (result, next) = licm_aggregate(batch, self)?;
        *self = next;
        Ok(result)
    }
}

/// Worker ids (ascending) whose gradients pass the screen against `median`
/// (this iteration's `u_k`) and the state's previous median.
pub fn licm_select<T: Scalar>(
    batch: &GradientBatch<T>,
    median: &Vector<T>,
    state: &LicmState<T>,
) -> Result<Vec<usize>> {
    let prev = state
        .prev_median
        .as_ref()
        .ok_or(Error::Empty("screening needs the previous iteration's median"))?;
    prev.check_dim(batch.dim())?;
    median.check_dim(batch.dim())?;

    let radius: Vec<T> = median
        .iter()
        .zip(prev.iter())
        .map(|(&u, &p)| state.gamma * (u - p).abs() + state.delta)
        .collect();

    let mut selected: Vec<usize> = batch
        .iter()
        .filter(|(_, g)| {
            g.iter()
                .zip(prev.iter())
                .zip(&radius)
                .all(|((&gj, &pj), &r)| (gj - pj).abs() <= r)
        })
        .map(|(id, _)| id)
        .collect();
    selected.sort_unstable();
    Ok(selected)
}

/// One LICM aggregation. Returns the result and the successor state, whose
/// previous median is this iteration's `u_k`.
pub fn licm_aggregate<T: Scalar>(
    batch: &GradientBatch<T>,
    state: &LicmState<T>,
) -> Result<(AggregationResult<T>, LicmState<T>)> {
    let median = coormed(batch);
    let result = match state.prev_median {
        None => AggregationResult {
            aggregate: median.clone(),
            selected_ids: {
                let mut all = batch.ids().to_vec();
                all.sort_unstable();
                all
            },
            median: Some(median.clone()),
            fallback: false,
        },
        Some(_) => {
            let selected = licm_select(batch, &median, state)?;
            if selected.is_empty() {
                AggregationResult {
                    aggregate: median.clone(),
                    selected_ids: selected,
                    median: Some(median.clone()),
                    fallback: true,
                }
            } else {
                let gradients = batch.gradients();
                let ids = batch.ids();
                let kept = worker_order(batch)
                    .into_iter()
                    .filter(|&p| selected.binary_search(&ids[p]).is_ok())
                    .map(|p| &gradients[p]);
                AggregationResult {
                    aggregate: mean_of(kept)?,
                    selected_ids: selected,
                    median: Some(median.clone()),
                    fallback: false,
                }
            }
        }
    };
    let next = LicmState {
        prev_median: Some(median),
        gamma: state.gamma,
        delta: state.delta,
    };
    Ok((result, next))
}
