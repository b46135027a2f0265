//! Aggregation timing sweeps over the number of workers.

use std::time::{Duration, Instant};

use anyhow::Result;
use licm_core::aggregators::DEFAULT_DELTA;
use licm_core::{Aggregator, Batch, GradientBatch, ParamVector, RngStream};

use crate::experiment::{AggregatorSpec, RuleKind};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPoint {
    pub rule: String,
    pub workers: usize,
    pub dim: usize,
    /// Fastest of the repetitions.
    pub best: Duration,
}

/// `m` standard-normal gradients of dimension `dim`.
pub fn random_batch(m: usize, dim: usize, rng: &mut RngStream) -> Batch {
    let rows: Vec<ParamVector> = (0..m).map(|_| ParamVector::new(rng.normal_vec(dim, 1.0))).collect();
    GradientBatch::from_vectors(rows).expect("nonempty batch of equal dimensions")
}

/// Minimum wall time of one aggregation over `reps` repetitions. q-based
/// rules without an explicit q use `m / 5`. LICM is timed in steady state:
/// its state is primed with one batch so the screen actually runs.
pub fn time_aggregator(agg: AggregatorSpec, m: usize, dim: usize, gamma: f64, reps: usize, seed: u64) -> Result<Duration> {
    let rule = agg.resolve(m / 5, gamma, DEFAULT_DELTA);
    rule.validate(m)?;
    let mut rng = RngStream::new(seed, m as u64);
    let mut aggregator = Aggregator::<f64>::new(rule)?;
    if agg.kind == RuleKind::Licm {
        aggregator.aggregate(&random_batch(m, dim, &mut rng))?;
    }
    let batch = random_batch(m, dim, &mut rng);
    let mut best = Duration::MAX;
    for _ in 0..reps.max(1) {
        let mut fresh = aggregator.clone();
        let started = Instant::now();
        let out = fresh.aggregate(&batch)?;
        best = best.min(started.elapsed());
        std::hint::black_box(out);
    }
    Ok(best)
}

pub fn bench_agg(
    aggregators: &[AggregatorSpec],
    workers: &[usize],
    dim: usize,
    gamma: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<BenchPoint>> {
    let mut points = Vec::new();
    for agg in aggregators {
        for &m in workers {
            let best = time_aggregator(*agg, m, dim, gamma, reps, seed)?;
            points.push(BenchPoint {
                rule: agg.resolve(m / 5, gamma, DEFAULT_DELTA).to_string(),
                workers: m,
                dim,
                best,
            });
        }
    }
    Ok(points)
}
