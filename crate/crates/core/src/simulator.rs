//! Synchronous parameter-server training loop.
//!
//! Each iteration: every worker receives `w_k`; honest and label-flipping
//! workers draw a mini-batch gradient, Gaussian attackers draw noise; once
//! all of those are in, omniscient attackers compute their shared vector from
//! the honest gradients. The aggregator sees only the resulting batch, the
//! server steps `w_{k+1} = w_k - eta_k * aggregate`, and metrics are
//! recorded. Worker computations run on the rayon pool; each worker owns its
//! random stream and results are collected in worker-id order, so output is
//! identical for any thread count.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::aggregators::{Aggregator, Rule};
use crate::attacks::{flip_labels, gaussian_attack, omniscient_attack, Attack, WorkerRoster};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::schedule::StepSchedule;
use crate::tasks::{accuracy, full_gradient, loss, Dataset, GradientOracle, TaskSpec};
use crate::vector::{vec_axpy, GradientBatch, Vector};

/// What a worker's random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Data = 0,
    Attack = 1,
}

/// Stream for `(master_seed, worker_id, purpose)`: key `master_seed`,
/// stream id `2 * worker_id + purpose`. Injective for ids below 2^63; this
/// mapping is part of the reproducibility contract and must not change.
pub fn seed_worker(master_seed: u64, worker_id: usize, purpose: Purpose) -> RngStream {
    RngStream::new(master_seed, ((worker_id as u64) << 1) | purpose as u64)
}

/// Radius of the region `||grad F(w)|| <= (3 + 2 gamma + eps) sqrt(d) sigma`
/// that LICM-SGD is expected to settle into. `sigma_hat` is a measured
/// per-coordinate gradient-noise std.
pub fn flat_region_radius(gamma: f64, dim: usize, sigma_hat: f64, eps: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma >= 1.0) {
        return Err(Error::param("gamma", format!("{gamma} must be >= 1")));
    }
    if dim == 0 {
        return Err(Error::param("dim", "must be at least 1"));
    }
    if !(sigma_hat.is_finite() && sigma_hat >= 0.0) {
        return Err(Error::param("sigma_hat", format!("{sigma_hat} must be non-negative")));
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::param("eps", format!("{eps} must be non-negative")));
    }
    Ok((3.0 + 2.0 * gamma + eps) * (dim as f64).sqrt() * sigma_hat)
}

/// Pooled per-coordinate standard deviation of a set of gradients around
/// their mean (n - 1 denominator). Zero for fewer than two gradients.
pub fn gradient_noise_std<T: Scalar>(gradients: &[Vector<T>]) -> f64 {
    let n = gradients.len();
    if n < 2 {
        return 0.0;
    }
    let d = gradients[0].dim();
    let mut total = 0.0;
    for j in 0..d {
        let mean = gradients.iter().map(|g| g[j].to_f64_lossy()).sum::<f64>() / n as f64;
        total += gradients
            .iter()
            .map(|g| (g[j].to_f64_lossy() - mean).powi(2))
            .sum::<f64>();
    }
    (total / (d * (n - 1)) as f64).sqrt()
}

#[derive(Debug, Clone)]
pub struct RunConfig<T> {
    pub task: TaskSpec<T>,
    /// Held-out set for accuracy (softmax regression only).
    pub eval: Option<Arc<Dataset<T>>>,
    pub roster: WorkerRoster,
    pub rule: Rule,
    pub schedule: StepSchedule,
    pub iterations: usize,
    pub eval_every: usize,
    pub master_seed: u64,
    /// Starting point; zeros when absent.
    pub w0: Option<Vector<T>>,
    /// Record wall-clock aggregation time. Off by default because timings
    /// break byte-for-byte reproducibility of the metrics.
    pub record_timing: bool,
}

impl<T: Scalar> RunConfig<T> {
    pub fn new(task: TaskSpec<T>, roster: WorkerRoster, rule: Rule, schedule: StepSchedule, iterations: usize) -> Self {
        RunConfig {
            task,
            eval: None,
            roster,
            rule,
            schedule,
            iterations,
            eval_every: 1,
            master_seed: 0,
            w0: None,
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::param("iterations", "must be positive"));
        }
        if self.eval_every == 0 {
            return Err(Error::param("eval_every", "must be positive"));
        }
        self.rule.validate(self.roster.m())?;
        if let Some(w0) = &self.w0 {
            w0.check_dim(self.task.dim())?;
            if !w0.is_finite() {
                return Err(Error::param("w0", "must be finite"));
            }
        }
        match (&self.task, self.roster.attack()) {
            (TaskSpec::Quadratic(_), Some(Attack::LabelFlip)) => {
                return Err(Error::param("attack", "label flipping needs a labeled dataset"));
            }
            (TaskSpec::Mlr(m), Some(Attack::LabelFlip)) if m.data().classes() != 10 => {
                return Err(Error::param("attack", "label flipping needs 10 classes"));
            }
            _ => {}
        }
        if let Some(eval) = &self.eval {
            let Some(m) = self.task.as_mlr() else {
                return Err(Error::param("eval", "an evaluation set needs the softmax-regression task"));
            };
            if eval.feature_dim() != m.data().feature_dim() || eval.classes() > m.data().classes() {
                return Err(Error::param("eval", "evaluation set shape differs from the training set"));
            }
        }
        Ok(())
    }
}

/// One line of run output. Evaluation fields are filled every `eval_every`
/// iterations and on the final iterate; selection fields only for LICM.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsRow {
    pub k: usize,
    pub loss: Option<f64>,
    pub grad_norm: Option<f64>,
    pub accuracy: Option<f64>,
    pub selected_count: Option<usize>,
    pub selected_benign: Option<usize>,
    pub selected_byzantine: Option<usize>,
    pub agg_time_ns: Option<u64>,
    /// Pooled noise std of the honest gradients at `w_k`. Instrumentation for
    /// analysis only; not part of the CSV schema.
    pub sigma_hat: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult<T> {
    /// One row per executed iteration, plus a row for the final iterate when
    /// the run completed.
    pub rows: Vec<MetricsRow>,
    pub final_w: Vector<T>,
    pub config_echo: RunConfig<T>,
    /// Iteration whose iterate first became non-finite.
    pub diverged_at: Option<usize>,
}

impl<T> RunResult<T> {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    pub fn last_grad_norm(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.grad_norm)
    }
}

enum Role<T> {
    Honest(GradientOracle<T>),
    LabelFlip(GradientOracle<T>),
    Gaussian { std: f64, rng: RngStream },
    Omniscient,
}

pub(crate) struct Worker<T> {
    id: usize,
    role: Role<T>,
}

impl<T: Scalar> Worker<T> {
    /// Everything except the omniscient attack, which waits for the barrier.
    fn first_phase(&mut self, w: &Vector<T>) -> Result<Option<Vector<T>>> {
        match &mut self.role {
            Role::Honest(oracle) | Role::LabelFlip(oracle) => oracle.stochastic_gradient(w).map(Some),
            Role::Gaussian { std, rng } => gaussian_attack(w.dim(), *std, rng).map(Some),
            Role::Omniscient => Ok(None),
        }
    }

    fn is_honest(&self) -> bool {
        matches!(self.role, Role::Honest(_))
    }
}

pub(crate) fn build_workers<T: Scalar>(config: &RunConfig<T>) -> Result<Vec<Worker<T>>> {
    let roster = &config.roster;
    let flipped_task = match (roster.attack(), &config.task) {
        (Some(Attack::LabelFlip), TaskSpec::Mlr(m)) => {
            let flipped = Arc::new(flip_labels(m.data())?);
            Some(TaskSpec::Mlr(m.with_data(flipped)?))
        }
        _ => None,
    };
    (0..roster.m())
        .map(|id| {
            let data_rng = seed_worker(config.master_seed, id, Purpose::Data);
            let role = if !roster.is_byzantine(id) {
                Role::Honest(GradientOracle::new(config.task.clone(), data_rng))
            } else {
                match roster.attack().expect("Byzantine workers imply an attack") {
                    Attack::Gaussian { std } => Role::Gaussian {
                        std,
                        rng: seed_worker(config.master_seed, id, Purpose::Attack),
                    },
                    Attack::LabelFlip => Role::LabelFlip(GradientOracle::new(
                        flipped_task.clone().expect("validated label-flip task"),
                        data_rng,
                    )),
                    Attack::Omniscient { .. } => Role::Omniscient,
                }
            };
            Ok(Worker { id, role })
        })
        .collect()
}

/// All m gradients for iterate `w`, indexed by worker id.
pub(crate) fn collect_gradients<T: Scalar>(
    workers: &mut [Worker<T>],
    w: &Vector<T>,
    attack: Option<Attack>,
) -> Result<Vec<Vector<T>>> {
    let first: Vec<Option<Vector<T>>> = workers
        .par_iter_mut()
        .map(|worker| worker.first_phase(w))
        .collect::<Result<_>>()?;

    // barrier: omniscient attackers need every honest gradient
    let crafted = match attack {
        Some(Attack::Omniscient { factor }) => {
            let honest: Vec<Vector<T>> = workers
                .iter()
                .filter(|wk| wk.is_honest())
                .map(|wk| first[wk.id].clone().expect("honest workers always send"))
                .collect();
            Some(omniscient_attack(&honest, T::of(factor))?)
        }
        _ => None,
    };

    Ok(first
        .into_iter()
        .map(|g| g.unwrap_or_else(|| crafted.clone().expect("omniscient vector computed")))
        .collect())
}

/// Executes the configured run. Divergence (a non-finite iterate) ends the
/// run early and is reported in the result rather than as an error.
pub fn run<T: Scalar>(config: &RunConfig<T>) -> Result<RunResult<T>> {
    config.validate()?;
    let dim = config.task.dim();
    let roster = &config.roster;
    let mut workers = build_workers(config)?;
    let mut aggregator = Aggregator::<T>::new(config.rule)?;
    let instrument_selection = matches!(config.rule, Rule::Licm { .. });

    let mut w = config.w0.clone().unwrap_or_else(|| Vector::zeros(dim));
    let mut rows = Vec::with_capacity(config.iterations + 1);
    let mut diverged_at = None;

    for k in 0..config.iterations {
        let mut row = MetricsRow {
            k,
            ..MetricsRow::default()
        };
        let evaluate = k % config.eval_every == 0;
        if evaluate {
            evaluate_into(&mut row, config, &w)?;
        }

        let gradients = collect_gradients(&mut workers, &w, roster.attack())?;
        if evaluate {
            let honest: Vec<Vector<T>> = (0..roster.m())
                .filter(|&i| !roster.is_byzantine(i))
                .map(|i| gradients[i].clone())
                .collect();
            row.sigma_hat = Some(gradient_noise_std(&honest));
        }
        let batch = GradientBatch::from_vectors(gradients)?;

        let started = Instant::now();
        let result = aggregator.aggregate(&batch)?;
        if config.record_timing {
            row.agg_time_ns = Some(started.elapsed().as_nanos() as u64);
        }

        if instrument_selection {
            let byzantine = result
                .selected_ids
                .iter()
                .filter(|&&id| roster.is_byzantine(id))
                .count();
            row.selected_count = Some(result.selected_ids.len());
            row.selected_byzantine = Some(byzantine);
            row.selected_benign = Some(result.selected_ids.len() - byzantine);
        }

        let eta = T::of(config.schedule.step_size(k));
        let next = vec_axpy(-eta, &result.aggregate, &w)?;
        rows.push(row);
        w = next;
        if !w.is_finite() {
            diverged_at = Some(k + 1);
            break;
        }
    }

    if diverged_at.is_none() {
        let mut row = MetricsRow {
            k: config.iterations,
            ..MetricsRow::default()
        };
        evaluate_into(&mut row, config, &w)?;
        rows.push(row);
    }

    Ok(RunResult {
        rows,
        final_w: w,
        config_echo: config.clone(),
        diverged_at,
    })
}

fn evaluate_into<T: Scalar>(row: &mut MetricsRow, config: &RunConfig<T>, w: &Vector<T>) -> Result<()> {
    row.loss = Some(loss(&config.task, w)?.to_f64_lossy());
    row.grad_norm = Some(full_gradient(&config.task, w)?.l2_norm().to_f64_lossy());
    if let (Some(eval), Some(m)) = (&config.eval, config.task.as_mlr()) {
        row.accuracy = Some(accuracy(m, w, eval)?);
    }
    Ok(())
}
