//! Executes expanded run grids.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use licm_core::{
    load_csv, load_idx, make_synthetic_quadratic, run, Config, Data, MlrTask, Outcome, Task, WorkerRoster,
};
use rayon::prelude::*;

use crate::experiment::{DataSource, RunSpec, TaskSettings};
use crate::output::{write_atomic, write_metrics_csv, RunSummary};

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

pub const CONFIG_FILE: &str = "config.exp";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Training and (optional) evaluation sets.
#[derive(Debug, Clone)]
pub struct Datasets {
    pub train: Arc<Data>,
    pub test: Option<Arc<Data>>,
}

type DataKey = (DataSource, Option<usize>, Option<usize>);

/// Datasets loaded once per distinct source and subset size.
#[derive(Debug, Default)]
pub struct DataCache {
    loaded: HashMap<DataKey, Datasets>,
}

impl DataCache {
    pub fn get(&mut self, task: &TaskSettings) -> Result<Option<Datasets>> {
        let TaskSettings::Mlr {
            source,
            train_limit,
            test_limit,
            ..
        } = task
        else {
            return Ok(None);
        };
        let key = (source.clone(), *train_limit, *test_limit);
        if let Some(d) = self.loaded.get(&key) {
            return Ok(Some(d.clone()));
        }
        let d = load_datasets(source, *train_limit, *test_limit)?;
        self.loaded.insert(key, d.clone());
        Ok(Some(d))
    }
}

/// Whether `dir` holds the four MNIST IDX files.
pub fn mnist_present(dir: &Path) -> bool {
    [TRAIN_IMAGES, TRAIN_LABELS, TEST_IMAGES, TEST_LABELS]
        .iter()
        .all(|f| dir.join(f).is_file())
}

pub fn load_datasets(source: &DataSource, train_limit: Option<usize>, test_limit: Option<usize>) -> Result<Datasets> {
    let (train, test) = match source {
        DataSource::Idx { dir } => {
            if !mnist_present(dir) {
                bail!(
                    "{} does not contain {TRAIN_IMAGES}, {TRAIN_LABELS}, {TEST_IMAGES} and {TEST_LABELS} \
                     (see the README for how to fetch MNIST)",
                    dir.display()
                );
            }
            let train = load_idx::<f64>(dir.join(TRAIN_IMAGES), dir.join(TRAIN_LABELS))?;
            let test = load_idx::<f64>(dir.join(TEST_IMAGES), dir.join(TEST_LABELS))?;
            (train, Some(test))
        }
        DataSource::Csv {
            train,
            test,
            label_column,
        } => {
            let tr = load_csv::<f64>(train, *label_column)?;
            let te = test.as_ref().map(|t| load_csv::<f64>(t, *label_column)).transpose()?;
            (tr, te)
        }
    };
    let train = match train_limit {
        Some(n) => train.truncated(n),
        None => train,
    };
    let test = test.map(|t| match test_limit {
        Some(n) => t.truncated(n),
        None => t,
    });
    // a subset may miss the top label; keep one output per class seen anywhere
    let classes = train.classes().max(test.as_ref().map_or(0, |t| t.classes()));
    let train = train.with_classes(classes)?;
    let test = test.map(|t| t.with_classes(classes)).transpose()?;
    Ok(Datasets {
        train: Arc::new(train),
        test: test.map(Arc::new),
    })
}

/// Builds the simulator configuration of one run.
pub fn build_config(spec: &RunSpec, data: Option<&Datasets>) -> Result<Config> {
    let (task, eval) = match &spec.task {
        TaskSettings::Quadratic {
            dim,
            optimum_scale,
            noise_std,
            task_seed,
        } => (make_synthetic_quadratic(*dim, *optimum_scale, *noise_std, *task_seed)?, None),
        TaskSettings::Mlr { batch_size, l2_reg, .. } => {
            let data = data.context("softmax regression needs a dataset")?;
            let task = Task::Mlr(MlrTask::new(data.train.clone(), *batch_size, *l2_reg)?);
            (task, data.test.clone())
        }
    };
    let roster = WorkerRoster::last_q(spec.workers, spec.byzantine, spec.attack)?;
    let mut config = Config::new(task, roster, spec.rule, spec.schedule, spec.iterations);
    config.eval = eval;
    config.eval_every = spec.eval_every;
    config.master_seed = spec.seed;
    config.record_timing = spec.record_timing;
    config.validate()?;
    Ok(config)
}

/// Runs one spec in memory, without touching the file system.
pub fn execute(spec: &RunSpec, data: Option<&Datasets>) -> Result<(Outcome, RunSummary)> {
    let config = build_config(spec, data)?;
    let started = Instant::now();
    let result = run(&config)?;
    let summary = RunSummary::new(spec.label(), &result, started.elapsed().as_secs_f64());
    Ok((result, summary))
}

/// A run counts as complete once its summary (written last) and metrics exist.
pub fn is_complete(spec: &RunSpec) -> bool {
    let dir = spec.run_dir();
    dir.join(METRICS_FILE).is_file() && dir.join(SUMMARY_FILE).is_file()
}

#[derive(Debug, Clone)]
pub enum GridEntry {
    Skipped { label: String },
    Finished(RunSummary),
}

/// Runs every incomplete spec (in parallel across runs) and writes its
/// config echo, metrics and summary. Completed runs are left untouched.
pub fn run_grid(specs: &[RunSpec], quiet: bool) -> Result<Vec<GridEntry>> {
    let mut cache = DataCache::default();
    let mut jobs = Vec::new();
    for spec in specs {
        if is_complete(spec) {
            jobs.push((spec, None, true));
        } else {
            jobs.push((spec, cache.get(&spec.task)?, false));
        }
    }
    jobs.par_iter()
        .map(|(spec, data, done)| {
            let label = spec.label();
            if *done {
                if !quiet {
                    eprintln!("skip {label} (already complete)");
                }
                return Ok(GridEntry::Skipped { label });
            }
            let dir = spec.run_dir();
            write_atomic(&dir.join(CONFIG_FILE), spec.echo().as_bytes())?;
            let (result, summary) = execute(spec, data.as_ref()).with_context(|| format!("run {label}"))?;
            write_metrics_csv(&result, &dir.join(METRICS_FILE))?;
            write_atomic(&dir.join(SUMMARY_FILE), summary.render().as_bytes())?;
            if !quiet {
                eprintln!("done {label} in {:.1}s", summary.wall_time_s);
            }
            Ok(GridEntry::Finished(summary))
        })
        .collect()
}
