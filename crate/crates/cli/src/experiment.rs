//! Experiment files: a flat `key = value` format that expands into a grid of runs.
//!
//! ```text
//! # comment
//! task = quadratic
//! workers = 16
//! byzantine = 0, 7            # list keys expand into a grid
//! aggregators = mean, krum(3), licm
//! ```
//!
//! Values may reference the environment as `${NAME}` or `${NAME:-default}`.
//! List-valued keys are `aggregators`, `byzantine`, `gamma`,
//! `omniscient_factor` and `seeds`; every combination becomes one run.
//! Axes that do not apply to a run (gamma for a non-LICM rule, the
//! omniscient factor without that attack) collapse.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use licm_core::attacks::{DEFAULT_GAUSSIAN_STD, DEFAULT_OMNISCIENT_FACTOR};
use licm_core::aggregators::DEFAULT_DELTA;
use licm_core::{Attack, Rule, StepSchedule};

const KEYS: &[&str] = &[
    "task",
    "dim",
    "optimum_scale",
    "noise_std",
    "task_seed",
    "data_dir",
    "train_csv",
    "test_csv",
    "label_column",
    "train_limit",
    "test_limit",
    "batch_size",
    "l2_reg",
    "workers",
    "byzantine",
    "attack",
    "omniscient_factor",
    "gaussian_std",
    "aggregators",
    "gamma",
    "delta",
    "schedule",
    "eta0",
    "tau",
    "power",
    "iterations",
    "eval_every",
    "seeds",
    "record_timing",
    "output_dir",
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// A parsed experiment file: raw values keyed by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentFile {
    entries: BTreeMap<String, Entry>,
}

impl FromStr for ExperimentFile {
    type Err = anyhow::Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| anyhow!("line {line}: expected `key = value`, found `{content}`"))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                bail!("line {line}: unknown key `{key}`");
            }
            let value = expand_env(value.trim()).with_context(|| format!("line {line}: key `{key}`"))?;
            let entry = Entry { value, line };
            if let Some(previous) = entries.insert(key.to_string(), entry) {
                bail!("line {line}: `{key}` already set on line {}", previous.line);
            }
        }
        Ok(ExperimentFile { entries })
    }
}

impl fmt::Display for ExperimentFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (key, entry) in &self.entries {
            writeln!(f, "{key} = {}", entry.value)?;
        }
        Ok(())
    }
}

/// Replaces `${NAME}` and `${NAME:-default}`.
fn expand_env(value: &str) -> Result<String> {
    let mut out = String::with_capacity(value.len());
    let mut rest = value;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let end = rest[start..]
            .find('}')
            .ok_or_else(|| anyhow!("unterminated `${{` in `{value}`"))?;
        let inner = &rest[start + 2..start + end];
        let (name, default) = match inner.split_once(":-") {
            Some((n, d)) => (n, Some(d)),
            None => (inner, None),
        };
        match (std::env::var(name), default) {
            (Ok(v), _) if !v.is_empty() => out.push_str(&v),
            (_, Some(d)) => out.push_str(d),
            _ => bail!("environment variable `{name}` is not set and has no default"),
        }
        rest = &rest[start + end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl ExperimentFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        text.parse().with_context(|| format!("in {}", path.display()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    /// Sets or replaces a key, e.g. to apply a command-line override.
    pub fn set(&mut self, key: &str, value: impl fmt::Display) -> Result<()> {
        if !KEYS.contains(&key) {
            bail!("unknown key `{key}`");
        }
        self.entries.insert(key.to_string(), Entry { value: value.to_string(), line: 0 });
        Ok(())
    }

    fn context(&self, key: &str) -> String {
        match self.entries.get(key) {
            Some(e) if e.line > 0 => format!("line {}: key `{key}`", e.line),
            _ => format!("key `{key}`"),
        }
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("{}: cannot parse `{v}`: {e}", self.context(key))))
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.parse(key)?.ok_or_else(|| anyhow!("missing required key `{key}`"))
    }

    fn list<T: FromStr>(&self, key: &str, default: T) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        let Some(raw) = self.get(key) else {
            return Ok(vec![default]);
        };
        let items = split_list(raw)
            .into_iter()
            .map(|item| {
                item.parse::<T>()
                    .map_err(|e| anyhow!("{}: cannot parse `{item}`: {e}", self.context(key)))
            })
            .collect::<Result<Vec<T>>>()?;
        if items.is_empty() {
            bail!("{}: empty list", self.context(key));
        }
        Ok(items)
    }

    fn task(&self) -> Result<TaskSettings> {
        match self.required::<String>("task")?.as_str() {
            "quadratic" => Ok(TaskSettings::Quadratic {
                dim: self.or("dim", 10)?,
                optimum_scale: self.or("optimum_scale", 10.0)?,
                noise_std: self.or("noise_std", 0.01)?,
                task_seed: self.or("task_seed", 7)?,
            }),
            "mlr" => {
                let source = match (self.get("data_dir"), self.get("train_csv")) {
                    (Some(dir), None) => DataSource::Idx { dir: PathBuf::from(dir) },
                    (None, Some(train)) => DataSource::Csv {
                        train: PathBuf::from(train),
                        test: self.get("test_csv").map(PathBuf::from),
                        label_column: self.or("label_column", 0)?,
                    },
                    _ => bail!("task `mlr` needs exactly one of `data_dir` or `train_csv`"),
                };
                Ok(TaskSettings::Mlr {
                    source,
                    train_limit: self.parse("train_limit")?,
                    test_limit: self.parse("test_limit")?,
                    batch_size: self.or("batch_size", 32)?,
                    l2_reg: self.or("l2_reg", 0.0)?,
                })
            }
            other => bail!("{}: unknown task `{other}` (expected quadratic or mlr)", self.context("task")),
        }
    }

    fn schedule(&self) -> Result<StepSchedule> {
        let schedule = match self.or("schedule", "constant".to_string())?.as_str() {
            "constant" => StepSchedule::constant(self.or("eta0", 0.05)?),
            "polynomial" => StepSchedule::polynomial(self.or("eta0", 0.5)?, self.or("tau", 50.0)?, self.or("power", 0.6)?),
            other => bail!("{}: unknown schedule `{other}`", self.context("schedule")),
        };
        Ok(schedule?)
    }

    /// The run grid, in file order of the list values. Fails on the first
    /// run whose parameters are inconsistent.
    pub fn expand(&self) -> Result<Vec<RunSpec>> {
        let task = self.task()?;
        let workers: usize = self.required("workers")?;
        let schedule = self.schedule()?;
        let iterations: usize = self.required("iterations")?;
        let eval_every: usize = self.or("eval_every", 1)?;
        let delta: f64 = self.or("delta", DEFAULT_DELTA)?;
        let gaussian_std: f64 = self.or("gaussian_std", DEFAULT_GAUSSIAN_STD)?;
        let record_timing: bool = self.or("record_timing", false)?;
        let output_dir = PathBuf::from(self.or("output_dir", "runs".to_string())?);
        let attack_kind = self.or("attack", "none".to_string())?;

        let aggregators: Vec<AggregatorSpec> = self.list("aggregators", AggregatorSpec::default())?;
        if self.get("aggregators").is_none() {
            bail!("missing required key `aggregators`");
        }
        let byzantine: Vec<usize> = self.list("byzantine", 0)?;
        let gammas: Vec<f64> = self.list("gamma", 10.0)?;
        let factors: Vec<f64> = self.list("omniscient_factor", DEFAULT_OMNISCIENT_FACTOR)?;
        let seeds: Vec<u64> = self.list("seeds", 0)?;

        let mut specs: Vec<RunSpec> = Vec::new();
        for agg in &aggregators {
            for &q in &byzantine {
                let attacks: Vec<Option<Attack>> = match (q, attack_kind.as_str()) {
                    (0, _) => vec![None],
                    (_, "none") => bail!("{}: {q} Byzantine workers need an `attack`", self.context("byzantine")),
                    (_, "gaussian") => vec![Some(Attack::gaussian(gaussian_std)?)],
                    (_, "label_flip") => vec![Some(Attack::LabelFlip)],
                    (_, "omniscient") => factors
                        .iter()
                        .map(|&k| Attack::omniscient(k).map(Some))
                        .collect::<Result<_, _>>()?,
                    (_, other) => bail!(
                        "{}: unknown attack `{other}` (expected none, gaussian, label_flip or omniscient)",
                        self.context("attack")
                    ),
                };
                let rules: Vec<Rule> = if agg.kind == RuleKind::Licm {
                    gammas.iter().map(|&g| agg.resolve(q, g, delta)).collect()
                } else {
                    vec![agg.resolve(q, 0.0, delta)]
                };
                for rule in rules {
                    for attack in &attacks {
                        for &seed in &seeds {
                            let spec = RunSpec {
                                task: task.clone(),
                                workers,
                                byzantine: q,
                                attack: *attack,
                                rule,
                                schedule,
                                iterations,
                                eval_every,
                                seed,
                                record_timing,
                                output_dir: output_dir.clone(),
                            };
                            spec.check().with_context(|| format!("run `{}`", spec.label()))?;
                            if !specs.iter().any(|s| s.label() == spec.label()) {
                                specs.push(spec);
                            }
                        }
                    }
                }
            }
        }
        Ok(specs)
    }
}

fn split_list(raw: &str) -> Vec<&str> {
    // commas inside parentheses belong to the item, e.g. `krum(8)`
    let mut items = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in raw.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                items.push(raw[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    items.push(raw[start..].trim());
    items.retain(|s| !s.is_empty());
    items
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DataSource {
    /// Directory with the four standard MNIST IDX files.
    Idx { dir: PathBuf },
    Csv {
        train: PathBuf,
        test: Option<PathBuf>,
        label_column: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskSettings {
    Quadratic {
        dim: usize,
        optimum_scale: f64,
        noise_std: f64,
        task_seed: u64,
    },
    Mlr {
        source: DataSource,
        train_limit: Option<usize>,
        test_limit: Option<usize>,
        batch_size: usize,
        l2_reg: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Mean,
    CoorMed,
    TrimmedMean,
    Krum,
    Bulyan,
    Licm,
}

/// An entry of the `aggregators` list: a rule name with an optional explicit q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AggregatorSpec {
    pub kind: RuleKind,
    pub q: Option<usize>,
}

impl Default for AggregatorSpec {
    fn default() -> Self {
        AggregatorSpec {
            kind: RuleKind::Mean,
            q: None,
        }
    }
}

impl FromStr for AggregatorSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, q) = match s.split_once('(') {
            Some((name, rest)) => {
                let arg = rest
                    .strip_suffix(')')
                    .ok_or_else(|| anyhow!("missing `)` in `{s}`"))?;
                let q: usize = arg.trim().parse().map_err(|_| anyhow!("`{arg}` is not a worker count"))?;
                (name.trim(), Some(q))
            }
            None => (s, None),
        };
        let kind = match name {
            "mean" => RuleKind::Mean,
            "coormed" | "median" => RuleKind::CoorMed,
            "trimmed_mean" => RuleKind::TrimmedMean,
            "krum" => RuleKind::Krum,
            "bulyan" => RuleKind::Bulyan,
            "licm" => RuleKind::Licm,
            other => bail!("unknown aggregator `{other}`"),
        };
        if q.is_some() && matches!(kind, RuleKind::Mean | RuleKind::CoorMed | RuleKind::Licm) {
            bail!("aggregator `{name}` takes no argument");
        }
        Ok(AggregatorSpec { kind, q })
    }
}

impl AggregatorSpec {
    /// The concrete rule; q-based rules use the explicit q or else `default_q`.
    pub fn resolve(&self, default_q: usize, gamma: f64, delta: f64) -> Rule {
        let q = self.q.unwrap_or(default_q);
        match self.kind {
            RuleKind::Mean => Rule::Mean,
            RuleKind::CoorMed => Rule::CoorMed,
            RuleKind::TrimmedMean => Rule::TrimmedMean { trim: q },
            RuleKind::Krum => Rule::Krum { q },
            RuleKind::Bulyan => Rule::Bulyan { q },
            RuleKind::Licm => Rule::Licm { gamma, delta },
        }
    }
}

/// One fully resolved run of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub task: TaskSettings,
    pub workers: usize,
    pub byzantine: usize,
    pub attack: Option<Attack>,
    pub rule: Rule,
    pub schedule: StepSchedule,
    pub iterations: usize,
    pub eval_every: usize,
    pub seed: u64,
    pub record_timing: bool,
    pub output_dir: PathBuf,
}

impl RunSpec {
    /// Preconditions that can be checked without loading data.
    pub fn check(&self) -> Result<()> {
        if self.iterations == 0 || self.eval_every == 0 {
            bail!("`iterations` and `eval_every` must be positive");
        }
        if self.byzantine >= self.workers {
            bail!("{} Byzantine workers leave no honest worker among {}", self.byzantine, self.workers);
        }
        self.rule.validate(self.workers)?;
        match (&self.task, self.attack) {
            (TaskSettings::Quadratic { dim, .. }, _) if *dim == 0 => bail!("`dim` must be positive"),
            (TaskSettings::Quadratic { .. }, Some(Attack::LabelFlip)) => {
                bail!("label flipping needs a labeled dataset, not the quadratic task")
            }
            (TaskSettings::Mlr { batch_size: 0, .. }, _) => bail!("`batch_size` must be positive"),
            _ => Ok(()),
        }
    }

    /// Directory name of this run inside the output directory.
    pub fn label(&self) -> String {
        let rule = match self.rule {
            Rule::Mean | Rule::CoorMed => self.rule.name().to_string(),
            Rule::TrimmedMean { trim: q } | Rule::Krum { q } | Rule::Bulyan { q } => format!("{}{q}", self.rule.name()),
            Rule::Licm { gamma, delta } if delta == DEFAULT_DELTA => format!("licm-g{gamma}"),
            Rule::Licm { gamma, delta } => format!("licm-g{gamma}-d{delta:e}"),
        };
        let attack = match self.attack {
            None => "none".to_string(),
            Some(Attack::Gaussian { std }) => format!("gaussian{std}"),
            Some(Attack::LabelFlip) => "label_flip".to_string(),
            Some(Attack::Omniscient { factor }) => format!("omniscient{factor}"),
        };
        format!("{rule}_q{}_{attack}_s{}", self.byzantine, self.seed)
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(self.label())
    }

    /// A single-run experiment file that expands back to exactly this run.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut put = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        match &self.task {
            TaskSettings::Quadratic {
                dim,
                optimum_scale,
                noise_std,
                task_seed,
            } => {
                put("task", "quadratic".into());
                put("dim", dim.to_string());
                put("optimum_scale", optimum_scale.to_string());
                put("noise_std", noise_std.to_string());
                put("task_seed", task_seed.to_string());
            }
            TaskSettings::Mlr {
                source,
                train_limit,
                test_limit,
                batch_size,
                l2_reg,
            } => {
                put("task", "mlr".into());
                match source {
                    DataSource::Idx { dir } => put("data_dir", dir.display().to_string()),
                    DataSource::Csv {
                        train,
                        test,
                        label_column,
                    } => {
                        put("train_csv", train.display().to_string());
                        if let Some(test) = test {
                            put("test_csv", test.display().to_string());
                        }
                        put("label_column", label_column.to_string());
                    }
                }
                if let Some(n) = train_limit {
                    put("train_limit", n.to_string());
                }
                if let Some(n) = test_limit {
                    put("test_limit", n.to_string());
                }
                put("batch_size", batch_size.to_string());
                put("l2_reg", l2_reg.to_string());
            }
        }
        put("workers", self.workers.to_string());
        put("byzantine", self.byzantine.to_string());
        match self.attack {
            None => put("attack", "none".into()),
            Some(Attack::Gaussian { std }) => {
                put("attack", "gaussian".into());
                put("gaussian_std", std.to_string());
            }
            Some(Attack::LabelFlip) => put("attack", "label_flip".into()),
            Some(Attack::Omniscient { factor }) => {
                put("attack", "omniscient".into());
                put("omniscient_factor", factor.to_string());
            }
        }
        match self.rule {
            Rule::Licm { gamma, delta } => {
                put("aggregators", "licm".into());
                put("gamma", gamma.to_string());
                put("delta", format!("{delta:e}"));
            }
            Rule::TrimmedMean { trim: q } | Rule::Krum { q } | Rule::Bulyan { q } => {
                put("aggregators", format!("{}({q})", self.rule.name()))
            }
            Rule::Mean | Rule::CoorMed => put("aggregators", self.rule.name().into()),
        }
        match self.schedule {
            StepSchedule::Constant { eta0 } => {
                put("schedule", "constant".into());
                put("eta0", eta0.to_string());
            }
            StepSchedule::Polynomial { eta0, tau, power } => {
                put("schedule", "polynomial".into());
                put("eta0", eta0.to_string());
                put("tau", tau.to_string());
                put("power", power.to_string());
            }
        }
        put("iterations", self.iterations.to_string());
        put("eval_every", self.eval_every.to_string());
        put("seeds", self.seed.to_string());
        put("record_timing", self.record_timing.to_string());
        put("output_dir", self.output_dir.display().to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: &str = "
        task = quadratic
        workers = 16
        byzantine = 0, 7
        attack = omniscient
        omniscient_factor = 10, 100   # collapses for q = 0
        aggregators = mean, krum(3), licm
        gamma = 2, 10
        schedule = polynomial
        iterations = 50
        seeds = 1, 2
    ";

    #[test]
    fn grid_expansion() {
        let specs: Vec<RunSpec> = GRID.parse::<ExperimentFile>().unwrap().expand().unwrap();
        // mean: (q0 + q7 x 2 factors) x 2 seeds = 6; krum same = 6; licm x 2 gammas = 12
        assert_eq!(specs.len(), 24);
        let labels: Vec<String> = specs.iter().map(RunSpec::label).collect();
        assert!(labels.contains(&"krum3_q7_omniscient10_s2".to_string()));
        assert!(labels.contains(&"licm-g2_q0_none_s1".to_string()));
        assert!(specs.iter().all(|s| s.schedule == StepSchedule::Polynomial { eta0: 0.5, tau: 50.0, power: 0.6 }));
    }

    #[test]
    fn q_defaults_to_byzantine_count() {
        let text = "task = quadratic\nworkers = 20\nbyzantine = 4\nattack = gaussian\naggregators = krum, bulyan(2)\niterations = 5";
        let specs = text.parse::<ExperimentFile>().unwrap().expand().unwrap();
        assert_eq!(specs[0].rule, Rule::Krum { q: 4 });
        assert_eq!(specs[1].rule, Rule::Bulyan { q: 2 });
    }

    #[test]
    fn echo_round_trips() {
        for spec in GRID.parse::<ExperimentFile>().unwrap().expand().unwrap() {
            let back = spec.echo().parse::<ExperimentFile>().unwrap().expand().unwrap();
            assert_eq!(back, vec![spec]);
        }
    }

    #[test]
    fn precondition_errors_name_the_rule() {
        let text = "task = quadratic\nworkers = 5\nbyzantine = 3\nattack = gaussian\naggregators = krum\niterations = 5";
        let err = text.parse::<ExperimentFile>().unwrap().expand().unwrap_err();
        assert!(format!("{err:#}").contains("Krum"), "{err:#}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = "task = quadratic\nworkers = many".parse::<ExperimentFile>().unwrap().expand().unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!("bogus = 1".parse::<ExperimentFile>().is_err());
        assert!("task = mlr\ntask = mlr".parse::<ExperimentFile>().is_err());
        assert!("workers".parse::<ExperimentFile>().is_err());
        assert!("aggregators = licm(3)".parse::<ExperimentFile>().unwrap().list::<AggregatorSpec>("aggregators", AggregatorSpec::default()).is_err());
    }

    #[test]
    fn environment_expansion() {
        assert_eq!(expand_env("${LICM_TEST_SURELY_UNSET:-data/mnist}/x").unwrap(), "data/mnist/x");
        assert!(expand_env("${LICM_TEST_SURELY_UNSET}").is_err());
        assert!(expand_env("${OPEN").is_err());
        assert_eq!(expand_env("plain").unwrap(), "plain");
    }

    #[test]
    fn attack_required_for_byzantine_workers() {
        let text = "task = quadratic\nworkers = 8\nbyzantine = 2\naggregators = mean\niterations = 5";
        assert!(text.parse::<ExperimentFile>().unwrap().expand().is_err());
    }
}
