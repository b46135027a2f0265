//! Run outputs: the metrics CSV, the run summary, and atomic file writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use licm_core::{MetricsRow, RunResult};

pub const METRICS_HEADER: [&str; 8] = [
    "k",
    "loss",
    "grad_norm",
    "accuracy",
    "selected_count",
    "selected_benign",
    "selected_byzantine",
    "agg_time_ns",
];

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents)
        .and_then(|_| tmp.as_file().sync_all())
        .with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path).map_err(|e| anyhow!("renaming into {}: {}", path.display(), e.error))?;
    Ok(())
}

/// 17 significant digits: enough for every f64 to parse back bit-exactly.
fn float(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn int<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn metrics_csv(rows: &[MetricsRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            float(r.loss),
            float(r.grad_norm),
            float(r.accuracy),
            int(r.selected_count),
            int(r.selected_benign),
            int(r.selected_byzantine),
            int(r.agg_time_ns),
        ])?;
    }
    w.into_inner().map_err(|e| anyhow!("flushing CSV: {e}"))
}

pub fn write_metrics_csv<T>(result: &RunResult<T>, path: &Path) -> Result<()> {
    write_atomic(path, &metrics_csv(&result.rows)?)
}

/// Reads a metrics CSV back. `sigma_hat` is not part of the file and comes back empty.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_HEADER {
        bail!("{}: unexpected header {header:?}", path.display());
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        let field = |c: usize| record.get(c).filter(|s| !s.is_empty());
        let ctx = || format!("{}: row {}", path.display(), i + 2);
        let f = |c: usize| field(c).map(str::parse::<f64>).transpose().with_context(ctx);
        let n = |c: usize| field(c).map(str::parse::<usize>).transpose().with_context(ctx);
        rows.push(MetricsRow {
            k: n(0)?.ok_or_else(|| anyhow!("{}: empty k", ctx()))?,
            loss: f(1)?,
            grad_norm: f(2)?,
            accuracy: f(3)?,
            selected_count: n(4)?,
            selected_benign: n(5)?,
            selected_byzantine: n(6)?,
            agg_time_ns: field(7).map(str::parse::<u64>).transpose().with_context(ctx)?,
            sigma_hat: None,
        });
    }
    Ok(rows)
}

/// Headline numbers of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub rows: usize,
    pub diverged_at: Option<usize>,
    pub final_loss: Option<f64>,
    pub final_grad_norm: Option<f64>,
    pub final_accuracy: Option<f64>,
    /// Mean pooled honest-gradient noise std over evaluated iterations.
    pub mean_sigma_hat: Option<f64>,
    /// Mean |selected set| over screened iterations (LICM only, k >= 1).
    pub mean_selected: Option<f64>,
    /// Mean share of Byzantine ids in the selected set over screened
    /// iterations; an empty selection counts as 0.
    pub byzantine_share: Option<f64>,
    pub wall_time_s: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Share of Byzantine ids in one row's selected set, 0 when nothing was selected.
pub fn byzantine_share(row: &MetricsRow) -> Option<f64> {
    let count = row.selected_count?;
    let byz = row.selected_byzantine?;
    Some(if count == 0 { 0.0 } else { byz as f64 / count as f64 })
}

impl RunSummary {
    pub fn new<T>(label: String, result: &RunResult<T>, wall_time_s: f64) -> Self {
        let last = result.rows.iter().rev().find(|r| r.loss.is_some());
        let screened = || result.rows.iter().filter(|r| r.k >= 1 && r.selected_count.is_some());
        RunSummary {
            label,
            rows: result.rows.len(),
            diverged_at: result.diverged_at,
            final_loss: last.and_then(|r| r.loss),
            final_grad_norm: last.and_then(|r| r.grad_norm),
            final_accuracy: last.and_then(|r| r.accuracy),
            mean_sigma_hat: mean(result.rows.iter().filter_map(|r| r.sigma_hat).filter(|s| s.is_finite())),
            mean_selected: mean(screened().filter_map(|r| r.selected_count).map(|c| c as f64)),
            byzantine_share: mean(screened().filter_map(byzantine_share)),
            wall_time_s,
        }
    }

    pub fn render(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_else(|| "none".into());
        let mut out = String::new();
        let _ = writeln!(out, "label = {}", self.label);
        let _ = writeln!(out, "rows = {}", self.rows);
        let _ = writeln!(
            out,
            "diverged_at = {}",
            self.diverged_at.map(|k| k.to_string()).unwrap_or_else(|| "none".into())
        );
        let _ = writeln!(out, "final_loss = {}", opt(self.final_loss));
        let _ = writeln!(out, "final_grad_norm = {}", opt(self.final_grad_norm));
        let _ = writeln!(out, "final_accuracy = {}", opt(self.final_accuracy));
        let _ = writeln!(out, "mean_sigma_hat = {}", opt(self.mean_sigma_hat));
        let _ = writeln!(out, "mean_selected = {}", opt(self.mean_selected));
        let _ = writeln!(out, "byzantine_share = {}", opt(self.byzantine_share));
        let _ = writeln!(out, "wall_time_s = {:.3}", self.wall_time_s);
        out
    }
}
