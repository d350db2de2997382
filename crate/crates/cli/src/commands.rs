use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use flatopt::flatness::{landscape_value, Panel};
use flatopt::pacbayes::{bound_report, BoundReport};
use flatopt::train::{EpochMetrics, Trainer};

use crate::config::Config;
use crate::error::{CliError, ConfigError, Result};
use crate::io::{csv_text, thread_pool, write_atomic, write_json};
use crate::record::RunRecord;
use crate::verify::{self, VerifyReport};

pub fn read_config(path: Option<&Path>) -> Result<Config> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(CliError::io(p))?;
            Ok(Config::parse(&text)?)
        }
    }
}

/// Trains the configured model and writes `run.json`, `metrics.csv` and
/// the `timing.csv` sidecar.
pub fn train(config: &Config, out: &Path) -> Result<RunRecord> {
    let mut trainer = Trainer::new(config.train.clone()).map_err(ConfigError::Invalid)?;
    let mut epochs = Vec::with_capacity(trainer.total_epochs());
    let mut timing = Vec::with_capacity(trainer.total_epochs());
    while !trainer.finished() {
        let start = Instant::now();
        let m = trainer.run_epoch()?;
        timing.push(format!("{},{:.3}", m.epoch, start.elapsed().as_secs_f64() * 1e3));
        epochs.push(m);
    }
    let t = &config.train;
    let record = RunRecord::new(
        config.to_sections(),
        epochs,
        t.optimizer.name(),
        t.dataset.name(),
        t.hyper.seed,
    );
    let metrics = csv_text(EpochMetrics::CSV_HEADER, record.epochs.iter().map(EpochMetrics::csv_row));
    write_atomic(&out.join("metrics.csv"), metrics.as_bytes())?;
    write_json(&out.join("run.json"), &record)?;
    write_atomic(&out.join("timing.csv"), csv_text("epoch,wall_ms", timing).as_bytes())?;
    Ok(record)
}

pub fn panel_file(panel: Panel) -> String {
    format!("panel_{}_{}.csv", panel.letter(), panel.name())
}

/// Evaluates every panel over the configured lattice, one CSV per panel.
pub fn landscape(config: &Config, out: &Path) -> Result<Vec<PathBuf>> {
    let cfg = &config.landscape;
    cfg.validate().map_err(ConfigError::Invalid)?;
    let pool = thread_pool()?;
    let points = cfg.points();
    let mut written = Vec::new();
    for panel in Panel::ALL {
        let values: Vec<f64> = pool.install(|| {
            points
                .par_iter()
                .map(|x| landscape_value(cfg, panel, *x))
                .collect::<flatopt::Result<_>>()
        })?;
        let rows = points
            .iter()
            .zip(&values)
            .map(|(x, v)| format!("{:.16e},{:.16e},{:.16e}", x[0], x[1], v));
        let path = out.join(panel_file(panel));
        write_atomic(&path, csv_text("x,y,value", rows).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

pub fn bound(config: &Config, out: &Path) -> Result<BoundReport> {
    let b = &config.bound;
    let report = bound_report(&b.inputs, b.c_cover, b.gamma_form).map_err(ConfigError::Invalid)?;
    write_atomic(
        &out.join("bound.csv"),
        csv_text(BoundReport::CSV_HEADER, [report.csv_row()]).as_bytes(),
    )?;
    Ok(report)
}

/// Runs a suite and writes `verify_<suite>.json`.
pub fn verify(suite: &str, out: &Path) -> Result<VerifyReport> {
    verify::resolve_suites(suite)?;
    let report = thread_pool()?.install(|| verify::run(suite))?;
    write_json(&out.join(format!("verify_{suite}.json")), &report)?;
    Ok(report)
}

/// Verification error naming every failed check.
pub fn require_pass(report: &VerifyReport) -> Result<()> {
    if report.pass {
        return Ok(());
    }
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.check.as_str()).collect();
    Err(CliError::Verification(failed.join("; ")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub dataset: String,
    pub optimizer: String,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
}

impl CompareRow {
    pub const CSV_HEADER: &'static str = "dataset,optimizer,runs,mean_best_test_acc,std_best_test_acc,formatted";

    /// Percent accuracy as `m.mm^{±s.ss}`.
    pub fn formatted(&self) -> String {
        format!("{:.2}^{{±{:.2}}}", 100.0 * self.mean, 100.0 * self.std)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.16e},{:.16e},{}",
            self.dataset,
            self.optimizer,
            self.runs,
            self.mean,
            self.std,
            self.formatted()
        )
    }
}

pub fn read_run(dir: &Path) -> Result<RunRecord> {
    let path = dir.join("run.json");
    if !path.is_file() {
        return Err(CliError::MissingRun(dir.to_path_buf()));
    }
    let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
    let record: RunRecord = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.clone(),
        source,
    })?;
    record
        .validate()
        .map_err(|e| CliError::Core(flatopt::Error::InvalidConfig(format!("{}: {e}", path.display()))))?;
    Ok(record)
}

/// Mean and sample standard deviation (n − 1 denominator; 0 for one run).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups runs by (dataset, optimizer), sorted on that key, and writes
/// `comparison.csv`.
pub fn compare(dirs: &[PathBuf], out: &Path) -> Result<Vec<CompareRow>> {
    let records = thread_pool()?.install(|| dirs.par_iter().map(|d| read_run(d)).collect::<Result<Vec<_>>>())?;
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in &records {
        groups
            .entry((r.summary.dataset.clone(), r.summary.optimizer.clone()))
            .or_default()
            .push(r.summary.best_test_acc);
    }
    let rows: Vec<CompareRow> = groups
        .into_iter()
        .map(|((dataset, optimizer), accs)| {
            let (mean, std) = mean_std(&accs);
            CompareRow {
                dataset,
                optimizer,
                runs: accs.len(),
                mean,
                std,
            }
        })
        .collect();
    write_atomic(
        &out.join("comparison.csv"),
        csv_text(CompareRow::CSV_HEADER, rows.iter().map(CompareRow::csv_row)).as_bytes(),
    )?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[0.9, 0.92, 0.94]);
        assert!((m - 0.92).abs() < 1e-15);
        assert!((s - 0.02).abs() < 1e-15);
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
    }

    #[test]
    fn table_format() {
        let row = CompareRow {
            dataset: "two_moons".into(),
            optimizer: "sam".into(),
            runs: 3,
            mean: 0.9423,
            std: 0.0012,
        };
        assert_eq!(row.formatted(), "94.23^{±0.12}");
    }

    #[test]
    fn failed_checks_exit_with_three() {
        let report = VerifyReport {
            suite: "kl".into(),
            pass: false,
            checks: vec![verify::Check {
                check: "kl/example".into(),
                value: 1.0,
                tolerance: 0.5,
                pass: false,
            }],
        };
        let err = require_pass(&report).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("kl/example"));
    }
}
