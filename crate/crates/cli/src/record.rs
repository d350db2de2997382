use serde::{Deserialize, Serialize};

use flatopt::train::EpochMetrics;

use crate::config::Sections;

pub const FORMAT_VERSION: u32 = 1;

/// `v<crate version>`, or the value of `FLATOPT_GIT_DESCRIBE` at build time.
pub fn version_string() -> String {
    option_env!("FLATOPT_GIT_DESCRIBE")
        .map(str::to_string)
        .unwrap_or_else(|| concat!("v", env!("CARGO_PKG_VERSION")).to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub optimizer: String,
    pub dataset: String,
    pub seed: u64,
    pub best_test_acc: f64,
    pub best_epoch: usize,
    pub final_train_acc: f64,
    pub final_test_acc: f64,
    pub version: String,
}

/// Contents of `run.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format_version: u32,
    pub config: Sections,
    pub epochs: Vec<EpochMetrics>,
    pub summary: Summary,
}

impl RunRecord {
    pub fn new(config: Sections, epochs: Vec<EpochMetrics>, optimizer: &str, dataset: &str, seed: u64) -> Self {
        let (best_epoch, best_test_acc) = epochs
            .iter()
            .map(|m| (m.epoch, m.test_acc))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        let last = epochs.last();
        Self {
            format_version: FORMAT_VERSION,
            config,
            summary: Summary {
                optimizer: optimizer.to_string(),
                dataset: dataset.to_string(),
                seed,
                best_test_acc,
                best_epoch,
                final_train_acc: last.map_or(f64::NAN, |m| m.train_acc),
                final_test_acc: last.map_or(f64::NAN, |m| m.test_acc),
                version: version_string(),
            },
            epochs,
        }
    }

    /// Checks the record invariants: accuracies in `[0, 1]` and epochs
    /// numbered contiguously from 0.
    pub fn validate(&self) -> Result<(), String> {
        if self.epochs.is_empty() {
            return Err("no epochs recorded".into());
        }
        for (i, m) in self.epochs.iter().enumerate() {
            if m.epoch != i {
                return Err(format!("epoch {} at position {i}", m.epoch));
            }
            for acc in [m.train_acc, m.test_acc] {
                if !(0.0..=1.0).contains(&acc) {
                    return Err(format!("accuracy {acc} out of range at epoch {i}"));
                }
            }
        }
        Ok(())
    }
}
