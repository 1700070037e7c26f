use std::path::Path;
use std::process::Command;

use serde::{Deserialize, Serialize};

use super::config::{TrainConfig, Variant};
use super::metrics::{decline_percent, mean_std};
use super::runner::RunResult;
use crate::model::ModelKind;

pub const REPORT_SCHEMA_VERSION: &str = "1.0.0";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub crate_version: String,
    pub git_commit: Option<String>,
    pub base_seed: u64,
    pub dataset: String,
    pub dataset_path: String,
}

impl Provenance {
    pub fn collect(cfg: &TrainConfig, dataset: &str) -> Self {
        Self {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            git_commit: git_commit(Path::new(".")),
            base_seed: cfg.train.seed,
            dataset: dataset.to_string(),
            dataset_path: cfg.data.path.display().to_string(),
        }
    }
}

fn git_commit(dir: &Path) -> Option<String> {
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
        .filter(|s| !s.is_empty())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub test_acc_mean: f64,
    pub test_acc_std: f64,
    pub val_acc_mean: f64,
    pub val_acc_std: f64,
}

impl Summary {
    pub fn of(runs: &[RunResult]) -> Self {
        let test: Vec<f64> = runs.iter().map(|r| r.test_acc).collect();
        let val: Vec<f64> = runs.iter().map(|r| r.best_val_acc).collect();
        let (test_acc_mean, test_acc_std) = mean_std(&test);
        let (val_acc_mean, val_acc_std) = mean_std(&val);
        Self {
            runs: runs.len(),
            test_acc_mean,
            test_acc_std,
            val_acc_mean,
            val_acc_std,
        }
    }
}

/// Everything a `train` invocation produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub config_echo: TrainConfig,
    pub provenance: Provenance,
    pub summary: Summary,
    pub runs: Vec<RunResult>,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: ModelKind,
    pub depth: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: String,
    pub config_echo: TrainConfig,
    pub provenance: Provenance,
    pub summary: Vec<SweepRow>,
    pub runs: Vec<RunResult>,
    pub wall_time_secs: f64,
}

impl SweepReport {
    /// Rows in (model, depth) order of first appearance in `runs`.
    pub fn summarize(runs: &[RunResult]) -> Vec<SweepRow> {
        let mut keys: Vec<(ModelKind, usize)> = Vec::new();
        for r in runs {
            if !keys.contains(&(r.model, r.depth)) {
                keys.push((r.model, r.depth));
            }
        }
        keys.into_iter()
            .map(|(model, depth)| {
                let accs: Vec<f64> = runs
                    .iter()
                    .filter(|r| r.model == model && r.depth == depth)
                    .map(|r| r.test_acc)
                    .collect();
                let (mean, std) = mean_std(&accs);
                SweepRow {
                    model,
                    depth,
                    mean,
                    std,
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: Variant,
    pub mean: f64,
    pub std: f64,
    /// `100·(base − mean)/base` against the `none` row, in percent.
    pub decline_pct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub schema_version: String,
    pub config_echo: TrainConfig,
    pub provenance: Provenance,
    pub rows: Vec<AblationRow>,
    pub runs: Vec<RunResult>,
    pub wall_time_secs: f64,
}

impl AblationReport {
    pub fn summarize(runs: &[RunResult], variants: &[Variant]) -> Vec<AblationRow> {
        let stats = |v: Variant| {
            let accs: Vec<f64> = runs.iter().filter(|r| r.variant == v).map(|r| r.test_acc).collect();
            mean_std(&accs)
        };
        let base = variants.contains(&Variant::None).then(|| stats(Variant::None).0);
        variants
            .iter()
            .map(|&v| {
                let (mean, std) = stats(v);
                let decline_pct = base.map(|b| {
                    if v == Variant::None {
                        0.0
                    } else {
                        decline_percent(b, mean)
                    }
                });
                AblationRow {
                    variant: v,
                    mean,
                    std,
                    decline_pct,
                }
            })
            .collect()
    }
}
