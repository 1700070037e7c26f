//! Report files. Every file is written to a temporary sibling and renamed
//! into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::report::{AblationRow, SweepRow};
use super::runner::RunResult;
use crate::error::{Error, Result};
use crate::model::ModelKind;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::State(e.to_string()))
}

#[derive(Serialize)]
struct MetricsLine<'a> {
    run_id: &'a str,
    epoch: usize,
    split: usize,
    train_loss: f64,
    val_acc: f64,
    test_acc: f64,
}

/// `run_id,epoch,split,train_loss,val_acc,test_acc`, one line per epoch.
pub fn metrics_csv(runs: &[RunResult]) -> Result<Vec<u8>> {
    csv_bytes(runs.iter().flat_map(|r| {
        r.epochs.iter().map(move |e| MetricsLine {
            run_id: &r.run_id,
            epoch: e.epoch,
            split: r.split,
            train_loss: e.train_loss,
            val_acc: e.val_acc,
            test_acc: e.test_acc,
        })
    }))
}

#[derive(Serialize)]
struct SweepLine {
    model: &'static str,
    depth: usize,
    split: usize,
    test_acc: f64,
}

pub fn sweep_csv(runs: &[RunResult]) -> Result<Vec<u8>> {
    csv_bytes(runs.iter().map(|r| SweepLine {
        model: r.model.name(),
        depth: r.depth,
        split: r.split,
        test_acc: r.test_acc,
    }))
}

#[derive(Serialize)]
struct SummaryLine {
    model: &'static str,
    depth: usize,
    mean: f64,
    std: f64,
}

pub fn sweep_summary_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    csv_bytes(rows.iter().map(|r| SummaryLine {
        model: r.model.name(),
        depth: r.depth,
        mean: r.mean,
        std: r.std,
    }))
}

#[derive(Serialize)]
struct SmoothingLine {
    depth: usize,
    layer: usize,
    dirichlet_energy: f64,
    mean_cosine: f64,
}

/// `depth,layer,dirichlet_energy,mean_cosine` for one model, taken from the
/// first split at each depth.
pub fn smoothing_csv(runs: &[RunResult], model: ModelKind) -> Result<Vec<u8>> {
    let first_split = runs.iter().filter(|r| r.model == model).map(|r| r.split).min();
    csv_bytes(
        runs.iter()
            .filter(|r| r.model == model && Some(r.split) == first_split)
            .flat_map(|r| {
                r.smoothing.iter().map(move |s| SmoothingLine {
                    depth: r.depth,
                    layer: s.layer,
                    dirichlet_energy: s.dirichlet_energy,
                    mean_cosine: s.mean_cosine,
                })
            }),
    )
}

#[derive(Serialize)]
struct AblationLine {
    variant: &'static str,
    mean: f64,
    std: f64,
    decline_pct: String,
}

/// `variant,mean,std,decline_pct`; the decline is printed with two decimals.
pub fn ablation_csv(rows: &[AblationRow]) -> Result<Vec<u8>> {
    csv_bytes(rows.iter().map(|r| AblationLine {
        variant: r.variant.name(),
        mean: r.mean,
        std: r.std,
        decline_pct: r.decline_pct.map(|d| format!("{d:.2}")).unwrap_or_default(),
    }))
}
