use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{TrainConfig, Variant};
use super::report::{AblationReport, Provenance, RunReport, Summary, SweepReport, REPORT_SCHEMA_VERSION};
use super::runner::{train_one, RunResult, RunSpec, TrainedRun};
use crate::error::{Error, Result};
use crate::graph::{load_dataset, make_splits, GraphContext, GraphDataset, Split};
use crate::model::{ModelConfig, Network};
use crate::rng::{derive_seed, tag, Rng};
use crate::scalar::Scalar;

/// A dataset ready for training: preprocessed features, adjacency context
/// and the splits to run.
pub struct Prepared<T: Scalar> {
    pub dataset: GraphDataset<T>,
    pub ctx: GraphContext<T>,
    pub splits: Vec<Split>,
}

impl<T: Scalar> Prepared<T> {
    pub fn load(cfg: &TrainConfig) -> Result<Self> {
        Self::from_dataset(cfg, load_dataset(&cfg.data.path)?)
    }

    pub fn load_from(cfg: &TrainConfig, dir: &Path) -> Result<Self> {
        Self::from_dataset(cfg, load_dataset(dir)?)
    }

    pub fn from_dataset(cfg: &TrainConfig, dataset: GraphDataset<T>) -> Result<Self> {
        let dataset = if cfg.data.row_normalize {
            dataset.row_normalized()
        } else {
            dataset
        };
        let k = cfg.data.splits;
        let splits = if cfg.data.use_dataset_splits {
            if dataset.splits.len() < k {
                return Err(Error::Dataset(format!(
                    "{} ships {} splits, {k} requested",
                    dataset.name,
                    dataset.splits.len()
                )));
            }
            dataset.splits[..k].to_vec()
        } else {
            let [a, b, c] = cfg.data.fractions;
            let mut rng = Rng::new(derive_seed(cfg.train.seed, &[tag("splits")]));
            make_splits(dataset.num_nodes(), (a, b, c), k, &mut rng)?
        };
        let ctx = GraphContext::new(&dataset)?;
        Ok(Self { dataset, ctx, splits })
    }
}

/// Runs every spec, in parallel on the current rayon pool. Results keep the
/// order of `specs`.
pub fn run_all<T: Scalar>(cfg: &TrainConfig, prep: &Prepared<T>, specs: &[RunSpec]) -> Result<Vec<TrainedRun<T>>> {
    specs
        .par_iter()
        .map(|spec| train_one(cfg, spec, &prep.ctx, &prep.splits[spec.split]))
        .collect()
}

fn split_specs(cfg: &TrainConfig, model: &ModelConfig, variant: Variant, splits: usize) -> Vec<RunSpec> {
    (0..splits)
        .map(|s| RunSpec::new(cfg.train.seed, variant.apply(model), variant, s))
        .collect()
}

/// The configured model on every split.
pub fn train_all<T: Scalar>(cfg: &TrainConfig, prep: &Prepared<T>) -> Result<(RunReport, Vec<Network<T>>)> {
    let start = Instant::now();
    let specs = split_specs(cfg, &cfg.model, Variant::None, prep.splits.len());
    let trained = run_all(cfg, prep, &specs)?;
    let (runs, models): (Vec<RunResult>, Vec<Network<T>>) = trained.into_iter().map(|t| (t.result, t.model)).unzip();
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION.to_string(),
        config_echo: cfg.clone(),
        provenance: Provenance::collect(cfg, &prep.dataset.name),
        summary: Summary::of(&runs),
        runs,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((report, models))
}

/// Every configured model at every configured depth on every split.
pub fn depth_sweep<T: Scalar>(cfg: &TrainConfig, prep: &Prepared<T>) -> Result<SweepReport> {
    if cfg.sweep.depths.is_empty() {
        return Err(Error::Config("no depths to sweep".into()));
    }
    let start = Instant::now();
    let mut specs = Vec::new();
    for &kind in &cfg.sweep.models {
        for &depth in &cfg.sweep.depths {
            let model = ModelConfig {
                kind,
                layers: depth,
                ..cfg.model.clone()
            };
            model.validate()?;
            specs.extend(split_specs(cfg, &model, Variant::None, prep.splits.len()));
        }
    }
    let runs: Vec<RunResult> = run_all(cfg, prep, &specs)?.into_iter().map(|t| t.result).collect();
    Ok(SweepReport {
        schema_version: REPORT_SCHEMA_VERSION.to_string(),
        config_echo: cfg.clone(),
        provenance: Provenance::collect(cfg, &prep.dataset.name),
        summary: SweepReport::summarize(&runs),
        runs,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// The configured model with each ablation variant on every split.
pub fn ablate<T: Scalar>(cfg: &TrainConfig, prep: &Prepared<T>) -> Result<AblationReport> {
    let start = Instant::now();
    let variants = &cfg.ablation.variants;
    let specs: Vec<RunSpec> = variants
        .iter()
        .flat_map(|&v| split_specs(cfg, &cfg.model, v, prep.splits.len()))
        .collect();
    let runs: Vec<RunResult> = run_all(cfg, prep, &specs)?.into_iter().map(|t| t.result).collect();
    Ok(AblationReport {
        schema_version: REPORT_SCHEMA_VERSION.to_string(),
        config_echo: cfg.clone(),
        provenance: Provenance::collect(cfg, &prep.dataset.name),
        rows: AblationReport::summarize(&runs, variants),
        runs,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}
