use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{TrainConfig, Variant};
use super::metrics::{accuracy, smoothing_metrics, SmoothingRow};
use super::optim::{AdamHyper, AdamW};
use crate::error::{Error, Result};
use crate::graph::{GraphContext, Split};
use crate::loss::softmax_xent;
use crate::model::{Forward, ModelConfig, ModelKind, Network, ParamStore, Phase};
use crate::rng::{derive_seed, tag};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Training-mode loss (dropout and gate noise on).
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub test_acc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateStat {
    pub layer: usize,
    pub s1_on: f64,
    pub s2_on: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_id: String,
    pub model: ModelKind,
    pub depth: usize,
    pub variant: Variant,
    pub split: usize,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    /// Test accuracy of the restored best-validation parameters.
    pub test_acc: f64,
    pub stopped_early: bool,
    /// Layer adjacencies checked against `A_l ⊆ Ã` and `diag(A_l) = 1`
    /// during training.
    pub trace_checks: usize,
    pub smoothing: Vec<SmoothingRow>,
    pub gates: Vec<GateStat>,
    /// Mean wall time of one optimization step (forward, backward, update).
    pub mean_epoch_secs: f64,
}

/// What to train in one run.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub model: ModelConfig,
    pub variant: Variant,
    pub split: usize,
    pub seed: u64,
}

impl RunSpec {
    /// Seed derived from the base seed and the run's coordinates.
    pub fn new(base_seed: u64, model: ModelConfig, variant: Variant, split: usize) -> Self {
        let seed = derive_seed(
            base_seed,
            &[
                split as u64,
                model.layers as u64,
                tag(variant.name()),
                tag(model.kind.name()),
            ],
        );
        Self {
            model,
            variant,
            split,
            seed,
        }
    }

    pub fn run_id(&self) -> String {
        format!(
            "{}-L{}-{}-s{}",
            self.model.kind.name(),
            self.model.layers,
            self.variant.name(),
            self.split
        )
    }
}

pub struct TrainedRun<T: Scalar> {
    pub result: RunResult,
    pub model: Network<T>,
}

fn check_trace<T: Scalar>(fwd: &Forward<T>, n: usize, a_tilde_nnz: usize) -> Result<usize> {
    for (l, rec) in fwd.trace.iter().enumerate() {
        if !rec.subgraph || rec.edges > a_tilde_nnz || rec.self_loops != n {
            return Err(Error::State(format!(
                "layer {} adjacency violates A_l ⊆ Ã / diag = 1 ({} entries, {} self-loops)",
                l + 1,
                rec.edges,
                rec.self_loops
            )));
        }
    }
    Ok(fwd.trace.len())
}

/// Trains one model on one split with early stopping on validation accuracy
/// and restores the best parameters before the final evaluation.
pub fn train_one<T: Scalar>(
    cfg: &TrainConfig,
    spec: &RunSpec,
    ctx: &GraphContext<T>,
    split: &Split,
) -> Result<TrainedRun<T>> {
    let labels = &ctx.labels;
    let mut net = Network::build(&spec.model, ctx, spec.seed)?;
    let t = &cfg.train;
    let mut opt = AdamW::new(AdamHyper {
        lr: t.lr,
        beta1: t.beta1,
        beta2: t.beta2,
        eps: t.eps,
        weight_decay: t.weight_decay,
    });
    let n = ctx.num_nodes();
    let nnz = ctx.a_tilde.nnz();

    let mut epochs = Vec::new();
    let mut best: Option<(ParamStore<T>, usize, f64)> = None;
    let mut since_best = 0;
    let mut trace_checks = 0;
    let mut step_secs = 0.0;
    let mut stopped_early = false;
    for epoch in 1..=t.epochs {
        let start = Instant::now();
        let fwd = net.forward(ctx, Phase::Train, derive_seed(spec.seed, &[tag("epoch"), epoch as u64]))?;
        trace_checks += check_trace(&fwd, n, nnz)?;
        let loss = softmax_xent(&fwd.logits, labels, &split.train)?;
        let train_loss = loss.item()?.as_f64();
        if !train_loss.is_finite() {
            return Err(Error::numeric(
                "train",
                format!("non-finite training loss at epoch {epoch}"),
            ));
        }
        loss.backward()?;
        drop(fwd);
        opt.step(net.params_mut())?;
        step_secs += start.elapsed().as_secs_f64();

        let eval = net.forward(ctx, Phase::Eval, 0)?;
        let record = EpochRecord {
            epoch,
            train_loss,
            train_acc: accuracy(&eval.logits, labels, &split.train)?,
            val_loss: softmax_xent(&eval.logits, labels, &split.val)?.item()?.as_f64(),
            val_acc: accuracy(&eval.logits, labels, &split.val)?,
            test_acc: accuracy(&eval.logits, labels, &split.test)?,
        };
        let improved = best.as_ref().is_none_or(|b| record.val_acc > b.2);
        if improved {
            best = Some((net.params().clone(), epoch, record.val_acc));
            since_best = 0;
        } else {
            since_best += 1;
        }
        epochs.push(record);
        if since_best >= t.patience {
            stopped_early = epoch < t.epochs;
            break;
        }
    }

    let (store, best_epoch, best_val_acc) = best.expect("at least one epoch ran");
    *net.params_mut() = store;
    let fwd = net.forward(ctx, Phase::Eval, 0)?;
    let test_acc = accuracy(&fwd.logits, labels, &split.test)?;
    let smoothing = smoothing_metrics(&fwd.trace, ctx)?;
    let gates = fwd
        .trace
        .iter()
        .enumerate()
        .filter_map(|(l, r)| {
            Some(GateStat {
                layer: l + 1,
                s1_on: r.s1_on?,
                s2_on: r.s2_on?,
            })
        })
        .collect();
    let result = RunResult {
        run_id: spec.run_id(),
        model: spec.model.kind,
        depth: spec.model.layers,
        variant: spec.variant,
        split: spec.split,
        seed: spec.seed,
        mean_epoch_secs: step_secs / epochs.len() as f64,
        epochs,
        best_epoch,
        best_val_acc,
        test_acc,
        stopped_early,
        trace_checks,
        smoothing,
        gates,
    };
    Ok(TrainedRun { result, model: net })
}
