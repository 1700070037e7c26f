//! `mbagcn` command-line runner.
//!
//! Exit codes: 0 success, 1 internal error, 2 configuration error, 3 data
//! error (missing or malformed dataset/checkpoint), 4 numeric abort.
//! Machine outputs go to files under `--out`; stderr carries diagnostics.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mbagcn::model::{Checkpoint, ModelKind, Phase};
use mbagcn::ssm::{discretize, hippo_legs, NodeSsm};
use mbagcn::tensor::Tensor;
use mbagcn::train::{ablate, depth_sweep, output, train_all, AblationReport, Prepared, SweepReport, TrainConfig};
use mbagcn::{Error, ErrorKind, Result};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "mbagcn",
    version,
    about = "Train and analyse MbaGCN and GCN/SGC baselines on node classification"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML config file. Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set model.layers=8`. Repeatable,
    /// applied in order after the file is read.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Base seed (same as `--set train.seed=N`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent runs. Defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the configured model on every split; writes report.json,
    /// metrics.csv and one checkpoint per split.
    Train,
    /// Accuracy of a saved checkpoint on one split of the configured dataset.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 0)]
        split: usize,
    },
    /// Every model at every depth; writes sweep.csv, sweep_summary.csv and
    /// smoothing.csv.
    Sweep {
        /// Comma-separated depths, e.g. `2,4,6,8,10`.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        depths: Option<Vec<usize>>,
        /// Comma-separated models from mbagcn, gcn, sgc.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        models: Option<Vec<ModelKind>>,
    },
    /// The configured model with each ablation variant; writes ablation.csv
    /// and ablation.json.
    Ablate,
    /// Print the HiPPO-LegS state matrix and its discretization for one step size.
    InspectInit {
        #[arg(long, default_value_t = 4)]
        state_dim: usize,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        /// Value of every entry of the input vector q.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        q: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numeric => 4,
                ErrorKind::Internal => 1,
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::State(e.to_string()))?;
    }
    let g = &cli.global;
    match &cli.command {
        Command::InspectInit { state_dim, delta, q } => inspect_init(*state_dim, *delta, *q, g),
        Command::Train => {
            let cfg = load_config(g)?;
            cmd_train(&cfg, &g.out)
        }
        Command::Evaluate { checkpoint, split } => {
            let cfg = load_config(g)?;
            cmd_evaluate(&cfg, checkpoint, *split, &g.out)
        }
        Command::Sweep { depths, models } => {
            let mut cfg = load_config(g)?;
            if let Some(d) = depths {
                cfg.sweep.depths = d.clone();
            }
            if let Some(m) = models {
                cfg.sweep.models = m.clone();
            }
            cfg.validate()?;
            cmd_sweep(&cfg, &g.out)
        }
        Command::Ablate => {
            let cfg = load_config(g)?;
            cmd_ablate(&cfg, &g.out)
        }
    }
}

fn load_config(g: &Global) -> Result<TrainConfig> {
    let mut sets = g.set.clone();
    if let Some(seed) = g.seed {
        sets.push(format!("train.seed={seed}"));
    }
    match &g.config {
        Some(path) => TrainConfig::load(path, &sets),
        None => TrainConfig::parse("", &sets),
    }
}

fn write(out: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = out.join(name);
    output::write_atomic(&path, bytes)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn write_json<S: serde::Serialize>(out: &Path, name: &str, value: &S) -> Result<()> {
    let path = out.join(name);
    output::write_json(&path, value)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn prepare(cfg: &TrainConfig) -> Result<Prepared<f64>> {
    let prep = Prepared::load(cfg)?;
    eprintln!(
        "{}: {} nodes, {} features, {} classes, {} splits",
        prep.dataset.name,
        prep.dataset.num_nodes(),
        prep.dataset.num_features(),
        prep.dataset.num_classes,
        prep.splits.len()
    );
    Ok(prep)
}

fn cmd_train(cfg: &TrainConfig, out: &Path) -> Result<()> {
    let prep = prepare(cfg)?;
    let (report, models) = train_all(cfg, &prep)?;
    for (k, net) in models.iter().enumerate() {
        let ckpt = Checkpoint::capture(net, prep.ctx.num_features(), prep.ctx.num_classes);
        write_json(out, &format!("checkpoint_split{k}.json"), &ckpt)?;
    }
    write(out, "metrics.csv", &output::metrics_csv(&report.runs)?)?;
    write(
        out,
        "smoothing.csv",
        &output::smoothing_csv(&report.runs, cfg.model.kind)?,
    )?;
    write_json(out, "report.json", &report)?;
    eprintln!(
        "{} L={}: test accuracy {:.2} ± {:.2} over {} splits",
        cfg.model.kind.name(),
        cfg.model.layers,
        100.0 * report.summary.test_acc_mean,
        100.0 * report.summary.test_acc_std,
        report.summary.runs
    );
    Ok(())
}

fn cmd_evaluate(cfg: &TrainConfig, checkpoint: &Path, split: usize, out: &Path) -> Result<()> {
    let text =
        std::fs::read_to_string(checkpoint).map_err(|e| Error::Checkpoint(format!("{}: {e}", checkpoint.display())))?;
    let ckpt: Checkpoint =
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", checkpoint.display())))?;
    let prep = prepare(cfg)?;
    let masks = prep
        .splits
        .get(split)
        .ok_or_else(|| Error::Config(format!("split {split} requested, {} available", prep.splits.len())))?;
    let net = ckpt.restore(&prep.ctx)?;
    let logits = net.forward(&prep.ctx, Phase::Eval, 0)?.logits;
    let acc = |mask: &[bool]| mbagcn::train::accuracy(&logits, &prep.ctx.labels, mask);
    let (train, val, test) = (acc(&masks.train)?, acc(&masks.val)?, acc(&masks.test)?);
    write_json(
        out,
        "evaluation.json",
        &json!({
            "config_echo": cfg,
            "checkpoint": checkpoint.display().to_string(),
            "model": ckpt.model,
            "split": split,
            "train_acc": train,
            "val_acc": val,
            "test_acc": test,
        }),
    )?;
    eprintln!("split {split}: train {train:.4} val {val:.4} test {test:.4}");
    Ok(())
}

fn cmd_sweep(cfg: &TrainConfig, out: &Path) -> Result<()> {
    let prep = prepare(cfg)?;
    let report: SweepReport = depth_sweep(cfg, &prep)?;
    write(out, "sweep.csv", &output::sweep_csv(&report.runs)?)?;
    write(out, "sweep_summary.csv", &output::sweep_summary_csv(&report.summary)?)?;
    for (i, &kind) in cfg.sweep.models.iter().enumerate() {
        let bytes = output::smoothing_csv(&report.runs, kind)?;
        if i == 0 {
            write(out, "smoothing.csv", &bytes)?;
        }
        write(out, &format!("smoothing_{}.csv", kind.name()), &bytes)?;
    }
    write_json(out, "sweep.json", &report)?;
    for row in &report.summary {
        eprintln!(
            "{:>7} L={:<3} {:.2} ± {:.2}",
            row.model.name(),
            row.depth,
            100.0 * row.mean,
            100.0 * row.std
        );
    }
    Ok(())
}

fn cmd_ablate(cfg: &TrainConfig, out: &Path) -> Result<()> {
    let prep = prepare(cfg)?;
    let report: AblationReport = ablate(cfg, &prep)?;
    write(out, "ablation.csv", &output::ablation_csv(&report.rows)?)?;
    write_json(out, "ablation.json", &report)?;
    for row in &report.rows {
        let decline = row.decline_pct.map_or("-".to_string(), |d| format!("{d:.2}%"));
        eprintln!(
            "{:>8} {:.2} ± {:.2}  decline {decline}",
            row.variant.name(),
            100.0 * row.mean,
            100.0 * row.std
        );
    }
    Ok(())
}

fn inspect_init(s: usize, delta: f64, q: f64, g: &Global) -> Result<()> {
    if s == 0 {
        return Err(Error::Config("--state-dim must be at least 1".into()));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Config(format!(
            "--delta must be positive and finite, got {delta}"
        )));
    }
    if !q.is_finite() {
        return Err(Error::Config(format!("--q must be finite, got {q}")));
    }
    let p: Tensor<f64> = hippo_legs(s)?;
    let node = NodeSsm::new(
        Tensor::full(&[1, s], q),
        Tensor::zeros(&[1, s]),
        Tensor::full(&[1, 1], delta),
    )?;
    let node = discretize(node, &p)?;
    let p_bar = node.p_bar.as_ref().expect("discretized").to_vec();
    let q_bar = node.q_bar.as_ref().expect("discretized").to_vec();

    let rows = |v: &[f64]| -> Vec<Vec<f64>> { v.chunks(s).map(|r| r.to_vec()).collect() };
    let print = |name: &str, m: &[f64]| {
        println!("{name}");
        for r in m.chunks(s) {
            println!(
                "{}",
                r.iter().map(|v| format!("{v:>18.12}")).collect::<Vec<_>>().join(" ")
            );
        }
    };
    println!("state_dim = {s}, delta = {delta}, q = {q}");
    print("P (HiPPO-LegS)", p.data());
    print("P_bar = exp(delta P)", &p_bar);
    println!("Q_bar");
    println!(
        "{}",
        q_bar
            .iter()
            .map(|v| format!("{v:>18.12}"))
            .collect::<Vec<_>>()
            .join(" ")
    );

    if g.config.is_some() || !g.set.is_empty() {
        eprintln!("note: inspect-init ignores --config and --set");
    }
    write_json(
        &g.out,
        "inspect_init.json",
        &json!({
            "config_echo": { "state_dim": s, "delta": delta, "q": q },
            "p": rows(p.data()),
            "p_bar": rows(&p_bar),
            "q_bar": q_bar,
        }),
    )
}
