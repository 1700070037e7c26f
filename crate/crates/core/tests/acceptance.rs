//! Acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! Dataset-backed criteria read `$MBAGCN_DATA/<name>`, falling back to
//! `data/<name>` at the workspace root. When a dataset is absent the
//! criterion prints FAIL with the missing path; that alone does not fail the
//! process unless `MBAGCN_ACCEPTANCE_STRICT=1`. Any other FAIL exits non-zero.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use mbagcn::gradcheck::GradCheck;
use mbagcn::graph::{GraphContext, GraphDataset};
use mbagcn::loss::softmax_xent;
use mbagcn::model::{
    gated_mal, nspl_gates, Carrier, GateMode, GateOverride, MbaGcn, ModelConfig, ModelKind, Network, ParamStore, Phase,
};
use mbagcn::sampling::{dropout, gumbel_softmax, GumbelNoise};
use mbagcn::sparse::spmm;
use mbagcn::ssm::{discretize, generate_inputs, hippo_legs, ssm_readout, ssm_step, NodeSsm, SsmParams};
use mbagcn::synthetic::{contextual_sbm, SbmParams};
use mbagcn::tensor::{
    add, add_scalar, broadcast_rows, concat_cols, matmul, mean_all, mul, neg, relu, reshape, row_softmax, scale,
    select_column, softplus, sub, sum_all, transpose, Tensor,
};
use mbagcn::train::{
    ablate, output, propagation_smoothing, train_all, train_one, AdamHyper, AdamW, Prepared, RunSpec, TrainConfig,
    Variant,
};
use mbagcn::{Result, Rng};

enum Outcome {
    Pass(String),
    Fail(String),
    /// The dataset the criterion needs is not on disk.
    Missing(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn data_dir(name: &str) -> PathBuf {
    match std::env::var_os("MBAGCN_DATA") {
        Some(root) => PathBuf::from(root).join(name),
        None => Path::new(env!("CARGO_MANIFEST_DIR"))
            .ancestors()
            .nth(2)
            .unwrap()
            .join("data")
            .join(name),
    }
}

fn load(cfg: &TrainConfig, name: &str) -> std::result::Result<Prepared<f64>, Outcome> {
    let dir = data_dir(name);
    if !dir.join("meta.json").exists() {
        return Err(Outcome::Missing(format!("dataset not found at {}", dir.display())));
    }
    Prepared::load_from(cfg, &dir).map_err(|e| Outcome::Fail(format!("loading {}: {e}", dir.display())))
}

fn rand_tensor(rng: &mut Rng, shape: &[usize], low: f64, high: f64) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.uniform_range(low, high)).collect()).unwrap()
}

/// `Σ out ⊙ w` for a fixed pseudo-random `w`, so every output entry gets a
/// distinct cotangent.
fn probe(out: &Tensor<f64>) -> Result<Tensor<f64>> {
    let w = rand_tensor(&mut Rng::new(99), out.shape(), -1.0, 1.0);
    Ok(sum_all(&mul(out, &w)?))
}

fn toy_context(seed: u64) -> GraphContext<f64> {
    let mut rng = Rng::new(seed);
    let edges = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (2, 3)];
    let x = rand_tensor(&mut rng, &[6, 4], -1.0, 1.0);
    let ds = GraphDataset::from_edges("toy", edges, x, vec![0, 0, 1, 1, 2, 2], 3).unwrap();
    GraphContext::new(&ds).unwrap()
}

fn sbm_context(nodes: usize, seed: u64) -> GraphContext<f64> {
    let p = SbmParams {
        nodes,
        ..SbmParams::default()
    };
    GraphContext::new(&contextual_sbm::<f64>(&p, seed).unwrap().row_normalized()).unwrap()
}

// ---------------------------------------------------------------- 1

fn hippo_closed_form(n: usize, k: usize) -> f64 {
    if n > k {
        -(((2 * n + 1) * (2 * k + 1)) as f64).sqrt()
    } else if n == k {
        -((n + 1) as f64)
    } else {
        0.0
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let p: Tensor<f64> = hippo_legs(64).unwrap();
    let mut worst = 0.0f64;
    for n in 0..64 {
        for k in 0..64 {
            worst = worst.max((p.at(&[n, k]) - hippo_closed_form(n, k)).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-12 && secs < 1.0,
        format!("s=64 max |err| {worst:.1e}, {secs:.3}s"),
    )
}

// ---------------------------------------------------------------- 2

fn dense_matmul(a: &[f64], b: &[f64], s: usize) -> Vec<f64> {
    let mut c = vec![0.0; s * s];
    for i in 0..s {
        for k in 0..s {
            for j in 0..s {
                c[i * s + j] += a[i * s + k] * b[k * s + j];
            }
        }
    }
    c
}

/// Dense `exp(t)`: halve until the max-row-sum norm is below 1/2, sum 30
/// Taylor terms, square back. Parlett's recurrence is not used here because
/// the HiPPO matrix is far from normal and its eigenvalues are only `Δ`
/// apart, which makes that recurrence lose most of its digits.
fn taylor_exp(t: &[f64], s: usize) -> Vec<f64> {
    let norm = (0..s)
        .map(|i| (0..s).map(|j| t[i * s + j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a: Vec<f64> = t.iter().map(|v| v / 2f64.powi(squarings)).collect();
    let mut sum = vec![0.0; s * s];
    let mut term = vec![0.0; s * s];
    for i in 0..s {
        sum[i * s + i] = 1.0;
        term[i * s + i] = 1.0;
    }
    for k in 1..=30 {
        term = dense_matmul(&term, &a, s).iter().map(|v| v / k as f64).collect();
        sum.iter_mut().zip(&term).for_each(|(x, y)| *x += y);
    }
    for _ in 0..squarings {
        sum = dense_matmul(&sum, &sum, s);
    }
    sum
}

/// `(ΔP)⁻¹ (exp(ΔP) − I) Δq` by forward substitution.
fn zoh_input(p: &[f64], s: usize, delta: f64, q: &[f64]) -> Vec<f64> {
    let dp: Vec<f64> = p.iter().map(|v| v * delta).collect();
    let e = taylor_exp(&dp, s);
    let b: Vec<f64> = (0..s)
        .map(|i| {
            (0..s)
                .map(|k| (e[i * s + k] - if i == k { 1.0 } else { 0.0 }) * delta * q[k])
                .sum()
        })
        .collect();
    let mut x = vec![0.0; s];
    for i in 0..s {
        let acc: f64 = (0..i).map(|k| dp[i * s + k] * x[k]).sum();
        x[i] = (b[i] - acc) / dp[i * s + i];
    }
    x
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = Rng::new(2);
    let per = 200;
    let (mut worst_solve, mut worst_scalar) = (0.0f64, 0.0f64);
    for s in [1usize, 2, 4, 8, 16] {
        let p: Tensor<f64> = hippo_legs(s).unwrap();
        let deltas: Vec<f64> = (0..per).map(|_| 10f64.powf(rng.uniform_range(-3.0, 0.3))).collect();
        let q = rand_tensor(&mut rng, &[per, s], -1.0, 1.0);
        let node = NodeSsm::new(
            q.clone(),
            Tensor::zeros(&[per, s]),
            Tensor::new(&[per, 1], deltas.clone()).unwrap(),
        )
        .unwrap();
        let node = discretize(node, &p).unwrap();
        let (p_bar, q_bar) = (node.p_bar.unwrap(), node.q_bar.unwrap());
        for (i, &delta) in deltas.iter().enumerate() {
            let qi = &q.data()[i * s..(i + 1) * s];
            let oracle = zoh_input(p.data(), s, delta, qi);
            for k in 0..s {
                worst_solve = worst_solve.max((q_bar.data()[i * s + k] - oracle[k]).abs());
            }
            if s == 1 {
                let e = (-delta).exp();
                worst_scalar = worst_scalar.max((p_bar.data()[i] - e).abs());
                worst_scalar = worst_scalar.max((q_bar.data()[i] - (1.0 - e) * qi[0]).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst_solve <= 1e-9 && worst_scalar <= 1e-12 && secs < 5.0,
        format!("1000 draws: triangular-solve max |err| {worst_solve:.1e}, scalar closed form {worst_scalar:.1e}, {secs:.2}s"),
    )
}

// ---------------------------------------------------------------- 3

type Case = (
    &'static str,
    Vec<Tensor<f64>>,
    Box<dyn Fn(&[Tensor<f64>]) -> Result<Tensor<f64>>>,
);

fn op_cases(seed: u64) -> Vec<Case> {
    let mut rng = Rng::new(seed);
    let mut r = |shape: &[usize]| rand_tensor(&mut rng, shape, -1.0, 1.0);
    let ctx = toy_context(seed);
    let a_hat = ctx.a_hat.clone();
    let a_tilde = ctx.a_tilde.clone();
    let (n, d, s) = (6, 3, 4);
    let hippo: Tensor<f64> = hippo_legs(s).unwrap();
    let labels = vec![0, 2, 1, 1, 0, 2];
    let mask = vec![true, true, false, true, true, true];
    let mut cases: Vec<Case> = vec![
        (
            "add",
            vec![r(&[3, 4]), r(&[3, 4])],
            Box::new(|v| probe(&add(&v[0], &v[1])?)),
        ),
        (
            "sub",
            vec![r(&[3, 4]), r(&[3, 4])],
            Box::new(|v| probe(&sub(&v[0], &v[1])?)),
        ),
        (
            "mul",
            vec![r(&[3, 4]), r(&[3, 4])],
            Box::new(|v| probe(&mul(&v[0], &v[1])?)),
        ),
        ("scale", vec![r(&[3, 4])], Box::new(|v| probe(&scale(&v[0], 0.7)))),
        (
            "add_scalar",
            vec![r(&[3, 4])],
            Box::new(|v| probe(&add_scalar(&v[0], 0.3))),
        ),
        ("neg", vec![r(&[3, 4])], Box::new(|v| probe(&neg(&v[0])))),
        ("relu", vec![r(&[3, 4])], Box::new(|v| probe(&relu(&v[0])))),
        ("softplus", vec![r(&[3, 4])], Box::new(|v| probe(&softplus(&v[0])))),
        ("sum_all", vec![r(&[3, 4])], Box::new(|v| Ok(sum_all(&v[0])))),
        ("mean_all", vec![r(&[3, 4])], Box::new(|v| mean_all(&v[0]))),
        (
            "row_softmax",
            vec![r(&[3, 4])],
            Box::new(|v| probe(&row_softmax(&v[0])?)),
        ),
        (
            "select_column",
            vec![r(&[3, 4])],
            Box::new(|v| probe(&select_column(&v[0], 2)?)),
        ),
        (
            "broadcast_rows",
            vec![r(&[1, 4])],
            Box::new(|v| probe(&broadcast_rows(&v[0], 3)?)),
        ),
        (
            "matmul",
            vec![r(&[3, 4]), r(&[4, 2])],
            Box::new(|v| probe(&matmul(&v[0], &v[1])?)),
        ),
        ("transpose", vec![r(&[3, 4])], Box::new(|v| probe(&transpose(&v[0])?))),
        (
            "reshape",
            vec![r(&[3, 4])],
            Box::new(|v| probe(&reshape(&v[0], &[2, 6])?)),
        ),
        (
            "concat_cols",
            vec![r(&[3, 2]), r(&[3, 3])],
            Box::new(|v| probe(&concat_cols(v)?)),
        ),
        (
            "softmax_xent",
            vec![r(&[6, 3])],
            Box::new(move |v| softmax_xent(&v[0], &labels, &mask)),
        ),
        (
            "gumbel_softmax",
            vec![r(&[5, 3])],
            Box::new(|v| {
                probe(&gumbel_softmax(
                    &v[0],
                    0.7,
                    false,
                    GumbelNoise::Sampled(&mut Rng::new(4)),
                )?)
            }),
        ),
        (
            "dropout",
            vec![r(&[5, 3])],
            Box::new(|v| probe(&dropout(&v[0], 0.5, &mut Rng::new(8))?)),
        ),
    ];
    let a = a_hat.clone();
    cases.push(("spmm", vec![r(&[n, 3])], Box::new(move |v| probe(&spmm(&a, &v[0])?))));
    let a = a_hat.clone();
    cases.push((
        "spmm_rank3",
        vec![r(&[n, 2, s])],
        Box::new(move |v| probe(&spmm(&a, &v[0])?)),
    ));
    cases.push((
        "nspl_gates",
        vec![r(&[n, d]), r(&[d, 2]), r(&[d, 2])],
        Box::new(|v| {
            let (s1, s2) = nspl_gates(&v[0], &v[1], &v[2], 0.8, false, Some(&mut Rng::new(6)))?;
            add(&probe(&s1)?, &probe(&scale(&s2, 2.0))?)
        }),
    ));
    let at = a_tilde.clone();
    let mut g = |shape: &[usize]| rand_tensor(&mut rng, shape, 0.1, 0.9);
    let gates = [g(&[n, 1]), g(&[n, 1])];
    let x = rand_tensor(&mut Rng::new(seed ^ 1), &[n, 2, s], -1.0, 1.0);
    cases.push((
        "gated_mal",
        vec![gates[0].clone(), gates[1].clone(), x],
        Box::new(move |v| probe(&gated_mal(&at, &v[0], &v[1], &v[2])?.0)),
    ));
    let mut rng = Rng::new(seed ^ 2);
    let ssm = SsmParams::with_state_matrix(d, hippo.clone(), 1e-4, &mut rng).unwrap();
    let h0 = rand_tensor(&mut rng, &[n, d], -1.0, 1.0);
    let p = hippo.clone();
    cases.push((
        "generate_inputs",
        vec![ssm.w_q.clone(), ssm.w_r.clone(), ssm.w_delta.clone()],
        Box::new(move |v| {
            let params = SsmParams {
                w_q: v[0].clone(),
                w_r: v[1].clone(),
                w_delta: v[2].clone(),
                ..ssm.clone()
            };
            let node = generate_inputs(&h0, &params)?;
            add(&add(&probe(&node.q)?, &probe(&node.r)?)?, &probe(&node.delta)?)
        }),
    ));
    let q = rand_tensor(&mut rng, &[n, s], -1.0, 1.0);
    let delta = rand_tensor(&mut rng, &[n, 1], 0.05, 2.0);
    let pp = p.clone();
    cases.push((
        "discretize",
        vec![q.clone(), delta.clone()],
        Box::new(move |v| {
            let node = discretize(NodeSsm::new(v[0].clone(), Tensor::zeros(&[n, s]), v[1].clone())?, &pp)?;
            add(
                &probe(node.p_bar.as_ref().unwrap())?,
                &probe(node.q_bar.as_ref().unwrap())?,
            )
        }),
    ));
    let pp = p.clone();
    cases.push((
        "ssm_step",
        vec![
            rand_tensor(&mut rng, &[n, d, s], -1.0, 1.0),
            rand_tensor(&mut rng, &[n, d], -1.0, 1.0),
            q.clone(),
            delta.clone(),
        ],
        Box::new(move |v| {
            let node = discretize(NodeSsm::new(v[2].clone(), Tensor::zeros(&[n, s]), v[3].clone())?, &pp)?;
            probe(&ssm_step(&v[0], &v[1], &node)?)
        }),
    ));
    cases.push((
        "ssm_readout",
        vec![
            rand_tensor(&mut rng, &[n, d, s], -1.0, 1.0),
            rand_tensor(&mut rng, &[n, s], -1.0, 1.0),
        ],
        Box::new(move |v| {
            let node = NodeSsm::new(Tensor::zeros(&[n, s]), v[1].clone(), Tensor::full(&[n, 1], 1.0))?;
            probe(&ssm_readout(&v[0], &node)?)
        }),
    ));
    cases
}

/// Finite-difference check of a whole network's loss with respect to every
/// parameter.
fn network_case(name: &'static str, cfg: ModelConfig, seed: u64) -> Case {
    let ctx = toy_context(seed);
    let base = Network::<f64>::build(&cfg, &ctx, seed).unwrap();
    let inputs: Vec<Tensor<f64>> = base.params().iter().map(|(_, t)| t.detach()).collect();
    let mask = vec![true; 6];
    (
        name,
        inputs,
        Box::new(move |v| {
            let mut net = base.clone();
            for ((_, slot), t) in net.params_mut().iter_mut().zip(v) {
                *slot = t.clone();
            }
            let f = net.forward(&ctx, Phase::Train, seed + 100)?;
            softmax_xent(&f.logits, &ctx.labels, &mask)
        }),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let check = GradCheck::default();
    let mut failures = Vec::new();
    let (mut cases_run, mut entries, mut worst) = (0, 0, 0.0f64);
    for seed in 0..10 {
        let mut cases = op_cases(seed);
        let mba = ModelConfig {
            layers: 3,
            hidden_dim: 4,
            state_dim: 3,
            gate_mode: GateMode::Soft,
            ..ModelConfig::default()
        };
        cases.push(network_case("mbagcn_L3_state", mba.clone(), seed));
        cases.push(network_case(
            "mbagcn_L3_readout",
            ModelConfig {
                carrier: Carrier::Readout,
                ..mba
            },
            seed,
        ));
        let gcn = ModelConfig {
            kind: ModelKind::Gcn,
            layers: 3,
            hidden_dim: 4,
            ..ModelConfig::default()
        };
        cases.push(network_case("gcn_L3", gcn, seed));
        for (name, inputs, f) in cases {
            cases_run += 1;
            match check.run(&inputs, |v| f(v)) {
                Ok(report) => {
                    entries += report.checked;
                    worst = worst.max(report.max_rel_error);
                    if !report.passed(1e-4) {
                        failures.push(format!("{name}@seed{seed} rel {:.1e}", report.max_rel_error));
                    }
                }
                Err(e) => failures.push(format!("{name}@seed{seed}: {e}")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("{cases_run} checks over 10 seeds, {entries} entries, max rel err {worst:.1e}, {secs:.1}s");
    if failures.is_empty() {
        verdict(secs < 30.0, detail)
    } else {
        Outcome::Fail(format!("{detail}; failed: {}", failures.join(", ")))
    }
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut compared = 0;
    let graphs = [toy_context(1), toy_context(2), sbm_context(40, 3)];
    for ctx in &graphs {
        for carrier in [Carrier::State, Carrier::Readout] {
            for seed in 0..3 {
                let cfg = ModelConfig {
                    layers: 3,
                    hidden_dim: 6,
                    state_dim: 4,
                    carrier,
                    ..ModelConfig::default()
                };
                let mut gated = MbaGcn::<f64>::new(&cfg, ctx.num_features(), ctx.num_classes, seed).unwrap();
                gated.gate_override = Some(GateOverride::ForceOn);
                let mut params = ParamStore::new();
                for (name, t) in gated.params().iter().filter(|(n, _)| !matches!(*n, "w1" | "w2")) {
                    params.insert(name, t.clone());
                }
                let plain_cfg = ModelConfig { nspl: false, ..cfg };
                let plain = MbaGcn::from_parts(&plain_cfg, params, gated.state_matrix().clone()).unwrap();
                for phase in [Phase::Eval, Phase::Train] {
                    let a = gated.forward(ctx, phase, seed + 7).unwrap().logits;
                    let b = plain.forward(ctx, phase, seed + 7).unwrap().logits;
                    let same = a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits());
                    if !same {
                        return Outcome::Fail(format!("logits differ ({carrier:?}, seed {seed}, {phase:?})"));
                    }
                    compared += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        secs < 1.0,
        format!("{compared} forward passes bit-identical, {secs:.3}s"),
    )
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let ctx = sbm_context(300, 5);
    let mut cfg = TrainConfig::default();
    cfg.model.hidden_dim = 16;
    cfg.model.state_dim = 8;
    cfg.train.epochs = 40;
    cfg.train.patience = 40;
    let splits = mbagcn::graph::make_splits(300, (0.6, 0.2, 0.2), 2, &mut Rng::new(1)).unwrap();
    let (n, nnz) = (ctx.num_nodes(), ctx.a_tilde.nnz());
    let (mut runs, mut layers_checked) = (0, 0);
    for depth in [2, 4] {
        for variant in Variant::ALL {
            for (k, split) in splits.iter().enumerate() {
                let model = variant.apply(&ModelConfig {
                    layers: depth,
                    ..cfg.model.clone()
                });
                let spec = RunSpec::new(3, model, variant, k);
                let trained = match train_one(&cfg, &spec, &ctx, split) {
                    Ok(t) => t,
                    Err(e) => return Outcome::Fail(format!("{}: {e}", spec.run_id())),
                };
                let r = &trained.result;
                if r.trace_checks != r.epochs.len() * depth {
                    return Outcome::Fail(format!(
                        "{}: {} layer checks for {} epochs",
                        r.run_id,
                        r.trace_checks,
                        r.epochs.len()
                    ));
                }
                layers_checked += r.trace_checks;
                // Fresh gate samples on the trained model.
                for seed in 0..10 {
                    let fwd = trained.model.forward(&ctx, Phase::Train, seed).unwrap();
                    for rec in &fwd.trace {
                        if !rec.subgraph || rec.self_loops != n || rec.edges > nnz {
                            return Outcome::Fail(format!("{}: layer violates A_l ⊆ Ã / unit diagonal", r.run_id));
                        }
                        layers_checked += 1;
                    }
                }
                runs += 1;
            }
        }
    }
    Outcome::Pass(format!(
        "{runs} trained runs, {layers_checked} layer adjacencies checked"
    ))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let cfg = TrainConfig::default();
    let prep = match load(&cfg, "cora") {
        Ok(p) => p,
        Err(o) => return o,
    };
    let start = Instant::now();
    let shallow = propagation_smoothing(&prep.ctx, 2).unwrap();
    let deep = propagation_smoothing(&prep.ctx, 64).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let gain = deep.mean_cosine - shallow.mean_cosine;
    verdict(
        gain >= 0.2 && secs < 10.0,
        format!(
            "cosine {:.3} at depth 2, {:.3} at depth 64 (gain {gain:.3}), {secs:.2}s",
            shallow.mean_cosine, deep.mean_cosine
        ),
    )
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let ds = contextual_sbm::<f64>(
        &SbmParams {
            nodes: 200,
            ..SbmParams::default()
        },
        9,
    )
    .unwrap();
    let mut cfg = TrainConfig::default();
    cfg.data.splits = 3;
    cfg.model.hidden_dim = 16;
    cfg.model.state_dim = 8;
    cfg.model.layers = 3;
    cfg.train.epochs = 25;
    cfg.train.seed = 17;
    let prep = Prepared::from_dataset(&cfg, ds).unwrap();
    let metrics = |threads: usize| -> Vec<u8> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let (report, _) = pool.install(|| train_all(&cfg, &prep)).unwrap();
        output::metrics_csv(&report.runs).unwrap()
    };
    let a = metrics(1);
    let b = metrics(4);
    let c = metrics(4);
    verdict(
        a == b && b == c,
        format!(
            "metrics.csv of {} bytes identical across 3 invocations (1 and 4 threads)",
            a.len()
        ),
    )
}

// ---------------------------------------------------------------- 8-10

struct CoraResults {
    gcn2: f64,
    gcn10: f64,
    mba2: f64,
    mba10: f64,
}

fn cora_results() -> std::result::Result<CoraResults, Outcome> {
    let base = TrainConfig::default();
    let prep = load(&base, "cora")?;
    let mean = |kind: ModelKind, layers: usize| -> std::result::Result<f64, Outcome> {
        let mut cfg = base.clone();
        cfg.model.kind = kind;
        cfg.model.layers = layers;
        let (report, _) =
            train_all(&cfg, &prep).map_err(|e| Outcome::Fail(format!("{} L={layers}: {e}", kind.name())))?;
        Ok(report.summary.test_acc_mean)
    };
    Ok(CoraResults {
        gcn2: mean(ModelKind::Gcn, 2)?,
        gcn10: mean(ModelKind::Gcn, 10)?,
        mba2: mean(ModelKind::Mbagcn, 2)?,
        mba10: mean(ModelKind::Mbagcn, 10)?,
    })
}

fn criteria_8_to_10() -> [Outcome; 3] {
    let r = match cora_results() {
        Ok(r) => r,
        Err(Outcome::Missing(m)) => {
            return [
                Outcome::Missing(m.clone()),
                Outcome::Missing(m.clone()),
                Outcome::Missing(m),
            ]
        }
        Err(Outcome::Fail(m)) => return [Outcome::Fail(m.clone()), Outcome::Fail(m.clone()), Outcome::Fail(m)],
        Err(Outcome::Pass(_)) => unreachable!(),
    };
    [
        verdict(
            r.gcn2 >= 0.82,
            format!("GCN L=2 mean test accuracy {:.4} (need ≥ 0.82)", r.gcn2),
        ),
        verdict(
            r.gcn10 <= r.gcn2 - 0.15,
            format!("GCN L=10 {:.4} vs L=2 {:.4} (need a drop of ≥ 0.15)", r.gcn10, r.gcn2),
        ),
        verdict(
            r.mba10 >= 0.83 && (r.mba10 - r.mba2).abs() <= 0.03,
            format!(
                "MbaGCN L=10 {:.4}, L=2 {:.4} (need ≥ 0.83 and within 0.03)",
                r.mba10, r.mba2
            ),
        ),
    ]
}

// ---------------------------------------------------------------- 11

fn criterion_11() -> Outcome {
    let mut cfg = TrainConfig::default();
    cfg.model.layers = 8;
    let prep = match load(&cfg, "wisconsin") {
        Ok(p) => p,
        Err(o) => return o,
    };
    match train_all(&cfg, &prep) {
        Ok((report, _)) => {
            let m = report.summary.test_acc_mean;
            verdict(m >= 0.75, format!("MbaGCN L=8 mean test accuracy {m:.4} (need ≥ 0.75)"))
        }
        Err(e) => Outcome::Fail(e.to_string()),
    }
}

// ---------------------------------------------------------------- 12

fn criterion_12() -> Outcome {
    let mut cfg = TrainConfig::default();
    cfg.model.layers = 6;
    cfg.ablation.variants = vec![Variant::None, Variant::NoHl, Variant::NoIr];
    let prep = match load(&cfg, "citeseer") {
        Ok(p) => p,
        Err(o) => return o,
    };
    let report = match ablate(&cfg, &prep) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let mean = |v: Variant| report.rows.iter().find(|r| r.variant == v).map(|r| r.mean).unwrap();
    let (full, no_hl, no_ir) = (mean(Variant::None), mean(Variant::NoHl), mean(Variant::NoIr));
    verdict(
        no_ir < full && no_hl < full,
        format!("full {full:.4}, without IR {no_ir:.4}, without HL {no_hl:.4} (both must be lower)"),
    )
}

// ---------------------------------------------------------------- 13

/// Fastest of several optimization steps at each depth. Depths are
/// interleaved so that machine-wide slowdowns hit all of them alike.
fn step_secs(ctx: &GraphContext<f64>, depths: &[usize]) -> Vec<f64> {
    let mask = vec![true; ctx.num_nodes()];
    let mut nets: Vec<(Network<f64>, AdamW<f64>)> = depths
        .iter()
        .map(|&layers| {
            let cfg = ModelConfig {
                layers,
                hidden_dim: 32,
                state_dim: 16,
                ..ModelConfig::default()
            };
            (Network::build(&cfg, ctx, 1).unwrap(), AdamW::new(AdamHyper::default()))
        })
        .collect();
    let mut best = vec![f64::INFINITY; depths.len()];
    for round in 0..6u64 {
        for (i, (net, opt)) in nets.iter_mut().enumerate() {
            let start = Instant::now();
            let fwd = net.forward(ctx, Phase::Train, round).unwrap();
            softmax_xent(&fwd.logits, &ctx.labels, &mask)
                .unwrap()
                .backward()
                .unwrap();
            drop(fwd);
            opt.step(net.params_mut()).unwrap();
            // The first round warms caches and allocator pools.
            if round > 0 {
                best[i] = best[i].min(start.elapsed().as_secs_f64());
            }
        }
    }
    best
}

fn criterion_13() -> Outcome {
    let ctx = sbm_context(2000, 13);
    let depths = [2, 4, 8];
    let t = step_secs(&ctx, &depths);
    let ratios: Vec<String> = depths
        .iter()
        .zip(&t)
        .map(|(l, s)| format!("L={l} {:.1}ms ({:.2}x)", 1e3 * s, s / t[0]))
        .collect();
    let ok = depths.iter().zip(&t).all(|(&l, s)| s / t[0] <= 1.25 * l as f64 / 2.0);
    verdict(ok, format!("{} (bound 1.25·L/2)", ratios.join(", ")))
}

fn main() -> ExitCode {
    let strict = std::env::var("MBAGCN_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let [c8, c9, c10] = criteria_8_to_10();
    let outcomes: Vec<(usize, Outcome)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4()),
        (5, criterion_5()),
        (6, criterion_6()),
        (7, criterion_7()),
        (8, c8),
        (9, c9),
        (10, c10),
        (11, criterion_11()),
        (12, criterion_12()),
        (13, criterion_13()),
    ];
    let mut fatal = 0;
    for (n, o) in &outcomes {
        match o {
            Outcome::Pass(d) => println!("criterion {n:>2}: PASS  {d}"),
            Outcome::Fail(d) => {
                fatal += 1;
                println!("criterion {n:>2}: FAIL  {d}");
            }
            Outcome::Missing(d) => {
                if strict {
                    fatal += 1;
                }
                println!("criterion {n:>2}: FAIL  {d}");
            }
        }
    }
    let passed = outcomes.iter().filter(|(_, o)| matches!(o, Outcome::Pass(_))).count();
    println!("acceptance: {passed}/{} passed", outcomes.len());
    if fatal > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
