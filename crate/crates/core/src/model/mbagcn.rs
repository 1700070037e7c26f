use super::gates::{gated_mal, nspl_gates};
use super::{Carrier, Forward, GateMode, LayerRecord, ModelConfig, ParamStore, Phase};
use crate::error::{Error, Result};
use crate::graph::GraphContext;
use crate::init::{glorot_uniform, glorot_uniform_values};
use crate::rng::{derive_seed, tag, Rng};
use crate::sampling::dropout;
use crate::scalar::Scalar;
use crate::sparse::{spmm, SparseMatrix};
use crate::ssm::{discretize, generate_inputs, hippo_legs, ssm_readout, ssm_step, NodeSsm, SsmParams};
use crate::tensor::{add_scalar, broadcast_rows, matmul, relu, softplus, Tensor};

/// Replaces the sampled gates, for testing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateOverride {
    ForceOn,
    ForceOff,
}

/// Aggregates every channel and state slot of `h` over `a_hat`.
pub fn mal<T: Scalar>(a_hat: &SparseMatrix<T>, h: &Tensor<T>) -> Result<Tensor<T>> {
    spmm(a_hat, h)
}

#[derive(Clone, Debug)]
pub struct MbaGcn<T: Scalar> {
    cfg: ModelConfig,
    pub(crate) params: ParamStore<T>,
    p: Tensor<T>,
    pub gate_override: Option<GateOverride>,
}

impl<T: Scalar> MbaGcn<T> {
    pub fn new(cfg: &ModelConfig, d_in: usize, classes: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let (d, s) = (cfg.hidden_dim, cfg.state_dim);
        let mut rng = Rng::new(derive_seed(seed, &[tag("init")]));
        let mut params = ParamStore::new();
        params.insert("w_in", glorot_uniform(d_in, d, &mut rng));
        let p = if cfg.hippo {
            hippo_legs(s)?
        } else {
            random_state_matrix(s, &mut rng)
        };
        if cfg.input_related {
            let ssm = SsmParams::with_state_matrix(d, p.clone(), T::lit(cfg.delta_floor), &mut rng)?;
            params.insert("w_q", ssm.w_q);
            params.insert("w_r", ssm.w_r);
            params.insert("w_delta", ssm.w_delta);
        } else {
            params.insert("q_global", glorot_uniform(1, s, &mut rng));
            params.insert("r_global", glorot_uniform(1, s, &mut rng));
            params.insert("delta_global", Tensor::zeros(&[1, 1]));
        }
        if cfg.nspl {
            params.insert("w1", glorot_uniform(d, 2, &mut rng));
            params.insert("w2", glorot_uniform(d, 2, &mut rng));
        }
        params.insert("w_out", glorot_uniform(d, classes, &mut rng));
        Ok(Self {
            cfg: cfg.clone(),
            params,
            p,
            gate_override: None,
        })
    }

    /// Rebuilds from stored tensors.
    pub fn from_parts(cfg: &ModelConfig, params: ParamStore<T>, p: Tensor<T>) -> Result<Self> {
        cfg.validate()?;
        let s = cfg.state_dim;
        if p.shape() != [s, s] {
            return Err(Error::Checkpoint(format!(
                "state matrix {:?}, expected [{s}, {s}]",
                p.shape()
            )));
        }
        Ok(Self {
            cfg: cfg.clone(),
            params,
            p: p.detach(),
            gate_override: None,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn state_matrix(&self) -> &Tensor<T> {
        &self.p
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    fn node_ssm(&self, h0: &Tensor<T>) -> Result<NodeSsm<T>> {
        let floor = T::lit(self.cfg.delta_floor);
        let node = if self.cfg.input_related {
            let ssm = SsmParams {
                state_dim: self.cfg.state_dim,
                p: self.p.clone(),
                w_q: self.params.get("w_q")?.clone(),
                w_r: self.params.get("w_r")?.clone(),
                w_delta: self.params.get("w_delta")?.clone(),
                delta_floor: floor,
            };
            generate_inputs(h0, &ssm)?
        } else {
            let n = h0.shape()[0];
            let q = broadcast_rows(self.params.get("q_global")?, n)?;
            let r = broadcast_rows(self.params.get("r_global")?, n)?;
            let delta = add_scalar(&softplus(self.params.get("delta_global")?), floor);
            NodeSsm::new(q, r, broadcast_rows(&delta, n)?)?
        };
        discretize(node, &self.p)
    }

    pub fn forward(&self, ctx: &GraphContext<T>, phase: Phase, seed: u64) -> Result<Forward<T>> {
        let training = phase == Phase::Train;
        let mut drop_rng = Rng::new(derive_seed(seed, &[tag("dropout")]));
        let mut gate_rng = Rng::new(derive_seed(seed, &[tag("gumbel")]));
        let n = ctx.num_nodes();
        let (d, s) = (self.cfg.hidden_dim, self.cfg.state_dim);
        let tau = T::lit(self.cfg.tau);

        let mut h0 = relu(&matmul(&ctx.features, self.params.get("w_in")?)?);
        if training {
            h0 = dropout(&h0, self.cfg.dropout, &mut drop_rng)?;
        }
        let node = self.node_ssm(&h0)?;

        let mut h: Tensor<T> = Tensor::zeros(&[n, d, s]);
        let mut y_prev = h0.clone();
        let mut trace = Vec::with_capacity(self.cfg.layers);
        for l in 1..=self.cfg.layers {
            let gates = if self.cfg.nspl && l > 1 {
                Some(match self.gate_override {
                    Some(o) => {
                        let v = if o == GateOverride::ForceOn {
                            T::one()
                        } else {
                            T::zero()
                        };
                        (Tensor::full(&[n, 1], v), Tensor::full(&[n, 1], v))
                    }
                    None => {
                        let hard = !training || self.cfg.gate_mode == GateMode::Hard;
                        let noise = training.then_some(&mut gate_rng);
                        nspl_gates(
                            &y_prev,
                            self.params.get("w1")?,
                            self.params.get("w2")?,
                            tau,
                            hard,
                            noise,
                        )?
                    }
                })
            } else {
                None
            };
            let input = match self.cfg.carrier {
                Carrier::State => &h,
                Carrier::Readout => &y_prev,
            };
            let (agg, a_l) = match &gates {
                Some((s1, s2)) => {
                    let (agg, a_l) = gated_mal(&ctx.a_tilde, s1, s2, input)?;
                    (agg, Some(a_l))
                }
                None => (mal(&ctx.a_hat, input)?, None),
            };
            h = match self.cfg.carrier {
                Carrier::State => ssm_step(&agg, &h0, &node)?,
                Carrier::Readout => ssm_step(&h, &agg, &node)?,
            };
            let y = ssm_readout(&h, &node)?;

            let mut record = LayerRecord::new(&y, a_l.as_ref().unwrap_or(&ctx.a_tilde), &ctx.a_tilde);
            if let Some((s1, s2)) = &gates {
                let on = |t: &Tensor<T>| t.data().iter().filter(|&&v| v > T::lit(0.5)).count() as f64 / n.max(1) as f64;
                record.s1_on = Some(on(s1));
                record.s2_on = Some(on(s2));
            }
            trace.push(record);
            y_prev = y;
        }
        let logits = matmul(&y_prev, self.params.get("w_out")?)?;
        Ok(Forward { logits, trace })
    }
}

/// Frozen Glorot lower-triangular matrix with a strictly negative diagonal.
fn random_state_matrix<T: Scalar>(s: usize, rng: &mut Rng) -> Tensor<T> {
    let mut m: Vec<T> = glorot_uniform_values(s, s, rng);
    for i in 0..s {
        for j in i + 1..s {
            m[i * s + j] = T::zero();
        }
        m[i * s + i] = -m[i * s + i].abs().max(T::lit(1e-3));
    }
    Tensor::constant(vec![s, s], m)
}
