use super::{Forward, LayerRecord, ModelConfig, ParamStore, Phase};
use crate::error::Result;
use crate::graph::GraphContext;
use crate::init::glorot_uniform;
use crate::rng::{derive_seed, tag, Rng};
use crate::sampling::dropout;
use crate::scalar::Scalar;
use crate::sparse::spmm;
use crate::tensor::{matmul, relu, Tensor};

/// `H_l = relu(Â·dropout(H_{l−1})·W_l)` for `l = 1..L`, then a linear head.
#[derive(Clone, Debug)]
pub struct Gcn<T: Scalar> {
    cfg: ModelConfig,
    pub(crate) params: ParamStore<T>,
    /// Off only in tests that look at bare propagation.
    pub activation: bool,
}

impl<T: Scalar> Gcn<T> {
    pub fn new(cfg: &ModelConfig, d_in: usize, classes: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = Rng::new(derive_seed(seed, &[tag("init")]));
        let mut params = ParamStore::new();
        let d = cfg.hidden_dim;
        for l in 1..=cfg.layers {
            let fan_in = if l == 1 { d_in } else { d };
            params.insert(format!("w_{l}"), glorot_uniform(fan_in, d, &mut rng));
        }
        params.insert("w_out", glorot_uniform(d, classes, &mut rng));
        Ok(Self {
            cfg: cfg.clone(),
            params,
            activation: true,
        })
    }

    pub fn from_parts(cfg: &ModelConfig, params: ParamStore<T>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            params,
            activation: true,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    /// Hidden representations after each layer, without the head.
    pub fn propagate(&self, ctx: &GraphContext<T>, phase: Phase, seed: u64) -> Result<Vec<Tensor<T>>> {
        let mut rng = Rng::new(derive_seed(seed, &[tag("dropout")]));
        let train = phase == Phase::Train;
        let mut h = ctx.features.clone();
        let mut out = Vec::with_capacity(self.cfg.layers);
        for l in 1..=self.cfg.layers {
            if train {
                h = dropout(&h, self.cfg.dropout, &mut rng)?;
            }
            h = spmm(&ctx.a_hat, &matmul(&h, self.params.get(&format!("w_{l}"))?)?)?;
            if self.activation {
                h = relu(&h);
            }
            out.push(h.clone());
        }
        Ok(out)
    }

    pub fn forward(&self, ctx: &GraphContext<T>, phase: Phase, seed: u64) -> Result<Forward<T>> {
        let layers = self.propagate(ctx, phase, seed)?;
        let mut rng = Rng::new(derive_seed(seed, &[tag("dropout-head")]));
        let mut h = layers.last().cloned().unwrap_or_else(|| ctx.features.clone());
        if phase == Phase::Train {
            h = dropout(&h, self.cfg.dropout, &mut rng)?;
        }
        let logits = matmul(&h, self.params.get("w_out")?)?;
        let trace = layers
            .iter()
            .map(|y| LayerRecord::new(y, &ctx.a_tilde, &ctx.a_tilde))
            .collect();
        Ok(Forward { logits, trace })
    }
}

/// Logistic regression on `Â^L X`, which is computed once.
#[derive(Clone, Debug)]
pub struct Sgc<T: Scalar> {
    cfg: ModelConfig,
    pub(crate) params: ParamStore<T>,
    propagated: Tensor<T>,
}

impl<T: Scalar> Sgc<T> {
    pub fn new(cfg: &ModelConfig, ctx: &GraphContext<T>, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = Rng::new(derive_seed(seed, &[tag("init")]));
        let mut params = ParamStore::new();
        params.insert("w", glorot_uniform(ctx.num_features(), ctx.num_classes, &mut rng));
        Self::from_parts(cfg, params, ctx)
    }

    pub fn from_parts(cfg: &ModelConfig, params: ParamStore<T>, ctx: &GraphContext<T>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            params,
            propagated: propagate_features(ctx, cfg.layers)?,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn propagated(&self) -> &Tensor<T> {
        &self.propagated
    }

    pub fn forward(&self, ctx: &GraphContext<T>, _phase: Phase, _seed: u64) -> Result<Forward<T>> {
        let logits = matmul(&self.propagated, self.params.get("w")?)?;
        let trace = if self.cfg.layers > 0 {
            vec![LayerRecord::new(&self.propagated, &ctx.a_tilde, &ctx.a_tilde)]
        } else {
            Vec::new()
        };
        Ok(Forward { logits, trace })
    }
}

/// `Â^k X` by repeated sparse products, without any learned weights.
pub fn propagate_features<T: Scalar>(ctx: &GraphContext<T>, k: usize) -> Result<Tensor<T>> {
    let mut x = ctx.features.detach();
    for _ in 0..k {
        x = spmm(&ctx.a_hat, &x)?;
    }
    Ok(x)
}
