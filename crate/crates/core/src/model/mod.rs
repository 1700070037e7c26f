//! MbaGCN network, GCN and SGC baselines, checkpoints.

mod baselines;
mod checkpoint;
mod gates;
mod mbagcn;

pub use baselines::{propagate_features, Gcn, Sgc};
pub use checkpoint::{Checkpoint, StoredTensor, CHECKPOINT_FORMAT};
pub use gates::{gate_weights, gated_mal, mask_adjacency, nspl_gates};
pub use mbagcn::{mal, GateOverride, MbaGcn};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphContext;
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Mbagcn,
    Gcn,
    Sgc,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mbagcn => "mbagcn",
            Self::Gcn => "gcn",
            Self::Sgc => "sgc",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mbagcn" => Ok(Self::Mbagcn),
            "gcn" => Ok(Self::Gcn),
            "sgc" => Ok(Self::Sgc),
            _ => Err(Error::Config(format!("unknown model kind {s:?}"))),
        }
    }
}

/// What flows from one layer to the next.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Carrier {
    /// The `[n × d × s]` state is aggregated and re-fed.
    #[default]
    State,
    /// The `[n × d]` readout is aggregated and becomes the next SSM input.
    Readout,
}

/// Forward value of the training-time gates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateMode {
    /// One-hot samples with straight-through gradients.
    #[default]
    Hard,
    /// Relaxed samples in (0, 1).
    Soft,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Train,
    Eval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub layers: usize,
    pub hidden_dim: usize,
    pub state_dim: usize,
    pub dropout: f64,
    pub tau: f64,
    pub delta_floor: f64,
    pub nspl: bool,
    pub hippo: bool,
    pub input_related: bool,
    pub carrier: Carrier,
    pub gate_mode: GateMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Mbagcn,
            layers: 2,
            hidden_dim: 64,
            state_dim: crate::ssm::DEFAULT_STATE_DIM,
            dropout: 0.5,
            tau: 1.0,
            delta_floor: crate::ssm::DEFAULT_DELTA_FLOOR,
            nspl: true,
            hippo: true,
            input_related: true,
            carrier: Carrier::State,
            gate_mode: GateMode::Hard,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.layers == 0 && self.kind != ModelKind::Sgc {
            return bad("model.layers must be at least 1".into());
        }
        if self.hidden_dim == 0 {
            return bad("model.hidden_dim must be at least 1".into());
        }
        if self.state_dim == 0 {
            return bad("model.state_dim must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("model.dropout must lie in [0, 1), got {}", self.dropout));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("model.tau must be positive, got {}", self.tau));
        }
        if !(self.delta_floor > 0.0 && self.delta_floor.is_finite()) {
            return bad(format!("model.delta_floor must be positive, got {}", self.delta_floor));
        }
        Ok(())
    }
}

/// Named learnable tensors in insertion order.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T: Scalar> {
    entries: Vec<(String, Tensor<T>)>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor<T>) {
        let name = name.into();
        let value = value.detach_with_grad(true);
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((name, value)),
        }
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::State(format!("no parameter named {name:?}")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| n == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor<T>)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalars.
    pub fn num_values(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn zero_grad(&self) {
        self.entries.iter().for_each(|(_, t)| t.zero_grad());
    }
}

/// Per-layer diagnostics.
#[derive(Clone, Debug)]
pub struct LayerRecord<T: Scalar> {
    /// Layer output `[n × d]`, detached.
    pub y: Tensor<T>,
    /// Stored entries of the layer's adjacency, self-loops included.
    pub edges: usize,
    /// Diagonal entries equal to 1.
    pub self_loops: usize,
    /// Every stored entry is also an entry of `Ã`.
    pub subgraph: bool,
    pub s1_on: Option<f64>,
    pub s2_on: Option<f64>,
}

impl<T: Scalar> LayerRecord<T> {
    pub(crate) fn new(y: &Tensor<T>, a_l: &SparseMatrix<T>, a_tilde: &SparseMatrix<T>) -> Self {
        let self_loops = (0..a_l.rows()).filter(|&i| a_l.get(i, i) == T::one()).count();
        let subgraph = a_l.iter().all(|(i, j, _)| a_tilde.contains(i, j));
        Self {
            y: y.detach(),
            edges: a_l.nnz(),
            self_loops,
            subgraph,
            s1_on: None,
            s2_on: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Forward<T: Scalar> {
    /// `[n × c]`.
    pub logits: Tensor<T>,
    pub trace: Vec<LayerRecord<T>>,
}

/// Any of the supported architectures.
#[derive(Clone, Debug)]
pub enum Network<T: Scalar> {
    MbaGcn(MbaGcn<T>),
    Gcn(Gcn<T>),
    Sgc(Sgc<T>),
}

impl<T: Scalar> Network<T> {
    pub fn build(cfg: &ModelConfig, ctx: &GraphContext<T>, seed: u64) -> Result<Self> {
        cfg.validate()?;
        Ok(match cfg.kind {
            ModelKind::Mbagcn => Self::MbaGcn(MbaGcn::new(cfg, ctx.num_features(), ctx.num_classes, seed)?),
            ModelKind::Gcn => Self::Gcn(Gcn::new(cfg, ctx.num_features(), ctx.num_classes, seed)?),
            ModelKind::Sgc => Self::Sgc(Sgc::new(cfg, ctx, seed)?),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        match self {
            Self::MbaGcn(m) => m.config(),
            Self::Gcn(m) => m.config(),
            Self::Sgc(m) => m.config(),
        }
    }

    /// `seed` drives dropout and Gumbel noise for this pass only.
    pub fn forward(&self, ctx: &GraphContext<T>, phase: Phase, seed: u64) -> Result<Forward<T>> {
        match self {
            Self::MbaGcn(m) => m.forward(ctx, phase, seed),
            Self::Gcn(m) => m.forward(ctx, phase, seed),
            Self::Sgc(m) => m.forward(ctx, phase, seed),
        }
    }

    pub fn params(&self) -> &ParamStore<T> {
        match self {
            Self::MbaGcn(m) => &m.params,
            Self::Gcn(m) => &m.params,
            Self::Sgc(m) => &m.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        match self {
            Self::MbaGcn(m) => &mut m.params,
            Self::Gcn(m) => &mut m.params,
            Self::Sgc(m) => &mut m.params,
        }
    }

    /// Frozen tensors that a checkpoint must carry.
    pub fn buffers(&self) -> Vec<(&'static str, &Tensor<T>)> {
        match self {
            Self::MbaGcn(m) => vec![("p", m.state_matrix())],
            _ => Vec::new(),
        }
    }
}
