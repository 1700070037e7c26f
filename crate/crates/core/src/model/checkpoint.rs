use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Gcn, MbaGcn, ModelConfig, ModelKind, Network, ParamStore, Sgc};
use crate::error::{Error, Result};
use crate::graph::GraphContext;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const CHECKPOINT_FORMAT: &str = "mbagcn-checkpoint/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredTensor {
    pub shape: Vec<usize>,
    /// Row-major.
    pub values: Vec<f64>,
}

impl StoredTensor {
    pub fn from_tensor<T: Scalar>(t: &Tensor<T>) -> Self {
        Self {
            shape: t.shape().to_vec(),
            values: t.data().iter().map(|v| v.as_f64()).collect(),
        }
    }

    pub fn to_tensor<T: Scalar>(&self) -> Result<Tensor<T>> {
        Tensor::new(&self.shape, self.values.iter().map(|&v| T::lit(v)).collect())
            .map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

/// Model parameters and frozen buffers, keyed by name, plus the model config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub model: ModelConfig,
    pub num_features: usize,
    pub num_classes: usize,
    pub params: BTreeMap<String, StoredTensor>,
    pub buffers: BTreeMap<String, StoredTensor>,
}

impl Checkpoint {
    pub fn capture<T: Scalar>(net: &Network<T>, num_features: usize, num_classes: usize) -> Self {
        let params = net
            .params()
            .iter()
            .map(|(n, t)| (n.to_string(), StoredTensor::from_tensor(t)))
            .collect();
        let buffers = net
            .buffers()
            .into_iter()
            .map(|(n, t)| (n.to_string(), StoredTensor::from_tensor(t)))
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            model: net.config().clone(),
            num_features,
            num_classes,
            params,
            buffers,
        }
    }

    /// Rebuilds the network. Parameter names and shapes must match a fresh
    /// model of the same config.
    pub fn restore<T: Scalar>(&self, ctx: &GraphContext<T>) -> Result<Network<T>> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unsupported format {:?}", self.format)));
        }
        if self.num_features != ctx.num_features() || self.num_classes != ctx.num_classes {
            return Err(Error::Checkpoint(format!(
                "checkpoint is for {} features / {} classes, dataset has {} / {}",
                self.num_features,
                self.num_classes,
                ctx.num_features(),
                ctx.num_classes
            )));
        }
        let template = Network::<T>::build(&self.model, ctx, 0)?;
        let mut params = ParamStore::new();
        for (name, t) in template.params().iter() {
            let stored = self
                .params
                .get(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing parameter {name:?}")))?;
            if stored.shape != t.shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter {name:?} has shape {:?}, expected {:?}",
                    stored.shape,
                    t.shape()
                )));
            }
            params.insert(name, stored.to_tensor()?);
        }
        if let Some(extra) = self.params.keys().find(|k| !template.params().contains(k)) {
            return Err(Error::Checkpoint(format!("unexpected parameter {extra:?}")));
        }
        Ok(match self.model.kind {
            ModelKind::Mbagcn => {
                let p = self
                    .buffers
                    .get("p")
                    .ok_or_else(|| Error::Checkpoint("missing buffer \"p\"".into()))?
                    .to_tensor()?;
                Network::MbaGcn(MbaGcn::from_parts(&self.model, params, p)?)
            }
            ModelKind::Gcn => Network::Gcn(Gcn::from_parts(&self.model, params)?),
            ModelKind::Sgc => Network::Sgc(Sgc::from_parts(&self.model, params, ctx)?),
        })
    }
}
