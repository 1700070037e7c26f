use super::{add_self_loops, normalize_adjacency, GraphDataset};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;
use crate::tensor::Tensor;

/// Per-dataset quantities shared by every model and epoch.
#[derive(Clone, Debug)]
pub struct GraphContext<T: Scalar> {
    /// Binary adjacency with self-loops.
    pub a_tilde: SparseMatrix<T>,
    /// Symmetric normalized `Ã`.
    pub a_hat: SparseMatrix<T>,
    pub features: Tensor<T>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl<T: Scalar> GraphContext<T> {
    pub fn new(ds: &GraphDataset<T>) -> Result<Self> {
        let a_tilde = add_self_loops(&ds.adjacency)?;
        let a_hat = normalize_adjacency(&a_tilde)?;
        Ok(Self {
            a_tilde,
            a_hat,
            features: ds.features.detach(),
            labels: ds.labels.clone(),
            num_classes: ds.num_classes,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn num_features(&self) -> usize {
        self.features.shape()[1]
    }
}
