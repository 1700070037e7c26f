pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod init;
pub mod loss;
pub mod matfun;
pub mod model;
pub mod rng;
pub mod sampling;
pub mod scalar;
pub mod sparse;
pub mod ssm;
pub mod synthetic;
pub mod tensor;
pub mod train;

pub use error::{Error, ErrorKind, Result};
pub use rng::Rng;
pub use scalar::Scalar;

pub type Tensor64 = tensor::Tensor<f64>;
pub type Tensor32 = tensor::Tensor<f32>;
pub type SparseMatrix64 = sparse::SparseMatrix<f64>;
pub type SparseMatrix32 = sparse::SparseMatrix<f32>;
pub type GraphDataset64 = graph::GraphDataset<f64>;
pub type GraphDataset32 = graph::GraphDataset<f32>;
pub type GraphContext64 = graph::GraphContext<f64>;
pub type GraphContext32 = graph::GraphContext<f32>;
pub type Network64 = model::Network<f64>;
pub type Network32 = model::Network<f32>;
