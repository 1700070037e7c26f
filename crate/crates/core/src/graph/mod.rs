//! Graph datasets: on-disk packages, adjacency preprocessing and splits.

mod adjacency;
mod context;
mod dataset;
mod splits;

pub use adjacency::{add_self_loops, normalize_adjacency, normalized_weight};
pub use context::GraphContext;
pub use dataset::{load_dataset, save_dataset, DatasetMeta, GraphDataset, Split};
pub use splits::{make_splits, split_sizes};
