//! Synthetic node-classification graphs (a contextual stochastic block
//! model with bag-of-words features).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphDataset;
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub nodes: usize,
    pub classes: usize,
    /// Vocabulary size, split evenly into one block per class.
    pub features: usize,
    pub avg_degree: f64,
    /// Probability that an edge joins two nodes of the same class.
    pub homophily: f64,
    pub words_per_node: usize,
    /// Probability that a word comes from the node's class block.
    pub signal: f64,
}

impl Default for SbmParams {
    fn default() -> Self {
        Self {
            nodes: 600,
            classes: 4,
            features: 120,
            avg_degree: 4.0,
            homophily: 0.8,
            words_per_node: 12,
            signal: 0.4,
        }
    }
}

pub fn contextual_sbm<T: Scalar>(p: &SbmParams, seed: u64) -> Result<GraphDataset<T>> {
    if p.nodes < 2 || p.classes == 0 || p.classes > p.nodes || p.features < p.classes {
        return Err(Error::Config(format!("unusable SBM parameters {p:?}")));
    }
    if !(0.0..=1.0).contains(&p.homophily) || !(0.0..=1.0).contains(&p.signal) || !(p.avg_degree >= 0.0) {
        return Err(Error::Config(format!("SBM probabilities out of range: {p:?}")));
    }
    let mut rng = Rng::new(seed);
    let mut labels: Vec<usize> = (0..p.nodes).map(|i| i % p.classes).collect();
    rng.shuffle(&mut labels);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); p.classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }

    let target = (p.nodes as f64 * p.avg_degree / 2.0).round() as usize;
    let mut edges = Vec::with_capacity(target);
    for _ in 0..target {
        let u = rng.below(p.nodes);
        let same = p.classes == 1 || rng.uniform() < p.homophily;
        let v = if same {
            let pool = &by_class[labels[u]];
            pool[rng.below(pool.len())]
        } else {
            loop {
                let v = rng.below(p.nodes);
                if labels[v] != labels[u] {
                    break v;
                }
            }
        };
        edges.push((u, v));
    }

    let block = p.features / p.classes;
    let mut x = vec![T::zero(); p.nodes * p.features];
    for (i, &y) in labels.iter().enumerate() {
        for _ in 0..p.words_per_node {
            let w = if rng.uniform() < p.signal {
                y * block + rng.below(block)
            } else {
                rng.below(p.features)
            };
            x[i * p.features + w] = T::one();
        }
    }
    let features = Tensor::new(&[p.nodes, p.features], x)?;
    GraphDataset::from_edges("synthetic", edges, features, labels, p.classes)
}
