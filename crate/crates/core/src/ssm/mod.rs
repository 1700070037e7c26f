//! Per-node selective state-space layers.
//!
//! Every node carries, for each feature channel, an `s`-dimensional state
//! driven by a scalar input. Depth plays the role of time.

mod hippo;
mod ops;

pub use hippo::hippo_legs;
pub use ops::{discretize, ssm_readout, ssm_step};

use crate::error::{Error, Result};
use crate::init::glorot_uniform;
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::{add_scalar, matmul, softplus, Tensor};

pub const DEFAULT_STATE_DIM: usize = 16;
pub const DEFAULT_DELTA_FLOOR: f64 = 1e-4;

/// Projections that turn node features into SSM inputs, plus the frozen
/// state matrix.
#[derive(Clone, Debug)]
pub struct SsmParams<T: Scalar> {
    pub state_dim: usize,
    /// `[s × s]`, lower-triangular, never trained.
    pub p: Tensor<T>,
    /// `[d × s]`.
    pub w_q: Tensor<T>,
    /// `[d × s]`.
    pub w_r: Tensor<T>,
    /// `[d × 1]`.
    pub w_delta: Tensor<T>,
    pub delta_floor: T,
}

impl<T: Scalar> SsmParams<T> {
    /// HiPPO-LegS state matrix with Glorot projections from width `d`.
    pub fn new(d: usize, state_dim: usize, delta_floor: T, rng: &mut Rng) -> Result<Self> {
        let p = hippo_legs(state_dim)?;
        Self::with_state_matrix(d, p, delta_floor, rng)
    }

    pub fn with_state_matrix(d: usize, p: Tensor<T>, delta_floor: T, rng: &mut Rng) -> Result<Self> {
        let (s, s2) = p.dims2("SsmParams")?;
        if s != s2 || s == 0 {
            return Err(Error::shape("SsmParams", format!("state matrix {s}×{s2}")));
        }
        if !(delta_floor > T::zero()) {
            return Err(Error::domain("SsmParams", "delta floor must be positive"));
        }
        Ok(Self {
            state_dim: s,
            p: p.detach(),
            w_q: glorot_uniform(d, s, rng),
            w_r: glorot_uniform(d, s, rng),
            w_delta: glorot_uniform(d, 1, rng),
            delta_floor,
        })
    }
}

/// Per-node SSM quantities. `p_bar` and `q_bar` are filled by [`discretize`].
#[derive(Clone, Debug)]
pub struct NodeSsm<T: Scalar> {
    /// `[n × s]`.
    pub q: Tensor<T>,
    /// `[n × s]`.
    pub r: Tensor<T>,
    /// `[n × 1]`, strictly positive.
    pub delta: Tensor<T>,
    /// `[n × s × s]`.
    pub p_bar: Option<Tensor<T>>,
    /// `[n × s]`.
    pub q_bar: Option<Tensor<T>>,
}

impl<T: Scalar> NodeSsm<T> {
    pub fn new(q: Tensor<T>, r: Tensor<T>, delta: Tensor<T>) -> Result<Self> {
        let (n, s) = q.dims2("NodeSsm")?;
        if r.shape() != [n, s] || delta.shape() != [n, 1] {
            return Err(Error::shape(
                "NodeSsm",
                format!("q {:?}, r {:?}, delta {:?}", q.shape(), r.shape(), delta.shape()),
            ));
        }
        Ok(Self {
            q,
            r,
            delta,
            p_bar: None,
            q_bar: None,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.q.shape()[0]
    }

    pub fn state_dim(&self) -> usize {
        self.q.shape()[1]
    }
}

/// `q = h0·W_Q`, `r = h0·W_R`, `Δ = softplus(h0·W_Δ) + floor`.
pub fn generate_inputs<T: Scalar>(h0: &Tensor<T>, params: &SsmParams<T>) -> Result<NodeSsm<T>> {
    let q = matmul(h0, &params.w_q)?;
    let r = matmul(h0, &params.w_r)?;
    let delta = add_scalar(&softplus(&matmul(h0, &params.w_delta)?), params.delta_floor);
    NodeSsm::new(q, r, delta)
}

/// All-zero state `[n × d × s]`.
pub fn zero_state<T: Scalar>(n: usize, d: usize, s: usize) -> Tensor<T> {
    Tensor::zeros(&[n, d, s])
}
