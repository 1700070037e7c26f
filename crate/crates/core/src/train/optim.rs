use crate::error::{Error, Result};
use crate::model::ParamStore;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// First and second moment buffers for one tensor.
#[derive(Clone, Debug)]
pub struct Moments<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> Moments<T> {
    pub fn zeros(len: usize) -> Self {
        Self {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
        }
    }
}

/// One decoupled-weight-decay Adam update of `params` in place. `t` counts
/// from 1.
pub fn adam_step<T: Scalar>(
    params: &mut [T],
    grads: &[T],
    moments: &mut Moments<T>,
    t: u64,
    h: &AdamHyper,
) -> Result<()> {
    if grads.len() != params.len() || moments.m.len() != params.len() || moments.v.len() != params.len() {
        return Err(Error::shape(
            "adam_step",
            format!(
                "{} params, {} grads, {} moments",
                params.len(),
                grads.len(),
                moments.m.len()
            ),
        ));
    }
    let (b1, b2) = (T::lit(h.beta1), T::lit(h.beta2));
    let c1 = T::one() - T::lit(h.beta1.powi(t as i32));
    let c2 = T::one() - T::lit(h.beta2.powi(t as i32));
    let (lr, eps, decay) = (T::lit(h.lr), T::lit(h.eps), T::lit(h.lr * h.weight_decay));
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut moments.m).zip(&mut moments.v) {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let mhat = *m / c1;
        let vhat = *v / c2;
        *p = *p - decay * *p - lr * mhat / (vhat.sqrt() + eps);
    }
    Ok(())
}

/// AdamW over every tensor of a [`ParamStore`].
#[derive(Clone, Debug)]
pub struct AdamW<T> {
    pub hyper: AdamHyper,
    t: u64,
    moments: Vec<Moments<T>>,
}

impl<T: Scalar> AdamW<T> {
    pub fn new(hyper: AdamHyper) -> Self {
        Self {
            hyper,
            t: 0,
            moments: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Reads the accumulated gradients, updates every parameter and leaves
    /// fresh leaves with empty gradients in the store. A parameter without a
    /// gradient is treated as having a zero gradient.
    pub fn step(&mut self, store: &mut ParamStore<T>) -> Result<()> {
        if self.moments.is_empty() {
            self.moments = store.iter().map(|(_, t)| Moments::zeros(t.len())).collect();
        }
        if self.moments.len() != store.len() {
            return Err(Error::State("parameter set changed between optimizer steps".into()));
        }
        let grads: Vec<Vec<T>> = store
            .iter()
            .map(|(_, t)| t.grad().unwrap_or_else(|| vec![T::zero(); t.len()]))
            .collect();
        for ((name, _), g) in store.iter().zip(&grads) {
            let bad = g.iter().filter(|v| !v.is_finite()).count();
            if bad > 0 {
                return Err(Error::NonFiniteGradient {
                    param: name.to_string(),
                    count: bad,
                    len: g.len(),
                });
            }
        }
        self.t += 1;
        for (((_, tensor), g), mom) in store.iter_mut().zip(&grads).zip(&mut self.moments) {
            let mut data = tensor.to_vec();
            adam_step(&mut data, g, mom, self.t, &self.hyper)?;
            *tensor = Tensor::param(tensor.shape(), data)?;
        }
        Ok(())
    }
}
