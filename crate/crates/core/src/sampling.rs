//! Stochastic operations: Gumbel-Softmax sampling and dropout.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::ops::{softmax_into, softmax_vjp};
use crate::tensor::Tensor;

/// Source of the Gumbel perturbation.
pub enum GumbelNoise<'a> {
    Sampled(&'a mut Rng),
    /// No perturbation: the soft output is `softmax(logits / tau)` and the
    /// hard output is its argmax.
    Off,
}

/// Row-wise Gumbel-Softmax sample of `[n, c]` logits at temperature `tau`.
///
/// With `hard`, the forward value is the one-hot argmax of each row (ties go
/// to the lowest index) while the backward pass differentiates the soft
/// sample (straight-through).
pub fn gumbel_softmax<T: Scalar>(logits: &Tensor<T>, tau: T, hard: bool, noise: GumbelNoise<'_>) -> Result<Tensor<T>> {
    if !(tau > T::zero()) {
        return Err(Error::domain(
            "gumbel_softmax",
            format!("tau must be positive, got {tau}"),
        ));
    }
    let (n, c) = logits.dims2("gumbel_softmax")?;
    let mut perturbed: Vec<T> = logits.to_vec();
    if let GumbelNoise::Sampled(rng) = noise {
        for v in perturbed.iter_mut() {
            *v += T::lit(rng.gumbel());
        }
    }
    perturbed.iter_mut().for_each(|v| *v = *v / tau);

    let mut soft = vec![T::zero(); n * c];
    if c > 0 {
        for (src, dst) in perturbed.chunks(c).zip(soft.chunks_mut(c)) {
            softmax_into(src, dst);
        }
    }
    let out = if hard {
        let mut onehot = vec![T::zero(); n * c];
        if c > 0 {
            for (row, dst) in soft.chunks(c).zip(onehot.chunks_mut(c)) {
                dst[argmax(row)] = T::one();
            }
        }
        onehot
    } else {
        soft.clone()
    };
    Ok(Tensor::from_op(
        vec![n, c],
        out,
        vec![logits.clone()],
        Box::new(move |g| {
            let mut gl = softmax_vjp(&soft, g, c);
            gl.iter_mut().for_each(|v| *v = *v / tau);
            vec![Some(gl)]
        }),
    ))
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Inverted dropout: zeroes each entry with probability `p` and scales the
/// survivors by `1/(1-p)`.
pub fn dropout<T: Scalar>(x: &Tensor<T>, p: f64, rng: &mut Rng) -> Result<Tensor<T>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::domain("dropout", format!("p must lie in [0, 1), got {p}")));
    }
    if p == 0.0 {
        return Ok(x.clone());
    }
    let keep = T::lit(1.0 / (1.0 - p));
    let mask: Vec<T> = (0..x.len())
        .map(|_| if rng.uniform() < p { T::zero() } else { keep })
        .collect();
    let data = x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
    Ok(Tensor::from_op(
        x.shape().to_vec(),
        data,
        vec![x.clone()],
        Box::new(move |g| vec![Some(g.iter().zip(&mask).map(|(&g, &m)| g * m).collect())]),
    ))
}
