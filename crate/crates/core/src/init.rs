use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Glorot-uniform values for a `[fan_in, fan_out]` weight.
pub fn glorot_uniform_values<T: Scalar>(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Vec<T> {
    let limit = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
    (0..fan_in * fan_out)
        .map(|_| T::lit(rng.uniform_range(-limit, limit)))
        .collect()
}

/// Learnable `[fan_in, fan_out]` leaf drawn Glorot-uniform.
pub fn glorot_uniform<T: Scalar>(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Tensor<T> {
    Tensor::param(&[fan_in, fan_out], glorot_uniform_values(fan_in, fan_out, rng)).expect("shape matches value count")
}
