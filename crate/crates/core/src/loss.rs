use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::ops::softmax_into;
use crate::tensor::Tensor;

/// Mean cross-entropy of `[n, c]` logits over the nodes selected by `mask`.
pub fn softmax_xent<T: Scalar>(logits: &Tensor<T>, labels: &[usize], mask: &[bool]) -> Result<Tensor<T>> {
    let (n, c) = logits.dims2("softmax_xent")?;
    if labels.len() != n || mask.len() != n {
        return Err(Error::shape(
            "softmax_xent",
            format!("{n} rows, {} labels, {} mask entries", labels.len(), mask.len()),
        ));
    }
    if let Some(&bad) = labels.iter().zip(mask).find(|(&l, &m)| m && l >= c).map(|(l, _)| l) {
        return Err(Error::domain(
            "softmax_xent",
            format!("label {bad} outside {c} classes"),
        ));
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::domain("softmax_xent", "mask selects no nodes"));
    }
    let inv = T::one() / T::from_usize_lossy(count);

    let mut probs = vec![T::zero(); n * c];
    let mut total = T::zero();
    for i in (0..n).filter(|&i| mask[i]) {
        let row = &logits.data()[i * c..(i + 1) * c];
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
        total += lse - row[labels[i]];
        softmax_into(row, &mut probs[i * c..(i + 1) * c]);
    }
    let labels = labels.to_vec();
    let mask = mask.to_vec();
    Ok(Tensor::from_op(
        Vec::new(),
        vec![total * inv],
        vec![logits.clone()],
        Box::new(move |g| {
            let scale = g[0] * inv;
            let mut gl = vec![T::zero(); n * c];
            for i in (0..n).filter(|&i| mask[i]) {
                for j in 0..c {
                    gl[i * c + j] = probs[i * c + j] * scale;
                }
                gl[i * c + labels[i]] -= scale;
            }
            vec![Some(gl)]
        }),
    ))
}
