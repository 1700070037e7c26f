use rayon::prelude::*;

use super::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Below this many multiply-adds the kernels stay on the calling thread.
const PAR_WORK: usize = 1 << 16;

/// `a[m×k] · b[k×n]`, row-partitioned. Zero entries of `a` are skipped, which
/// pays off for bag-of-words feature matrices.
pub(crate) fn gemm<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m * n];
    if n == 0 {
        return out;
    }
    let row = |(i, o): (usize, &mut [T])| {
        for (p, &av) in a[i * k..(i + 1) * k].iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            for (ov, &bv) in o.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *ov += av * bv;
            }
        }
    };
    if m * k * n >= PAR_WORK {
        out.par_chunks_mut(n).enumerate().for_each(row);
    } else {
        out.chunks_mut(n).enumerate().for_each(row);
    }
    out
}

/// `a[m×k] · b[n×k]ᵀ`.
pub(crate) fn gemm_nt<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m * n];
    if n == 0 {
        return out;
    }
    let row = |(i, o): (usize, &mut [T])| {
        let ar = &a[i * k..(i + 1) * k];
        for (j, ov) in o.iter_mut().enumerate() {
            *ov = ar.iter().zip(&b[j * k..(j + 1) * k]).map(|(&x, &y)| x * y).sum();
        }
    };
    if m * k * n >= PAR_WORK {
        out.par_chunks_mut(n).enumerate().for_each(row);
    } else {
        out.chunks_mut(n).enumerate().for_each(row);
    }
    out
}

pub(crate) fn transpose_raw<T: Scalar>(a: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = vec![T::zero(); rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j];
        }
    }
    out
}

/// Dense product with gradients `g·bᵀ` and `aᵀ·g`.
pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (m, k) = a.dims2("matmul")?;
    let (k2, n) = b.dims2("matmul")?;
    if k != k2 {
        return Err(Error::shape("matmul", format!("[{m}×{k}] · [{k2}×{n}]")));
    }
    let data = gemm(a.data(), b.data(), m, k, n);
    let (ac, bc) = (a.clone(), b.clone());
    Ok(Tensor::from_op(
        vec![m, n],
        data,
        vec![a.clone(), b.clone()],
        Box::new(move |g| {
            let ga = ac.requires_grad().then(|| gemm_nt(g, bc.data(), m, n, k));
            let gb = bc.requires_grad().then(|| {
                let at = transpose_raw(ac.data(), m, k);
                gemm(&at, g, k, m, n)
            });
            vec![ga, gb]
        }),
    ))
}

pub fn transpose<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>> {
    let (r, c) = x.dims2("transpose")?;
    Ok(Tensor::from_op(
        vec![c, r],
        transpose_raw(x.data(), r, c),
        vec![x.clone()],
        Box::new(move |g| vec![Some(transpose_raw(g, c, r))]),
    ))
}

pub fn reshape<T: Scalar>(x: &Tensor<T>, shape: &[usize]) -> Result<Tensor<T>> {
    if shape.iter().product::<usize>() != x.len() {
        return Err(Error::shape("reshape", format!("{:?} -> {shape:?}", x.shape())));
    }
    Ok(Tensor::from_op(
        shape.to_vec(),
        x.to_vec(),
        vec![x.clone()],
        Box::new(|g| vec![Some(g.to_vec())]),
    ))
}

/// Concatenates rank-2 tensors along columns.
pub fn concat_cols<T: Scalar>(parts: &[Tensor<T>]) -> Result<Tensor<T>> {
    let first = parts.first().ok_or_else(|| Error::shape("concat_cols", "no inputs"))?;
    let (rows, _) = first.dims2("concat_cols")?;
    let mut widths = Vec::with_capacity(parts.len());
    for p in parts {
        let (r, c) = p.dims2("concat_cols")?;
        if r != rows {
            return Err(Error::shape("concat_cols", format!("row counts {rows} vs {r}")));
        }
        widths.push(c);
    }
    let total: usize = widths.iter().sum();
    let mut data = Vec::with_capacity(rows * total);
    for i in 0..rows {
        for (p, &w) in parts.iter().zip(&widths) {
            data.extend_from_slice(&p.data()[i * w..(i + 1) * w]);
        }
    }
    Ok(Tensor::from_op(
        vec![rows, total],
        data,
        parts.to_vec(),
        Box::new(move |g| {
            let mut out: Vec<Vec<T>> = widths.iter().map(|&w| Vec::with_capacity(rows * w)).collect();
            for i in 0..rows {
                let mut off = i * total;
                for (o, &w) in out.iter_mut().zip(&widths) {
                    o.extend_from_slice(&g[off..off + w]);
                    off += w;
                }
            }
            out.into_iter().map(Some).collect()
        }),
    ))
}
