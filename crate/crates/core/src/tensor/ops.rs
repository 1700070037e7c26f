use super::{check_same_shape, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn unary<T: Scalar>(x: &Tensor<T>, f: impl Fn(T) -> T, df: impl Fn(T) -> T + Send + Sync + 'static) -> Tensor<T> {
    let data = x.data().iter().map(|&v| f(v)).collect();
    let xc = x.clone();
    Tensor::from_op(
        x.shape().to_vec(),
        data,
        vec![x.clone()],
        Box::new(move |g| {
            let gx = g.iter().zip(xc.data()).map(|(&g, &v)| g * df(v)).collect();
            vec![Some(gx)]
        }),
    )
}

pub fn add<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    check_same_shape("add", a, b)?;
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| x + y).collect();
    Ok(Tensor::from_op(
        a.shape().to_vec(),
        data,
        vec![a.clone(), b.clone()],
        Box::new(|g| vec![Some(g.to_vec()), Some(g.to_vec())]),
    ))
}

pub fn sub<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    check_same_shape("sub", a, b)?;
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| x - y).collect();
    Ok(Tensor::from_op(
        a.shape().to_vec(),
        data,
        vec![a.clone(), b.clone()],
        Box::new(|g| vec![Some(g.to_vec()), Some(g.iter().map(|&v| -v).collect())]),
    ))
}

/// Elementwise product.
pub fn mul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    check_same_shape("mul", a, b)?;
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| x * y).collect();
    let (ac, bc) = (a.clone(), b.clone());
    Ok(Tensor::from_op(
        a.shape().to_vec(),
        data,
        vec![a.clone(), b.clone()],
        Box::new(move |g| {
            let ga = ac
                .requires_grad()
                .then(|| g.iter().zip(bc.data()).map(|(&g, &y)| g * y).collect());
            let gb = bc
                .requires_grad()
                .then(|| g.iter().zip(ac.data()).map(|(&g, &x)| g * x).collect());
            vec![ga, gb]
        }),
    ))
}

pub fn scale<T: Scalar>(x: &Tensor<T>, s: T) -> Tensor<T> {
    let data = x.data().iter().map(|&v| v * s).collect();
    Tensor::from_op(
        x.shape().to_vec(),
        data,
        vec![x.clone()],
        Box::new(move |g| vec![Some(g.iter().map(|&v| v * s).collect())]),
    )
}

pub fn add_scalar<T: Scalar>(x: &Tensor<T>, s: T) -> Tensor<T> {
    let data = x.data().iter().map(|&v| v + s).collect();
    Tensor::from_op(
        x.shape().to_vec(),
        data,
        vec![x.clone()],
        Box::new(|g| vec![Some(g.to_vec())]),
    )
}

pub fn neg<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    scale(x, -T::one())
}

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    unary(
        x,
        |v| if v > T::zero() { v } else { T::zero() },
        |v| if v > T::zero() { T::one() } else { T::zero() },
    )
}

/// `ln(1 + e^x)`, evaluated without overflow.
pub fn softplus<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    unary(
        x,
        |v| v.max(T::zero()) + (-v.abs()).exp().ln_1p(),
        |v| T::one() / (T::one() + (-v).exp()),
    )
}

pub fn sum_all<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let total = x.data().iter().copied().sum();
    let n = x.len();
    Tensor::from_op(
        Vec::new(),
        vec![total],
        vec![x.clone()],
        Box::new(move |g| vec![Some(vec![g[0]; n])]),
    )
}

pub fn mean_all<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>> {
    if x.is_empty() {
        return Err(Error::domain("mean_all", "empty tensor"));
    }
    Ok(scale(&sum_all(x), T::one() / T::from_usize_lossy(x.len())))
}

/// Softmax along the last axis of a rank-2 tensor.
pub fn row_softmax<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>> {
    let (rows, cols) = x.dims2("row_softmax")?;
    let mut out = vec![T::zero(); rows * cols];
    for (src, dst) in x.data().chunks(cols.max(1)).zip(out.chunks_mut(cols.max(1))) {
        softmax_into(src, dst);
    }
    let y = out.clone();
    Ok(Tensor::from_op(
        vec![rows, cols],
        out,
        vec![x.clone()],
        Box::new(move |g| vec![Some(softmax_vjp(&y, g, cols))]),
    ))
}

pub(crate) fn softmax_into<T: Scalar>(src: &[T], dst: &mut [T]) {
    let max = src.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = (s - max).exp();
        total += *d;
    }
    for d in dst.iter_mut() {
        *d /= total;
    }
}

/// Row-wise `y ⊙ (g − <g, y>)`.
pub(crate) fn softmax_vjp<T: Scalar>(y: &[T], g: &[T], cols: usize) -> Vec<T> {
    let mut out = vec![T::zero(); y.len()];
    if cols == 0 {
        return out;
    }
    for ((yr, gr), or) in y.chunks(cols).zip(g.chunks(cols)).zip(out.chunks_mut(cols)) {
        let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
        for ((o, &yv), &gv) in or.iter_mut().zip(yr).zip(gr) {
            *o = yv * (gv - dot);
        }
    }
    out
}

/// Column `j` of a rank-2 tensor as an `[rows, 1]` tensor.
pub fn select_column<T: Scalar>(x: &Tensor<T>, j: usize) -> Result<Tensor<T>> {
    let (rows, cols) = x.dims2("select_column")?;
    if j >= cols {
        return Err(Error::shape("select_column", format!("column {j} of {cols}")));
    }
    let data = (0..rows).map(|i| x.data()[i * cols + j]).collect();
    Ok(Tensor::from_op(
        vec![rows, 1],
        data,
        vec![x.clone()],
        Box::new(move |g| {
            let mut gx = vec![T::zero(); rows * cols];
            for i in 0..rows {
                gx[i * cols + j] = g[i];
            }
            vec![Some(gx)]
        }),
    ))
}

/// Repeats a `[1, k]` row `n` times.
pub fn broadcast_rows<T: Scalar>(x: &Tensor<T>, n: usize) -> Result<Tensor<T>> {
    let (r, k) = x.dims2("broadcast_rows")?;
    if r != 1 {
        return Err(Error::shape("broadcast_rows", format!("expected one row, got {r}")));
    }
    let data = x.data().repeat(n);
    Ok(Tensor::from_op(
        vec![n, k],
        data,
        vec![x.clone()],
        Box::new(move |g| {
            let mut gx = vec![T::zero(); k];
            for row in g.chunks(k.max(1)) {
                gx.iter_mut().zip(row).for_each(|(a, &b)| *a += b);
            }
            vec![Some(gx)]
        }),
    ))
}
