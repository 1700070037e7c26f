use crate::error::{Error, Result};
use crate::graph::normalize_adjacency;
use crate::rng::Rng;
use crate::sampling::{gumbel_softmax, GumbelNoise};
use crate::scalar::Scalar;
use crate::sparse::{spmm_kernel, SparseMatrix};
use crate::tensor::{matmul, select_column, Tensor};

/// Sender gates `s1` and receiver gates `s2`, each `[n × 1]`: column 0 of a
/// Gumbel-Softmax sample of `y_prev·w1` and `y_prev·w2`.
///
/// `noise = None` gives the noiseless evaluation gates.
pub fn nspl_gates<T: Scalar>(
    y_prev: &Tensor<T>,
    w1: &Tensor<T>,
    w2: &Tensor<T>,
    tau: T,
    hard: bool,
    mut noise: Option<&mut Rng>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let mut gate = |w: &Tensor<T>| -> Result<Tensor<T>> {
        let logits = matmul(y_prev, w)?;
        let noise = match noise.as_deref_mut() {
            Some(rng) => GumbelNoise::Sampled(rng),
            None => GumbelNoise::Off,
        };
        select_column(&gumbel_softmax(&logits, tau, hard, noise)?, 0)
    };
    let s1 = gate(w1)?;
    let s2 = gate(w2)?;
    Ok((s1, s2))
}

/// Weighted copy of `Ã` with `w_ij = s2_i · s1_j` off the diagonal and 1 on
/// it. Entries whose weight is exactly zero are dropped.
pub fn gate_weights<T: Scalar>(a_tilde: &SparseMatrix<T>, s1: &[T], s2: &[T]) -> Result<SparseMatrix<T>> {
    let n = a_tilde.rows();
    if !a_tilde.is_square() || s1.len() != n || s2.len() != n {
        return Err(Error::shape(
            "gate_weights",
            format!(
                "{}×{} adjacency, gates {} and {}",
                n,
                a_tilde.cols(),
                s1.len(),
                s2.len()
            ),
        ));
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(a_tilde.nnz());
    let mut vals = Vec::with_capacity(a_tilde.nnz());
    offsets.push(0);
    for i in 0..n {
        let (cj, _) = a_tilde.row(i);
        for &j in cj {
            let w = if i == j { T::one() } else { s2[i] * s1[j] };
            if w != T::zero() {
                cols.push(j);
                vals.push(w);
            }
        }
        offsets.push(cols.len());
    }
    SparseMatrix::new(n, n, offsets, cols, vals)
}

/// `A_l[i,j] = 1` iff `Ã[i,j] ≠ 0`, `s1[j]` and `s2[i]`; the diagonal is
/// always kept.
pub fn mask_adjacency<T: Scalar>(a_tilde: &SparseMatrix<T>, s1: &[bool], s2: &[bool]) -> Result<SparseMatrix<T>> {
    let to_t = |v: &[bool]| -> Vec<T> { v.iter().map(|&b| if b { T::one() } else { T::zero() }).collect() };
    gate_weights(a_tilde, &to_t(s1), &to_t(s2))
}

/// Aggregation over the gated, renormalized adjacency, differentiable in the
/// gates and in `x`. Returns the output and the unnormalized gated matrix.
///
/// The forward pass is `normalize_adjacency(gate_weights(..))` followed by a
/// sparse product, so fully open gates reproduce the ungated path exactly.
pub fn gated_mal<T: Scalar>(
    a_tilde: &SparseMatrix<T>,
    s1: &Tensor<T>,
    s2: &Tensor<T>,
    x: &Tensor<T>,
) -> Result<(Tensor<T>, SparseMatrix<T>)> {
    let n = a_tilde.rows();
    if s1.shape() != [n, 1] || s2.shape() != [n, 1] || x.shape().first() != Some(&n) {
        return Err(Error::shape(
            "gated_mal",
            format!(
                "gates {:?}/{:?}, input {:?} for {n} nodes",
                s1.shape(),
                s2.shape(),
                x.shape()
            ),
        ));
    }
    let weighted = gate_weights(a_tilde, s1.data(), s2.data())?;
    let a_l = normalize_adjacency(&weighted)?;
    let width = x.len().checked_div(n).unwrap_or(0);
    let out = spmm_kernel(&a_l, x.data(), width);

    let gates_need_grad = s1.requires_grad() || s2.requires_grad();
    let a_lt = x.requires_grad().then(|| a_l.transpose());
    let structure = gates_need_grad.then(|| a_tilde.clone());
    let (s1c, s2c, xc) = (s1.clone(), s2.clone(), x.clone());
    let degrees = weighted.row_sums();
    let tensor = Tensor::from_op(
        x.shape().to_vec(),
        out,
        vec![s1.clone(), s2.clone(), x.clone()],
        Box::new(move |g| {
            let gx = a_lt.as_ref().map(|t| spmm_kernel(t, g, width));
            let (gs1, gs2) = match &structure {
                Some(a) => gate_grads(a, s1c.data(), s2c.data(), &degrees, xc.data(), g, width),
                None => (vec![T::zero(); n], vec![T::zero(); n]),
            };
            vec![
                s1c.requires_grad().then_some(gs1),
                s2c.requires_grad().then_some(gs2),
                gx,
            ]
        }),
    );
    Ok((tensor, weighted))
}

/// With `c = d^{-1/2}` and `u_ij = g_i·x_j`:
/// `∂w_ij = c_i c_j u_ij + ∂d_i`, `∂d_k = −½ c_k³ ∂c_k`,
/// `∂c_k = Σ_j w_kj c_j u_kj + Σ_i w_ik c_i u_ik`.
fn gate_grads<T: Scalar>(
    a: &SparseMatrix<T>,
    s1: &[T],
    s2: &[T],
    degrees: &[T],
    x: &[T],
    g: &[T],
    width: usize,
) -> (Vec<T>, Vec<T>) {
    let n = a.rows();
    let c: Vec<T> = degrees.iter().map(|&d| T::one() / d.sqrt()).collect();
    let weight = |i: usize, j: usize| if i == j { T::one() } else { s2[i] * s1[j] };
    let u: Vec<T> = a
        .iter()
        .map(|(i, j, _)| {
            let (gi, xj) = (&g[i * width..(i + 1) * width], &x[j * width..(j + 1) * width]);
            gi.iter().zip(xj).map(|(&p, &q)| p * q).sum()
        })
        .collect();
    let mut gc = vec![T::zero(); n];
    for ((i, j, _), &uij) in a.iter().zip(&u) {
        let w = weight(i, j);
        gc[i] += w * c[j] * uij;
        gc[j] += w * c[i] * uij;
    }
    let half = T::lit(0.5);
    let gd: Vec<T> = gc
        .iter()
        .zip(&c)
        .map(|(&gck, &ck)| -half * ck * ck * ck * gck)
        .collect();
    let (mut gs1, mut gs2) = (vec![T::zero(); n], vec![T::zero(); n]);
    for ((i, j, _), &uij) in a.iter().zip(&u) {
        if i == j {
            continue;
        }
        let gw = c[i] * c[j] * uij + gd[i];
        gs1[j] += gw * s2[i];
        gs2[i] += gw * s1[j];
    }
    (gs1, gs2)
}
