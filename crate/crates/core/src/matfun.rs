//! Matrix functions of lower-triangular matrices.
//!
//! `exp(z)` and `φ₁(z) = (e^z − I) z⁻¹ = Σ_k z^k/(k+1)!` are evaluated together
//! by scaling and squaring: the argument is halved until its 1-norm is below
//! [`SCALED_NORM`], both truncated Taylor series are summed for the scaled
//! matrix, and the result is doubled back with
//!
//! ```text
//! exp(2w) = exp(w)²        φ₁(2w) = ½ φ₁(w) (exp(w) + I)
//! ```
//!
//! The series form never inverts `z`, so `φ₁` stays well defined as `z → 0`.
//! Products of lower-triangular matrices stay lower-triangular and their
//! diagonals are the products of the diagonals, so after every stage the
//! diagonal is overwritten with the exact scalar values `e^{w_ii}` and
//! `φ₁(w_ii)`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Series terms stop once their 1-norm falls below this.
const TERM_TOL: f64 = 1e-16;
const MAX_TERMS: usize = 60;
const SCALED_NORM: f64 = 0.5;

/// Scalar `(e^x − 1)/x`, equal to 1 at 0.
pub fn phi1_scalar<T: Scalar>(x: T) -> T {
    if x == T::zero() {
        T::one()
    } else {
        x.exp_m1() / x
    }
}

fn norm1<T: Scalar>(m: &[T], s: usize) -> T {
    (0..s)
        .map(|j| (0..s).map(|i| m[i * s + j].abs()).fold(T::zero(), |a, b| a + b))
        .fold(T::zero(), T::max)
}

/// Product of two lower-triangular `s×s` matrices.
pub(crate) fn tril_matmul<T: Scalar>(a: &[T], b: &[T], s: usize) -> Vec<T> {
    let mut out = vec![T::zero(); s * s];
    for i in 0..s {
        for j in 0..=i {
            let mut acc = T::zero();
            for k in j..=i {
                acc += a[i * s + k] * b[k * s + j];
            }
            out[i * s + j] = acc;
        }
    }
    out
}

pub(crate) fn validate_tril<T: Scalar>(op: &'static str, m: &[T], s: usize, t: T) -> Result<()> {
    if m.len() != s * s {
        return Err(Error::shape(op, format!("{} entries for {s}×{s}", m.len())));
    }
    if !(t > T::zero()) {
        return Err(Error::domain(op, format!("step must be positive, got {t}")));
    }
    if !t.is_finite() || m.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric(op, "non-finite input"));
    }
    for i in 0..s {
        for j in i + 1..s {
            if m[i * s + j] != T::zero() {
                return Err(Error::domain(
                    op,
                    format!("matrix is not lower-triangular at ({i}, {j})"),
                ));
            }
        }
    }
    Ok(())
}

/// `(exp(t·m), φ₁(t·m))` for a lower-triangular `s×s` matrix `m`.
///
/// Inputs are assumed validated (see [`validate_tril`]).
pub(crate) fn tril_exp_phi1<T: Scalar>(m: &[T], s: usize, t: T) -> (Vec<T>, Vec<T>) {
    let z: Vec<T> = m.iter().map(|&v| v * t).collect();
    let norm = norm1(&z, s);
    let theta = T::lit(SCALED_NORM);
    let squarings = if norm > theta {
        (norm / theta).log2().ceil().to_usize().unwrap_or(0)
    } else {
        0
    };
    let factor = T::lit(0.5).powi(squarings as i32);
    let w: Vec<T> = z.iter().map(|&v| v * factor).collect();

    let mut e = identity(s);
    let mut f = identity(s);
    let mut term = identity(s);
    let tol = T::lit(TERM_TOL);
    for k in 1..=MAX_TERMS {
        let kf = T::from_usize_lossy(k);
        term = tril_matmul(&term, &w, s);
        term.iter_mut().for_each(|v| *v /= kf);
        let next = kf + T::one();
        for ((ev, fv), &tv) in e.iter_mut().zip(f.iter_mut()).zip(&term) {
            *ev += tv;
            *fv += tv / next;
        }
        if norm1(&term, s) < tol {
            break;
        }
    }

    let mut diag: Vec<T> = (0..s).map(|i| w[i * s + i]).collect();
    fix_diagonal(&mut e, &mut f, &diag, s);
    let half = T::lit(0.5);
    for _ in 0..squarings {
        let mut e_plus_i = e.clone();
        for i in 0..s {
            e_plus_i[i * s + i] += T::one();
        }
        f = tril_matmul(&f, &e_plus_i, s);
        f.iter_mut().for_each(|v| *v *= half);
        e = tril_matmul(&e, &e, s);
        diag.iter_mut().for_each(|d| *d = *d + *d);
        fix_diagonal(&mut e, &mut f, &diag, s);
    }
    (e, f)
}

fn fix_diagonal<T: Scalar>(e: &mut [T], f: &mut [T], diag: &[T], s: usize) {
    for (i, &d) in diag.iter().enumerate() {
        e[i * s + i] = d.exp();
        f[i * s + i] = phi1_scalar(d);
    }
}

fn identity<T: Scalar>(s: usize) -> Vec<T> {
    let mut m = vec![T::zero(); s * s];
    for i in 0..s {
        m[i * s + i] = T::one();
    }
    m
}

fn square_dim<T: Scalar>(op: &'static str, m: &Tensor<T>) -> Result<usize> {
    let (r, c) = m.dims2(op)?;
    if r != c {
        return Err(Error::shape(op, format!("expected square matrix, got {r}×{c}")));
    }
    Ok(r)
}

/// Matrix exponential `exp(t·m)` of a lower-triangular matrix.
pub fn tril_expm<T: Scalar>(m: &Tensor<T>, t: T) -> Result<Tensor<T>> {
    let s = square_dim("tril_expm", m)?;
    validate_tril("tril_expm", m.data(), s, t)?;
    let (e, _) = tril_exp_phi1(m.data(), s, t);
    Tensor::new(&[s, s], e)
}

/// `φ₁(t·m)` of a lower-triangular matrix, the factor that turns `Δ·Q` into
/// the zero-order-hold input matrix.
pub fn phi1<T: Scalar>(m: &Tensor<T>, t: T) -> Result<Tensor<T>> {
    let s = square_dim("phi1", m)?;
    validate_tril("phi1", m.data(), s, t)?;
    let (_, f) = tril_exp_phi1(m.data(), s, t);
    Tensor::new(&[s, s], f)
}
