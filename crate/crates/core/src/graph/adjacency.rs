use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

/// `Ã = A` with every diagonal entry set to 1.
pub fn add_self_loops<T: Scalar>(a: &SparseMatrix<T>) -> Result<SparseMatrix<T>> {
    if !a.is_square() {
        return Err(Error::shape(
            "add_self_loops",
            format!("{}×{} is not square", a.rows(), a.cols()),
        ));
    }
    let off_diagonal = a.iter().filter(|&(i, j, _)| i != j);
    let diagonal = (0..a.rows()).map(|i| (i, i, T::one()));
    SparseMatrix::from_triplets(a.rows(), a.cols(), off_diagonal.chain(diagonal))
}

/// Entry of `D^{-1/2} W D^{-1/2}` for weight `w` between rows of degree
/// `d_i` and `d_j`. Symmetric in `(d_i, d_j)` bit for bit.
#[inline]
pub fn normalized_weight<T: Scalar>(w: T, d_i: T, d_j: T) -> T {
    w / (d_i * d_j).sqrt()
}

/// `Â = D̃^{-1/2} Ã D̃^{-1/2}` with `D̃` the row sums of `Ã`.
pub fn normalize_adjacency<T: Scalar>(a_tilde: &SparseMatrix<T>) -> Result<SparseMatrix<T>> {
    if !a_tilde.is_square() {
        return Err(Error::shape(
            "normalize_adjacency",
            format!("{}×{} is not square", a_tilde.rows(), a_tilde.cols()),
        ));
    }
    let degrees = a_tilde.row_sums();
    if let Some(i) = degrees.iter().position(|&d| !(d > T::zero())) {
        return Err(Error::domain(
            "normalize_adjacency",
            format!("row {i} has non-positive degree"),
        ));
    }
    let values = a_tilde
        .iter()
        .map(|(i, j, w)| normalized_weight(w, degrees[i], degrees[j]))
        .collect();
    a_tilde.with_values(values)
}
