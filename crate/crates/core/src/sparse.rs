//! Compressed sparse row matrices and the sparse–dense product.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// CSR matrix with sorted, duplicate-free column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn new(
        rows: usize,
        cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if row_offsets.len() != rows + 1 {
            return Err(Error::Sparse(format!(
                "row_offsets has length {} for {rows} rows",
                row_offsets.len()
            )));
        }
        if row_offsets[0] != 0 || row_offsets[rows] != col_indices.len() {
            return Err(Error::Sparse(format!(
                "row_offsets must run from 0 to nnz={}",
                col_indices.len()
            )));
        }
        if col_indices.len() != values.len() {
            return Err(Error::Sparse(format!(
                "{} column indices but {} values",
                col_indices.len(),
                values.len()
            )));
        }
        for i in 0..rows {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if lo > hi {
                return Err(Error::Sparse(format!("row_offsets decrease at row {i}")));
            }
            let row = &col_indices[lo..hi];
            if row.iter().any(|&c| c >= cols) {
                return Err(Error::Sparse(format!("column index out of range in row {i}")));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Sparse(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        if let Some(&(r, c, _)) = entries.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::Sparse(format!("entry ({r}, {c}) outside {rows}×{cols}")));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_offsets = vec![0; rows + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
                continue;
            }
            last = Some((r, c));
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
        }
        for i in 0..rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Self::new(rows, cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_offsets: vec![0; rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Stored value at `(i, j)`, zero when absent.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(T::zero(), |k| vals[k])
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i).0.binary_search(&j).is_ok()
    }

    /// `(row, col, value)` for every stored entry in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows)
            .map(|i| self.row(i).1.iter().copied().fold(T::zero(), |a, b| a + b))
            .collect()
    }

    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        if values.len() != self.nnz() {
            return Err(Error::Sparse(format!(
                "{} values for {} stored entries",
                values.len(),
                self.nnz()
            )));
        }
        Ok(Self { values, ..self.clone() })
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        // Rows are visited in increasing order, so each output row stays sorted.
        for (i, j, v) in self.iter() {
            let slot = next[j];
            col_indices[slot] = i;
            values[slot] = v;
            next[j] += 1;
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Structural and numerical symmetry, compared exactly.
    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows * self.cols];
        for (i, j, v) in self.iter() {
            out[i * self.cols + j] = v;
        }
        out
    }

    pub fn to_dense_tensor(&self) -> Tensor<T> {
        Tensor::constant(vec![self.rows, self.cols], self.to_dense())
    }
}

/// `out[i, :] = Σ_j s[i, j] · x[j, :]` for `x` viewed as `[s.cols, width]`.
pub(crate) fn spmm_kernel<T: Scalar>(s: &SparseMatrix<T>, x: &[T], width: usize) -> Vec<T> {
    let mut out = vec![T::zero(); s.rows * width];
    if width == 0 {
        return out;
    }
    let row = |(i, o): (usize, &mut [T])| {
        let (cols, vals) = s.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            for (ov, &xv) in o.iter_mut().zip(&x[j * width..(j + 1) * width]) {
                *ov += v * xv;
            }
        }
    };
    if s.nnz() * width >= 1 << 15 {
        out.par_chunks_mut(width).enumerate().for_each(row);
    } else {
        out.chunks_mut(width).enumerate().for_each(row);
    }
    out
}

/// Sparse–dense product over the leading axis of `d`; trailing axes are
/// carried along, so a `[n, d, s]` state is aggregated per channel and state.
///
/// Differentiable with respect to `d` only.
pub fn spmm<T: Scalar>(s: &SparseMatrix<T>, d: &Tensor<T>) -> Result<Tensor<T>> {
    let lead = *d
        .shape()
        .first()
        .ok_or_else(|| Error::shape("spmm", "dense operand is a scalar"))?;
    if lead != s.cols {
        return Err(Error::shape(
            "spmm",
            format!("sparse {}×{} · dense {:?}", s.rows, s.cols, d.shape()),
        ));
    }
    let width = d.len().checked_div(lead).unwrap_or(0);
    let data = spmm_kernel(s, d.data(), width);
    let mut shape = d.shape().to_vec();
    shape[0] = s.rows;
    let needs_grad = d.requires_grad();
    let st = needs_grad.then(|| s.transpose());
    Ok(Tensor::from_op(
        shape,
        data,
        vec![d.clone()],
        Box::new(move |g| {
            let st = st.as_ref().expect("transpose kept for backward");
            vec![Some(spmm_kernel(st, g, width))]
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{matmul, sum_all};
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_structure() {
        assert!(SparseMatrix::<f64>::new(2, 2, vec![0, 1], vec![0], vec![1.0]).is_err());
        assert!(SparseMatrix::<f64>::new(2, 2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::<f64>::new(2, 2, vec![0, 1, 2], vec![0, 2], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::<f64>::new(1, 2, vec![0, 2], vec![1, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::<f64>::new(2, 2, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = SparseMatrix::<f64>::from_triplets(2, 2, [(1, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn empty_times_dense_is_zero() {
        let s = SparseMatrix::<f64>::empty(3, 3);
        let d = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        assert_eq!(spmm(&s, &d).unwrap().data(), &[0.0; 6]);
    }

    #[test]
    fn identity_times_dense() {
        let s = SparseMatrix::<f64>::identity(3);
        let d = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        assert_eq!(spmm(&s, &d).unwrap().data(), d.data());
    }

    #[test]
    fn two_node_half_matrix() {
        let s = SparseMatrix::<f64>::from_triplets(2, 2, [(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)]).unwrap();
        let d = Tensor::<f64>::eye(2);
        assert_eq!(spmm(&s, &d).unwrap().data(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn shape_mismatch() {
        let s = SparseMatrix::<f64>::identity(3);
        assert!(spmm(&s, &Tensor::zeros(&[2, 2])).is_err());
    }

    #[test]
    fn gradient_is_transpose_product() {
        let s = SparseMatrix::<f64>::from_triplets(2, 3, [(0, 2, 2.0), (1, 0, -1.0), (1, 1, 3.0)]).unwrap();
        let d = Tensor::<f64>::param(&[3, 1], vec![1.0, 1.0, 1.0]).unwrap();
        sum_all(&spmm(&s, &d).unwrap()).backward().unwrap();
        assert_eq!(d.grad().unwrap(), vec![-1.0, 3.0, 2.0]);
    }

    fn random_sparse(n: usize, m: usize, seed: u64) -> SparseMatrix<f64> {
        let mut rng = crate::Rng::new(seed);
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..m {
                if rng.uniform() < 0.2 {
                    t.push((i, j, rng.uniform_range(-2.0, 2.0)));
                }
            }
        }
        SparseMatrix::from_triplets(n, m, t).unwrap()
    }

    proptest! {
        #[test]
        fn spmm_matches_dense_product(n in 1usize..50, f in 1usize..6, seed in any::<u64>()) {
            let s = random_sparse(n, n, seed);
            let mut rng = crate::Rng::new(seed ^ 1);
            let d = Tensor::new(&[n, f], (0..n * f).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).unwrap();
            let sparse = spmm(&s, &d).unwrap();
            let dense = matmul(&s.to_dense_tensor(), &d).unwrap();
            for (a, b) in sparse.data().iter().zip(dense.data()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn transpose_is_involution(n in 1usize..30, m in 1usize..30, seed in any::<u64>()) {
            let s = random_sparse(n, m, seed);
            let t = s.transpose();
            prop_assert_eq!(t.rows(), m);
            for (i, j, v) in s.iter() {
                prop_assert_eq!(t.get(j, i), v);
            }
            prop_assert_eq!(t.transpose(), s);
        }
    }
}
