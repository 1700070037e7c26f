//! Dense tensors with reverse-mode automatic differentiation.
//!
//! A [`Tensor`] is an immutable, reference-counted node of a compute graph.
//! Operations that take at least one input with `requires_grad` record their
//! parents and a backward closure; [`Tensor::backward`] walks the graph in
//! reverse topological order and accumulates gradients into the
//! `requires_grad` leaves. Gradients are the only mutable state.
//!
//! Parameters are never mutated in place: an optimizer step produces fresh
//! leaves (see [`Tensor::param`]).

pub(crate) mod linalg;
pub(crate) mod ops;

pub use linalg::{concat_cols, matmul, reshape, transpose};
pub use ops::{
    add, add_scalar, broadcast_rows, mean_all, mul, neg, relu, row_softmax, scale, select_column, softplus, sub,
    sum_all,
};

#[allow(unused_imports)]
pub(crate) use linalg::{gemm, gemm_nt, transpose_raw};

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

/// Maps the upstream gradient of a node to one optional gradient per parent.
pub(crate) type BackwardFn<T> = Box<dyn Fn(&[T]) -> Vec<Option<Vec<T>>> + Send + Sync>;

struct Node<T: Scalar> {
    id: u64,
    shape: Vec<usize>,
    data: Vec<T>,
    requires_grad: bool,
    grad: Mutex<Option<Vec<T>>>,
    parents: Vec<Tensor<T>>,
    backward: Option<BackwardFn<T>>,
}

// Long graphs would otherwise be freed recursively, one stack frame per node.
// Backward closures only capture tensors that are also listed in `parents`.
impl<T: Scalar> Drop for Node<T> {
    fn drop(&mut self) {
        drop(self.backward.take());
        let mut pending = std::mem::take(&mut self.parents);
        while let Some(t) = pending.pop() {
            if let Ok(mut node) = Arc::try_unwrap(t.0) {
                drop(node.backward.take());
                pending.append(&mut node.parents);
            }
        }
    }
}

pub struct Tensor<T: Scalar>(Arc<Node<T>>);

impl<T: Scalar> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor(Arc::clone(&self.0))
    }
}

impl<T: Scalar> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let preview: Vec<T> = self.0.data.iter().take(8).copied().collect();
        f.debug_struct("Tensor")
            .field("shape", &self.0.shape)
            .field("requires_grad", &self.0.requires_grad)
            .field("data", &preview)
            .finish()
    }
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl<T: Scalar> Tensor<T> {
    fn from_node(
        shape: Vec<usize>,
        data: Vec<T>,
        requires_grad: bool,
        parents: Vec<Tensor<T>>,
        backward: Option<BackwardFn<T>>,
    ) -> Self {
        debug_assert_eq!(numel(&shape), data.len());
        Tensor(Arc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            shape,
            data,
            requires_grad,
            grad: Mutex::new(None),
            parents,
            backward,
        }))
    }

    /// Constant tensor (no gradient tracking).
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if numel(shape) != data.len() {
            return Err(Error::shape(
                "tensor",
                format!("shape {shape:?} needs {} values, got {}", numel(shape), data.len()),
            ));
        }
        Ok(Self::from_node(shape.to_vec(), data, false, Vec::new(), None))
    }

    /// Learnable leaf.
    pub fn param(shape: &[usize], data: Vec<T>) -> Result<Self> {
        Ok(Self::new(shape, data)?.detach_with_grad(true))
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::from_node(shape.to_vec(), vec![T::zero(); numel(shape)], false, Vec::new(), None)
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        Self::from_node(shape.to_vec(), vec![value; numel(shape)], false, Vec::new(), None)
    }

    pub fn scalar(value: T) -> Self {
        Self::from_node(Vec::new(), vec![value], false, Vec::new(), None)
    }

    pub fn eye(n: usize) -> Self {
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = T::one();
        }
        Self::from_node(vec![n, n], data, false, Vec::new(), None)
    }

    /// Constant 2-D tensor from nested rows; panics on ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows.iter().flatten().copied().collect();
        Self::from_node(vec![r, c], data, false, Vec::new(), None)
    }

    /// Result of a differentiable operation. Parents and the backward closure
    /// are dropped when no parent tracks gradients.
    pub(crate) fn from_op(shape: Vec<usize>, data: Vec<T>, parents: Vec<Tensor<T>>, backward: BackwardFn<T>) -> Self {
        if parents.iter().any(Tensor::requires_grad) {
            Self::from_node(shape, data, true, parents, Some(backward))
        } else {
            Self::from_node(shape, data, false, Vec::new(), None)
        }
    }

    pub(crate) fn constant(shape: Vec<usize>, data: Vec<T>) -> Self {
        Self::from_node(shape, data, false, Vec::new(), None)
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn data(&self) -> &[T] {
        &self.0.data
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.0.data.clone()
    }

    pub fn len(&self) -> usize {
        self.0.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.0.shape.len()
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.0.backward.is_none()
    }

    /// `(rows, cols)` of a rank-2 tensor.
    pub fn dims2(&self, op: &'static str) -> Result<(usize, usize)> {
        match self.0.shape.as_slice() {
            &[r, c] => Ok((r, c)),
            other => Err(Error::shape(op, format!("expected rank-2 tensor, got shape {other:?}"))),
        }
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> Result<T> {
        if self.len() != 1 {
            return Err(Error::shape(
                "item",
                format!("expected one element, got shape {:?}", self.shape()),
            ));
        }
        Ok(self.0.data[0])
    }

    pub fn at(&self, index: &[usize]) -> T {
        assert_eq!(index.len(), self.rank(), "index rank");
        let mut flat = 0;
        for (&i, &d) in index.iter().zip(self.shape()) {
            assert!(i < d, "index {index:?} out of bounds for {:?}", self.shape());
            flat = flat * d + i;
        }
        self.0.data[flat]
    }

    /// New leaf sharing no history with `self`.
    pub fn detach(&self) -> Self {
        self.detach_with_grad(false)
    }

    pub fn detach_with_grad(&self, requires_grad: bool) -> Self {
        Self::from_node(
            self.0.shape.clone(),
            self.0.data.clone(),
            requires_grad,
            Vec::new(),
            None,
        )
    }

    /// Accumulated gradient, if any backward pass reached this leaf.
    pub fn grad(&self) -> Option<Vec<T>> {
        self.0.grad.lock().expect("grad lock").clone()
    }

    pub fn zero_grad(&self) {
        *self.0.grad.lock().expect("grad lock") = None;
    }

    fn accumulate(&self, g: &[T]) {
        let mut slot = self.0.grad.lock().expect("grad lock");
        match slot.as_mut() {
            Some(acc) => acc.iter_mut().zip(g).for_each(|(a, &b)| *a += b),
            None => *slot = Some(g.to_vec()),
        }
    }

    /// Reverse-mode sweep from a single-element tensor. Gradients accumulate
    /// into leaves across repeated calls until [`Tensor::zero_grad`].
    pub fn backward(&self) -> Result<()> {
        if self.len() != 1 {
            return Err(Error::shape(
                "backward",
                format!("loss must be scalar, got shape {:?}", self.shape()),
            ));
        }
        if !self.requires_grad() {
            return Err(Error::State("loss is not connected to any requires_grad leaf".into()));
        }

        // Iterative post-order DFS: parents precede children in `order`.
        let mut order: Vec<Tensor<T>> = Vec::new();
        let mut visited: HashSet<u64> = HashSet::new();
        let mut stack: Vec<(Tensor<T>, bool)> = vec![(self.clone(), false)];
        while let Some((t, expanded)) = stack.pop() {
            if expanded {
                order.push(t);
                continue;
            }
            if !visited.insert(t.id()) {
                continue;
            }
            stack.push((t.clone(), true));
            for p in t.0.parents.iter().rev() {
                if p.requires_grad() && !visited.contains(&p.id()) {
                    stack.push((p.clone(), false));
                }
            }
        }

        let mut grads: HashMap<u64, Vec<T>> = HashMap::new();
        grads.insert(self.id(), vec![T::one()]);
        for node in order.iter().rev() {
            let Some(g) = grads.remove(&node.id()) else {
                continue;
            };
            match &node.0.backward {
                None => node.accumulate(&g),
                Some(f) => {
                    let parent_grads = f(&g);
                    debug_assert_eq!(parent_grads.len(), node.0.parents.len());
                    for (p, pg) in node.0.parents.iter().zip(parent_grads) {
                        let Some(pg) = pg else { continue };
                        if !p.requires_grad() {
                            continue;
                        }
                        debug_assert_eq!(pg.len(), p.len());
                        match grads.get_mut(&p.id()) {
                            Some(acc) => acc.iter_mut().zip(&pg).for_each(|(a, &b)| *a += b),
                            None => {
                                grads.insert(p.id(), pg);
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_same_shape<T: Scalar>(op: &'static str, a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(op, format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_must_match_data() {
        assert!(Tensor::<f64>::new(&[2, 3], vec![0.0; 5]).is_err());
        let t = Tensor::<f64>::new(&[2, 3], vec![0.0; 6]).unwrap();
        assert_eq!(t.len(), 6);
        assert_eq!(Tensor::<f64>::scalar(3.0).item().unwrap(), 3.0);
    }

    #[test]
    fn grad_of_sum_is_ones() {
        let x = Tensor::<f64>::param(&[2, 3], vec![1., -2., 3., 0.5, 0., 9.]).unwrap();
        sum_all(&x).backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0; 6]);
    }

    #[test]
    fn grad_of_sum_of_squares() {
        let x = Tensor::<f64>::param(&[3], vec![1., 2., 3.]).unwrap();
        sum_all(&mul(&x, &x).unwrap()).backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![2., 4., 6.]);
    }

    #[test]
    fn repeated_backward_accumulates() {
        let x = Tensor::<f64>::param(&[2], vec![1., 2.]).unwrap();
        let loss = sum_all(&x);
        loss.backward().unwrap();
        loss.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![2., 2.]);
        x.zero_grad();
        assert!(x.grad().is_none());
    }

    #[test]
    fn shared_subexpression_gets_both_paths() {
        // loss = sum(x*x + x) -> grad 2x + 1
        let x = Tensor::<f64>::param(&[2], vec![1.5, -1.0]).unwrap();
        let y = add(&mul(&x, &x).unwrap(), &x).unwrap();
        sum_all(&y).backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![4.0, -1.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_and_constant() {
        let x = Tensor::<f64>::param(&[2], vec![1., 2.]).unwrap();
        assert!(matches!(x.backward(), Err(Error::Shape { .. })));
        let c = Tensor::<f64>::scalar(1.0);
        assert!(matches!(c.backward(), Err(Error::State(_))));
    }

    #[test]
    fn constants_do_not_record_history() {
        let a = Tensor::<f64>::zeros(&[2, 2]);
        let b = add(&a, &a).unwrap();
        assert!(!b.requires_grad());
        assert!(b.is_leaf());
    }

    #[test]
    fn deep_chain_does_not_overflow_stack() {
        let x = Tensor::<f64>::param(&[1], vec![1.0]).unwrap();
        let mut y = x.clone();
        for _ in 0..20_000 {
            y = add_scalar(&y, 0.0);
        }
        sum_all(&y).backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0]);
    }
}
