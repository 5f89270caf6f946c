//! Reverse-mode automatic differentiation on `ndarray` storage.
//!
//! A [`Tape`] is a per-step arena of nodes. Forward calls append nodes
//! and (when gradients are enabled) a backward closure; [`Tape::backward`]
//! walks the arena in reverse and accumulates gradients into a
//! [`Gradients`] buffer keyed by [`Var`].
//!
//! The design trades memory for simplicity: closures capture clones of
//! whatever their backward pass needs. Every op is deterministic, so a
//! fixed seed reproduces training bit-for-bit on one machine.

mod conv;
pub mod gradcheck;
mod ops;
#[cfg(test)]
mod tests;

use ndarray::ArrayD;

use crate::scalar::Scalar;

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

type BackwardFn<T> = Box<dyn FnOnce(&ArrayD<T>, &mut Gradients<T>)>;

struct Node<T: Scalar> {
    value: ArrayD<T>,
    backward: Option<BackwardFn<T>>,
    requires_grad: bool,
}

/// Gradient buffer produced by [`Tape::backward`].
pub struct Gradients<T: Scalar> {
    grads: Vec<Option<ArrayD<T>>>,
}

impl<T: Scalar> Gradients<T> {
    fn new(len: usize) -> Self {
        let mut grads = Vec::with_capacity(len);
        grads.resize_with(len, || None);
        Gradients { grads }
    }

    /// Accumulate a contribution for `v`.
    pub fn add(&mut self, v: Var, g: ArrayD<T>) {
        match &mut self.grads[v.0] {
            Some(acc) => *acc += &g,
            slot => *slot = Some(g),
        }
    }

    pub fn get(&self, v: Var) -> Option<&ArrayD<T>> {
        self.grads[v.0].as_ref()
    }

    pub fn take(&mut self, v: Var) -> Option<ArrayD<T>> {
        self.grads[v.0].take()
    }
}

/// Arena of one forward pass.
pub struct Tape<T: Scalar> {
    nodes: Vec<Node<T>>,
    grad_enabled: bool,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new(), grad_enabled: true }
    }

    /// A tape that records values only; backward closures are skipped.
    pub fn inference() -> Self {
        Tape { nodes: Vec::new(), grad_enabled: false }
    }

    pub fn grad_enabled(&self) -> bool {
        self.grad_enabled
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trainable input; gradients are retained for it.
    pub fn leaf(&mut self, value: ArrayD<T>) -> Var {
        self.push(value, None, true)
    }

    /// Input that never receives gradients.
    pub fn constant(&mut self, value: ArrayD<T>) -> Var {
        self.push(value, None, false)
    }

    pub fn value(&self, v: Var) -> &ArrayD<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Scalar value of a single-element node.
    pub fn scalar(&self, v: Var) -> T {
        let val = &self.nodes[v.0].value;
        assert_eq!(val.len(), 1, "scalar() on node of shape {:?}", val.shape());
        *val.iter().next().unwrap()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: ArrayD<T>, backward: Option<BackwardFn<T>>, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, backward, requires_grad });
        Var(self.nodes.len() - 1)
    }

    /// Append a derived node. `backward` is only stored when gradients are
    /// enabled and at least one parent needs them.
    pub(crate) fn derived<F>(&mut self, parents: &[Var], value: ArrayD<T>, backward: F) -> Var
    where
        F: FnOnce(&ArrayD<T>, &mut Gradients<T>) + 'static,
    {
        let needs = self.grad_enabled && parents.iter().any(|p| self.nodes[p.0].requires_grad);
        let bw: Option<BackwardFn<T>> = if needs { Some(Box::new(backward)) } else { None };
        self.push(value, bw, needs)
    }

    /// Run reverse-mode accumulation from `loss` (seeded with ones).
    ///
    /// Consumes the recorded closures; one backward per tape.
    pub fn backward(&mut self, loss: Var) -> Gradients<T> {
        assert!(self.grad_enabled, "backward on an inference tape");
        let mut buf = Gradients::new(self.nodes.len());
        let seed = ArrayD::ones(self.nodes[loss.0].value.raw_dim());
        buf.add(loss, seed);
        for i in (0..=loss.0).rev() {
            if buf.grads[i].is_none() {
                continue;
            }
            if let Some(f) = self.nodes[i].backward.take() {
                let g = buf.grads[i].take().expect("grad present");
                f(&g, &mut buf);
            }
            // Leaves keep their accumulated gradient in the buffer.
        }
        buf
    }
}
