use std::collections::HashMap;

use ndarray::ArrayD;

use super::params::{ParamId, ParamStore};
use crate::scalar::Scalar;
use crate::tape::{Gradients, Var};

/// Adam with bias correction. Moment buffers are keyed by parameter, so
/// one optimizer instance can drive a model whose head was swapped:
/// orphaned parameters simply stop receiving updates.
pub struct Adam<T: Scalar> {
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    t: i32,
    m: HashMap<ParamId, ArrayD<T>>,
    v: HashMap<ParamId, ArrayD<T>>,
}

impl<T: Scalar> Default for Adam<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Adam<T> {
    pub fn new() -> Self {
        Adam {
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
            t: 0,
            m: HashMap::new(),
            v: HashMap::new(),
        }
    }

    /// Apply one update over the bound parameters. Parameters without a
    /// gradient (unused in this step's graph) are skipped.
    pub fn step(
        &mut self,
        store: &mut ParamStore<T>,
        bindings: &[(ParamId, Var)],
        grads: &mut Gradients<T>,
        lr: T,
    ) {
        self.t += 1;
        let bc1 = T::one() - self.beta1.powi(self.t);
        let bc2 = T::one() - self.beta2.powi(self.t);
        for &(id, var) in bindings {
            let Some(g) = grads.take(var) else { continue };
            let m = self
                .m
                .entry(id)
                .or_insert_with(|| ArrayD::zeros(g.raw_dim()));
            let v = self
                .v
                .entry(id)
                .or_insert_with(|| ArrayD::zeros(g.raw_dim()));
            let value = store.value_mut(id);
            for ((p, gi), (mi, vi)) in value.iter_mut().zip(g.iter()).zip(m.iter_mut().zip(v.iter_mut())) {
                *mi = self.beta1 * *mi + (T::one() - self.beta1) * *gi;
                *vi = self.beta2 * *vi + (T::one() - self.beta2) * *gi * *gi;
                let mhat = *mi / bc1;
                let vhat = *vi / bc2;
                *p -= lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.t
    }
}
