use std::collections::HashMap;

use ndarray::ArrayD;

use crate::scalar::Scalar;
use crate::tape::{Tape, Var};

/// Stable handle into a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Updated by the optimizer.
    Trainable,
    /// State carried across steps (e.g. batch-norm running stats);
    /// saved in checkpoints but never receives gradients.
    Buffer,
}

struct Entry<T: Scalar> {
    name: String,
    value: ArrayD<T>,
    kind: ParamKind,
}

/// Append-only parameter arena.
///
/// Re-registering a name appends a new entry and repoints the name at it;
/// the old entry stays allocated but unreachable by name. Layers keep
/// [`ParamId`]s, so swapping a model's head orphans the old head's entries
/// without disturbing anything that references the backbone.
pub struct ParamStore<T: Scalar> {
    entries: Vec<Entry<T>>,
    by_name: HashMap<String, usize>,
}

impl<T: Scalar> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore { entries: Vec::new(), by_name: HashMap::new() }
    }

    pub fn register(&mut self, name: impl Into<String>, value: ArrayD<T>, kind: ParamKind) -> ParamId {
        let name = name.into();
        let id = self.entries.len();
        self.by_name.insert(name.clone(), id);
        self.entries.push(Entry { name, value, kind });
        ParamId(id)
    }

    pub fn value(&self, id: ParamId) -> &ArrayD<T> {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut ArrayD<T> {
        &mut self.entries[id.0].value
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn kind(&self, id: ParamId) -> ParamKind {
        self.entries[id.0].kind
    }

    pub fn lookup(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    /// Number of scalar elements across the given parameters.
    pub fn count_elements(&self, ids: &[ParamId]) -> usize {
        ids.iter().map(|id| self.value(*id).len()).sum()
    }
}

/// Per-forward-pass binding of parameters onto a tape.
pub struct Ctx<'a, T: Scalar> {
    pub tape: &'a mut Tape<T>,
    pub store: &'a mut ParamStore<T>,
    pub training: bool,
    bound: HashMap<ParamId, Var>,
}

impl<'a, T: Scalar> Ctx<'a, T> {
    pub fn new(tape: &'a mut Tape<T>, store: &'a mut ParamStore<T>, training: bool) -> Self {
        Ctx { tape, store, training, bound: HashMap::new() }
    }

    /// Tape node for a parameter; bound once per tape, so repeated use in
    /// one forward pass accumulates gradients on a single leaf.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.bound.get(&id) {
            return *v;
        }
        let value = self.store.value(id).clone();
        let v = match self.store.kind(id) {
            ParamKind::Trainable => self.tape.leaf(value),
            ParamKind::Buffer => self.tape.constant(value),
        };
        self.bound.insert(id, v);
        v
    }

    /// Trainable (parameter, node) pairs bound so far, in id order.
    pub fn bindings(&self) -> Vec<(ParamId, Var)> {
        let mut out: Vec<(ParamId, Var)> = self
            .bound
            .iter()
            .filter(|(id, _)| self.store.kind(**id) == ParamKind::Trainable)
            .map(|(id, v)| (*id, *v))
            .collect();
        out.sort_by_key(|(id, _)| *id);
        out
    }
}
