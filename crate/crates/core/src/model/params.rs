use alloc::collections::btree_map::{self, BTreeMap};
use alloc::format;
use alloc::string::String;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Named tensors in a deterministic (sorted) order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore(BTreeMap<String, Tensor>);

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, tensor: Tensor) -> Option<Tensor> {
        self.0.insert(key.into(), tensor)
    }

    pub fn get(&self, key: &str) -> Option<&Tensor> {
        self.0.get(key)
    }

    pub fn get_mut(&mut self, key: &str) -> Option<&mut Tensor> {
        self.0.get_mut(key)
    }

    pub(crate) fn require(&self, key: &str) -> Result<&Tensor> {
        self.0
            .get(key)
            .ok_or_else(|| Error::invalid("parameter store", format!("missing `{key}`")))
    }

    pub fn iter(&self) -> btree_map::Iter<'_, String, Tensor> {
        self.0.iter()
    }

    pub fn iter_mut(&mut self) -> btree_map::IterMut<'_, String, Tensor> {
        self.0.iter_mut()
    }

    pub fn keys(&self) -> btree_map::Keys<'_, String, Tensor> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total number of scalars across all tensors.
    pub fn scalar_count(&self) -> usize {
        self.0.values().map(Tensor::len).sum()
    }

    /// Store with the same keys and shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        ParamStore(
            self.0
                .iter()
                .map(|(k, t)| (k.clone(), Tensor::zeros(t.shape())))
                .collect(),
        )
    }

    /// Adds `factor * other` key by key; both stores must share keys and shapes.
    pub fn add_scaled(&mut self, other: &ParamStore, factor: f64) -> Result<()> {
        if self.0.len() != other.0.len() {
            return Err(Error::invalid(
                "parameter store",
                format!("{} tensors vs {}", self.0.len(), other.0.len()),
            ));
        }
        for (key, t) in self.0.iter_mut() {
            t.add_scaled(other.require(key)?, factor)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.0.values_mut().for_each(|t| t.scale(factor));
    }

    /// Euclidean norm over every scalar.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.0.values().map(Tensor::sum_squares).sum())
    }

    pub fn same_layout(&self, other: &ParamStore) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(other.0.iter())
                .all(|((ka, ta), (kb, tb))| ka == kb && ta.shape() == tb.shape())
    }

    /// Whether `key` names a weight (as opposed to a bias).
    pub fn is_weight(key: &str) -> bool {
        key.ends_with(".weight")
    }
}

impl<'a> IntoIterator for &'a ParamStore {
    type Item = (&'a String, &'a Tensor);
    type IntoIter = btree_map::Iter<'a, String, Tensor>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl FromIterator<(String, Tensor)> for ParamStore {
    fn from_iter<I: IntoIterator<Item = (String, Tensor)>>(iter: I) -> Self {
        ParamStore(iter.into_iter().collect())
    }
}
