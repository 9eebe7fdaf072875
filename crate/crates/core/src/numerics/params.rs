//! Named parameter leaves with trainable flags.
//!
//! Leaves are keyed by dotted paths ("hier_projector.fc1.weight"). Iteration
//! is lexicographic so that optimizer sweeps, hashing, and serialization are
//! deterministic.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use super::tensor::Tensor;
use crate::NumericsError;

#[derive(Debug, Clone)]
pub struct Param {
    pub value: Tensor,
    pub trainable: bool,
}

/// Map of dotted path -> parameter leaf.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    leaves: BTreeMap<String, Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a leaf. Duplicate paths are rejected.
    pub fn insert(&mut self, path: &str, value: Tensor, trainable: bool) -> Result<(), NumericsError> {
        if self.leaves.contains_key(path) {
            return Err(NumericsError::DuplicatePath(path.to_string()));
        }
        self.leaves.insert(path.to_string(), Param { value, trainable });
        Ok(())
    }

    pub fn get(&self, path: &str) -> Result<&Param, NumericsError> {
        self.leaves
            .get(path)
            .ok_or_else(|| NumericsError::UnknownPath(path.to_string()))
    }

    pub fn tensor(&self, path: &str) -> Result<&Tensor, NumericsError> {
        self.get(path).map(|p| &p.value)
    }

    pub fn tensor_mut(&mut self, path: &str) -> Result<&mut Tensor, NumericsError> {
        self.leaves
            .get_mut(path)
            .map(|p| &mut p.value)
            .ok_or_else(|| NumericsError::UnknownPath(path.to_string()))
    }

    pub fn is_trainable(&self, path: &str) -> Result<bool, NumericsError> {
        self.get(path).map(|p| p.trainable)
    }

    pub fn set_trainable(&mut self, path: &str, trainable: bool) -> Result<(), NumericsError> {
        self.leaves
            .get_mut(path)
            .map(|p| p.trainable = trainable)
            .ok_or_else(|| NumericsError::UnknownPath(path.to_string()))
    }

    /// Lexicographic iteration over (path, param).
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.leaves.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn paths(&self) -> Vec<String> {
        self.leaves.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn contains(&self, path: &str) -> bool {
        self.leaves.contains_key(path)
    }

    /// Total number of scalar parameters, optionally restricted to trainable leaves.
    pub fn scalar_count(&self, trainable_only: bool) -> usize {
        self.leaves
            .values()
            .filter(|p| !trainable_only || p.trainable)
            .map(|p| p.value.numel())
            .sum()
    }

    /// Set trainable flags from prefix sets: a leaf is trainable iff its path
    /// starts with some trainable prefix and with no frozen prefix. Frozen wins.
    pub fn apply_mask(&mut self, trainable_prefixes: &[String], frozen_prefixes: &[String]) {
        for (path, param) in self.leaves.iter_mut() {
            let frozen = frozen_prefixes.iter().any(|p| path.starts_with(p.as_str()));
            let trainable = trainable_prefixes.iter().any(|p| path.starts_with(p.as_str()));
            param.trainable = trainable && !frozen;
        }
    }

    /// SHA-256 over a leaf's shape and raw little-endian f64 bytes.
    pub fn leaf_hash(&self, path: &str) -> Result<[u8; 32], NumericsError> {
        let tensor = self.tensor(path)?;
        Ok(hash_tensor(tensor))
    }

    /// SHA-256 over all leaves under a path prefix, in lexicographic order.
    pub fn subtree_hash(&self, prefix: &str) -> [u8; 32] {
        let mut hasher = Sha256::new();
        for (path, param) in self.leaves.iter() {
            if path.starts_with(prefix) {
                hasher.update(path.as_bytes());
                hasher.update(hash_tensor(&param.value));
            }
        }
        hasher.finalize().into()
    }
}

pub fn hash_tensor(tensor: &Tensor) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update((tensor.shape().len() as u64).to_le_bytes());
    for &d in tensor.shape() {
        hasher.update((d as u64).to_le_bytes());
    }
    for &v in tensor.data() {
        hasher.update(v.to_le_bytes());
    }
    hasher.finalize().into()
}
