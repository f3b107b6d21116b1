//! Permutations of particle labels, 0-based.

use itertools::Itertools;

use crate::error::{Error, Result};

/// A bijection of `{0, ..., N-1}`. `Cloud::permute` maps X to `X^σ`, whose
/// i-th particle is `x_{σ(i)}`, so `(X^σ)^τ = X^{σ∘τ}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn identity(n: usize) -> Self {
        Perm((0..n).collect())
    }

    pub fn from_vec(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &s in &map {
            if s >= map.len() || std::mem::replace(&mut seen[s], true) {
                return Err(Error::InvalidArgument(format!("{map:?} is not a permutation")));
            }
        }
        Ok(Perm(map))
    }

    pub(crate) fn from_vec_unchecked(map: Vec<usize>) -> Self {
        Perm(map)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    /// `self ∘ other`, i.e. `i ↦ self(other(i))`.
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm(other.0.iter().map(|&i| self.0[i]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.0.len()];
        for (i, &s) in self.0.iter().enumerate() {
            inv[s] = i;
        }
        Perm(inv)
    }

    /// All permutations of `{0, ..., n-1}` in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = Perm> {
        (0..n).permutations(n).map(Perm)
    }
}
