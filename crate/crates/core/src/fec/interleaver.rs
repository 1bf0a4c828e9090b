//! Seeded pseudo-random permutations.

use rand::Rng;

use crate::seed::{rng_for, Role};

/// A permutation `π`: interleaving sends `data[π[i]]` to position `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    /// Fisher–Yates shuffle driven by `rng`.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut forward: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            forward.swap(i, j);
        }
        Self::from_forward(forward)
    }

    pub fn from_seed(n: usize, seed: u64) -> Self {
        Self::random(n, &mut rng_for(seed, Role::Interleaver))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_forward((0..n).collect())
    }

    fn from_forward(forward: Vec<usize>) -> Self {
        let mut inverse = vec![0; forward.len()];
        for (i, &p) in forward.iter().enumerate() {
            inverse[p] = i;
        }
        Self { forward, inverse }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.forward
    }

    pub fn apply<T: Copy>(&self, data: &[T]) -> Vec<T> {
        assert_eq!(data.len(), self.len(), "permutation length mismatch");
        self.forward.iter().map(|&p| data[p]).collect()
    }

    pub fn invert<T: Copy>(&self, data: &[T]) -> Vec<T> {
        assert_eq!(data.len(), self.len(), "permutation length mismatch");
        self.inverse.iter().map(|&p| data[p]).collect()
    }
}

pub fn interleave<T: Copy>(data: &[T], seed: u64) -> Vec<T> {
    Permutation::from_seed(data.len(), seed).apply(data)
}

pub fn deinterleave<T: Copy>(data: &[T], seed: u64) -> Vec<T> {
    Permutation::from_seed(data.len(), seed).invert(data)
}
