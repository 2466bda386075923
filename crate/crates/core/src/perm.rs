//! Row permutations in LAPACK pivot-list form.

/// A permutation stored as the sequential pivot list produced by partial
/// pivoting: at elimination step `k`, row `k` was swapped with row
/// `pivot[k] >= k`. The composed one-shot map is derived on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    pivot: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            pivot: (0..n).collect(),
        }
    }

    pub(crate) fn from_pivots(pivot: Vec<usize>) -> Self {
        debug_assert!(pivot.iter().enumerate().all(|(k, &p)| p >= k && p < pivot.len()));
        Self { pivot }
    }

    pub fn len(&self) -> usize {
        self.pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivot.is_empty()
    }

    /// The pivot list itself.
    pub fn pivots(&self) -> &[usize] {
        &self.pivot
    }

    /// Apply the permutation to a slice in place: `x <- P x`, the same row
    /// exchanges the factorization applied to the matrix.
    pub fn apply<T>(&self, x: &mut [T]) {
        debug_assert_eq!(x.len(), self.pivot.len());
        for (k, &p) in self.pivot.iter().enumerate() {
            if p != k {
                x.swap(k, p);
            }
        }
    }

    /// The composed map: `map[i] = j` means row `i` of the permuted matrix is
    /// row `j` of the original. Always a bijection on `0..n`.
    pub fn map(&self) -> Vec<usize> {
        let mut map: Vec<usize> = (0..self.pivot.len()).collect();
        self.apply(&mut map);
        map
    }

    pub fn is_identity(&self) -> bool {
        self.pivot.iter().enumerate().all(|(k, &p)| p == k)
    }
}
