//! Deterministic evaluation sets for polynomial identity testing.
//!
//! A homogeneous polynomial of degree `p` in `k` variables that vanishes at
//! every point of `{α ∈ ℕ^k : |α| = p}` is identically zero: dehomogenizing
//! along the hyperplane `Σxᵢ = p` gives a polynomial of degree ≤ `p` in
//! `k − 1` variables vanishing on the principal lattice of the simplex, which
//! is unisolvent. Trace powers `tr(X^p)` of a matrix that is linear in its
//! parameters are homogeneous of degree `p`, so this layer is a complete test
//! with `C(k+p−1, p)` points instead of the `(p+1)^k` of a full product grid.

/// `C(n, k)` saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Number of points in the degree-`p` layer for `k` variables.
pub fn layer_size(k: usize, p: usize) -> u64 {
    if k == 0 {
        return u64::from(p == 0);
    }
    binomial((k + p - 1) as u64, p as u64)
}

/// Total point count of layers `1..=max_degree`.
pub fn layers_size(k: usize, max_degree: usize) -> u64 {
    (1..=max_degree).fold(0u64, |acc, p| acc.saturating_add(layer_size(k, p)))
}

/// Iterates `{α ∈ ℕ^k : |α| = p}` in lexicographically decreasing order of α
/// (so `(p,0,…,0)` comes first). Deterministic.
pub struct Layer {
    current: Option<Vec<usize>>,
}

impl Layer {
    pub fn new(k: usize, p: usize) -> Self {
        let current = if k == 0 {
            (p == 0).then(Vec::new)
        } else {
            let mut v = vec![0; k];
            v[0] = p;
            Some(v)
        };
        Self { current }
    }
}

impl Iterator for Layer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let v = self.current.as_mut().expect("checked above");
        let k = v.len();
        // Find the rightmost position (excluding the last) holding a positive entry,
        // move one unit right and push the tail mass next to it.
        let pos = (0..k.saturating_sub(1)).rev().find(|&i| v[i] > 0);
        match pos {
            None => self.current = None,
            Some(i) => {
                let tail = v[k - 1];
                v[k - 1] = 0;
                v[i] -= 1;
                v[i + 1] = tail + 1;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn layer_enumerates_all_compositions_once() {
        for k in 1..5 {
            for p in 0..5 {
                let pts: Vec<_> = Layer::new(k, p).collect();
                assert_eq!(pts.len() as u64, layer_size(k, p), "k={k} p={p}");
                assert!(pts.iter().all(|a| a.iter().sum::<usize>() == p));
                let set: BTreeSet<_> = pts.iter().cloned().collect();
                assert_eq!(set.len(), pts.len());
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(19, 4), 3876);
        assert_eq!(layer_size(9, 3), 165);
    }
}
