//! Any-gram dynamic programs.
//!
//! All three variants fill the same table: cell `(i, j)` holds the
//! contribution of aligned runs starting at token `i` of the first sentence
//! and token `j` of the second, and the kernel is the sum of all cells. The
//! first sentence is scanned in reverse so that `(i + 1, j + 1)` is always
//! final when `(i, j)` is computed. Only two rows are kept alive.

use std::collections::HashMap;
use std::hash::Hash;

use crate::embeddings::Similarity;
use crate::scalar::Weight;

/// Ascending positions of every distinct token in a sequence.
#[derive(Clone, Debug)]
pub struct PositionIndex<K> {
    positions: HashMap<K, Vec<usize>>,
    len: usize,
}

impl<K: Eq + Hash> PositionIndex<K> {
    pub fn new<I: IntoIterator<Item = K>>(seq: I) -> Self {
        let mut positions: HashMap<K, Vec<usize>> = HashMap::new();
        let mut len = 0;
        for (j, k) in seq.into_iter().enumerate() {
            positions.entry(k).or_default().push(j);
            len = j + 1;
        }
        Self { positions, len }
    }

    pub fn positions(&self, key: &K) -> &[usize] {
        self.positions.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Match-gated recurrence `Δ(i,j) = λ(1 + Δ(i+1,j+1))`, evaluated only on
/// matching cells. `rows[i]` lists, ascending, the positions of the second
/// sequence that match position `i` of the first.
pub(crate) fn gated<T: Weight, R: AsRef<[usize]>>(rows: &[R], len2: usize, lambda: &T) -> T {
    let mut next = vec![T::zero(); len2 + 1];
    let mut cur = vec![T::zero(); len2 + 1];
    let mut kernel = T::zero();
    for i in (0..rows.len()).rev() {
        for &j in rows[i].as_ref() {
            let delta = lambda.clone() * (T::one() + next[j + 1].clone());
            kernel = kernel + delta.clone();
            cur[j] = delta;
        }
        if let Some(prev) = rows.get(i + 1) {
            for &j in prev.as_ref() {
                next[j] = T::zero();
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    kernel
}

/// Thresholded recurrence: builds the match rows from `matches` and runs [`gated`].
pub(crate) fn west_dp<T, F>(len1: usize, len2: usize, mut matches: F, lambda: &T) -> T
where
    T: Weight,
    F: FnMut(usize, usize) -> bool,
{
    let rows: Vec<Vec<usize>> = (0..len1)
        .map(|i| (0..len2).filter(|&j| matches(i, j)).collect())
        .collect();
    gated(&rows, len2, lambda)
}

/// Ungated recurrence `Δ(i,j) = λ(sim(i,j) + Δ(i+1,j+1))` over every cell.
pub(crate) fn wess_dp<T, F>(len1: usize, len2: usize, mut sim: F, lambda: &T) -> T
where
    T: Weight,
    F: FnMut(usize, usize) -> T,
{
    let mut next = vec![T::zero(); len2 + 1];
    let mut cur = vec![T::zero(); len2 + 1];
    let mut kernel = T::zero();
    for i in (0..len1).rev() {
        for j in 0..len2 {
            let delta = lambda.clone() * (sim(i, j) + next[j + 1].clone());
            kernel = kernel + delta.clone();
            cur[j] = delta;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    kernel
}

/// String-match any-gram kernel.
///
/// Equals `Σ_q λ^q · C_q` where `C_q` counts position pairs starting a
/// common contiguous q-gram.
pub fn kernel_sm<K: Eq + Hash, T: Weight>(s1: &[K], s2: &[K], lambda: T) -> T {
    let index = PositionIndex::new(s2);
    let rows: Vec<&[usize]> = s1.iter().map(|k| index.positions(&k)).collect();
    gated(&rows, s2.len(), &lambda)
}

/// Similarity-threshold kernel: tokens match iff `sim >= theta`.
pub fn kernel_west<K, T, S>(s1: &[K], s2: &[K], lambda: T, theta: T, sim: &S) -> T
where
    T: Weight,
    S: Similarity<K, T> + ?Sized,
{
    west_dp(
        s1.len(),
        s2.len(),
        |i, j| sim.similarity(&s1[i], &s2[j]) >= theta,
        &lambda,
    )
}

/// Similarity-score kernel: the unit match credit is replaced by `sim`.
pub fn kernel_wess<K, T, S>(s1: &[K], s2: &[K], lambda: T, sim: &S) -> T
where
    T: Weight,
    S: Similarity<K, T> + ?Sized,
{
    wess_dp(
        s1.len(),
        s2.len(),
        |i, j| sim.similarity(&s1[i], &s2[j]),
        &lambda,
    )
}
