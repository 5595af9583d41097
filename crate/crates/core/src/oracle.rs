//! Brute-force reference implementations of the three kernels.
//!
//! These enumerate n-gram occurrences and aligned runs directly, with no
//! memoization, and exist only to check the dynamic programs. They share
//! nothing with [`crate::kernels`] beyond the [`Similarity`] trait.

use std::collections::HashMap;
use std::hash::Hash;

use crate::embeddings::Similarity;
use crate::scalar::Weight;

/// Start positions of every contiguous q-gram, for all orders `1..=len`.
#[derive(Clone, Debug)]
pub struct NGramIndex<'a, K> {
    grams: HashMap<&'a [K], Vec<usize>>,
    len: usize,
}

impl<'a, K: Eq + Hash> NGramIndex<'a, K> {
    pub fn new(seq: &'a [K]) -> Self {
        let mut grams: HashMap<&'a [K], Vec<usize>> = HashMap::new();
        for q in 1..=seq.len() {
            for start in 0..=seq.len() - q {
                grams.entry(&seq[start..start + q]).or_default().push(start);
            }
        }
        Self {
            grams,
            len: seq.len(),
        }
    }

    pub fn positions(&self, gram: &[K]) -> &[usize] {
        self.grams.get(gram).map_or(&[], Vec::as_slice)
    }

    /// Total indexed occurrences; always `len·(len+1)/2`.
    pub fn occurrences(&self) -> usize {
        self.grams.values().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'a [K], &[usize])> + '_ {
        self.grams.iter().map(|(g, p)| (*g, p.as_slice()))
    }

    pub fn sequence_len(&self) -> usize {
        self.len
    }
}

/// Number of position pairs starting a common contiguous q-gram, per order
/// `q = 1..=min(len)`; index 0 holds order 1.
pub fn common_ngram_counts<K: Eq + Hash>(s1: &[K], s2: &[K]) -> Vec<u64> {
    let (a, b) = (NGramIndex::new(s1), NGramIndex::new(s2));
    let mut counts = vec![0u64; s1.len().min(s2.len())];
    for (gram, p1) in a.iter() {
        let p2 = b.positions(gram);
        if !p2.is_empty() {
            counts[gram.len() - 1] += (p1.len() * p2.len()) as u64;
        }
    }
    counts
}

fn from_count<T: Weight>(count: u64) -> T {
    // Repeated addition keeps this usable for any ring-like weight.
    let mut acc = T::zero();
    let mut unit = T::one();
    let mut n = count;
    while n > 0 {
        if n & 1 == 1 {
            acc = acc + unit.clone();
        }
        unit = unit.clone() + unit;
        n >>= 1;
    }
    acc
}

/// `Σ_q λ^q · C_q` by explicit n-gram enumeration.
pub fn oracle_sm<K: Eq + Hash, T: Weight>(s1: &[K], s2: &[K], lambda: T) -> T {
    let mut total = T::zero();
    let mut power = T::one();
    for count in common_ngram_counts(s1, s2) {
        power = power * lambda.clone();
        total = total + power.clone() * from_count::<T>(count);
    }
    total
}

/// `Σ_{i,j} Σ_k λ^{k+1} sim(s1[i+k], s2[j+k])` over every aligned offset.
pub fn oracle_wess<K, T, S>(s1: &[K], s2: &[K], lambda: T, sim: &S) -> T
where
    T: Weight,
    S: Similarity<K, T> + ?Sized,
{
    let mut total = T::zero();
    for i in 0..s1.len() {
        for j in 0..s2.len() {
            let mut power = T::one();
            let mut k = 0;
            while i + k < s1.len() && j + k < s2.len() {
                power = power * lambda.clone();
                total = total + power.clone() * sim.similarity(&s1[i + k], &s2[j + k]);
                k += 1;
            }
        }
    }
    total
}

/// String-match oracle over the relation `sim >= theta`: every aligned run of
/// length `q` whose positions all pass the threshold contributes `λ^q`.
pub fn oracle_west<K, T, S>(s1: &[K], s2: &[K], lambda: T, theta: T, sim: &S) -> T
where
    T: Weight,
    S: Similarity<K, T> + ?Sized,
{
    let mut total = T::zero();
    for i in 0..s1.len() {
        for j in 0..s2.len() {
            let mut power = T::one();
            let mut k = 0;
            while i + k < s1.len()
                && j + k < s2.len()
                && sim.similarity(&s1[i + k], &s2[j + k]) >= theta
            {
                power = power * lambda.clone();
                total = total + power.clone();
                k += 1;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    #[test]
    fn sm_examples() {
        assert_eq!(oracle_sm(&["a", "b", "c"], &["a", "b", "d"], 0.5), 1.25);
        assert_eq!(oracle_sm(&["good"], &["good"], 0.5), 0.5);
        assert_eq!(oracle_sm(&["a", "b"], &["c", "d"], 0.5), 0.0);
        assert_eq!(
            common_ngram_counts(&["a", "b", "c"], &["a", "b", "d"]),
            vec![2, 1, 0]
        );
    }

    #[test]
    fn sm_at_lambda_one_is_an_integer_count() {
        let s1 = ["a", "b", "a", "b"];
        let s2 = ["a", "b", "a"];
        let k: BigRational = oracle_sm(&s1, &s2, BigRational::from_integer(BigInt::from(1)));
        assert!(k.is_integer());
        // unigrams 2·2+2·1, bigrams "ab"·2 + "ba"·1, trigram "aba"·1
        assert_eq!(k, BigRational::from_integer(BigInt::from(6 + 3 + 1)));
    }

    #[test]
    fn wess_examples() {
        let one = |_: &&str, _: &&str| 1.0;
        assert_eq!(oracle_wess(&["a", "b"], &["c", "d"], 0.5, &one), 2.25);
        let point_six = |_: &&str, _: &&str| 0.6;
        assert!((oracle_wess(&["u"], &["v"], 0.5_f64, &point_six) - 0.3).abs() < 1e-15);
        let zero = |_: &&str, _: &&str| 0.0;
        assert_eq!(oracle_wess(&["a"], &["b"], 0.5, &zero), 0.0);
    }

    #[test]
    fn west_examples() {
        let sim = |a: &&str, b: &&str| if a == b { 1.0 } else { 0.4 };
        assert_eq!(oracle_west(&["a", "b"], &["a", "c"], 0.5, 1.5, &sim), 0.0);
        // theta = -1: every pair matches, so this is SM over an all-match relation
        let all = oracle_west(&["a", "b"], &["c", "d"], 0.5, -1.0, &sim);
        assert_eq!(all, oracle_sm(&["x", "x"], &["x", "x"], 0.5));
        assert_eq!(all, 2.25);
        // a similarity exactly at the threshold counts
        let exact = |_: &&str, _: &&str| 0.7;
        assert_eq!(oracle_west(&["u"], &["v"], 0.5, 0.7, &exact), 0.5);
    }

    #[test]
    fn index_counts_every_occurrence() {
        let s = ["a", "b", "a", "c"];
        let idx = NGramIndex::new(&s);
        assert_eq!(idx.occurrences(), 4 * 5 / 2);
        assert_eq!(idx.positions(&["a"]), &[0, 2]);
        assert_eq!(idx.positions(&["b", "a"]), &[1]);
    }
}
