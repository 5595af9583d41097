//! Shared fixtures for the integration and acceptance tests.
#![allow(dead_code)]

use anygram::{Corpus, EmbeddingTable, GramMatrix, Sentence};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const FILLER: usize = 30;

pub fn filler(i: usize) -> String {
    format!("f{i}")
}

/// Random filler sentences with one sentiment marker inserted at a random
/// position; the label is the marker's class.
pub fn marker_corpus(
    rng: &mut impl Rng,
    prefix: &str,
    n: usize,
    markers: [(&str, &str); 2],
) -> Corpus {
    let sentences = (0..n)
        .map(|i| {
            let (marker, label) = markers[i % 2];
            let len = rng.gen_range(4..=10);
            let mut tokens: Vec<String> =
                (0..len).map(|_| filler(rng.gen_range(0..FILLER))).collect();
            let at = rng.gen_range(0..=tokens.len());
            tokens.insert(at, marker.to_owned());
            Sentence::new(format!("{prefix}{i}"), tokens, Some(label.to_owned()), []).unwrap()
        })
        .collect();
    Corpus::new(sentences).unwrap()
}

pub const TRAIN_MARKERS: [(&str, &str); 2] = [("good", "pos"), ("bad", "neg")];
pub const SYNONYM_MARKERS: [(&str, &str); 2] = [("great", "pos"), ("awful", "neg")];

/// One-hot filler vectors plus two sentiment axes on which each training
/// marker has a cosine-close synonym (cos = 0.9) that never occurs in training.
pub fn synonym_embeddings() -> EmbeddingTable<f64> {
    let dim = FILLER + 4;
    let unit = |axis: usize| {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        v
    };
    let near = |axis: usize| {
        let mut v = vec![0.0; dim];
        v[axis] = 0.9;
        v[axis + 1] = (1.0f64 - 0.81).sqrt();
        v
    };
    let mut entries: Vec<(String, Vec<f64>)> = (0..FILLER).map(|i| (filler(i), unit(i))).collect();
    entries.push(("good".into(), unit(FILLER)));
    entries.push(("great".into(), near(FILLER)));
    entries.push(("bad".into(), unit(FILLER + 2)));
    entries.push(("awful".into(), near(FILLER + 2)));
    EmbeddingTable::from_entries(dim, entries).unwrap()
}

/// Radial-basis Gram over random 2-D points labelled by a linear rule with a
/// margin, so the set is separable and the matrix strictly positive definite.
pub fn separable_problem(rng: &mut impl Rng, n: usize) -> (Vec<f64>, Vec<i8>) {
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while points.len() < n {
        let p: (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let side = p.0 + 0.5 * p.1;
        if side.abs() < 0.4 {
            continue;
        }
        // keep both classes represented
        let y = if side > 0.0 { 1 } else { -1 };
        if points.len() + 1 == n && !labels.contains(&-y) {
            continue;
        }
        points.push(p);
        labels.push(y);
    }
    let kernel = (0..n * n)
        .map(|k| {
            let (a, b) = (points[k / n], points[k % n]);
            (-((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2))).exp()
        })
        .collect();
    (kernel, labels)
}

/// Multiclass toy problem: clusters around `classes` centres, RBF Gram.
pub fn cluster_gram(
    rng: &mut impl Rng,
    per_class: usize,
    classes: usize,
) -> (GramMatrix<f64>, Vec<String>) {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for c in 0..classes {
        let angle = c as f64 * std::f64::consts::TAU / classes as f64;
        for _ in 0..per_class {
            points.push((
                3.0 * angle.cos() + rng.gen_range(-0.8..0.8),
                3.0 * angle.sin() + rng.gen_range(-0.8..0.8),
            ));
            labels.push(format!("c{c}"));
        }
    }
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let points: Vec<_> = order.iter().map(|&i| points[i]).collect();
    let labels: Vec<_> = order.iter().map(|&i| labels[i].clone()).collect();
    let values = (0..n * n)
        .map(|k| {
            let (a, b) = (points[k / n], points[k % n]);
            (-0.5 * ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2))).exp()
        })
        .collect();
    let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    (
        GramMatrix::new(values, ids.clone(), ids, "rbf").unwrap(),
        labels,
    )
}

/// Exact dual optimum by enumerating which multipliers sit at 0, at C, or
/// strictly inside, and solving the equality-constrained system for the free
/// ones. Exponential; for a handful of points only.
pub fn dual_by_enumeration(kernel: &[f64], labels: &[i8], c: f64) -> Vec<f64> {
    let n = labels.len();
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i * n + j];
    let objective = |a: &[f64]| {
        let mut v = 0.0;
        for i in 0..n {
            for j in 0..n {
                v += 0.5 * a[i] * a[j] * q(i, j);
            }
            v -= a[i];
        }
        v
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 1).collect();
        let mut alpha: Vec<f64> = state
            .iter()
            .map(|&s| if s == 2 { c } else { 0.0 })
            .collect();
        if !free.is_empty() {
            let m = free.len();
            let mut a = DMatrix::zeros(m + 1, m + 1);
            let mut rhs = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q(i, j);
                }
                a[(r, m)] = y[i];
                a[(m, r)] = y[i];
                rhs[r] = 1.0
                    - (0..n)
                        .filter(|&j| state[j] == 2)
                        .map(|j| q(i, j) * c)
                        .sum::<f64>();
            }
            rhs[m] = -(0..n)
                .filter(|&j| state[j] == 2)
                .map(|j| y[j] * c)
                .sum::<f64>();
            let Some(sol) = a.lu().solve(&rhs) else {
                continue;
            };
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let feasible = alpha.iter().all(|&a| (-1e-9..=c + 1e-9).contains(&a))
            && alpha.iter().zip(&y).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-9;
        if feasible {
            let f = objective(&alpha);
            if best.as_ref().is_none_or(|(b, _)| f < *b - 1e-12) {
                best = Some((f, alpha));
            }
        }
    }
    best.expect("the zero vector is always feasible").1
}

/// `|Σ α_i y_i|` and the box violation of a binary model's coefficients.
pub fn feasibility(coef: &[f64], c: f64) -> (f64, bool) {
    let sum: f64 = coef.iter().sum();
    let in_box = coef.iter().all(|a| a.abs() > 0.0 && a.abs() <= c);
    (sum.abs(), in_box)
}
