//! Gram matrix assembly.
//!
//! Cells are evaluated in parallel with rayon. Every cell is a pure function
//! of its two sentences, evaluated with the arguments in a canonical
//! (content-based) order, so the result is bit-identical for any thread
//! count, exactly symmetric, and a cross matrix of a corpus against itself
//! reproduces its train matrix.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::config::{AspectMode, KernelConfig, Variant};
use super::dp::{gated, wess_dp, west_dp, PositionIndex};
use crate::corpus::{Corpus, Sentence};
use crate::embeddings::{augment_aspect_flag, cosine_with_norms, norm, EmbeddingTable};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense kernel matrix with instance identifiers.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    row_labels: Vec<Option<String>>,
    fingerprint: String,
    may_be_indefinite: bool,
    provenance: String,
}

impl<T: Scalar> GramMatrix<T> {
    /// `values` is row-major, `row_ids.len() × col_ids.len()`.
    pub fn new(
        values: Vec<T>,
        row_ids: Vec<String>,
        col_ids: Vec<String>,
        fingerprint: impl Into<String>,
    ) -> Result<Self> {
        let (rows, cols) = (row_ids.len(), col_ids.len());
        if values.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{} values do not fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite kernel value at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self {
            rows,
            cols,
            values,
            row_labels: vec![None; rows],
            row_ids,
            col_ids,
            fingerprint: fingerprint.into(),
            may_be_indefinite: false,
            provenance: String::new(),
        })
    }

    pub fn with_row_labels(mut self, labels: Vec<Option<String>>) -> Result<Self> {
        if labels.len() != self.rows {
            return Err(Error::InvalidInput(format!(
                "{} row labels for {} rows",
                labels.len(),
                self.rows
            )));
        }
        self.row_labels = labels;
        Ok(self)
    }

    pub fn with_indefinite_flag(mut self, flag: bool) -> Self {
        self.may_be_indefinite = flag;
        self
    }

    /// Free-form provenance tag, e.g. the digest of the run that produced it.
    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    pub fn row_labels(&self) -> &[Option<String>] {
        &self.row_labels
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Set for thresholded-similarity kernels, which are not guaranteed PSD.
    pub fn may_be_indefinite(&self) -> bool {
        self.may_be_indefinite
    }

    /// Square matrix whose rows and columns are the same instances.
    pub fn is_train(&self) -> bool {
        self.row_ids == self.col_ids
    }

    pub fn max_asymmetry(&self) -> Option<T> {
        if self.rows != self.cols {
            return None;
        }
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        Some(worst)
    }

    /// Smallest and largest eigenvalue of a square matrix (symmetrized).
    pub fn eigen_extremes(&self) -> Option<(f64, f64)> {
        if self.rows != self.cols || self.rows == 0 {
            return None;
        }
        let n = self.rows;
        let m = DMatrix::from_fn(n, n, |i, j| {
            0.5 * (self.get(i, j).as_f64() + self.get(j, i).as_f64())
        });
        let eig = m.symmetric_eigenvalues();
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((min, max))
    }

    /// Copy with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = *v * factor);
        out
    }

    /// Sub-matrix over the given row and column positions.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let values = rows
            .iter()
            .flat_map(|&r| cols.iter().map(move |&c| self.get(r, c)))
            .collect();
        Self {
            rows: rows.len(),
            cols: cols.len(),
            values,
            row_ids: rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
            col_ids: cols.iter().map(|&c| self.col_ids[c].clone()).collect(),
            row_labels: rows.iter().map(|&r| self.row_labels[r].clone()).collect(),
            fingerprint: self.fingerprint.clone(),
            may_be_indefinite: self.may_be_indefinite,
            provenance: self.provenance.clone(),
        }
    }
}

/// Fingerprint of a kernel config together with the embeddings it uses.
pub fn gram_fingerprint<T: Scalar>(
    config: &KernelConfig<T>,
    embeddings: Option<&EmbeddingTable<T>>,
) -> String {
    let mut fp = config.fingerprint();
    if let Some(table) = embeddings {
        fp.push_str(&format!(
            " embeddings={} dim={} lowercase={}",
            &table.digest()[..16],
            table.dim(),
            table.lowercase_lookup()
        ));
    }
    fp
}

/// Unordered token-pair similarity cache, one per worker.
pub(crate) type SimMemo<T> = HashMap<(u32, u32), T>;

/// Token ids and per-id vectors for every sentence taking part in a Gram
/// computation.
struct Prepared<'a, T> {
    config: &'a KernelConfig<T>,
    /// Kernel-level tokens: suffixed text and aspect flag (when flag mode).
    keys: Vec<Vec<(String, bool)>>,
    ids: Vec<Vec<u32>>,
    /// Position index per sentence (string match only).
    index: Vec<PositionIndex<u32>>,
    /// Flag-augmented vector and its norm per token id.
    vectors: Vec<Option<(Vec<T>, T)>>,
}

impl<'a, T: Scalar> Prepared<'a, T> {
    fn new<'s, I>(
        sentences: I,
        config: &'a KernelConfig<T>,
        embeddings: Option<&EmbeddingTable<T>>,
    ) -> Self
    where
        I: IntoIterator<Item = &'s Sentence>,
    {
        let flag = config.aspect_mode == AspectMode::Flag;
        let keys: Vec<Vec<(String, bool)>> = sentences
            .into_iter()
            .map(|s| {
                let tokens = match config.aspect_mode {
                    AspectMode::Suffix => s.mark_aspect_suffix(&config.suffix).tokens().to_vec(),
                    _ => s.tokens().to_vec(),
                };
                tokens
                    .into_iter()
                    .enumerate()
                    .map(|(i, t)| (t, flag && s.is_aspect(i)))
                    .collect()
            })
            .collect();

        let mut vocab: HashMap<&(String, bool), u32> = HashMap::new();
        let mut order: Vec<&(String, bool)> = Vec::new();
        let ids: Vec<Vec<u32>> = keys
            .iter()
            .map(|sent| {
                sent.iter()
                    .map(|k| {
                        *vocab.entry(k).or_insert_with(|| {
                            order.push(k);
                            (order.len() - 1) as u32
                        })
                    })
                    .collect()
            })
            .collect();

        let vectors = match embeddings {
            Some(table) if config.variant.uses_embeddings() => order
                .iter()
                .map(|(text, aspect)| {
                    table.lookup(text).and_then(|v| {
                        let v = if flag {
                            augment_aspect_flag(v, *aspect)
                        } else {
                            v.to_vec()
                        };
                        let n = norm(&v);
                        (!n.is_zero()).then_some((v, n))
                    })
                })
                .collect(),
            _ => Vec::new(),
        };

        let index = if config.variant == Variant::Sm {
            ids.iter()
                .map(|s| PositionIndex::new(s.iter().copied()))
                .collect()
        } else {
            Vec::new()
        };

        Self {
            config,
            keys,
            ids,
            index,
            vectors,
        }
    }

    fn sim(&self, a: u32, b: u32, memo: &mut SimMemo<T>) -> T {
        if a == b {
            return T::one();
        }
        let key = if a < b { (a, b) } else { (b, a) };
        *memo.entry(key).or_insert_with(|| {
            match (&self.vectors[a as usize], &self.vectors[b as usize]) {
                (Some((u, nu)), Some((v, nv))) => cosine_with_norms(u, v, *nu, *nv),
                _ => T::zero(),
            }
        })
    }

    /// Identical kernel-level sentences normalize to exactly 1.
    fn normalize(&self, a: usize, b: usize, k: T, self_a: T, self_b: T) -> T {
        if self.keys[a] == self.keys[b] && self_a > T::zero() {
            T::one()
        } else {
            normalized(k, self_a, self_b)
        }
    }

    fn kernel(&self, a: usize, b: usize, memo: &mut SimMemo<T>) -> T {
        let (a, b) = if self.keys[a] <= self.keys[b] {
            (a, b)
        } else {
            (b, a)
        };
        let (s1, s2) = (&self.ids[a], &self.ids[b]);
        let lambda = &self.config.lambda;
        match self.config.variant {
            Variant::Sm => {
                let index = &self.index[b];
                let rows: Vec<&[usize]> = s1.iter().map(|id| index.positions(id)).collect();
                gated(&rows, s2.len(), lambda)
            }
            Variant::West => {
                let theta = self.config.theta.expect("validated config");
                west_dp(
                    s1.len(),
                    s2.len(),
                    |i, j| self.sim(s1[i], s2[j], memo) >= theta,
                    lambda,
                )
            }
            Variant::Wess => wess_dp(
                s1.len(),
                s2.len(),
                |i, j| self.sim(s1[i], s2[j], memo),
                lambda,
            ),
        }
    }
}

fn check_inputs<T: Scalar>(
    config: &KernelConfig<T>,
    embeddings: Option<&EmbeddingTable<T>>,
) -> Result<()> {
    config.validate()?;
    match (config.variant.uses_embeddings(), embeddings.is_some()) {
        (true, false) => Err(Error::InvalidConfig(format!(
            "the {} kernel requires embeddings",
            config.variant
        ))),
        (false, true) => Err(Error::InvalidConfig(
            "the sm kernel does not use embeddings".into(),
        )),
        _ => Ok(()),
    }
}

#[inline]
fn normalized<T: Scalar>(k: T, self_a: T, self_b: T) -> T {
    if self_a <= T::zero() || self_b <= T::zero() {
        T::zero()
    } else {
        k / (self_a.sqrt() * self_b.sqrt())
    }
}

/// Symmetric N×N matrix over a training corpus.
pub fn gram_train<T: Scalar>(
    corpus: &Corpus,
    config: &KernelConfig<T>,
    embeddings: Option<&EmbeddingTable<T>>,
) -> Result<GramMatrix<T>> {
    check_inputs(config, embeddings)?;
    let n = corpus.len();
    let prep = Prepared::new(corpus, config, embeddings);

    let upper: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map_init(SimMemo::new, |memo, i| {
            (i..n).map(|j| prep.kernel(i, j, memo)).collect()
        })
        .collect();

    let mut values = vec![T::zero(); n * n];
    for (i, row) in upper.iter().enumerate() {
        for (offset, &k) in row.iter().enumerate() {
            let j = i + offset;
            values[i * n + j] = k;
            values[j * n + i] = k;
        }
    }
    if config.normalize {
        let diag: Vec<T> = (0..n).map(|i| values[i * n + i]).collect();
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = prep.normalize(i, j, values[i * n + j], diag[i], diag[j]);
            }
        }
    }

    let ids = corpus.ids();
    Ok(GramMatrix::new(
        values,
        ids.clone(),
        ids,
        gram_fingerprint(config, embeddings),
    )?
    .with_row_labels(
        corpus
            .iter()
            .map(|s| s.label().map(str::to_owned))
            .collect(),
    )?
    .with_indefinite_flag(config.variant == Variant::West))
}

/// Rectangular |test|×|train| matrix.
pub fn gram_cross<T: Scalar>(
    test: &Corpus,
    train: &Corpus,
    config: &KernelConfig<T>,
    embeddings: Option<&EmbeddingTable<T>>,
) -> Result<GramMatrix<T>> {
    check_inputs(config, embeddings)?;
    let (m, n) = (test.len(), train.len());
    let prep = Prepared::new(test.iter().chain(train.iter()), config, embeddings);

    let rows: Vec<Vec<T>> = (0..m)
        .into_par_iter()
        .map_init(SimMemo::new, |memo, i| {
            (0..n).map(|j| prep.kernel(i, m + j, memo)).collect()
        })
        .collect();

    let mut values: Vec<T> = rows.into_iter().flatten().collect();
    if config.normalize && m > 0 {
        let selfs: Vec<T> = (0..m + n)
            .into_par_iter()
            .map_init(SimMemo::new, |memo, i| prep.kernel(i, i, memo))
            .collect();
        for i in 0..m {
            for j in 0..n {
                let (ka, kb) = (selfs[i], selfs[m + j]);
                let v = &mut values[i * n + j];
                *v = prep.normalize(i, m + j, *v, ka, kb);
            }
        }
    }

    Ok(GramMatrix::new(
        values,
        test.ids(),
        train.ids(),
        gram_fingerprint(config, embeddings),
    )?
    .with_row_labels(test.iter().map(|s| s.label().map(str::to_owned)).collect())?
    .with_indefinite_flag(config.variant == Variant::West))
}
