use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::smo::{smo_solve, SvmConfig};
use crate::error::{Error, Result};
use crate::kernels::GramMatrix;
use crate::scalar::Scalar;

/// One binary classifier; a positive decision votes for `positive`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryModel<T> {
    pub positive: usize,
    pub negative: usize,
    /// Training indices (into the full training set) with `α > 0`.
    pub support: Vec<usize>,
    /// `α_i · y_i`, parallel to `support`.
    pub coef: Vec<T>,
    pub bias: T,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_violation: T,
    pub nonpositive_curvature_steps: usize,
}

impl<T: Scalar> BinaryModel<T> {
    pub fn decision(&self, kernel_row: &[T]) -> T {
        self.support
            .iter()
            .zip(&self.coef)
            .fold(self.bias, |acc, (&i, &c)| acc + c * kernel_row[i])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel<T> {
    /// Sorted class labels; binary models refer to them by index.
    pub classes: Vec<String>,
    /// Pairs `(a, b)` with `a < b`, in lexicographic order.
    pub pairs: Vec<BinaryModel<T>>,
    pub train_ids: Vec<String>,
    /// Fingerprint of the Gram matrix the model was trained on.
    pub kernel_fingerprint: String,
    pub config: SvmConfig<T>,
}

impl<T: Scalar> SvmModel<T> {
    /// Kernel fingerprint plus the margin parameter.
    pub fn fingerprint(&self) -> String {
        format!("{} C={:?}", self.kernel_fingerprint, self.config.c.as_f64())
    }

    pub fn converged(&self) -> bool {
        self.pairs.iter().all(|p| p.converged)
    }

    pub fn max_kkt_violation(&self) -> T {
        self.pairs
            .iter()
            .map(|p| p.kkt_violation)
            .fold(T::zero(), T::max)
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes
            .binary_search_by(|c| c.as_str().cmp(label))
            .ok()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction<T> {
    pub label: String,
    pub class_index: usize,
    pub votes: Vec<usize>,
    /// One value per binary model, in `SvmModel::pairs` order.
    pub decision_values: Vec<T>,
}

pub fn ovo_train<T: Scalar, L: AsRef<str> + Sync>(
    gram: &GramMatrix<T>,
    labels: &[L],
    config: &SvmConfig<T>,
) -> Result<SvmModel<T>> {
    config.validate()?;
    if gram.rows() != gram.cols() {
        return Err(Error::InvalidInput(format!(
            "training Gram must be square, got {}x{}",
            gram.rows(),
            gram.cols()
        )));
    }
    if labels.len() != gram.rows() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} training instances",
            labels.len(),
            gram.rows()
        )));
    }
    let classes: Vec<String> = labels
        .iter()
        .map(|l| l.as_ref().to_owned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "training needs at least two classes, found {}",
            classes.len()
        )));
    }
    let class_of: Vec<usize> = labels
        .iter()
        .map(|l| {
            classes
                .binary_search_by(|c| c.as_str().cmp(l.as_ref()))
                .unwrap()
        })
        .collect();

    let pair_list: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|a| (a + 1..classes.len()).map(move |b| (a, b)))
        .collect();
    let pairs = pair_list
        .par_iter()
        .map(|&(a, b)| {
            let members: Vec<usize> = (0..class_of.len())
                .filter(|&i| class_of[i] == a || class_of[i] == b)
                .collect();
            let y: Vec<i8> = members
                .iter()
                .map(|&i| if class_of[i] == a { 1 } else { -1 })
                .collect();
            let sub = gram.select(&members, &members);
            let sol = smo_solve(sub.values(), &y, config)?;
            let (support, coef) = members
                .iter()
                .zip(&y)
                .zip(&sol.alphas)
                .filter(|(_, &alpha)| alpha > T::zero())
                .map(|((&i, &yi), &alpha)| (i, if yi > 0 { alpha } else { -alpha }))
                .unzip();
            Ok(BinaryModel {
                positive: a,
                negative: b,
                support,
                coef,
                bias: sol.bias,
                iterations: sol.iterations,
                converged: sol.converged,
                kkt_violation: sol.kkt_violation,
                nonpositive_curvature_steps: sol.nonpositive_curvature_steps,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SvmModel {
        classes,
        pairs,
        train_ids: gram.col_ids().to_vec(),
        kernel_fingerprint: gram.fingerprint().to_owned(),
        config: config.clone(),
    })
}

pub fn ovo_predict<T: Scalar>(
    model: &SvmModel<T>,
    cross: &GramMatrix<T>,
) -> Result<Vec<Prediction<T>>> {
    if cross.fingerprint() != model.kernel_fingerprint {
        return Err(Error::FingerprintMismatch {
            expected: model.kernel_fingerprint.clone(),
            found: cross.fingerprint().to_owned(),
        });
    }
    if cross.col_ids() != model.train_ids.as_slice() {
        return Err(Error::InvalidInput(
            "cross Gram columns do not match the model's training ids".into(),
        ));
    }
    Ok((0..cross.rows())
        .into_par_iter()
        .map(|r| predict_row(model, cross.row(r)))
        .collect())
}

fn predict_row<T: Scalar>(model: &SvmModel<T>, row: &[T]) -> Prediction<T> {
    let k = model.classes.len();
    let mut votes = vec![0usize; k];
    let mut strength = vec![T::zero(); k];
    let decision_values: Vec<T> = model.pairs.iter().map(|p| p.decision(row)).collect();
    for (pair, &d) in model.pairs.iter().zip(&decision_values) {
        let winner = if d > T::zero() {
            pair.positive
        } else if d < T::zero() {
            pair.negative
        } else {
            continue;
        };
        votes[winner] += 1;
        strength[winner] = strength[winner] + d.abs();
    }
    let mut best = 0;
    for c in 1..k {
        if votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best]) {
            best = c;
        }
    }
    Prediction {
        label: model.classes[best].clone(),
        class_index: best,
        votes,
        decision_values,
    }
}
