use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accuracy with a confusion table indexed `[gold][predicted]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub classes: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
}

pub fn evaluate_accuracy<P: AsRef<str>, G: AsRef<str>>(
    pred: &[P],
    gold: &[G],
) -> Result<Evaluation> {
    if pred.len() != gold.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} gold labels",
            pred.len(),
            gold.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("nothing to evaluate".into()));
    }
    let classes: Vec<String> = pred
        .iter()
        .map(AsRef::as_ref)
        .chain(gold.iter().map(AsRef::as_ref))
        .map(str::to_owned)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |l: &str| classes.binary_search_by(|c| c.as_str().cmp(l)).unwrap();
    let mut confusion = vec![vec![0; classes.len()]; classes.len()];
    let mut correct = 0;
    for (p, g) in pred.iter().zip(gold) {
        let (p, g) = (p.as_ref(), g.as_ref());
        confusion[index(g)][index(p)] += 1;
        correct += usize::from(p == g);
    }
    Ok(Evaluation {
        accuracy: correct as f64 / pred.len() as f64,
        correct,
        total: pred.len(),
        classes,
        confusion,
    })
}

impl fmt::Display for Evaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "accuracy: {:.2}% ({}/{})",
            100.0 * self.accuracy,
            self.correct,
            self.total
        )?;
        let width = self
            .classes
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max(9);
        write!(f, "{:width$}", "gold\\pred")?;
        for c in &self.classes {
            write!(f, " {c:>width$}")?;
        }
        writeln!(f)?;
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            write!(f, "{c:width$}")?;
            for n in row {
                write!(f, " {n:>width$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
