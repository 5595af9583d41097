//! Randomized self-checks of the kernel implementations against the oracle.
//!
//! The kernels under test are passed in as a [`KernelSuite`] of function
//! pointers so that deliberately broken variants can be swapped in to make
//! sure the checks actually bite.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embeddings::{token_sim, EmbeddingTable, Similarity, TokenRef};
use crate::error::{Error, Result};
use crate::kernels::{kernel_sm, kernel_wess, kernel_west};
use crate::oracle::{oracle_sm, oracle_wess, oracle_west};

pub type Tokens = [String];
pub type SmFn = fn(&Tokens, &Tokens, f64) -> f64;
pub type WestFn = fn(&Tokens, &Tokens, f64, f64, &dyn Similarity<String, f64>) -> f64;
pub type WessFn = fn(&Tokens, &Tokens, f64, &dyn Similarity<String, f64>) -> f64;

#[derive(Clone, Copy)]
pub struct KernelSuite {
    pub sm: SmFn,
    pub west: WestFn,
    pub wess: WessFn,
}

impl Default for KernelSuite {
    fn default() -> Self {
        Self {
            sm: kernel_sm::<String, f64>,
            west: |a, b, lambda, theta, sim| kernel_west(a, b, lambda, theta, sim),
            wess: |a, b, lambda, sim| kernel_wess(a, b, lambda, sim),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Random pairs per variant for the oracle comparison.
    pub pairs: usize,
    pub lambdas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub alphabet: usize,
    pub max_len: usize,
    pub dim: usize,
    /// Sentences in each PSD Gram.
    pub psd_size: usize,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            pairs: 200,
            lambdas: vec![0.3, 0.5, 1.0],
            thetas: vec![0.3, 0.7],
            alphabet: 5,
            max_len: 12,
            dim: 8,
            psd_size: 50,
        }
    }
}

impl SelftestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.thetas.is_empty() {
            return Err(Error::InvalidConfig(
                "lambda and theta lists must not be empty".into(),
            ));
        }
        if let Some(l) = self.lambdas.iter().find(|&&l| !(l > 0.0 && l <= 1.0)) {
            return Err(Error::InvalidConfig(format!(
                "lambda must lie in (0, 1], got {l}"
            )));
        }
        if let Some(t) = self.thetas.iter().find(|&&t| !(-1.0..=1.0).contains(&t)) {
            return Err(Error::InvalidConfig(format!(
                "theta must lie in [-1, 1], got {t}"
            )));
        }
        if self.alphabet == 0 || self.max_len == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig(
                "alphabet, max_len and dim must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

/// Token `i` of a synthetic alphabet.
pub fn alphabet_token(i: usize) -> String {
    format!("w{i}")
}

pub fn random_tokens<R: Rng>(rng: &mut R, alphabet: usize, max_len: usize) -> Vec<String> {
    let len = rng.gen_range(1..=max_len);
    (0..len)
        .map(|_| alphabet_token(rng.gen_range(0..alphabet)))
        .collect()
}

/// Uniform `[-1, 1)` vectors for every alphabet token.
pub fn random_table<R: Rng>(rng: &mut R, alphabet: usize, dim: usize) -> EmbeddingTable<f64> {
    let entries: Vec<(String, Vec<f64>)> = (0..alphabet)
        .map(|i| {
            let v = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (alphabet_token(i), v)
        })
        .collect();
    EmbeddingTable::from_entries(dim, entries).expect("generated vectors have the declared dim")
}

fn within(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(1.0)
}

pub fn run_selftest(config: &SelftestConfig, suite: &KernelSuite) -> Result<SelftestReport> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let table = random_table(&mut rng, config.alphabet, config.dim);
    let sim = |a: &String, b: &String| token_sim(TokenRef::new(a), TokenRef::new(b), &table, false);
    let sim: &dyn Similarity<String, f64> = &sim;
    let pairs: Vec<(Vec<String>, Vec<String>)> = (0..config.pairs)
        .map(|_| {
            (
                random_tokens(&mut rng, config.alphabet, config.max_len),
                random_tokens(&mut rng, config.alphabet, config.max_len),
            )
        })
        .collect();
    let lambda = |i: usize| config.lambdas[i % config.lambdas.len()];
    let theta = |i: usize| config.thetas[i % config.thetas.len()];

    let mut report = SelftestReport::default();
    type Eval<'a> = Box<dyn Fn(usize, &Tokens, &Tokens) -> (f64, f64) + 'a>;
    let variants: [(&str, Eval); 3] = [
        (
            "sm",
            Box::new(|i, a, b| ((suite.sm)(a, b, lambda(i)), oracle_sm(a, b, lambda(i)))),
        ),
        (
            "west",
            Box::new(|i, a, b| {
                (
                    (suite.west)(a, b, lambda(i), theta(i), sim),
                    oracle_west(a, b, lambda(i), theta(i), sim),
                )
            }),
        ),
        (
            "wess",
            Box::new(|i, a, b| {
                (
                    (suite.wess)(a, b, lambda(i), sim),
                    oracle_wess(a, b, lambda(i), sim),
                )
            }),
        ),
    ];

    for (name, eval) in &variants {
        let mismatches = pairs
            .iter()
            .enumerate()
            .filter(|(i, (a, b))| {
                let (got, want) = eval(*i, a, b);
                !within(got, want, 1e-9)
            })
            .count();
        report.push(
            format!("oracle equivalence ({name})"),
            mismatches == 0,
            format!("{mismatches}/{} pairs disagree", pairs.len()),
        );

        let asymmetric = pairs
            .iter()
            .enumerate()
            .filter(|(i, (a, b))| !within(eval(*i, a, b).0, eval(*i, b, a).0, 1e-12))
            .count();
        report.push(
            format!("symmetry ({name})"),
            asymmetric == 0,
            format!("{asymmetric}/{} pairs asymmetric", pairs.len()),
        );
    }

    let sentences: Vec<Vec<String>> = (0..config.psd_size)
        .map(|_| random_tokens(&mut rng, config.alphabet, config.max_len))
        .collect();
    let psd_lambda = config.lambdas[0];
    type Pairwise<'a> = Box<dyn Fn(&Tokens, &Tokens) -> f64 + 'a>;
    let psd_suite: [(&str, Pairwise); 2] = [
        ("sm", Box::new(|a, b| (suite.sm)(a, b, psd_lambda))),
        ("wess", Box::new(|a, b| (suite.wess)(a, b, psd_lambda, sim))),
    ];
    for (name, k) in &psd_suite {
        let n = sentences.len();
        let gram = DMatrix::from_fn(n, n, |i, j| {
            let (i, j) = (i.min(j), i.max(j));
            k(&sentences[i], &sentences[j])
        });
        let eig = gram.symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        report.push(
            format!("positive semidefinite ({name})"),
            n == 0 || lo >= -1e-8 * hi.abs().max(f64::MIN_POSITIVE),
            format!("eigenvalues in [{lo:.3e}, {hi:.3e}] over {n} sentences"),
        );
    }
    Ok(report)
}
