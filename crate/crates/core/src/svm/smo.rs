//! Sequential minimal optimization for the soft-margin dual
//!
//! ```text
//! min ½ αᵀQα − eᵀα   s.t.  0 ≤ α ≤ C,  yᵀα = 0,   Q_ij = y_i y_j K_ij
//! ```
//!
//! Working pairs are chosen by maximal violation with second-order gain
//! (Fan, Chen & Lin, JMLR 2005), scanning instances in an order shuffled by
//! the configured seed so that ties resolve deterministically. Non-positive
//! curvature (indefinite Grams) is replaced by a tiny positive constant,
//! which drives the step to an interval endpoint.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const TAU: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig<T> {
    /// Error/margin trade-off.
    pub c: T,
    /// KKT tolerance.
    pub tol: T,
    /// Solver budget in passes of `n` pair updates; `None` means `10·n`.
    pub max_passes: Option<usize>,
    pub seed: u64,
}

impl<T: Scalar> SvmConfig<T> {
    pub fn new(c: T) -> Self {
        Self {
            c,
            ..Self::default()
        }
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_passes(mut self, passes: usize) -> Self {
        self.max_passes = Some(passes);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > T::zero() && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if !(self.tol > T::zero() && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_passes == Some(0) {
            return Err(Error::InvalidConfig("max_passes must be positive".into()));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for SvmConfig<T> {
    fn default() -> Self {
        Self {
            c: T::one(),
            tol: T::lit(1e-3),
            max_passes: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoSolution<T> {
    pub alphas: Vec<T>,
    pub bias: T,
    pub iterations: usize,
    pub converged: bool,
    /// Largest KKT violation of the returned solution, in margin units.
    pub kkt_violation: T,
    /// Pair updates that met zero or negative curvature.
    pub nonpositive_curvature_steps: usize,
}

impl<T: Scalar> SmoSolution<T> {
    /// Decision value `Σ α_i y_i K(x, x_i) + b` for a kernel row.
    pub fn decision(&self, labels: &[i8], kernel_row: &[T]) -> T {
        self.alphas
            .iter()
            .zip(labels)
            .zip(kernel_row)
            .filter(|((a, _), _)| **a > T::zero())
            .fold(self.bias, |acc, ((&a, &y), &k)| acc + a * sign::<T>(y) * k)
    }
}

#[inline]
fn sign<T: Scalar>(y: i8) -> T {
    if y > 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Solves the binary dual over a row-major `n×n` kernel matrix.
pub fn smo_solve<T: Scalar>(
    kernel: &[T],
    labels: &[i8],
    config: &SvmConfig<T>,
) -> Result<SmoSolution<T>> {
    config.validate()?;
    let n = labels.len();
    if kernel.len() != n * n {
        return Err(Error::InvalidInput(format!(
            "kernel has {} entries, expected {n}x{n}",
            kernel.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::InvalidInput(format!("label {bad} is not ±1")));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::InvalidInput(
            "binary problem needs at least one instance of each label".into(),
        ));
    }

    let c = config.c;
    let tol = config.tol;
    let tau = T::lit(TAU);
    let k = |i: usize, j: usize| kernel[i * n + j];
    let y: Vec<T> = labels.iter().map(|&l| sign(l)).collect();
    let qd: Vec<T> = (0..n).map(|i| k(i, i)).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));

    let mut alpha = vec![T::zero(); n];
    let mut grad = vec![-T::one(); n];
    let upper = |a: T| a >= c;
    let lower = |a: T| a <= T::zero();

    let budget = config.max_passes.unwrap_or(10 * n).saturating_mul(n.max(1));
    let mut iterations = 0;
    let mut converged = false;
    let mut nonpositive = 0;

    while iterations < budget {
        // First index: maximal violator in the "up" direction.
        let mut gmax = T::neg_infinity();
        let mut first = None;
        for &t in &order {
            let v = if labels[t] > 0 {
                (!upper(alpha[t])).then(|| -grad[t])
            } else {
                (!lower(alpha[t])).then(|| grad[t])
            };
            if let Some(v) = v {
                if v > gmax {
                    gmax = v;
                    first = Some(t);
                }
            }
        }
        let Some(i) = first else {
            converged = true;
            break;
        };

        // Second index: largest second-order decrease among "down" violators.
        let mut gmax2 = T::neg_infinity();
        let mut best = T::infinity();
        let mut second = None;
        for &t in &order {
            let gd = if labels[t] > 0 {
                if lower(alpha[t]) {
                    continue;
                }
                gmax2 = gmax2.max(grad[t]);
                gmax + grad[t]
            } else {
                if upper(alpha[t]) {
                    continue;
                }
                gmax2 = gmax2.max(-grad[t]);
                gmax - grad[t]
            };
            if gd > T::zero() {
                let quad = qd[i] + qd[t] - T::lit(2.0) * k(i, t);
                let quad = if quad > T::zero() { quad } else { tau };
                let obj = -(gd * gd) / quad;
                if obj < best {
                    best = obj;
                    second = Some(t);
                }
            }
        }
        if gmax + gmax2 < tol {
            converged = true;
            break;
        }
        let Some(j) = second else {
            converged = true;
            break;
        };

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = qd[i] + qd[j] - T::lit(2.0) * k(i, j);
        if quad <= T::zero() {
            nonpositive += 1;
            quad = tau;
        }
        if labels[i] != labels[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] = alpha[i] + delta;
            alpha[j] = alpha[j] + delta;
            if diff > T::zero() {
                if alpha[j] < T::zero() {
                    alpha[j] = T::zero();
                    alpha[i] = diff;
                }
            } else if alpha[i] < T::zero() {
                alpha[i] = T::zero();
                alpha[j] = -diff;
            }
            if diff > T::zero() {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] = alpha[i] - delta;
            alpha[j] = alpha[j] + delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < T::zero() {
                alpha[j] = T::zero();
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < T::zero() {
                alpha[i] = T::zero();
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g = *g + y[t] * (y[i] * k(i, t) * di + y[j] * k(j, t) * dj);
        }
        iterations += 1;
    }

    let bias = -rho(&alpha, &grad, labels, c);
    let kkt_violation = kkt_violation(&alpha, &grad, labels, bias, c);
    Ok(SmoSolution {
        alphas: alpha,
        bias,
        iterations,
        converged,
        kkt_violation,
        nonpositive_curvature_steps: nonpositive,
    })
}

/// Offset from the free support vectors, or the midpoint of the feasible
/// interval when every multiplier sits at a bound.
fn rho<T: Scalar>(alpha: &[T], grad: &[T], labels: &[i8], c: T) -> T {
    let mut ub = T::infinity();
    let mut lb = T::neg_infinity();
    let mut free = 0usize;
    let mut sum = T::zero();
    for ((&a, &g), &l) in alpha.iter().zip(grad).zip(labels) {
        let yg = sign::<T>(l) * g;
        if a >= c {
            if l < 0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if a <= T::zero() {
            if l > 0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum = sum + yg;
        }
    }
    if free > 0 {
        sum / T::from_usize(free).expect("count fits the scalar")
    } else {
        (ub + lb) / T::lit(2.0)
    }
}

/// Largest violation of the KKT conditions in terms of the margin `y_i f(x_i)`.
fn kkt_violation<T: Scalar>(alpha: &[T], grad: &[T], labels: &[i8], bias: T, c: T) -> T {
    alpha
        .iter()
        .zip(grad)
        .zip(labels)
        .map(|((&a, &g), &l)| {
            // y f(x) − 1 = G + y b
            let slack = g + sign::<T>(l) * bias;
            if a <= T::zero() {
                (-slack).max(T::zero())
            } else if a >= c {
                slack.max(T::zero())
            } else {
                slack.abs()
            }
        })
        .fold(T::zero(), T::max)
}
