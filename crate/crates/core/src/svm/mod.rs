//! Precomputed-kernel support vector classification, one-versus-one.

mod eval;
mod ovo;
mod smo;

pub use eval::{evaluate_accuracy, Evaluation};
pub use ovo::{ovo_predict, ovo_train, BinaryModel, Prediction, SvmModel};
pub use smo::{smo_solve, SmoSolution, SvmConfig};
