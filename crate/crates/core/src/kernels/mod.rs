//! Any-gram kernels and Gram matrices.

mod config;
mod dp;
pub mod format;
mod gram;

pub use config::{AspectMode, KernelConfig, Variant, DEFAULT_LAMBDA};
pub use dp::{kernel_sm, kernel_wess, kernel_west, PositionIndex};
pub use format::{format_sig12, load_gram, read_gram, save_gram, write_gram, GramFormat};
pub use gram::{gram_cross, gram_fingerprint, gram_train, GramMatrix};
