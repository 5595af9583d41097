//! Any-gram kernels: similarity between token sequences that sums, over
//! common contiguous n-grams of every order, a weight decaying as `λ^q`.
//!
//! Three variants are provided — exact string match ([`kernel_sm`]),
//! thresholded embedding similarity ([`kernel_west`]) and raw embedding
//! similarity ([`kernel_wess`]) — together with parallel Gram builders, a
//! brute-force [`oracle`], and a precomputed-kernel one-versus-one SVM.
//!
//! Numeric code is generic over [`Scalar`] (`f32`/`f64`); the kernels and
//! oracle accept any [`Weight`], including exact [`Exact`] rationals.

pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod kernels;
pub mod oracle;
pub mod scalar;
pub mod selftest;
pub mod svm;

pub use corpus::{
    load_corpus, read_corpus, save_corpus, write_corpus, Corpus, CorpusFormat, Sentence,
};
pub use embeddings::{
    augment_aspect_flag, cosine, load_embeddings, token_sim, CosineSim, EmbeddingTable, Similarity,
    TokenRef,
};
pub use error::{Error, Result};
pub use kernels::{
    gram_cross, gram_train, kernel_sm, kernel_wess, kernel_west, AspectMode, GramFormat,
    GramMatrix, KernelConfig, Variant,
};
pub use scalar::{Scalar, Weight};
pub use svm::{
    evaluate_accuracy, ovo_predict, ovo_train, smo_solve, Evaluation, SvmConfig, SvmModel,
};

/// Exact rational weight for oracle and kernel comparisons.
pub type Exact = num_rational::BigRational;

pub type EmbeddingTable64 = EmbeddingTable<f64>;
pub type EmbeddingTable32 = EmbeddingTable<f32>;
pub type GramMatrix64 = GramMatrix<f64>;
pub type GramMatrix32 = GramMatrix<f32>;
pub type KernelConfig64 = KernelConfig<f64>;
pub type SvmConfig64 = SvmConfig<f64>;
pub type SvmModel64 = SvmModel<f64>;
