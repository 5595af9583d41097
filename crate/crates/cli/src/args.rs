use std::path::{Path, PathBuf};

use anygram::{load_embeddings, AspectMode, EmbeddingTable, KernelConfig, SvmConfig, Variant};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Args, Clone, Debug)]
pub struct KernelArgs {
    /// Kernel variant: sm, west or wess.
    #[arg(long, default_value = "sm")]
    pub kernel: Variant,
    /// Decay factor in (0, 1].
    #[arg(long, default_value_t = anygram::kernels::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Similarity threshold for the west kernel, in [-1, 1].
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Scale kernel values to K(a,b)/sqrt(K(a,a)K(b,b)).
    #[arg(long)]
    pub normalize: bool,
    /// Aspect-term marking: none, suffix (sm only) or flag (west/wess only).
    #[arg(long, default_value = "none")]
    pub aspect_mode: AspectMode,
    /// Suffix appended to aspect tokens in suffix mode.
    #[arg(long, default_value = anygram::corpus::DEFAULT_ASPECT_SUFFIX)]
    pub suffix: String,
    /// Word vectors: whitespace-separated text or a binary cache from `embed-cache`.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Reject vector files whose dimension differs.
    #[arg(long)]
    pub expected_dim: Option<usize>,
    /// Lowercase tokens before looking up their vectors.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub lowercase_lookup: bool,
}

impl KernelArgs {
    pub fn config(&self) -> anyhow::Result<KernelConfig<f64>> {
        let config = KernelConfig {
            variant: self.kernel,
            lambda: self.lambda,
            theta: self.theta,
            normalize: self.normalize,
            aspect_mode: self.aspect_mode,
            suffix: self.suffix.clone(),
        };
        config.validate()?;
        match (self.kernel.uses_embeddings(), &self.embeddings) {
            (true, None) => {
                Err(UsageError(format!("the {} kernel requires --embeddings", self.kernel)).into())
            }
            (false, Some(_)) => {
                Err(UsageError("--embeddings has no effect on the sm kernel".into()).into())
            }
            _ => Ok(config),
        }
    }

    pub fn load_embeddings(&self) -> anyhow::Result<Option<EmbeddingTable<f64>>> {
        self.embeddings
            .as_deref()
            .map(|path| open_embeddings(path, self.expected_dim, self.lowercase_lookup))
            .transpose()
    }

    /// Same settings with a different threshold (for tuning).
    pub fn with_theta(&self, theta: Option<f64>) -> Self {
        Self {
            theta,
            ..self.clone()
        }
    }
}

pub fn open_embeddings(
    path: &Path,
    expected_dim: Option<usize>,
    lowercase: bool,
) -> anyhow::Result<EmbeddingTable<f64>> {
    Ok(load_embeddings(path, expected_dim)?.with_lowercase_lookup(lowercase))
}

#[derive(Args, Clone, Debug)]
pub struct SvmArgs {
    /// Error/margin trade-off.
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    /// KKT tolerance.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Seed for working-pair tie-breaking.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Solver budget in passes over the data (default 10·N).
    #[arg(long)]
    pub max_passes: Option<usize>,
    /// Exit with status 3 when any binary problem fails to converge.
    #[arg(long)]
    pub strict: bool,
}

impl SvmArgs {
    pub fn config(&self, c: f64) -> anyhow::Result<SvmConfig<f64>> {
        let config = SvmConfig {
            c,
            tol: self.tol,
            max_passes: self.max_passes,
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Settings that determine a run's results; hashed into the manifest digest.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ResolvedConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<EmbeddingsRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svm: Option<SvmConfig<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingsRef {
    pub path: PathBuf,
    pub digest: String,
    pub dim: usize,
    pub lowercase_lookup: bool,
}

impl EmbeddingsRef {
    pub fn new(path: &Path, table: &EmbeddingTable<f64>) -> Self {
        Self {
            path: path.to_owned(),
            digest: table.digest().to_owned(),
            dim: table.dim(),
            lowercase_lookup: table.lowercase_lookup(),
        }
    }
}
