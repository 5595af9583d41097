use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::DEFAULT_ASPECT_SUFFIX;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_LAMBDA: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Exact string match.
    Sm,
    /// Embedding similarity thresholded into a binary match.
    West,
    /// Raw embedding similarity score.
    Wess,
}

impl Variant {
    pub fn uses_embeddings(self) -> bool {
        !matches!(self, Variant::Sm)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AspectMode {
    #[default]
    None,
    /// Append a suffix to aspect tokens (string match only).
    Suffix,
    /// Append a 0/1 component to word vectors (embedding variants only).
    Flag,
}

macro_rules! string_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($ty::$variant),)+
                    other => Err(Error::InvalidConfig(format!(
                        concat!("unknown ", stringify!($ty), " {:?}"), other
                    ))),
                }
            }
        }
    };
}

string_enum!(Variant { Sm => "sm", West => "west", Wess => "wess" });
string_enum!(AspectMode { None => "none", Suffix => "suffix", Flag => "flag" });

/// Kernel selection and hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig<T> {
    pub variant: Variant,
    /// Decay factor in `(0, 1]`.
    pub lambda: T,
    /// Similarity threshold in `[-1, 1]`; WEST only.
    pub theta: Option<T>,
    pub normalize: bool,
    pub aspect_mode: AspectMode,
    pub suffix: String,
}

impl<T: Scalar> KernelConfig<T> {
    fn base(variant: Variant, lambda: T, theta: Option<T>) -> Self {
        Self {
            variant,
            lambda,
            theta,
            normalize: false,
            aspect_mode: AspectMode::None,
            suffix: DEFAULT_ASPECT_SUFFIX.to_owned(),
        }
    }

    pub fn sm(lambda: T) -> Self {
        Self::base(Variant::Sm, lambda, None)
    }

    pub fn west(lambda: T, theta: T) -> Self {
        Self::base(Variant::West, lambda, Some(theta))
    }

    pub fn wess(lambda: T) -> Self {
        Self::base(Variant::Wess, lambda, None)
    }

    pub fn with_normalize(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    pub fn with_aspect_mode(mut self, mode: AspectMode) -> Self {
        self.aspect_mode = mode;
        self
    }

    pub fn with_suffix(mut self, suffix: impl Into<String>) -> Self {
        self.suffix = suffix.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let lambda = self.lambda;
        if !(lambda > T::zero() && lambda <= T::one()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must lie in (0, 1], got {lambda}"
            )));
        }
        match (self.variant, self.theta) {
            (Variant::West, None) => {
                return Err(Error::InvalidConfig(
                    "the west kernel requires theta".into(),
                ))
            }
            (Variant::West, Some(theta)) if !(theta >= -T::one() && theta <= T::one()) => {
                return Err(Error::InvalidConfig(format!(
                    "theta must lie in [-1, 1], got {theta}"
                )))
            }
            (Variant::Sm | Variant::Wess, Some(_)) => {
                return Err(Error::InvalidConfig(format!(
                    "theta only applies to the west kernel, not {}",
                    self.variant
                )))
            }
            _ => {}
        }
        match (self.aspect_mode, self.variant) {
            (AspectMode::Suffix, Variant::West | Variant::Wess) => Err(Error::InvalidConfig(
                "aspect mode 'suffix' requires the sm kernel".into(),
            )),
            (AspectMode::Flag, Variant::Sm) => Err(Error::InvalidConfig(
                "aspect mode 'flag' requires an embedding kernel (west or wess)".into(),
            )),
            (AspectMode::Suffix, _) if self.suffix.is_empty() => Err(Error::InvalidConfig(
                "aspect suffix must not be empty".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Canonical description used to refuse mixing matrices across configs.
    pub fn fingerprint(&self) -> String {
        let mut fp = format!(
            "anygram/1 kernel={} lambda={:?} theta={} normalize={} aspect={}",
            self.variant,
            self.lambda.as_f64(),
            self.theta
                .map_or_else(|| "-".to_owned(), |t| format!("{:?}", t.as_f64())),
            self.normalize,
            self.aspect_mode,
        );
        if self.aspect_mode == AspectMode::Suffix {
            fp.push_str(&format!(" suffix={:?}", self.suffix));
        }
        fp
    }
}

impl<T: Scalar> Default for KernelConfig<T> {
    fn default() -> Self {
        Self::sm(T::lit(DEFAULT_LAMBDA))
    }
}
