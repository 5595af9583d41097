use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anygram::corpus::SentenceRecord;
use anygram::{Corpus, KernelConfig, Sentence, SvmModel};
use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::args::EmbeddingsRef;

pub const MODEL_FORMAT: &str = "anygram-model/1";

/// Everything `predict` needs: the kernel settings, the embedding identity,
/// the training sentences (cross kernels are computed against them) and the
/// trained classifiers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub manifest_digest: String,
    pub kernel: KernelConfig<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<EmbeddingsRef>,
    pub train: Vec<SentenceRecord>,
    pub svm: SvmModel<f64>,
}

impl ModelFile {
    pub fn new(
        manifest_digest: String,
        kernel: KernelConfig<f64>,
        embeddings: Option<EmbeddingsRef>,
        train: &Corpus,
        svm: SvmModel<f64>,
    ) -> Self {
        Self {
            format: MODEL_FORMAT.to_owned(),
            manifest_digest,
            kernel,
            embeddings,
            train: train.iter().cloned().map(SentenceRecord::from).collect(),
            svm,
        }
    }

    pub fn train_corpus(&self) -> anyhow::Result<Corpus> {
        let sentences = self
            .train
            .iter()
            .cloned()
            .map(Sentence::try_from)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Corpus::new(sentences)?)
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let file =
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer(&mut out, self)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let file = File::open(path).map_err(|e| anygram::Error::Io {
            path: path.to_owned(),
            source: e,
        })?;
        let model: Self = serde_json::from_reader(BufReader::new(file))
            .map_err(anygram::Error::from)
            .with_context(|| format!("cannot parse model {}", path.display()))?;
        if model.format != MODEL_FORMAT {
            return Err(anygram::Error::Format {
                kind: "model",
                message: format!("unsupported model format {:?}", model.format),
            }
            .into());
        }
        Ok(model)
    }
}
