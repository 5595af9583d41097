//! Tokenized, optionally labeled sentences and their on-disk formats.
//!
//! Two line-oriented formats are supported:
//!
//! * JSONL: `{"id": "...", "tokens": [...], "label": "...", "aspect": [..]}`
//!   with `label` and `aspect` optional.
//! * TSV: `id<TAB>space-joined tokens[<TAB>label[<TAB>comma-joined aspect]]`.
//!
//! Record order is preserved; downstream Gram indices follow it.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Suffix appended to aspect-term tokens for string-match kernels.
pub const DEFAULT_ASPECT_SUFFIX: &str = "_AT";

/// An immutable tokenized sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SentenceRecord", into = "SentenceRecord")]
pub struct Sentence {
    id: String,
    tokens: Vec<String>,
    label: Option<String>,
    aspect: BTreeSet<usize>,
}

impl Sentence {
    pub fn new(
        id: impl Into<String>,
        tokens: Vec<String>,
        label: Option<String>,
        aspect: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidInput("sentence id must not be empty".into()));
        }
        if tokens.is_empty() {
            return Err(Error::InvalidInput(format!(
                "sentence {id:?} has no tokens"
            )));
        }
        if let Some(pos) = tokens.iter().position(|t| t.is_empty()) {
            return Err(Error::InvalidInput(format!(
                "sentence {id:?} has an empty token at position {pos}"
            )));
        }
        let label = label.filter(|l| !l.is_empty());
        let aspect: BTreeSet<usize> = aspect.into_iter().collect();
        if let Some(&bad) = aspect.iter().find(|&&i| i >= tokens.len()) {
            return Err(Error::AspectOutOfRange {
                line: 0,
                index: bad,
                len: tokens.len(),
            });
        }
        Ok(Self {
            id,
            tokens,
            label,
            aspect,
        })
    }

    /// Convenience constructor for unlabeled sentences without aspect terms.
    pub fn from_tokens<S: AsRef<str>>(id: impl Into<String>, tokens: &[S]) -> Result<Self> {
        Self::new(
            id,
            tokens.iter().map(|t| t.as_ref().to_owned()).collect(),
            None,
            [],
        )
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Always false; sentences are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn aspect_indices(&self) -> &BTreeSet<usize> {
        &self.aspect
    }

    pub fn is_aspect(&self, index: usize) -> bool {
        self.aspect.contains(&index)
    }

    /// Copy with `suffix` appended to every aspect-term token.
    pub fn mark_aspect_suffix(&self, suffix: &str) -> Sentence {
        let tokens = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if self.aspect.contains(&i) {
                    format!("{t}{suffix}")
                } else {
                    t.clone()
                }
            })
            .collect();
        Sentence {
            id: self.id.clone(),
            tokens,
            label: self.label.clone(),
            aspect: self.aspect.clone(),
        }
    }

    /// Derives a separate instance of this sentence for one aspect term.
    pub fn for_aspect(
        &self,
        id: impl Into<String>,
        aspect: impl IntoIterator<Item = usize>,
        label: Option<String>,
    ) -> Result<Sentence> {
        Sentence::new(id, self.tokens.clone(), label, aspect)
    }
}

/// Ordered collection of sentences with unique ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<Sentence>,
    labels: BTreeSet<String>,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(sentences.len());
        for (n, s) in sentences.iter().enumerate() {
            if !seen.insert(s.id()) {
                return Err(Error::DuplicateId {
                    line: n + 1,
                    id: s.id.clone(),
                });
            }
        }
        let labels = sentences.iter().filter_map(|s| s.label.clone()).collect();
        Ok(Self { sentences, labels })
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sentence> {
        self.sentences.iter()
    }

    /// Distinct labels, sorted.
    pub fn label_set(&self) -> &BTreeSet<String> {
        &self.labels
    }

    pub fn ids(&self) -> Vec<String> {
        self.sentences.iter().map(|s| s.id.clone()).collect()
    }

    /// Labels in corpus order; fails if any sentence is unlabeled.
    pub fn labels(&self) -> Result<Vec<String>> {
        self.sentences
            .iter()
            .map(|s| {
                s.label
                    .clone()
                    .ok_or_else(|| Error::InvalidInput(format!("sentence {:?} has no label", s.id)))
            })
            .collect()
    }

    pub fn mark_aspect_suffix(&self, suffix: &str) -> Corpus {
        Corpus {
            sentences: self
                .sentences
                .iter()
                .map(|s| s.mark_aspect_suffix(suffix))
                .collect(),
            labels: self.labels.clone(),
        }
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Sentence;
    type IntoIter = std::slice::Iter<'a, Sentence>;

    fn into_iter(self) -> Self::IntoIter {
        self.sentences.iter()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
}

impl CorpusFormat {
    /// `.tsv` selects TSV; everything else is read as JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("tsv") => CorpusFormat::Tsv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            other => Err(Error::InvalidInput(format!(
                "unknown corpus format {other:?}"
            ))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::Tsv => "tsv",
        })
    }
}

/// One JSONL record; the serialized form of a [`Sentence`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aspect: Vec<usize>,
}

impl TryFrom<SentenceRecord> for Sentence {
    type Error = Error;

    fn try_from(rec: SentenceRecord) -> Result<Self> {
        Sentence::new(rec.id, rec.tokens, rec.label, rec.aspect)
    }
}

impl From<Sentence> for SentenceRecord {
    fn from(s: Sentence) -> Self {
        SentenceRecord {
            id: s.id,
            tokens: s.tokens,
            label: s.label,
            aspect: s.aspect.into_iter().collect(),
        }
    }
}

pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), format)
}

pub fn read_corpus<R: Read>(reader: R, format: CorpusFormat) -> Result<Corpus> {
    let reader = BufReader::new(reader);
    let mut sentences = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, tokens, label, aspect) = match format {
            CorpusFormat::Jsonl => {
                let rec: SentenceRecord =
                    serde_json::from_str(&line).map_err(|e| Error::parse(lineno, e.to_string()))?;
                (rec.id, rec.tokens, rec.label, rec.aspect)
            }
            CorpusFormat::Tsv => parse_tsv_line(&line, lineno)?,
        };
        if let Some(&bad) = aspect.iter().find(|&&i| i >= tokens.len()) {
            return Err(Error::AspectOutOfRange {
                line: lineno,
                index: bad,
                len: tokens.len(),
            });
        }
        let sentence = Sentence::new(id, tokens, label, aspect).map_err(|e| match e {
            Error::InvalidInput(msg) => Error::parse(lineno, msg),
            other => other,
        })?;
        if !seen.insert(sentence.id.clone()) {
            return Err(Error::DuplicateId {
                line: lineno,
                id: sentence.id,
            });
        }
        sentences.push(sentence);
    }
    Corpus::new(sentences)
}

type RawRecord = (String, Vec<String>, Option<String>, Vec<usize>);

fn parse_tsv_line(line: &str, lineno: usize) -> Result<RawRecord> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() < 2 || cols.len() > 4 {
        return Err(Error::parse(
            lineno,
            format!(
                "expected 2 to 4 tab-separated columns, found {}",
                cols.len()
            ),
        ));
    }
    let tokens = cols[1].split(' ').map(str::to_owned).collect();
    let label = cols
        .get(2)
        .filter(|l| !l.is_empty())
        .map(|l| (*l).to_owned());
    let aspect = match cols.get(3) {
        Some(a) if !a.is_empty() => a
            .split(',')
            .map(|i| {
                i.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::parse(lineno, format!("bad aspect index {i:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?,
        _ => Vec::new(),
    };
    Ok((cols[0].to_owned(), tokens, label, aspect))
}

pub fn write_corpus<W: Write>(writer: W, corpus: &Corpus, format: CorpusFormat) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for s in corpus {
        match format {
            CorpusFormat::Jsonl => {
                serde_json::to_writer(&mut w, s)?;
                writeln!(w)?;
            }
            CorpusFormat::Tsv => {
                if let Some(t) = s.tokens.iter().find(|t| t.contains(['\t', ' ', '\n'])) {
                    return Err(Error::InvalidInput(format!(
                        "token {t:?} in sentence {:?} cannot be written as TSV",
                        s.id
                    )));
                }
                let aspect: Vec<String> = s.aspect.iter().map(usize::to_string).collect();
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}",
                    s.id,
                    s.tokens.join(" "),
                    s.label.as_deref().unwrap_or(""),
                    aspect.join(",")
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_corpus(path: impl AsRef<Path>, corpus: &Corpus, format: CorpusFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_corpus(file, corpus, format)
}
