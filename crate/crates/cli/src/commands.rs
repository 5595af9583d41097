use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anygram::corpus::CorpusFormat;
use anygram::embeddings::write_embedding_cache;
use anygram::kernels::{gram_fingerprint, load_gram, save_gram};
use anygram::selftest::{run_selftest, KernelSuite, SelftestConfig};
use anygram::{
    evaluate_accuracy, gram_cross, gram_train, load_corpus, ovo_predict, ovo_train, Corpus,
    EmbeddingTable, Evaluation, GramFormat, GramMatrix, KernelConfig, SvmConfig, SvmModel, Variant,
};
use anyhow::{bail, Context};
use clap::Args;
use serde::Serialize;

use crate::args::{open_embeddings, EmbeddingsRef, KernelArgs, SvmArgs};
use crate::manifest::ManifestBuilder;
use crate::model::ModelFile;
use crate::{NotConverged, SelftestFailed, UsageError};

fn read_corpus_file(path: &Path) -> anyhow::Result<Corpus> {
    load_corpus(path, CorpusFormat::from_path(path))
        .with_context(|| format!("reading corpus {}", path.display()))
}

fn provenance(digest: &str) -> String {
    format!("manifest sha256:{digest}")
}

/// `k.bin` → `k.cross.bin`
fn cross_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.cross.{}", ext.to_string_lossy()),
        None => format!("{stem}.cross"),
    };
    out.with_file_name(name)
}

fn record_kernel(
    manifest: &mut ManifestBuilder,
    kernel: &KernelArgs,
) -> anyhow::Result<(KernelConfig<f64>, Option<EmbeddingTable<f64>>)> {
    let config = kernel.config()?;
    let table = kernel.load_embeddings()?;
    if let (Some(path), Some(table)) = (&kernel.embeddings, &table) {
        manifest.config().embeddings = Some(EmbeddingsRef::new(path, table));
    }
    manifest.config().kernel = Some(config.clone());
    Ok((config, table))
}

#[derive(Args, Debug)]
pub struct GramArgs {
    /// Training corpus (.jsonl or .tsv).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Optional test corpus; writes a test×train cross Gram as well.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Cross Gram path (default: `<out stem>.cross.<ext>`).
    #[arg(long)]
    pub test_out: Option<PathBuf>,
    /// Output format: bin, csv or precomp.
    #[arg(long, default_value = "bin")]
    pub format: GramFormat,
    #[command(flatten)]
    pub kernel: KernelArgs,
}

pub fn gram(args: GramArgs) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::new("gram");
    let (config, table) = record_kernel(&mut manifest, &args.kernel)?;
    manifest.config().format = Some(args.format.to_string());
    let train = read_corpus_file(&args.input)?;
    manifest.input("train", &args.input)?;
    let test = args.test.as_deref().map(read_corpus_file).transpose()?;
    if let Some(path) = &args.test {
        manifest.input("test", path)?;
    }
    let digest = manifest.digest();

    let gram = gram_train(&train, &config, table.as_ref())?.with_provenance(provenance(&digest));
    if gram.may_be_indefinite() {
        eprintln!(
            "warning: {} Gram matrices may be indefinite",
            config.variant
        );
    }
    save_gram(&args.out, &gram, args.format)?;
    let mut outputs = vec![args.out.clone()];
    if let Some(test) = &test {
        let cross =
            gram_cross(test, &train, &config, table.as_ref())?.with_provenance(provenance(&digest));
        let path = args
            .test_out
            .clone()
            .unwrap_or_else(|| cross_path(&args.out));
        save_gram(&path, &cross, args.format)?;
        outputs.push(path);
    }
    let manifest = manifest.finish(outputs);
    manifest.write_beside(&args.out)?;
    eprintln!(
        "wrote {}x{} Gram to {} (manifest {})",
        gram.rows(),
        gram.cols(),
        args.out.display(),
        &manifest.digest[..12]
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Where to write the model (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Reuse a binary Gram written by `gram` for the same corpus and settings.
    #[arg(long)]
    pub gram: Option<PathBuf>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub svm: SvmArgs,
}

fn predicted_labels(model: &SvmModel<f64>, gram: &GramMatrix<f64>) -> anyhow::Result<Vec<String>> {
    Ok(ovo_predict(model, gram)?
        .into_iter()
        .map(|p| p.label)
        .collect())
}

fn report_convergence(model: &SvmModel<f64>, strict: bool) -> anyhow::Result<()> {
    if model.converged() {
        return Ok(());
    }
    let failed = model.pairs.iter().filter(|p| !p.converged).count();
    let message = format!(
        "{failed} of {} binary problems hit the iteration budget (max KKT violation {:.3e})",
        model.pairs.len(),
        model.max_kkt_violation()
    );
    if strict {
        return Err(NotConverged(message).into());
    }
    eprintln!("warning: {message}");
    Ok(())
}

pub fn train(args: TrainArgs) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::new("train");
    let (config, table) = record_kernel(&mut manifest, &args.kernel)?;
    let svm_config = args.svm.config(args.svm.c)?;
    manifest.config().svm = Some(svm_config.clone());
    let corpus = read_corpus_file(&args.input)?;
    manifest.input("train", &args.input)?;
    let labels = corpus.labels()?;

    let gram = match &args.gram {
        Some(path) => {
            manifest.input("gram", path)?;
            let gram: GramMatrix<f64> = load_gram(path, GramFormat::Bin)
                .with_context(|| format!("reading Gram {}", path.display()))?;
            let expected = gram_fingerprint(&config, table.as_ref());
            if gram.fingerprint() != expected {
                return Err(anygram::Error::FingerprintMismatch {
                    expected,
                    found: gram.fingerprint().to_owned(),
                }
                .into());
            }
            if !gram.is_train() || gram.row_ids() != corpus.ids().as_slice() {
                bail!(anygram::Error::InvalidInput(format!(
                    "{} is not the training Gram of {}",
                    path.display(),
                    args.input.display()
                )));
            }
            gram
        }
        None => gram_train(&corpus, &config, table.as_ref())?,
    };

    let svm = ovo_train(&gram, &labels, &svm_config)?;
    let accuracy = evaluate_accuracy(&predicted_labels(&svm, &gram)?, &labels)?;
    let digest = manifest.digest();
    let embeddings = manifest.config().embeddings.clone();
    ModelFile::new(digest, config, embeddings, &corpus, svm.clone()).save(&args.model)?;
    manifest
        .finish(vec![args.model.clone()])
        .write_beside(&args.model)?;
    eprintln!(
        "trained {} binary classifier(s) over {} classes on {} instances; training accuracy {:.2}%",
        svm.pairs.len(),
        svm.classes.len(),
        corpus.len(),
        100.0 * accuracy.accuracy
    );
    report_convergence(&svm, args.svm.strict)
}

#[derive(Args, Debug)]
pub struct ModelInputArgs {
    /// Model written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Word vectors (default: the path recorded in the model).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

struct LoadedModel {
    file: ModelFile,
    train: Corpus,
    table: Option<EmbeddingTable<f64>>,
}

fn load_model(
    args: &ModelInputArgs,
    manifest: &mut ManifestBuilder,
) -> anyhow::Result<LoadedModel> {
    let file = ModelFile::load(&args.model)?;
    manifest.input("model", &args.model)?;
    let table = match &file.embeddings {
        None => {
            if args.embeddings.is_some() {
                return Err(
                    UsageError("--embeddings has no effect on the sm kernel".into()).into(),
                );
            }
            None
        }
        Some(recorded) => {
            let path = args.embeddings.as_deref().unwrap_or(&recorded.path);
            let table = open_embeddings(path, Some(recorded.dim), recorded.lowercase_lookup)?;
            if table.digest() != recorded.digest {
                return Err(anygram::Error::FingerprintMismatch {
                    expected: recorded.digest.clone(),
                    found: table.digest().to_owned(),
                }
                .into());
            }
            manifest.config().embeddings = Some(EmbeddingsRef::new(path, &table));
            Some(table)
        }
    };
    manifest.config().kernel = Some(file.kernel.clone());
    manifest.config().svm = Some(file.svm.config.clone());
    let train = file.train_corpus()?;
    Ok(LoadedModel { file, train, table })
}

fn predict_corpus(model: &LoadedModel, test: &Corpus) -> anyhow::Result<Vec<String>> {
    for s in test {
        if let Some(label) = s.label() {
            if model.file.svm.class_index(label).is_none() {
                bail!(anygram::Error::InvalidInput(format!(
                    "sentence {:?} has label {label:?}, which the model never saw (classes: {})",
                    s.id(),
                    model.file.svm.classes.join(", ")
                )));
            }
        }
    }
    let cross = gram_cross(test, &model.train, &model.file.kernel, model.table.as_ref())?;
    predicted_labels(&model.file.svm, &cross)
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub model: ModelInputArgs,
    #[arg(long)]
    pub test: PathBuf,
    /// Predictions file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn write_predictions<W: Write>(
    mut out: W,
    digest: &str,
    test: &Corpus,
    labels: &[String],
) -> io::Result<()> {
    writeln!(out, "# manifest sha256:{digest}")?;
    for (s, label) in test.iter().zip(labels) {
        writeln!(out, "{}\t{label}", s.id())?;
    }
    out.flush()
}

fn read_predictions(path: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let file = File::open(path).map_err(|e| anygram::Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let Some((id, label)) = line.split_once('\t') else {
            bail!(anygram::Error::Parse {
                line: n + 1,
                message: "expected `id<TAB>label`".into(),
            });
        };
        rows.push((id.to_owned(), label.to_owned()));
    }
    Ok(rows)
}

pub fn predict(args: PredictArgs) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::new("predict");
    let model = load_model(&args.model, &mut manifest)?;
    let test = read_corpus_file(&args.test)?;
    manifest.input("test", &args.test)?;
    let labels = predict_corpus(&model, &test)?;
    let digest = manifest.digest();
    match &args.out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            write_predictions(BufWriter::new(file), &digest, &test, &labels)?;
            manifest.finish(vec![path.clone()]).write_beside(path)?;
            eprintln!("wrote {} predictions to {}", labels.len(), path.display());
        }
        None => write_predictions(io::stdout().lock(), &digest, &test, &labels)?,
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Gold-labelled corpus.
    #[arg(long)]
    pub test: PathBuf,
    /// Predictions written by `predict`.
    #[arg(long, required_unless_present = "model", conflicts_with = "model")]
    pub pred: Option<PathBuf>,
    /// Predict in-process with this model instead.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    pub embeddings: Option<PathBuf>,
}

pub fn eval(args: EvalArgs) -> anyhow::Result<Evaluation> {
    let test = read_corpus_file(&args.test)?;
    let gold = test.labels().with_context(|| {
        format!(
            "{} has no gold labels to evaluate against",
            args.test.display()
        )
    })?;
    let predicted = match (&args.pred, &args.model) {
        (Some(path), _) => {
            let rows = read_predictions(path)?;
            let ids = test.ids();
            if rows.len() != ids.len() || rows.iter().zip(&ids).any(|((id, _), gold)| id != gold) {
                bail!(anygram::Error::InvalidInput(format!(
                    "{} does not list the sentences of {} in order",
                    path.display(),
                    args.test.display()
                )));
            }
            rows.into_iter().map(|(_, label)| label).collect()
        }
        (None, Some(model)) => {
            let mut manifest = ManifestBuilder::new("eval");
            let input = ModelInputArgs {
                model: model.clone(),
                embeddings: args.embeddings.clone(),
            };
            let model = load_model(&input, &mut manifest)?;
            predict_corpus(&model, &test)?
        }
        (None, None) => unreachable!("clap requires --pred or --model"),
    };
    let evaluation = evaluate_accuracy(&predicted, &gold)?;
    print!("{evaluation}");
    Ok(evaluation)
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Labelled development corpus.
    #[arg(long)]
    pub dev: PathBuf,
    /// Candidate C values.
    #[arg(
        long = "C-grid",
        value_delimiter = ',',
        default_value = "0.01,0.1,1,10,100"
    )]
    pub c_grid: Vec<f64>,
    /// Candidate thresholds for the west kernel (default 0.5,0.6,0.7,0.8,0.9).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta_grid: Option<Vec<f64>>,
    /// Write the full report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub svm: SvmArgs,
}

pub const DEFAULT_THETA_GRID: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TunePoint {
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub dev_accuracy: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TuneReport {
    pub manifest_digest: String,
    pub points: Vec<TunePoint>,
    pub best: TunePoint,
}

fn sorted_grid(name: &str, mut grid: Vec<f64>) -> anyhow::Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(UsageError(format!("the {name} grid is empty")).into());
    }
    if let Some(bad) = grid.iter().find(|v| !v.is_finite()) {
        return Err(UsageError(format!("invalid {name} grid value {bad}")).into());
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

pub fn tune(args: TuneArgs) -> anyhow::Result<TuneReport> {
    let c_grid = sorted_grid("C", args.c_grid.clone())?;
    let theta_grid: Vec<Option<f64>> = if args.kernel.kernel == Variant::West {
        let grid = match (&args.theta_grid, args.kernel.theta) {
            (Some(grid), _) => grid.clone(),
            (None, Some(theta)) => vec![theta],
            (None, None) => DEFAULT_THETA_GRID.to_vec(),
        };
        sorted_grid("theta", grid)?.into_iter().map(Some).collect()
    } else {
        if args.theta_grid.is_some() {
            eprintln!(
                "notice: the {} kernel has no threshold; ignoring --theta-grid",
                args.kernel.kernel
            );
        }
        vec![args.kernel.theta]
    };
    for &c in &c_grid {
        args.svm.config(c)?;
    }
    for &theta in &theta_grid {
        args.kernel.with_theta(theta).config()?;
    }

    let mut manifest = ManifestBuilder::new("tune");
    let table = args.kernel.load_embeddings()?;
    if let (Some(path), Some(table)) = (&args.kernel.embeddings, &table) {
        manifest.config().embeddings = Some(EmbeddingsRef::new(path, table));
    }
    manifest.config().kernel = Some(args.kernel.with_theta(theta_grid[0]).config()?);
    manifest.config().svm = Some(args.svm.config(c_grid[0])?);
    let train = read_corpus_file(&args.input)?;
    let dev = read_corpus_file(&args.dev)?;
    manifest.input("train", &args.input)?;
    manifest.input("dev", &args.dev)?;
    let train_labels = train.labels()?;
    let dev_labels = dev
        .labels()
        .with_context(|| format!("{} must be labelled for tuning", args.dev.display()))?;

    let mut points = Vec::new();
    for &theta in &theta_grid {
        let config = args.kernel.with_theta(theta).config()?;
        let gram = gram_train(&train, &config, table.as_ref())?;
        let cross = gram_cross(&dev, &train, &config, table.as_ref())?;
        for &c in &c_grid {
            let svm_config: SvmConfig<f64> = args.svm.config(c)?;
            let model = ovo_train(&gram, &train_labels, &svm_config)?;
            let accuracy =
                evaluate_accuracy(&predicted_labels(&model, &cross)?, &dev_labels)?.accuracy;
            let point = TunePoint {
                c,
                theta,
                dev_accuracy: accuracy,
                converged: model.converged(),
            };
            println!(
                "{}C={c} dev accuracy {:.2}%{}",
                theta.map_or_else(String::new, |t| format!("theta={t} ")),
                100.0 * accuracy,
                if point.converged {
                    ""
                } else {
                    " (not converged)"
                }
            );
            points.push(point);
        }
    }
    // ties: smallest C first, then smallest θ
    let top = points
        .iter()
        .map(|p| p.dev_accuracy)
        .fold(f64::NEG_INFINITY, f64::max);
    let best = points
        .iter()
        .filter(|p| p.dev_accuracy == top)
        .min_by(|a, b| {
            a.c.total_cmp(&b.c)
                .then(a.theta.unwrap_or(0.0).total_cmp(&b.theta.unwrap_or(0.0)))
        })
        .cloned()
        .expect("grids are non-empty");
    println!(
        "best: {}C={} dev accuracy {:.2}%",
        best.theta
            .map_or_else(String::new, |t| format!("theta={t} ")),
        best.c,
        100.0 * best.dev_accuracy
    );
    let digest = manifest.digest();
    let report = TuneReport {
        manifest_digest: digest,
        points,
        best,
    };
    if let Some(path) = &args.out {
        let file =
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &report)?;
        manifest.finish(vec![path.clone()]).write_beside(path)?;
    }
    Ok(report)
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    /// Decay factors to test, each in (0, 1].
    #[arg(long = "lambda", value_delimiter = ',', default_value = "0.3,0.5,1.0")]
    pub lambdas: Vec<f64>,
    /// Thresholds for the west checks.
    #[arg(
        long = "theta",
        value_delimiter = ',',
        default_value = "0.3,0.7",
        allow_negative_numbers = true
    )]
    pub thetas: Vec<f64>,
    /// Random pairs per variant.
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    #[arg(long, default_value_t = SelftestConfig::default().seed)]
    pub seed: u64,
}

pub fn selftest(args: SelftestArgs) -> anyhow::Result<()> {
    let config = SelftestConfig {
        seed: args.seed,
        pairs: args.pairs,
        lambdas: args.lambdas,
        thetas: args.thetas,
        ..SelftestConfig::default()
    };
    let report = run_selftest(&config, &KernelSuite::default())?;
    print!("{report}");
    if report.passed() {
        println!("selftest passed");
        Ok(())
    } else {
        Err(SelftestFailed.into())
    }
}

#[derive(Args, Debug)]
pub struct EmbedCacheArgs {
    /// Whitespace-separated text vectors.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub expected_dim: Option<usize>,
}

pub fn embed_cache(args: EmbedCacheArgs) -> anyhow::Result<()> {
    let table = open_embeddings(&args.embeddings, args.expected_dim, true)?;
    let file =
        File::create(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut out = BufWriter::new(file);
    write_embedding_cache(&mut out, &table)?;
    out.flush()?;
    eprintln!(
        "cached {} vectors of dimension {} in {} (digest {})",
        table.len(),
        table.dim(),
        args.out.display(),
        &table.digest()[..16]
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_path_keeps_extension() {
        assert_eq!(
            cross_path(Path::new("d/k.csv")),
            PathBuf::from("d/k.cross.csv")
        );
        assert_eq!(cross_path(Path::new("k")), PathBuf::from("k.cross"));
    }

    #[test]
    fn grids_are_sorted_and_non_empty() {
        assert_eq!(
            sorted_grid("C", vec![10.0, 0.1, 1.0, 0.1]).unwrap(),
            vec![0.1, 1.0, 10.0]
        );
        assert!(sorted_grid("C", vec![]).is_err());
        assert!(sorted_grid("C", vec![f64::NAN]).is_err());
    }
}
