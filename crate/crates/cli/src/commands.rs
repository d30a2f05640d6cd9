use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use hisent_core::datasets::{DatasetConfig, LabeledDataset};
use hisent_core::embeddings::{
    load_word2vec_binary, load_word2vec_binary_filtered, load_word2vec_text_filtered, EmbeddingTable,
};
use hisent_core::eval::{
    combined_curve_csv, cross_validate, crossval_markdown, crossval_summary_csv, curve_csv, curve_markdown,
    learning_curve as run_curve, manifest_header, predictions_csv, timing_csv, validate_fractions, Corpus, CurvePlan,
    EmbeddingSource, HiCnnLstmLearner, Learner, NbLearner,
};
use hisent_core::model::{load_checkpoint, save_checkpoint, ModelConfig};
use hisent_core::textprep::{TokenizedDocument, Vocabulary};
use hisent_core::train::TrainConfig;
use hisent_core::{Error, Result};

use crate::args::{Classifier, CrossvalArgs, CurveArgs, ModelArgs, PredictArgs, TrainArgs};

pub const OUT_ENV: &str = "HISENT_OUT";
const DEFAULT_OUT: &str = "hisent-out";

fn out_dir(arg: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = arg
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn model_config(m: &ModelArgs) -> ModelConfig {
    ModelConfig {
        embedding_dim: m.embedding_dim,
        filter_width: m.filter_width,
        num_filters: m.filters,
        sentence_dim: m.sentence_dim,
        lstm_hidden: m.lstm_hidden,
        dense_dropout: m.dense_dropout,
        lstm_dropout: m.lstm_dropout,
        max_sentences_per_doc: m.max_sentences,
        ..ModelConfig::new(2)
    }
}

fn train_config(m: &ModelArgs, seed: u64) -> TrainConfig {
    TrainConfig {
        batch_size: m.batch_size,
        max_epochs: m.max_epochs,
        patience: m.patience,
        val_fraction: m.val_fraction,
        learning_rate: m.learning_rate,
        seed,
    }
}

/// Rejects bad settings before any data is read.
fn validate_model_args(m: &ModelArgs, classifiers: &[Classifier]) -> Result<()> {
    if classifiers.contains(&Classifier::Hicnnlstm) {
        model_config(m).validate()?;
        train_config(m, 0).validate()?;
    }
    if classifiers.contains(&Classifier::Nb) && !(m.nb_alpha > 0.0) {
        return Err(Error::Config(format!("--nb-alpha must be positive, got {}", m.nb_alpha)));
    }
    Ok(())
}

struct Loaded {
    dataset: LabeledDataset,
    corpus: Corpus,
}

fn load_dataset(path: &Path) -> Result<Loaded> {
    let config = DatasetConfig::from_file(path)?;
    let dataset = config.load()?;
    if !dataset.rejected.is_empty() {
        let first = &dataset.rejected[0];
        eprintln!(
            "warning: {} rows rejected (first at line {}: {})",
            dataset.rejected.len(),
            first.line,
            first.reason
        );
    }
    for w in config.check(&dataset)? {
        eprintln!("warning: {w}");
    }
    let corpus = Corpus::from_dataset(&dataset)?;
    Ok(Loaded { dataset, corpus })
}

fn load_table(source: &str, limit: Option<usize>, vocab: &Vocabulary) -> Result<EmbeddingTable> {
    let keep = |w: &str| vocab.get(w).is_some() || vocab.get(&w.to_lowercase()).is_some();
    let path = Path::new(source);
    let is_text = matches!(path.extension().and_then(|e| e.to_str()), Some("txt" | "vec"));
    let table = if is_text {
        load_word2vec_text_filtered(path, keep)?
    } else {
        load_word2vec_binary_filtered(path, limit, keep)?
    };
    if table.is_empty() {
        eprintln!("warning: no corpus token has a vector in {source}");
    }
    Ok(table)
}

fn embedding_source(m: &ModelArgs, corpus: &Corpus, seed: u64) -> Result<EmbeddingSource> {
    if m.embeddings == "random" {
        Ok(EmbeddingSource::Random {
            dim: m.embedding_dim,
            seed,
        })
    } else {
        Ok(EmbeddingSource::Pretrained(Arc::new(load_table(&m.embeddings, m.embedding_limit, &corpus.vocab)?)))
    }
}

fn learner(c: Classifier, m: &ModelArgs, source: &EmbeddingSource, seed: u64) -> Box<dyn Learner> {
    match c {
        Classifier::Hicnnlstm => Box::new(HiCnnLstmLearner {
            model: model_config(m),
            train: train_config(m, seed),
            embeddings: source.clone(),
        }),
        Classifier::Nb => Box::new(NbLearner { alpha: m.nb_alpha }),
    }
}

fn settings(m: &ModelArgs, source: &EmbeddingSource, classifiers: &[Classifier]) -> Vec<(&'static str, String)> {
    let mut v = vec![("embeddings", m.embeddings.clone())];
    if classifiers.contains(&Classifier::Hicnnlstm) {
        v.push(("embedding_dim", source.dim().to_string()));
        if let Some(l) = m.embedding_limit {
            v.push(("embedding_limit", l.to_string()));
        }
        v.push((
            "model",
            format!(
                "filter_width={} filters={} sentence_dim={} lstm_hidden={} dense_dropout={} lstm_dropout={} max_sentences={}",
                m.filter_width, m.filters, m.sentence_dim, m.lstm_hidden, m.dense_dropout, m.lstm_dropout, m.max_sentences
            ),
        ));
        v.push((
            "training",
            format!(
                "batch_size={} max_epochs={} patience={} val_fraction={} learning_rate={}",
                m.batch_size, m.max_epochs, m.patience, m.val_fraction, m.learning_rate
            ),
        ));
    }
    if classifiers.contains(&Classifier::Nb) {
        v.push(("nb_alpha", m.nb_alpha.to_string()));
    }
    v
}

struct Manifest {
    entries: Vec<(&'static str, String)>,
}

impl Manifest {
    fn new(command: &str, dataset_path: &Path, loaded: &Loaded) -> Self {
        Manifest {
            entries: vec![
                ("tool", format!("hisent {}", env!("CARGO_PKG_VERSION"))),
                ("command", command.to_owned()),
                ("dataset", dataset_path.display().to_string()),
                ("dataset_name", loaded.dataset.name.clone()),
                ("samples", loaded.dataset.len().to_string()),
                ("classes", loaded.dataset.label_set.join(",")),
            ],
        }
    }

    fn push(&mut self, key: &'static str, value: impl ToString) {
        self.entries.push((key, value.to_string()));
    }

    fn header(&self) -> String {
        manifest_header(&self.entries)
    }

    /// Deterministic header plus wall-clock facts, for the timing file only.
    fn timing_header(&self, started: SystemTime, wall: f64) -> String {
        let mut entries = self.entries.clone();
        let secs = started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        entries.push(("started_unix", secs.to_string()));
        entries.push(("wall_seconds", format!("{wall:.3}")));
        manifest_header(&entries)
    }
}

pub fn crossval(a: &CrossvalArgs) -> Result<()> {
    if a.folds < 2 {
        return Err(Error::Config("folds must be ≥ 2".into()));
    }
    validate_model_args(&a.model, &[a.classifier])?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let loaded = load_dataset(&a.dataset)?;
    let corpus = &loaded.corpus;
    let source = embedding_source(&a.model, corpus, a.seed)?;
    let learner = learner(a.classifier, &a.model, &source, a.seed);
    let cv = cross_validate(learner.as_ref(), corpus, a.folds, a.seed)?;

    let mut manifest = Manifest::new("crossval", &a.dataset, &loaded);
    manifest.push("classifier", a.classifier.name());
    manifest.push("seed", a.seed);
    manifest.push("folds", a.folds);
    for (k, v) in settings(&a.model, &source, &[a.classifier]) {
        manifest.push(k, v);
    }
    let header = manifest.header();
    let dir = out_dir(&a.out)?;
    let name = a.classifier.name();
    let classes = &corpus.class_names;
    write(&dir.join(format!("{name}_summary.csv")), &crossval_summary_csv(&header, &cv, classes))?;
    write(&dir.join(format!("{name}_report.md")), &crossval_markdown(&header, &[&cv], classes))?;
    write(
        &dir.join(format!("{name}_predictions.csv")),
        &predictions_csv(&header, &cv, &corpus.labels, classes),
    )?;
    for f in &cv.folds {
        if let Some(h) = &f.history {
            let mut s = header.clone();
            s.push_str(&format!("# fold: {}\n", f.fold + 1));
            s.push_str(&h.to_csv());
            write(&dir.join(format!("{name}_fold{:02}_history.csv", f.fold + 1)), &s)?;
        }
    }
    let rows: Vec<(String, f64, f64)> = cv
        .folds
        .iter()
        .map(|f| (format!("fold_{}", f.fold + 1), f.train_seconds, f.test_seconds))
        .collect();
    let timing_header = manifest.timing_header(started, clock.elapsed().as_secs_f64());
    write(&dir.join(format!("{name}_timing.csv")), &timing_csv(&timing_header, &rows))?;

    println!(
        "{name}: pooled accuracy {:.4}, fold-mean accuracy {:.4} over {} folds; reports in {}",
        cv.pooled.accuracy,
        cv.fold_mean.accuracy,
        a.folds,
        dir.display()
    );
    Ok(())
}

pub fn learning_curve(a: &CurveArgs) -> Result<()> {
    validate_fractions(&a.fractions)?;
    let mut classifiers = Vec::new();
    for &c in &a.classifier {
        if !classifiers.contains(&c) {
            classifiers.push(c);
        }
    }
    validate_model_args(&a.model, &classifiers)?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let loaded = load_dataset(&a.dataset)?;
    let corpus = &loaded.corpus;
    let source = embedding_source(&a.model, corpus, a.seed)?;
    let plan = CurvePlan::new(&corpus.labels, corpus.num_classes(), &a.fractions, a.seed)?;
    for p in plan.points.iter().filter(|p| p.sample.is_none()) {
        eprintln!(
            "warning: skipping fraction {}: {} samples is fewer than {} classes",
            p.fraction,
            p.size,
            corpus.num_classes()
        );
    }

    let mut manifest = Manifest::new("learning-curve", &a.dataset, &loaded);
    manifest.push("classifiers", classifiers.iter().map(|c| c.name()).collect::<Vec<_>>().join(","));
    manifest.push("seed", a.seed);
    manifest.push("fractions", a.fractions.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
    manifest.push("split", format!("train={} test={}", plan.train.len(), plan.test.len()));
    for (k, v) in settings(&a.model, &source, &classifiers) {
        manifest.push(k, v);
    }
    let header = manifest.header();
    let dir = out_dir(&a.out)?;

    let mut curves = Vec::new();
    let mut rows = Vec::new();
    for &c in &classifiers {
        let l = learner(c, &a.model, &source, a.seed);
        let curve = run_curve(l.as_ref(), corpus, &plan)?;
        write(&dir.join(format!("{}_curve.csv", c.name())), &curve_csv(&header, &curve))?;
        for p in &curve.points {
            rows.push((format!("{}@{}", c.name(), p.fraction), p.train_seconds, p.test_seconds));
        }
        curves.push(curve);
    }
    let refs: Vec<_> = curves.iter().collect();
    write(&dir.join("curve.csv"), &combined_curve_csv(&header, &plan, &refs))?;
    write(&dir.join("curve.md"), &curve_markdown(&header, &plan, &refs))?;
    let timing_header = manifest.timing_header(started, clock.elapsed().as_secs_f64());
    write(&dir.join("curve_timing.csv"), &timing_csv(&timing_header, &rows))?;

    for curve in &curves {
        let points: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{}:{}={:.4}", p.fraction, p.resample_size, p.test_accuracy))
            .collect();
        println!("{}: {}", curve.classifier, points.join(" "));
    }
    Ok(())
}

fn sidecar(checkpoint: &Path, suffix: &str) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn train(a: &TrainArgs) -> Result<()> {
    validate_model_args(&a.model, &[Classifier::Hicnnlstm])?;
    let loaded = load_dataset(&a.dataset)?;
    let corpus = &loaded.corpus;
    let source = embedding_source(&a.model, corpus, a.seed)?;
    let learner = HiCnnLstmLearner {
        model: model_config(&a.model),
        train: train_config(&a.model, a.seed),
        embeddings: source.clone(),
    };
    let all: Vec<usize> = (0..corpus.len()).collect();
    let trained = learner.fit_model(corpus, &all, a.seed)?;

    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    save_checkpoint(&trained.model, corpus.vocab.fingerprint(), &a.out)?;
    let mut vocab = corpus.vocab.tokens().join("\n");
    vocab.push('\n');
    write(&sidecar(&a.out, ".vocab"), &vocab)?;
    let mut labels = corpus.class_names.join("\n");
    labels.push('\n');
    write(&sidecar(&a.out, ".labels"), &labels)?;
    source
        .table_for(&corpus.vocab)?
        .restrict_to(&corpus.vocab)?
        .write_word2vec_binary(sidecar(&a.out, ".vectors.bin"))?;

    let mut manifest = Manifest::new("train", &a.dataset, &loaded);
    manifest.push("classifier", "hicnnlstm");
    manifest.push("seed", a.seed);
    for (k, v) in settings(&a.model, &source, &[Classifier::Hicnnlstm]) {
        manifest.push(k, v);
    }
    let mut history = manifest.header();
    history.push_str(&trained.history.to_csv());
    write(&sidecar(&a.out, ".history.csv"), &history)?;
    println!(
        "trained on {} documents, best epoch {} of {}; checkpoint {}",
        corpus.len(),
        trained.history.best_epoch,
        trained.history.records.len(),
        a.out.display()
    );
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_owned).collect())
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    if !a.model.exists() {
        return Err(Error::io(&a.model, io::Error::new(io::ErrorKind::NotFound, "checkpoint not found")));
    }
    let tokens = read_lines(&sidecar(&a.model, ".vocab"))?;
    if tokens.len() < 2 {
        return Err(Error::Corrupt("vocabulary sidecar has fewer than two entries".into()));
    }
    let vocab = Vocabulary::from_tokens(tokens.into_iter().skip(2));
    let labels = read_lines(&sidecar(&a.model, ".labels"))?;
    let model = load_checkpoint(&a.model, vocab.fingerprint())?;
    if labels.len() != model.config.num_classes {
        return Err(Error::Corrupt(format!(
            "{} labels for a {}-class model",
            labels.len(),
            model.config.num_classes
        )));
    }
    let table = load_word2vec_binary(sidecar(&a.model, ".vectors.bin"), None)?;
    if !table.is_empty() && table.dim() != model.config.embedding_dim {
        return Err(Error::shape("word vectors", model.config.embedding_dim, table.dim()));
    }
    let lookup = table.project(&vocab);

    let input: Box<dyn BufRead> = if a.input == "-" {
        Box::new(io::stdin().lock())
    } else {
        let f = fs::File::open(&a.input).map_err(|e| Error::io(&a.input, e))?;
        Box::new(io::BufReader::new(f))
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let io_err = |e| Error::io("<stdout>", e);
    for line in input.lines() {
        let line = line.map_err(|e| Error::io(&a.input, e))?;
        let doc = vocab.index_document(&TokenizedDocument::from_text(line.trim_end_matches('\r')), None);
        let probs = model.predict_probs(&doc, &lookup)?;
        let best = hisent_core::tensor::argmax(&probs);
        write!(out, "{}", labels[best]).map_err(io_err)?;
        for p in probs.iter() {
            write!(out, "\t{p:.6}").map_err(io_err)?;
        }
        writeln!(out).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}
