//! Cross-validation and learning-curve protocols, metrics and report tables.

mod folds;
mod learners;
mod metrics;
mod report;

use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;

pub use folds::{holdout_size, resample_size, stratified_holdout, stratified_kfold, FoldPlan};
pub use learners::{EmbeddingSource, HiCnnLstmLearner, NbLearner};
pub use metrics::{compute_metrics, mean_metrics, ClassMetrics, ConfusionMatrix, MeanMetrics, MetricsReport};
pub use report::{
    curve_csv, curve_markdown, combined_curve_csv, crossval_markdown, crossval_summary_csv, manifest_header,
    predictions_csv, timing_csv,
};

use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{self, stream};
use crate::textprep::{TokenizedDocument, Vocabulary};
use crate::train::TrainHistory;
use crate::model::Document;

pub const DEFAULT_FRACTIONS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
pub const CURVE_TEST_FRACTION: f64 = 0.3;

/// A labeled, tokenized dataset in the form the protocols consume.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub name: String,
    pub class_names: Vec<String>,
    pub docs: Vec<TokenizedDocument>,
    pub labels: Vec<usize>,
    /// Vocabulary over every document; label-free, used only to index text
    /// for embedding lookup.
    pub vocab: Vocabulary,
    /// `docs` indexed against `vocab`, with labels attached.
    pub indexed: Vec<Document>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, class_names: Vec<String>, texts: &[&str], labels: Vec<usize>) -> Result<Self> {
        if texts.len() != labels.len() {
            return Err(Error::Contract(format!("{} texts but {} labels", texts.len(), labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::Contract(format!("label {bad} out of range for {} classes", class_names.len())));
        }
        let docs: Vec<TokenizedDocument> = texts.iter().map(|t| TokenizedDocument::from_text(t)).collect();
        let vocab = Vocabulary::build(&docs, 1)?;
        let indexed = docs
            .iter()
            .zip(&labels)
            .map(|(d, &l)| vocab.index_document(d, Some(l)))
            .collect();
        Ok(Corpus {
            name: name.into(),
            class_names,
            docs,
            labels,
            vocab,
            indexed,
        })
    }

    pub fn from_dataset(ds: &LabeledDataset) -> Result<Self> {
        let texts: Vec<&str> = ds.samples.iter().map(|s| s.text.as_str()).collect();
        let labels = ds.label_indices()?;
        Self::new(ds.name.clone(), ds.label_set.clone(), &texts, labels)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }
}

/// A trained classifier ready to label corpus documents.
pub trait Predictor: Send + Sync {
    fn predict(&self, corpus: &Corpus, indices: &[usize]) -> Result<Vec<usize>>;
}

pub struct Fitted {
    pub predictor: Box<dyn Predictor>,
    pub history: Option<TrainHistory>,
}

/// A trainable classifier. `train` may contain repeated indices.
pub trait Learner: Sync {
    fn name(&self) -> &str;
    fn fit(&self, corpus: &Corpus, train: &[usize], seed: u64) -> Result<Fitted>;
}

#[derive(Clone, Debug)]
pub struct FoldResult {
    pub fold: usize,
    pub seed: u64,
    pub test: Vec<usize>,
    pub predictions: Vec<usize>,
    pub report: MetricsReport,
    pub history: Option<TrainHistory>,
    pub train_seconds: f64,
    pub test_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct CrossValidation {
    pub classifier: String,
    pub plan: FoldPlan,
    pub folds: Vec<FoldResult>,
    /// Metrics over the concatenation of every fold's predictions.
    pub pooled: MetricsReport,
    /// Unweighted mean of the per-fold metrics.
    pub fold_mean: MeanMetrics,
}

fn run_unit(
    learner: &dyn Learner,
    corpus: &Corpus,
    train: &[usize],
    test: &[usize],
    seed: u64,
) -> Result<(Vec<usize>, Option<TrainHistory>, f64, f64)> {
    let t0 = Instant::now();
    let fitted = learner.fit(corpus, train, seed)?;
    let train_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let predictions = fitted.predictor.predict(corpus, test)?;
    let test_seconds = t1.elapsed().as_secs_f64();
    if predictions.len() != test.len() {
        return Err(Error::Contract(format!(
            "{} predictions for {} test documents",
            predictions.len(),
            test.len()
        )));
    }
    Ok((predictions, fitted.history, train_seconds, test_seconds))
}

/// Stratified k-fold cross-validation. The folds depend only on the labels
/// and `seed`, so every classifier sees the same folds. Fold `i` trains with
/// its own derived seed; folds run in parallel without affecting results.
pub fn cross_validate(learner: &dyn Learner, corpus: &Corpus, k: usize, seed: u64) -> Result<CrossValidation> {
    let plan = stratified_kfold(&corpus.labels, k, seed)?;
    let c = corpus.num_classes();
    let folds = (0..k)
        .into_par_iter()
        .map(|i| {
            let fold_seed = rng::derive_seed(seed, stream::FOLD_SEED, i as u64);
            let test = plan.folds[i].clone();
            let train = plan.train_indices(i);
            let wrap = |e: Error| Error::Fold {
                fold: i,
                source: Box::new(e),
            };
            let (predictions, history, train_seconds, test_seconds) =
                run_unit(learner, corpus, &train, &test, fold_seed).map_err(wrap)?;
            let gold: Vec<usize> = test.iter().map(|&j| corpus.labels[j]).collect();
            let report = compute_metrics(&gold, &predictions, c).map_err(wrap)?;
            Ok(FoldResult {
                fold: i,
                seed: fold_seed,
                test,
                predictions,
                report,
                history,
                train_seconds,
                test_seconds,
            })
        })
        .collect::<Result<Vec<FoldResult>>>()?;

    let gold: Vec<usize> = folds.iter().flat_map(|f| f.test.iter().map(|&j| corpus.labels[j])).collect();
    let pred: Vec<usize> = folds.iter().flat_map(|f| f.predictions.iter().copied()).collect();
    let pooled = compute_metrics(&gold, &pred, c)?;
    let reports: Vec<MetricsReport> = folds.iter().map(|f| f.report.clone()).collect();
    let fold_mean = mean_metrics(&reports).expect("k ≥ 2 folds");
    Ok(CrossValidation {
        classifier: learner.name().to_owned(),
        plan,
        folds,
        pooled,
        fold_mean,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannedPoint {
    pub fraction: f64,
    pub size: usize,
    pub seed: u64,
    /// Bootstrap sample of training indices; `None` when the point is
    /// skipped.
    pub sample: Option<Vec<usize>>,
}

/// The fixed split and resamples of a learning curve, shared by every
/// classifier evaluated on it.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePlan {
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub points: Vec<PlannedPoint>,
}

impl CurvePlan {
    pub fn new(labels: &[usize], num_classes: usize, fractions: &[f64], seed: u64) -> Result<Self> {
        validate_fractions(fractions)?;
        let mut split_rng = rng::seeded(seed, stream::HOLDOUT, 0);
        let (train, test) = stratified_holdout(labels, CURVE_TEST_FRACTION, &mut split_rng)?;
        let points = fractions
            .iter()
            .enumerate()
            .map(|(i, &fraction)| {
                let size = resample_size(fraction, train.len());
                let sample = (size >= num_classes).then(|| {
                    let mut r = rng::seeded(seed, stream::RESAMPLE, i as u64);
                    (0..size).map(|_| train[r.gen_range(0..train.len())]).collect()
                });
                PlannedPoint {
                    fraction,
                    size,
                    seed: rng::derive_seed(seed, stream::FOLD_SEED, i as u64),
                    sample,
                }
            })
            .collect();
        Ok(CurvePlan {
            seed,
            train,
            test,
            points,
        })
    }
}

pub fn validate_fractions(fractions: &[f64]) -> Result<()> {
    if fractions.is_empty() {
        return Err(Error::Config("at least one fraction is required".into()));
    }
    for &f in fractions {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::Config(format!("fraction {f} is outside (0, 1]")));
        }
    }
    if fractions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("fractions must be strictly ascending".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub fraction: f64,
    pub resample_size: usize,
    pub test_accuracy: f64,
    pub report: MetricsReport,
    pub train_seconds: f64,
    pub test_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkippedPoint {
    pub fraction: f64,
    pub resample_size: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearningCurve {
    pub classifier: String,
    pub points: Vec<CurvePoint>,
    pub skipped: Vec<SkippedPoint>,
}

/// Fits on each planned bootstrap sample and scores on the fixed test split.
pub fn learning_curve(learner: &dyn Learner, corpus: &Corpus, plan: &CurvePlan) -> Result<LearningCurve> {
    let c = corpus.num_classes();
    let gold: Vec<usize> = plan.test.iter().map(|&j| corpus.labels[j]).collect();
    let outcomes = plan
        .points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let Some(sample) = &p.sample else {
                return Ok(None);
            };
            let wrap = |e: Error| Error::Fold {
                fold: i,
                source: Box::new(e),
            };
            let (pred, _, train_seconds, test_seconds) =
                run_unit(learner, corpus, sample, &plan.test, p.seed).map_err(wrap)?;
            let report = compute_metrics(&gold, &pred, c).map_err(wrap)?;
            Ok(Some(CurvePoint {
                fraction: p.fraction,
                resample_size: p.size,
                test_accuracy: report.accuracy,
                report,
                train_seconds,
                test_seconds,
            }))
        })
        .collect::<Result<Vec<Option<CurvePoint>>>>()?;
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (p, out) in plan.points.iter().zip(outcomes) {
        match out {
            Some(point) => points.push(point),
            None => skipped.push(SkippedPoint {
                fraction: p.fraction,
                resample_size: p.size,
                reason: format!("resample size {} is smaller than the {c} classes", p.size),
            }),
        }
    }
    Ok(LearningCurve {
        classifier: learner.name().to_owned(),
        points,
        skipped,
    })
}
