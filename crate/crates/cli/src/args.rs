use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Hierarchical CNN-BiLSTM sentiment experiments.
#[derive(Debug, Parser)]
#[command(name = "hisent", version)]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stratified k-fold cross-validation.
    Crossval(CrossvalArgs),
    /// Accuracy on a fixed 30% test split against bootstrap-resampled
    /// fractions of the remaining 70%.
    LearningCurve(CurveArgs),
    /// Train on a whole dataset and write a checkpoint.
    Train(TrainArgs),
    /// Label one document per input line.
    Predict(PredictArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Classifier {
    Hicnnlstm,
    Nb,
}

impl Classifier {
    pub fn name(self) -> &'static str {
        match self {
            Classifier::Hicnnlstm => "hicnnlstm",
            Classifier::Nb => "nb",
        }
    }
}

/// Word vectors and model/training settings.
#[derive(Clone, Debug, Args)]
pub struct ModelArgs {
    /// word2vec file (`.txt`/`.vec` for text, anything else binary) or
    /// `random`.
    #[arg(long, default_value = "random")]
    pub embeddings: String,
    /// Dimension of random vectors.
    #[arg(long, default_value_t = 300)]
    pub embedding_dim: usize,
    /// Read at most this many vectors from a pretrained file.
    #[arg(long)]
    pub embedding_limit: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub filter_width: usize,
    #[arg(long, default_value_t = 150)]
    pub filters: usize,
    #[arg(long, default_value_t = 150)]
    pub sentence_dim: usize,
    #[arg(long, default_value_t = 128)]
    pub lstm_hidden: usize,
    #[arg(long, default_value_t = 0.4)]
    pub dense_dropout: f64,
    #[arg(long, default_value_t = 0.2)]
    pub lstm_dropout: f64,
    #[arg(long, default_value_t = 50)]
    pub max_sentences: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 50)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 0.1)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    /// Laplace smoothing for Naive Bayes.
    #[arg(long, default_value_t = 1.0)]
    pub nb_alpha: f64,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    /// Dataset config (TOML).
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value = "hicnnlstm")]
    pub classifier: Classifier,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory (default: $HISENT_OUT, else ./hisent-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Repeat to compare classifiers on the same split and resamples.
    #[arg(long, value_enum, default_values_t = [Classifier::Hicnnlstm])]
    pub classifier: Vec<Classifier>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.4, 0.6, 0.8, 1.0])]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Checkpoint path; sidecar files are written next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Input file, or `-` for stdin.
    #[arg(long, default_value = "-")]
    pub input: String,
}
