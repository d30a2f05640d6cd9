use std::sync::Arc;

use rayon::prelude::*;

use super::{Corpus, Fitted, Learner, Predictor};
use crate::baseline::{nb_fit, NbModel};
use crate::embeddings::EmbeddingTable;
use crate::error::Result;
use crate::model::{Document, HiCnnLstmModel, ModelConfig};
use crate::tensor::Matrix;
use crate::textprep::{TokenizedDocument, Vocabulary};
use crate::train::{fit, TrainConfig, TrainHistory};

#[derive(Clone, Debug)]
pub enum EmbeddingSource {
    Pretrained(Arc<EmbeddingTable>),
    /// Seeded uniform vectors, one per corpus token. The seed is fixed per
    /// run so every fold sees the same vectors.
    Random { dim: usize, seed: u64 },
}

impl EmbeddingSource {
    pub fn dim(&self) -> usize {
        match self {
            EmbeddingSource::Pretrained(t) => t.dim(),
            EmbeddingSource::Random { dim, .. } => *dim,
        }
    }

    pub fn table_for(&self, vocab: &Vocabulary) -> Result<Arc<EmbeddingTable>> {
        match self {
            EmbeddingSource::Pretrained(t) => Ok(Arc::clone(t)),
            EmbeddingSource::Random { dim, seed } => Ok(Arc::new(EmbeddingTable::random(
                vocab.tokens().iter().skip(2).map(String::as_str),
                *dim,
                *seed,
            )?)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HiCnnLstmLearner {
    /// `num_classes`, `embedding_dim` and `seed` are overwritten per fit.
    pub model: ModelConfig,
    /// `seed` is overwritten per fit.
    pub train: TrainConfig,
    pub embeddings: EmbeddingSource,
}

pub struct TrainedHiCnnLstm {
    pub model: HiCnnLstmModel,
    pub lookup: Arc<Matrix>,
    pub history: TrainHistory,
}

impl HiCnnLstmLearner {
    pub fn fit_model(&self, corpus: &Corpus, train: &[usize], seed: u64) -> Result<TrainedHiCnnLstm> {
        let table = self.embeddings.table_for(&corpus.vocab)?;
        let lookup = Arc::new(table.project(&corpus.vocab));
        let config = ModelConfig {
            num_classes: corpus.num_classes(),
            embedding_dim: table.dim(),
            seed,
            ..self.model.clone()
        };
        let train_config = TrainConfig {
            seed,
            ..self.train.clone()
        };
        let model = HiCnnLstmModel::new(config)?;
        let docs: Vec<&Document> = train.iter().map(|&i| &corpus.indexed[i]).collect();
        let (model, history) = fit(model, &docs, &lookup, &train_config)?;
        Ok(TrainedHiCnnLstm { model, lookup, history })
    }
}

struct HiCnnLstmPredictor {
    model: HiCnnLstmModel,
    lookup: Arc<Matrix>,
}

impl Predictor for HiCnnLstmPredictor {
    fn predict(&self, corpus: &Corpus, indices: &[usize]) -> Result<Vec<usize>> {
        indices
            .par_iter()
            .map(|&i| self.model.predict(&corpus.indexed[i], &self.lookup))
            .collect()
    }
}

impl Learner for HiCnnLstmLearner {
    fn name(&self) -> &str {
        "hicnnlstm"
    }

    fn fit(&self, corpus: &Corpus, train: &[usize], seed: u64) -> Result<Fitted> {
        let t = self.fit_model(corpus, train, seed)?;
        Ok(Fitted {
            predictor: Box::new(HiCnnLstmPredictor {
                model: t.model,
                lookup: t.lookup,
            }),
            history: Some(t.history),
        })
    }
}

/// Multinomial NB with the vocabulary built from the training documents only.
#[derive(Clone, Debug)]
pub struct NbLearner {
    pub alpha: f64,
}

impl Default for NbLearner {
    fn default() -> Self {
        NbLearner { alpha: 1.0 }
    }
}

struct NbPredictor {
    vocab: Vocabulary,
    model: NbModel,
}

impl Predictor for NbPredictor {
    fn predict(&self, corpus: &Corpus, indices: &[usize]) -> Result<Vec<usize>> {
        Ok(indices
            .iter()
            .map(|&i| self.model.predict(&self.vocab.index_document(&corpus.docs[i], None)))
            .collect())
    }
}

impl Learner for NbLearner {
    fn name(&self) -> &str {
        "nb"
    }

    fn fit(&self, corpus: &Corpus, train: &[usize], _seed: u64) -> Result<Fitted> {
        let train_docs: Vec<TokenizedDocument> = train.iter().map(|&i| corpus.docs[i].clone()).collect();
        let vocab = Vocabulary::build(&train_docs, 1)?;
        let indexed: Vec<Document> = train
            .iter()
            .map(|&i| vocab.index_document(&corpus.docs[i], Some(corpus.labels[i])))
            .collect();
        let refs: Vec<&Document> = indexed.iter().collect();
        let model = nb_fit(&refs, corpus.num_classes(), &vocab, self.alpha)?;
        Ok(Fitted {
            predictor: Box::new(NbPredictor { vocab, model }),
            history: None,
        })
    }
}
