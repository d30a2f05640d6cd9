//! The hierarchical classifier: per-sentence CNN encoder, a BiLSTM over the
//! sentence vectors, and a softmax head.

mod checkpoint;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::layers::{
    bilstm_backward, bilstm_encode, conv_maxpool_backward, conv_maxpool_forward, dense_relu_backward,
    dense_relu_forward, sentence_matrix, softmax_xent, BiLstmTrace, ConvCache, ConvGrads, ConvLayer, DenseCache,
    DenseGrads, DenseLayer, DropoutMask, HeadGrads, LstmCell, LstmGrads, SoftmaxHead,
};
use crate::rng::{self, stream, Rng};
use crate::tensor::{argmax, Matrix, Vector};

/// A sequence of sentences, each a sequence of vocabulary indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Document {
    pub sentences: Vec<Vec<usize>>,
    pub label: Option<usize>,
}

impl Document {
    pub fn new(sentences: Vec<Vec<usize>>, label: Option<usize>) -> Self {
        Document { sentences, label }
    }

    pub fn tokens(&self) -> impl Iterator<Item = usize> + '_ {
        self.sentences.iter().flatten().copied()
    }

    fn validate(&self) -> Result<()> {
        if self.sentences.is_empty() || self.sentences.iter().any(Vec::is_empty) {
            return Err(Error::Contract("document must have at least one non-empty sentence".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    pub filter_width: usize,
    pub num_filters: usize,
    pub sentence_dim: usize,
    pub lstm_hidden: usize,
    pub num_classes: usize,
    pub dense_dropout: f64,
    pub lstm_dropout: f64,
    pub max_sentences_per_doc: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(num_classes: usize) -> Self {
        ModelConfig {
            embedding_dim: 300,
            filter_width: 5,
            num_filters: 150,
            sentence_dim: 150,
            lstm_hidden: 128,
            num_classes,
            dense_dropout: 0.4,
            lstm_dropout: 0.2,
            max_sentences_per_doc: 50,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("embedding_dim", self.embedding_dim),
            ("filter_width", self.filter_width),
            ("num_filters", self.num_filters),
            ("sentence_dim", self.sentence_dim),
            ("lstm_hidden", self.lstm_hidden),
            ("max_sentences_per_doc", self.max_sentences_per_doc),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.num_classes < 2 {
            return Err(Error::Config("num_classes must be at least 2".into()));
        }
        for (name, v) in [("dense_dropout", self.dense_dropout), ("lstm_dropout", self.lstm_dropout)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1), got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Infer,
    Train,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HiCnnLstmModel {
    pub config: ModelConfig,
    pub conv: ConvLayer,
    pub dense: DenseLayer,
    pub lstm_fwd: LstmCell,
    pub lstm_bwd: LstmCell,
    pub head: SoftmaxHead,
}

/// Intermediate values of one document's forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    sentences: Vec<(ConvCache, DenseCache)>,
    bilstm: BiLstmTrace,
    pub doc_vector: Vector,
}

impl ForwardCache {
    /// Which piece of the piecewise-smooth network is active: the pooled
    /// window and ReLU sign of every filter, and the ReLU sign of every
    /// dense unit, per sentence. Two passes with equal patterns lie on the
    /// same smooth piece.
    pub fn activation_pattern(&self) -> Vec<usize> {
        let mut p = Vec::new();
        for (conv, dense) in &self.sentences {
            for (&w, &z) in conv.argmax.iter().zip(&conv.pooled_preact) {
                p.push(w);
                p.push(usize::from(z > 0.0));
            }
            p.extend(dense.preact.iter().map(|&z| usize::from(z > 0.0)));
        }
        p
    }
}

pub const PARAM_NAMES: [&str; 12] = [
    "conv.filters",
    "conv.bias",
    "dense.weights",
    "dense.bias",
    "lstm_fwd.input_weights",
    "lstm_fwd.recurrent_weights",
    "lstm_fwd.bias",
    "lstm_bwd.input_weights",
    "lstm_bwd.recurrent_weights",
    "lstm_bwd.bias",
    "head.weights",
    "head.bias",
];

impl HiCnnLstmModel {
    /// Glorot-uniform weights, zero biases except the LSTM forget gates.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut r = rng::seeded(config.seed, stream::INIT, 0);
        let conv = ConvLayer::new(config.filter_width, config.num_filters, config.embedding_dim, &mut r);
        let dense = DenseLayer::new(config.num_filters, config.sentence_dim, config.dense_dropout, &mut r);
        let lstm_fwd = LstmCell::new(config.sentence_dim, config.lstm_hidden, config.lstm_dropout, &mut r);
        let lstm_bwd = LstmCell::new(config.sentence_dim, config.lstm_hidden, config.lstm_dropout, &mut r);
        let head = SoftmaxHead::new(2 * config.lstm_hidden, config.num_classes, &mut r);
        Ok(HiCnnLstmModel {
            config,
            conv,
            dense,
            lstm_fwd,
            lstm_bwd,
            head,
        })
    }

    pub fn tensors(&self) -> [&[f64]; 12] {
        [
            self.conv.filters.as_slice(),
            &self.conv.bias,
            self.dense.weights.as_slice(),
            &self.dense.bias,
            self.lstm_fwd.input_weights.as_slice(),
            self.lstm_fwd.recurrent_weights.as_slice(),
            &self.lstm_fwd.bias,
            self.lstm_bwd.input_weights.as_slice(),
            self.lstm_bwd.recurrent_weights.as_slice(),
            &self.lstm_bwd.bias,
            self.head.weights.as_slice(),
            &self.head.bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 12] {
        [
            self.conv.filters.as_mut_slice(),
            &mut self.conv.bias,
            self.dense.weights.as_mut_slice(),
            &mut self.dense.bias,
            self.lstm_fwd.input_weights.as_mut_slice(),
            self.lstm_fwd.recurrent_weights.as_mut_slice(),
            &mut self.lstm_fwd.bias,
            self.lstm_bwd.input_weights.as_mut_slice(),
            self.lstm_bwd.recurrent_weights.as_mut_slice(),
            &mut self.lstm_bwd.bias,
            self.head.weights.as_mut_slice(),
            &mut self.head.bias,
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn check_lookup(&self, lookup: &Matrix) -> Result<()> {
        if lookup.cols() != self.config.embedding_dim {
            return Err(Error::shape("embedding lookup", lookup.cols(), self.config.embedding_dim));
        }
        Ok(())
    }

    /// Runs the full network. In [`Mode::Train`] dropout masks are drawn
    /// from `rng`. Sentences past `max_sentences_per_doc` are ignored.
    pub fn forward(&self, doc: &Document, lookup: &Matrix, mode: Mode, rng: Option<&mut Rng>) -> Result<(Vector, ForwardCache)> {
        doc.validate()?;
        self.check_lookup(lookup)?;
        let mut rng = match (mode, rng) {
            (Mode::Train, Some(r)) => Some(r),
            (Mode::Train, None) => return Err(Error::Contract("training forward pass needs a dropout RNG".into())),
            (Mode::Infer, _) => None,
        };
        let cfg = &self.config;
        let mut sentences = Vec::new();
        for tokens in doc.sentences.iter().take(cfg.max_sentences_per_doc) {
            let s = sentence_matrix(tokens, lookup, cfg.filter_width);
            let conv = conv_maxpool_forward(s, &self.conv)?;
            let mask = match rng.as_deref_mut() {
                Some(r) => DropoutMask::sample(cfg.num_filters, self.dense.dropout_rate, r),
                None => DropoutMask::identity(cfg.num_filters),
            };
            let dense = dense_relu_forward(&conv.features, &self.dense, mask)?;
            sentences.push((conv, dense));
        }
        let (fwd_masks, bwd_masks) = match rng.as_deref_mut() {
            Some(r) => (self.lstm_fwd.sample_masks(r), self.lstm_bwd.sample_masks(r)),
            None => (self.lstm_fwd.identity_masks(), self.lstm_bwd.identity_masks()),
        };
        let seq: Vec<&[f64]> = sentences.iter().map(|(_, d)| &d.output[..]).collect();
        let (doc_vector, bilstm) = bilstm_encode(&seq, &self.lstm_fwd, &self.lstm_bwd, fwd_masks, bwd_masks)?;
        let probs = self.head.probs(&doc_vector)?;
        Ok((
            probs,
            ForwardCache {
                sentences,
                bilstm,
                doc_vector,
            },
        ))
    }

    pub fn predict_probs(&self, doc: &Document, lookup: &Matrix) -> Result<Vector> {
        Ok(self.forward(doc, lookup, Mode::Infer, None)?.0)
    }

    /// Most probable class; ties go to the lowest index.
    pub fn predict(&self, doc: &Document, lookup: &Matrix) -> Result<usize> {
        Ok(argmax(&self.predict_probs(doc, lookup)?))
    }

    /// Loss and parameter gradients for one labeled document; gradients are
    /// added into `grads`.
    pub fn backward_document(
        &self,
        doc: &Document,
        lookup: &Matrix,
        dropout: Option<&mut Rng>,
        grads: &mut ModelGrads,
    ) -> Result<f64> {
        let gold = doc
            .label
            .ok_or_else(|| Error::Contract("training document has no label".into()))?;
        let mode = if dropout.is_some() { Mode::Train } else { Mode::Infer };
        let (_, cache) = self.forward(doc, lookup, mode, dropout)?;
        let out = softmax_xent(&cache.doc_vector, &self.head, gold, &mut grads.head)?;
        let d_seq = bilstm_backward(
            &out.grad_input,
            &cache.bilstm,
            &self.lstm_fwd,
            &self.lstm_bwd,
            &mut grads.lstm_fwd,
            &mut grads.lstm_bwd,
        )?;
        for ((conv, dense), d_sent) in cache.sentences.iter().zip(&d_seq) {
            let d_feat = dense_relu_backward(d_sent, dense, &self.dense, &mut grads.dense)?;
            // Word vectors are static, so no gradient flows into the input.
            conv_maxpool_backward(&d_feat, conv, &self.conv, &mut grads.conv, false)?;
        }
        Ok(out.loss)
    }

    /// Mean cross-entropy over `batch` and the mean gradient. With
    /// `dropout_seed`, document `i` draws its masks from a stream derived
    /// from `(seed, i)`; without it the pass runs in inference mode.
    ///
    /// Documents are reduced in fixed groups of [`REDUCE_CHUNK`] and the
    /// groups are summed in index order, so the result does not depend on
    /// the number of worker threads.
    pub fn loss_and_grads(&self, batch: &[&Document], lookup: &Matrix, dropout_seed: Option<u64>) -> Result<(f64, ModelGrads)> {
        if batch.is_empty() {
            return Err(Error::Contract("empty batch".into()));
        }
        let partials: Vec<Result<(f64, ModelGrads)>> = batch
            .par_chunks(REDUCE_CHUNK)
            .enumerate()
            .map(|(chunk_idx, chunk)| {
                let mut grads = ModelGrads::zeros(self);
                let mut loss = 0.0;
                for (offset, doc) in chunk.iter().enumerate() {
                    let idx = (chunk_idx * REDUCE_CHUNK + offset) as u64;
                    let mut r = dropout_seed.map(|s| rng::seeded(s, stream::DROPOUT, idx));
                    loss += self.backward_document(doc, lookup, r.as_mut(), &mut grads)?;
                }
                Ok((loss, grads))
            })
            .collect();
        let mut total = 0.0;
        let mut grads: Option<ModelGrads> = None;
        for p in partials {
            let (l, g) = p?;
            total += l;
            match grads.as_mut() {
                Some(acc) => acc.add(&g),
                None => grads = Some(g),
            }
        }
        let mut grads = grads.expect("batch is non-empty");
        let n = batch.len() as f64;
        grads.scale(1.0 / n);
        Ok((total / n, grads))
    }

    /// Mean inference-mode loss and accuracy.
    pub fn evaluate(&self, docs: &[&Document], lookup: &Matrix) -> Result<(f64, f64)> {
        if docs.is_empty() {
            return Err(Error::Contract("cannot evaluate an empty set".into()));
        }
        let per_doc: Vec<Result<(f64, bool)>> = docs
            .par_iter()
            .map(|d| {
                let gold = d.label.ok_or_else(|| Error::Contract("evaluation document has no label".into()))?;
                let p = self.predict_probs(d, lookup)?;
                let loss = -p[gold].max(f64::MIN_POSITIVE).ln();
                Ok((loss, argmax(&p) == gold))
            })
            .collect();
        let mut loss = 0.0;
        let mut correct = 0usize;
        for r in per_doc {
            let (l, ok) = r?;
            loss += l;
            correct += ok as usize;
        }
        let n = docs.len() as f64;
        Ok((loss / n, correct as f64 / n))
    }
}

/// Documents per sequential reduction group in [`HiCnnLstmModel::loss_and_grads`].
pub const REDUCE_CHUNK: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelGrads {
    pub conv: ConvGrads,
    pub dense: DenseGrads,
    pub lstm_fwd: LstmGrads,
    pub lstm_bwd: LstmGrads,
    pub head: HeadGrads,
}

impl ModelGrads {
    pub fn zeros(model: &HiCnnLstmModel) -> Self {
        ModelGrads {
            conv: ConvGrads::zeros(&model.conv),
            dense: DenseGrads::zeros(&model.dense),
            lstm_fwd: LstmGrads::zeros(&model.lstm_fwd),
            lstm_bwd: LstmGrads::zeros(&model.lstm_bwd),
            head: HeadGrads::zeros(&model.head),
        }
    }

    /// Same order as [`HiCnnLstmModel::tensors`].
    pub fn tensors(&self) -> [&[f64]; 12] {
        [
            self.conv.filters.as_slice(),
            &self.conv.bias,
            self.dense.weights.as_slice(),
            &self.dense.bias,
            self.lstm_fwd.input_weights.as_slice(),
            self.lstm_fwd.recurrent_weights.as_slice(),
            &self.lstm_fwd.bias,
            self.lstm_bwd.input_weights.as_slice(),
            self.lstm_bwd.recurrent_weights.as_slice(),
            &self.lstm_bwd.bias,
            self.head.weights.as_slice(),
            &self.head.bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 12] {
        [
            self.conv.filters.as_mut_slice(),
            &mut self.conv.bias,
            self.dense.weights.as_mut_slice(),
            &mut self.dense.bias,
            self.lstm_fwd.input_weights.as_mut_slice(),
            self.lstm_fwd.recurrent_weights.as_mut_slice(),
            &mut self.lstm_fwd.bias,
            self.lstm_bwd.input_weights.as_mut_slice(),
            self.lstm_bwd.recurrent_weights.as_mut_slice(),
            &mut self.lstm_bwd.bias,
            self.head.weights.as_mut_slice(),
            &mut self.head.bias,
        ]
    }

    pub fn add(&mut self, other: &ModelGrads) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            crate::tensor::axpy(a, b, 1.0);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }
}
