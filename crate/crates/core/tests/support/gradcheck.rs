//! Central finite-difference gradient checker shared by the gradient tests
//! and the acceptance suite.

#![allow(dead_code)]

use hisent_core::model::{Document, HiCnnLstmModel, ModelConfig, ModelGrads, PARAM_NAMES};
use hisent_core::rng::{self, Rng};
use hisent_core::tensor::Matrix;
use rand::Rng as _;

pub const EPS: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
pub const DRAWS_PER_TENSOR: usize = 100;
/// Denominator floor so two gradients that are both at roundoff level do
/// not produce a large ratio.
const FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub name: String,
    pub checked: usize,
    /// Coordinates whose ±ε evaluations landed on different smooth pieces.
    pub skipped: usize,
    pub max_error: f64,
    pub worst: Option<(usize, f64, f64)>,
}

impl Outcome {
    pub fn new(name: impl Into<String>) -> Self {
        Outcome {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn passed(&self) -> bool {
        self.max_error <= TOLERANCE
    }

    pub fn merge(&mut self, other: &Outcome) {
        self.checked += other.checked;
        self.skipped += other.skipped;
        if other.max_error > self.max_error {
            self.max_error = other.max_error;
            self.worst = other.worst;
        }
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {} coords, {} at kinks, max rel err {:.2e}",
            self.name, self.checked, self.skipped, self.max_error
        )
    }
}

/// Compares `analytic[i]` with the central difference of `loss` in
/// coordinate `i` of the slice selected by `slot`, for every `i` in
/// `coords`. `loss` returns the scalar and an activation pattern; a
/// coordinate is skipped when the patterns at `+ε` and `-ε` differ.
pub fn check_coords<T: Clone>(
    name: &str,
    base: &T,
    slot: impl Fn(&mut T) -> &mut [f64],
    analytic: &[f64],
    coords: &[usize],
    loss: impl Fn(&T) -> (f64, Vec<usize>),
) -> Outcome {
    let mut out = Outcome::new(name);
    for &i in coords {
        let mut plus = base.clone();
        slot(&mut plus)[i] += EPS;
        let mut minus = base.clone();
        slot(&mut minus)[i] -= EPS;
        let (lp, pp) = loss(&plus);
        let (lm, pm) = loss(&minus);
        if pp != pm {
            out.skipped += 1;
            continue;
        }
        let numeric = (lp - lm) / (2.0 * EPS);
        let err = relative_error(analytic[i], numeric);
        out.checked += 1;
        if err > out.max_error || out.worst.is_none() {
            out.max_error = out.max_error.max(err);
            out.worst = Some((i, analytic[i], numeric));
        }
    }
    out
}

/// `k=4, F=3, f=2, m=3, H=2`.
pub fn desk_config(num_classes: usize, seed: u64) -> ModelConfig {
    ModelConfig {
        embedding_dim: 4,
        filter_width: 2,
        num_filters: 3,
        sentence_dim: 3,
        lstm_hidden: 2,
        num_classes,
        dense_dropout: 0.4,
        lstm_dropout: 0.2,
        max_sentences_per_doc: 50,
        seed,
    }
}

pub fn random_matrix(rows: usize, cols: usize, scale: f64, r: &mut Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| r.gen_range(-scale..scale)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// A lookup table of `vocab` rows with the UNK and PAD rows zeroed.
pub fn random_lookup(vocab: usize, dim: usize, r: &mut Rng) -> Matrix {
    let mut m = random_matrix(vocab, dim, 1.0, r);
    for row in 0..2.min(vocab) {
        m.row_mut(row).fill(0.0);
    }
    m
}

/// 1-4 sentences of 1-6 tokens, drawing indices from the whole vocabulary
/// including UNK.
pub fn random_document(vocab: usize, num_classes: usize, r: &mut Rng) -> Document {
    let sentences = (0..r.gen_range(1..=4))
        .map(|_| (0..r.gen_range(1..=6)).map(|_| r.gen_range(0..vocab)).collect())
        .collect();
    Document::new(sentences, Some(r.gen_range(0..num_classes)))
}

fn tensor_slot(m: &mut HiCnnLstmModel, k: usize) -> &mut [f64] {
    m.tensors_mut().into_iter().nth(k).unwrap()
}

struct Instance {
    model: HiCnnLstmModel,
    lookup: Matrix,
    doc: Document,
    dropout_seed: Option<u64>,
    grads: ModelGrads,
}

fn document_loss(m: &HiCnnLstmModel, lookup: &Matrix, doc: &Document, dropout_seed: Option<u64>) -> (f64, Vec<usize>) {
    use hisent_core::model::Mode;
    let mut sink = ModelGrads::zeros(m);
    let mut r = dropout_seed.map(|s| rng::seeded(s, 0, 0));
    let loss = m.backward_document(doc, lookup, r.as_mut(), &mut sink).unwrap();
    let mode = if dropout_seed.is_some() { Mode::Train } else { Mode::Infer };
    let mut r = dropout_seed.map(|s| rng::seeded(s, 0, 0));
    let (_, cache) = m.forward(doc, lookup, mode, r.as_mut()).unwrap();
    (loss, cache.activation_pattern())
}

/// Full-model check: for every parameter tensor, random coordinates of
/// random instances (model init, document, embeddings and dropout masks)
/// from a seeded pool are drawn until [`DRAWS_PER_TENSOR`] have been
/// compared. Draws landing on a kink are redrawn, up to ten times the
/// target.
pub fn check_full_model(num_classes: usize, dropout: bool, seed: u64) -> Vec<Outcome> {
    const POOL: usize = 8;
    const VOCAB: usize = 9;
    let mut r = rng::seeded(seed, 100 + num_classes as u64, u64::from(dropout));
    let pool: Vec<Instance> = (0..POOL)
        .map(|j| {
            let model = HiCnnLstmModel::new(desk_config(num_classes, seed ^ j as u64)).unwrap();
            let lookup = random_lookup(VOCAB, 4, &mut r);
            let doc = random_document(VOCAB, num_classes, &mut r);
            let dropout_seed = dropout.then(|| r.gen());
            let mut grads = ModelGrads::zeros(&model);
            let mut dr = dropout_seed.map(|s| rng::seeded(s, 0, 0));
            model.backward_document(&doc, &lookup, dr.as_mut(), &mut grads).unwrap();
            Instance {
                model,
                lookup,
                doc,
                dropout_seed,
                grads,
            }
        })
        .collect();

    (0..PARAM_NAMES.len())
        .map(|k| {
            let mut total = Outcome::new(PARAM_NAMES[k]);
            for _ in 0..10 * DRAWS_PER_TENSOR {
                if total.checked == DRAWS_PER_TENSOR {
                    break;
                }
                let inst = &pool[r.gen_range(0..POOL)];
                let len = inst.model.tensors()[k].len();
                let coord = r.gen_range(0..len);
                let analytic = inst.grads.tensors()[k];
                let o = check_coords(
                    PARAM_NAMES[k],
                    &inst.model,
                    |m| tensor_slot(m, k),
                    analytic,
                    &[coord],
                    |m| document_loss(m, &inst.lookup, &inst.doc, inst.dropout_seed),
                );
                total.merge(&o);
            }
            total
        })
        .collect()
}
