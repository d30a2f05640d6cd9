//! Multinomial Naive Bayes over bag-of-words counts, with Laplace smoothing.

use crate::error::{Error, Result};
use crate::model::Document;
use crate::tensor::{argmax, Matrix, Vector};
use crate::textprep::Vocabulary;

/// Vocabulary index of the first real token; UNK and PAD precede it.
const FIRST_TOKEN: usize = 2;

pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct NbModel {
    pub class_log_prior: Vector,
    /// `C × V` log-likelihoods; column `w` is vocabulary index `w + 2`.
    pub token_log_likelihood: Matrix,
}

impl NbModel {
    pub fn num_classes(&self) -> usize {
        self.class_log_prior.len()
    }

    /// Unnormalized log posterior per class. UNK/PAD and indices outside the
    /// fitted vocabulary carry no likelihood and are skipped.
    pub fn scores(&self, doc: &Document) -> Vector {
        let v = self.token_log_likelihood.cols();
        let mut s = self.class_log_prior.clone();
        for tok in doc.tokens() {
            if tok < FIRST_TOKEN || tok - FIRST_TOKEN >= v {
                continue;
            }
            for (c, sc) in s.iter_mut().enumerate() {
                *sc += self.token_log_likelihood[(c, tok - FIRST_TOKEN)];
            }
        }
        s
    }

    /// Highest-scoring class; ties go to the lowest index. Scores within
    /// [`TIE_TOLERANCE`] (relative) of the maximum count as ties, since
    /// equal posteriors summed in different orders can differ in the last
    /// bits.
    pub fn predict(&self, doc: &Document) -> usize {
        let s = self.scores(doc);
        let best = s[argmax(&s)];
        let slack = TIE_TOLERANCE * best.abs().max(1.0);
        s.iter().position(|&x| x >= best - slack).unwrap_or(0)
    }
}

/// `prior_c = ln(N_c / N)`,
/// `ln P(w|c) = ln((count(w,c) + α) / (Σ_w count(w,c) + α·V))`.
pub fn nb_fit(docs: &[&Document], num_classes: usize, vocab: &Vocabulary, alpha: f64) -> Result<NbModel> {
    if !(alpha > 0.0) {
        return Err(Error::Config(format!("smoothing alpha must be positive, got {alpha}")));
    }
    if docs.is_empty() {
        return Err(Error::Config("cannot fit Naive Bayes on an empty set".into()));
    }
    let v = vocab.len().saturating_sub(FIRST_TOKEN);
    if v == 0 {
        return Err(Error::Config("vocabulary has no tokens".into()));
    }
    let mut class_docs = vec![0usize; num_classes];
    let mut counts = Matrix::zeros(num_classes, v);
    for doc in docs {
        let c = doc
            .label
            .ok_or_else(|| Error::Contract("training document has no label".into()))?;
        if c >= num_classes {
            return Err(Error::Contract(format!("label {c} out of range for {num_classes} classes")));
        }
        class_docs[c] += 1;
        for tok in doc.tokens() {
            if (FIRST_TOKEN..FIRST_TOKEN + v).contains(&tok) {
                counts[(c, tok - FIRST_TOKEN)] += 1.0;
            }
        }
    }
    if let Some(missing) = class_docs.iter().position(|&n| n == 0) {
        return Err(Error::Config(format!("class {missing} has no training documents")));
    }
    let n = docs.len() as f64;
    let class_log_prior = class_docs.iter().map(|&k| (k as f64 / n).ln()).collect::<Vec<_>>().into();
    let mut token_log_likelihood = Matrix::zeros(num_classes, v);
    for c in 0..num_classes {
        let total: f64 = counts.row(c).iter().sum();
        let denom = (total + alpha * v as f64).ln();
        for w in 0..v {
            token_log_likelihood[(c, w)] = (counts[(c, w)] + alpha).ln() - denom;
        }
    }
    Ok(NbModel {
        class_log_prior,
        token_log_likelihood,
    })
}

pub fn nb_predict(model: &NbModel, doc: &Document) -> usize {
    model.predict(doc)
}
