use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{softmax, Matrix, Vector};

use super::glorot_uniform;

#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxHead {
    pub weights: Matrix,
    pub bias: Vector,
}

impl SoftmaxHead {
    pub fn new(input_dim: usize, num_classes: usize, rng: &mut Rng) -> Self {
        SoftmaxHead {
            weights: glorot_uniform(num_classes, input_dim, input_dim, num_classes, rng),
            bias: Vector::zeros(num_classes),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.weights.rows()
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vector> {
        let mut z = self.weights.matvec(x)?;
        z.add_scaled(&self.bias, 1.0);
        Ok(z)
    }

    pub fn probs(&self, x: &[f64]) -> Result<Vector> {
        softmax(&self.logits(x)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadGrads {
    pub weights: Matrix,
    pub bias: Vector,
}

impl HeadGrads {
    pub fn zeros(head: &SoftmaxHead) -> Self {
        HeadGrads {
            weights: Matrix::zeros(head.weights.rows(), head.weights.cols()),
            bias: Vector::zeros(head.bias.len()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct XentOutput {
    pub loss: f64,
    pub probs: Vector,
    /// `probs - onehot(gold)`
    pub grad_logits: Vector,
    pub grad_input: Vector,
}

/// Softmax cross-entropy on `W·x + b`. Parameter gradients are added into
/// `grads`.
pub fn softmax_xent(x: &[f64], head: &SoftmaxHead, gold: usize, grads: &mut HeadGrads) -> Result<XentOutput> {
    let c = head.num_classes();
    if gold >= c {
        return Err(Error::Contract(format!("gold class {gold} out of range for {c} classes")));
    }
    let probs = head.probs(x)?;
    // ln p_gold computed from logits avoids ln(0) when p underflows.
    let logits = head.logits(x)?;
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    let loss = lse - logits[gold];

    let mut grad_logits = probs.clone();
    grad_logits[gold] -= 1.0;
    grads.weights.add_outer(&grad_logits, x, 1.0);
    grads.bias.add_scaled(&grad_logits, 1.0);
    let mut gx = vec![0.0; x.len()];
    head.weights.add_transpose_matvec(&grad_logits, &mut gx);
    Ok(XentOutput {
        loss,
        probs,
        grad_logits,
        grad_input: gx.into(),
    })
}
