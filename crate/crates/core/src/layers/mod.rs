//! Network building blocks, each with a forward pass that records what the
//! backward pass needs and a hand-derived backward pass.

mod conv;
mod dense;
mod dropout;
mod head;
mod lstm;

pub use conv::{conv_maxpool_backward, conv_maxpool_forward, sentence_matrix, ConvCache, ConvGrads, ConvLayer};
pub use dense::{dense_relu_backward, dense_relu_forward, DenseCache, DenseGrads, DenseLayer};
pub use dropout::DropoutMask;
pub use head::{softmax_xent, HeadGrads, SoftmaxHead, XentOutput};
pub use lstm::{
    bilstm_backward, bilstm_encode, lstm_sequence, lstm_sequence_backward, lstm_step, BiLstmTrace,
    LstmCell, LstmGrads, LstmMasks, LstmTrace,
};

use rand::Rng as _;

use crate::rng::Rng;
use crate::tensor::Matrix;

/// Glorot/Xavier uniform: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
pub(crate) fn glorot_uniform(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut Rng) -> Matrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..=limit)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized by construction")
}
