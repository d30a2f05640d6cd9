//! Hierarchical CNN/BiLSTM sentiment classification for software-engineering
//! text, with the evaluation harness around it: seeded stratified k-fold
//! cross-validation, per-class precision/recall/F1, and bootstrap learning
//! curves.
//!
//! Every sentence is encoded by a temporal convolution with max-over-time
//! pooling and a ReLU dense layer. A bidirectional LSTM then reads the
//! sequence of sentence vectors, and its final hidden states feed a softmax
//! head. All gradients are derived by hand and run in 64-bit floating point.

pub mod baseline;
pub mod datasets;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod layers;
pub mod model;
pub mod rng;
pub mod tensor;
pub mod textprep;
pub mod train;

pub use error::{Error, Result};
