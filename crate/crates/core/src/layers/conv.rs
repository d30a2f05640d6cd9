use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{axpy, dot, Matrix, Vector};

use super::glorot_uniform;

/// Temporal convolution over word windows followed by max-over-time
/// pooling. Filter `j` is row `j` of `filters`, laid out as the `f` word
/// vectors of a window concatenated (row-major flatten of an `f × k` block).
#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub filter_width: usize,
    pub embed_dim: usize,
    pub filters: Matrix,
    pub bias: Vector,
}

impl ConvLayer {
    pub fn new(filter_width: usize, num_filters: usize, embed_dim: usize, rng: &mut Rng) -> Self {
        let fan_in = filter_width * embed_dim;
        let fan_out = filter_width * num_filters;
        ConvLayer {
            filter_width,
            embed_dim,
            filters: glorot_uniform(num_filters, fan_in, fan_in, fan_out, rng),
            bias: Vector::zeros(num_filters),
        }
    }

    pub fn num_filters(&self) -> usize {
        self.filters.rows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvGrads {
    pub filters: Matrix,
    pub bias: Vector,
}

impl ConvGrads {
    pub fn zeros(layer: &ConvLayer) -> Self {
        ConvGrads {
            filters: Matrix::zeros(layer.filters.rows(), layer.filters.cols()),
            bias: Vector::zeros(layer.bias.len()),
        }
    }
}

/// Forward state kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ConvCache {
    pub input: Matrix,
    pub features: Vector,
    /// Window start chosen by the max-pool for each filter.
    pub argmax: Vec<usize>,
    /// Pre-activation at the chosen window.
    pub pooled_preact: Vec<f64>,
}

/// Stacks the word vectors of a sentence into an `n × k` matrix, padding
/// with zero rows up to `min_rows`. `lookup` holds one row per vocabulary
/// index.
pub fn sentence_matrix(tokens: &[usize], lookup: &Matrix, min_rows: usize) -> Matrix {
    let k = lookup.cols();
    let rows = tokens.len().max(min_rows);
    let mut s = Matrix::zeros(rows, k);
    for (r, &t) in tokens.iter().enumerate() {
        if t < lookup.rows() {
            s.row_mut(r).copy_from_slice(lookup.row(t));
        }
    }
    s
}

pub fn conv_maxpool_forward(s: Matrix, layer: &ConvLayer) -> Result<ConvCache> {
    let f = layer.filter_width;
    if s.cols() != layer.embed_dim {
        return Err(Error::shape("conv_maxpool_forward", s.cols(), layer.embed_dim));
    }
    if s.rows() < f {
        return Err(Error::Contract(format!(
            "sentence matrix has {} rows, fewer than filter width {f}",
            s.rows()
        )));
    }
    let nf = layer.num_filters();
    let positions = s.rows() - f + 1;
    let mut features = Vector::zeros(nf);
    let mut argmax = vec![0usize; nf];
    let mut pooled_preact = vec![0.0; nf];
    for j in 0..nf {
        let filter = layer.filters.row(j);
        let b = layer.bias[j];
        let mut best = f64::NEG_INFINITY;
        for p in 0..positions {
            let pre = dot(filter, s.row_block(p, f)) + b;
            let act = pre.max(0.0);
            // Strict comparison keeps the earliest window on ties.
            if act > best {
                best = act;
                argmax[j] = p;
                pooled_preact[j] = pre;
            }
        }
        features[j] = best;
    }
    Ok(ConvCache {
        input: s,
        features,
        argmax,
        pooled_preact,
    })
}

/// Routes the pooled gradient through each filter's argmax window. Adds the
/// parameter gradients into `grads`; returns the gradient with respect to
/// the sentence matrix when `want_input_grad` is set.
pub fn conv_maxpool_backward(
    grad_features: &[f64],
    cache: &ConvCache,
    layer: &ConvLayer,
    grads: &mut ConvGrads,
    want_input_grad: bool,
) -> Result<Option<Matrix>> {
    let nf = layer.num_filters();
    if grad_features.len() != nf || cache.argmax.len() != nf || cache.input.cols() != layer.embed_dim {
        return Err(Error::Contract("conv backward called with a cache from a different layer".into()));
    }
    let f = layer.filter_width;
    let mut grad_s = want_input_grad.then(|| Matrix::zeros(cache.input.rows(), cache.input.cols()));
    for j in 0..nf {
        let g = if cache.pooled_preact[j] > 0.0 { grad_features[j] } else { 0.0 };
        if g == 0.0 {
            continue;
        }
        let p = cache.argmax[j];
        axpy(grads.filters.row_mut(j), cache.input.row_block(p, f), g);
        grads.bias[j] += g;
        if let Some(gs) = grad_s.as_mut() {
            axpy(gs.row_block_mut(p, f), layer.filters.row(j), g);
        }
    }
    Ok(grad_s)
}
