use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{relu_grad, Matrix, Vector};

use super::{glorot_uniform, DropoutMask};

/// Fully connected ReLU layer with dropout on its input.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vector,
    pub dropout_rate: f64,
}

impl DenseLayer {
    pub fn new(input_dim: usize, output_dim: usize, dropout_rate: f64, rng: &mut Rng) -> Self {
        DenseLayer {
            weights: glorot_uniform(output_dim, input_dim, input_dim, output_dim, rng),
            bias: Vector::zeros(output_dim),
            dropout_rate,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrads {
    pub weights: Matrix,
    pub bias: Vector,
}

impl DenseGrads {
    pub fn zeros(layer: &DenseLayer) -> Self {
        DenseGrads {
            weights: Matrix::zeros(layer.weights.rows(), layer.weights.cols()),
            bias: Vector::zeros(layer.bias.len()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DenseCache {
    pub masked_input: Vec<f64>,
    pub preact: Vector,
    pub mask: DropoutMask,
    pub output: Vector,
}

/// `relu(W · (x ⊙ mask) + b)`
pub fn dense_relu_forward(x: &[f64], layer: &DenseLayer, mask: DropoutMask) -> Result<DenseCache> {
    if x.len() != layer.input_dim() || mask.len() != x.len() {
        return Err(Error::shape("dense_relu_forward", layer.weights.to_string(), x.len()));
    }
    let masked_input = mask.apply(x);
    let mut preact = layer.weights.matvec(&masked_input)?;
    preact.add_scaled(&layer.bias, 1.0);
    let output = preact.iter().map(|&z| z.max(0.0)).collect::<Vec<_>>().into();
    Ok(DenseCache {
        masked_input,
        preact,
        mask,
        output,
    })
}

pub fn dense_relu_backward(
    grad_out: &[f64],
    cache: &DenseCache,
    layer: &DenseLayer,
    grads: &mut DenseGrads,
) -> Result<Vector> {
    if grad_out.len() != layer.output_dim() || cache.masked_input.len() != layer.input_dim() {
        return Err(Error::Contract("dense backward called with a cache from a different layer".into()));
    }
    let gpre: Vec<f64> = grad_out
        .iter()
        .zip(cache.preact.iter())
        .map(|(g, &z)| g * relu_grad(z))
        .collect();
    grads.weights.add_outer(&gpre, &cache.masked_input, 1.0);
    grads.bias.add_scaled(&gpre, 1.0);
    let mut gx = vec![0.0; layer.input_dim()];
    layer.weights.add_transpose_matvec(&gpre, &mut gx);
    Ok(Vector::new(gx).hadamard(&cache.mask.mask))
}
