use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{sigmoid, Matrix, Vector};

use super::{glorot_uniform, DropoutMask};

/// LSTM cell. The four gate blocks of `input_weights`, `recurrent_weights`
/// and `bias` are stacked in the order input, forget, candidate, output.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmCell {
    pub input_weights: Matrix,
    pub recurrent_weights: Matrix,
    pub bias: Vector,
    pub input_dropout: f64,
    pub recurrent_dropout: f64,
}

impl LstmCell {
    pub fn new(input_dim: usize, hidden_dim: usize, dropout: f64, rng: &mut Rng) -> Self {
        let h4 = 4 * hidden_dim;
        let mut bias = Vector::zeros(h4);
        bias[hidden_dim..2 * hidden_dim].fill(1.0);
        LstmCell {
            input_weights: glorot_uniform(h4, input_dim, input_dim, h4, rng),
            recurrent_weights: glorot_uniform(h4, hidden_dim, hidden_dim, h4, rng),
            bias,
            input_dropout: dropout,
            recurrent_dropout: dropout,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_weights.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.recurrent_weights.cols()
    }

    pub fn identity_masks(&self) -> LstmMasks {
        LstmMasks {
            input: DropoutMask::identity(self.input_dim()),
            recurrent: DropoutMask::identity(self.hidden_dim()),
        }
    }

    /// Masks for one sequence; the same pair is reused at every time step.
    pub fn sample_masks(&self, rng: &mut Rng) -> LstmMasks {
        LstmMasks {
            input: DropoutMask::sample(self.input_dim(), self.input_dropout, rng),
            recurrent: DropoutMask::sample(self.hidden_dim(), self.recurrent_dropout, rng),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmMasks {
    pub input: DropoutMask,
    pub recurrent: DropoutMask,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmGrads {
    pub input_weights: Matrix,
    pub recurrent_weights: Matrix,
    pub bias: Vector,
}

impl LstmGrads {
    pub fn zeros(cell: &LstmCell) -> Self {
        LstmGrads {
            input_weights: Matrix::zeros(cell.input_weights.rows(), cell.input_weights.cols()),
            recurrent_weights: Matrix::zeros(cell.recurrent_weights.rows(), cell.recurrent_weights.cols()),
            bias: Vector::zeros(cell.bias.len()),
        }
    }
}

#[derive(Clone, Debug)]
struct StepCache {
    x_masked: Vec<f64>,
    h_prev_masked: Vec<f64>,
    c_prev: Vector,
    /// Post-activation gates, stacked i, f, g, o.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LstmTrace {
    steps: Vec<StepCache>,
    masks: LstmMasks,
    pub hidden: Vec<Vector>,
    pub cells: Vec<Vector>,
}

impl LstmTrace {
    pub fn final_hidden(&self) -> &Vector {
        self.hidden.last().expect("trace is never empty")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn step_cached(x: &[f64], h_prev: &[f64], c_prev: &[f64], cell: &LstmCell, masks: &LstmMasks) -> Result<(StepCache, Vector, Vector)> {
    let hd = cell.hidden_dim();
    if x.len() != cell.input_dim() || h_prev.len() != hd || c_prev.len() != hd {
        return Err(Error::shape(
            "lstm_step",
            format!("cell {}→{}", cell.input_dim(), hd),
            format!("x {}, h {}, c {}", x.len(), h_prev.len(), c_prev.len()),
        ));
    }
    if masks.input.len() != x.len() || masks.recurrent.len() != hd {
        return Err(Error::shape("lstm_step masks", x.len(), masks.input.len()));
    }
    let x_masked = masks.input.apply(x);
    let h_prev_masked = masks.recurrent.apply(h_prev);
    let mut z = cell.input_weights.matvec(&x_masked)?;
    let zr = cell.recurrent_weights.matvec(&h_prev_masked)?;
    z.add_scaled(&zr, 1.0);
    z.add_scaled(&cell.bias, 1.0);

    let mut gates = z.into_inner();
    for (idx, v) in gates.iter_mut().enumerate() {
        *v = if (2 * hd..3 * hd).contains(&idx) { v.tanh() } else { sigmoid(*v) };
    }
    let (i, f, g, o) = (&gates[..hd], &gates[hd..2 * hd], &gates[2 * hd..3 * hd], &gates[3 * hd..]);
    let c: Vector = (0..hd).map(|u| f[u] * c_prev[u] + i[u] * g[u]).collect::<Vec<_>>().into();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vector = (0..hd).map(|u| o[u] * tanh_c[u]).collect::<Vec<_>>().into();
    Ok((
        StepCache {
            x_masked,
            h_prev_masked,
            c_prev: c_prev.to_vec().into(),
            gates,
            tanh_c,
        },
        h,
        c,
    ))
}

/// One LSTM time step: returns `(h, c)`.
pub fn lstm_step(x: &[f64], h_prev: &[f64], c_prev: &[f64], cell: &LstmCell, masks: &LstmMasks) -> Result<(Vector, Vector)> {
    let (_, h, c) = step_cached(x, h_prev, c_prev, cell, masks)?;
    Ok((h, c))
}

/// Runs the cell over `seq` from a zero state.
pub fn lstm_sequence<V: AsRef<[f64]>>(seq: &[V], cell: &LstmCell, masks: LstmMasks) -> Result<LstmTrace> {
    if seq.is_empty() {
        return Err(Error::Contract("LSTM input sequence is empty".into()));
    }
    let hd = cell.hidden_dim();
    let mut h = Vector::zeros(hd);
    let mut c = Vector::zeros(hd);
    let mut trace = LstmTrace {
        steps: Vec::with_capacity(seq.len()),
        masks,
        hidden: Vec::with_capacity(seq.len()),
        cells: Vec::with_capacity(seq.len()),
    };
    for x in seq {
        let (cache, h_new, c_new) = step_cached(x.as_ref(), &h, &c, cell, &trace.masks)?;
        trace.steps.push(cache);
        h = h_new;
        c = c_new;
        trace.hidden.push(h.clone());
        trace.cells.push(c.clone());
    }
    Ok(trace)
}

/// Backpropagation through time from a gradient on the final hidden state.
/// Accumulates parameter gradients and returns the gradient for each input.
pub fn lstm_sequence_backward(
    grad_h_last: &[f64],
    trace: &LstmTrace,
    cell: &LstmCell,
    grads: &mut LstmGrads,
) -> Result<Vec<Vector>> {
    let hd = cell.hidden_dim();
    if grad_h_last.len() != hd || trace.masks.recurrent.len() != hd || trace.masks.input.len() != cell.input_dim() {
        return Err(Error::Contract("LSTM backward called with a trace from a different cell".into()));
    }
    let mut dh = grad_h_last.to_vec();
    let mut dc = vec![0.0; hd];
    let mut dz = vec![0.0; 4 * hd];
    let mut dxs = vec![Vector::default(); trace.steps.len()];
    for (t, step) in trace.steps.iter().enumerate().rev() {
        let g = &step.gates;
        for u in 0..hd {
            let (i, f, gg, o) = (g[u], g[hd + u], g[2 * hd + u], g[3 * hd + u]);
            let tc = step.tanh_c[u];
            let d_o = dh[u] * tc;
            let dcu = dc[u] + dh[u] * o * (1.0 - tc * tc);
            dz[u] = dcu * gg * i * (1.0 - i);
            dz[hd + u] = dcu * step.c_prev[u] * f * (1.0 - f);
            dz[2 * hd + u] = dcu * i * (1.0 - gg * gg);
            dz[3 * hd + u] = d_o * o * (1.0 - o);
            dc[u] = dcu * f;
        }
        grads.input_weights.add_outer(&dz, &step.x_masked, 1.0);
        grads.recurrent_weights.add_outer(&dz, &step.h_prev_masked, 1.0);
        grads.bias.add_scaled(&dz, 1.0);

        let mut dx = vec![0.0; cell.input_dim()];
        cell.input_weights.add_transpose_matvec(&dz, &mut dx);
        dxs[t] = Vector::new(dx).hadamard(&trace.masks.input.mask);

        let mut dhp = vec![0.0; hd];
        cell.recurrent_weights.add_transpose_matvec(&dz, &mut dhp);
        for (d, m) in dhp.iter_mut().zip(&trace.masks.recurrent.mask) {
            *d *= m;
        }
        dh = dhp;
    }
    Ok(dxs)
}

#[derive(Clone, Debug)]
pub struct BiLstmTrace {
    pub forward: LstmTrace,
    pub backward: LstmTrace,
}

/// Concatenation of the forward cell's final hidden state over `seq` and the
/// backward cell's final hidden state over `seq` reversed.
pub fn bilstm_encode<V: AsRef<[f64]>>(
    seq: &[V],
    fwd: &LstmCell,
    bwd: &LstmCell,
    fwd_masks: LstmMasks,
    bwd_masks: LstmMasks,
) -> Result<(Vector, BiLstmTrace)> {
    if seq.is_empty() {
        return Err(Error::Contract("BiLSTM input sequence is empty".into()));
    }
    let forward = lstm_sequence(seq, fwd, fwd_masks)?;
    let reversed: Vec<&[f64]> = seq.iter().rev().map(AsRef::as_ref).collect();
    let backward = lstm_sequence(&reversed, bwd, bwd_masks)?;
    let mut out = forward.final_hidden().to_vec();
    out.extend_from_slice(backward.final_hidden());
    Ok((out.into(), BiLstmTrace { forward, backward }))
}

/// Returns input gradients in the original sequence order.
pub fn bilstm_backward(
    grad: &[f64],
    trace: &BiLstmTrace,
    fwd: &LstmCell,
    bwd: &LstmCell,
    fwd_grads: &mut LstmGrads,
    bwd_grads: &mut LstmGrads,
) -> Result<Vec<Vector>> {
    let hf = fwd.hidden_dim();
    if grad.len() != hf + bwd.hidden_dim() {
        return Err(Error::shape("bilstm_backward", hf + bwd.hidden_dim(), grad.len()));
    }
    let mut dx = lstm_sequence_backward(&grad[..hf], &trace.forward, fwd, fwd_grads)?;
    let dx_rev = lstm_sequence_backward(&grad[hf..], &trace.backward, bwd, bwd_grads)?;
    for (d, r) in dx.iter_mut().zip(dx_rev.iter().rev()) {
        d.add_scaled(r, 1.0);
    }
    Ok(dx)
}
