//! Per-layer finite-difference suites, each merged over a pool of seeded
//! instances.

#![allow(dead_code)]

use std::collections::BTreeMap;

use hisent_core::layers::{
    bilstm_backward, bilstm_encode, conv_maxpool_backward, conv_maxpool_forward, dense_relu_backward,
    dense_relu_forward, lstm_sequence, lstm_sequence_backward, softmax_xent, ConvGrads, ConvLayer, DenseGrads,
    DenseLayer, DropoutMask, HeadGrads, LstmCell, LstmGrads, SoftmaxHead,
};
use hisent_core::rng::{self, Rng};
use hisent_core::tensor::{dot, Matrix, Vector};
use rand::Rng as _;

use super::gradcheck::{check_coords, random_matrix, Outcome};

pub const INSTANCES: u64 = 50;

fn all(len: usize) -> Vec<usize> {
    (0..len).collect()
}

fn random_vec(n: usize, r: &mut Rng) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// Runs `instances` over [`INSTANCES`] seeds and merges outcomes per tensor.
fn run(instances: impl Fn(u64) -> Vec<Outcome>) -> Vec<Outcome> {
    let mut merged: BTreeMap<String, Outcome> = BTreeMap::new();
    for seed in 0..INSTANCES {
        for o in instances(seed) {
            merged
                .entry(o.name.clone())
                .or_insert_with(|| Outcome::new(&o.name))
                .merge(&o);
        }
    }
    merged.into_values().collect()
}

pub fn conv_maxpool() -> Vec<Outcome> {
    run(|seed| {
        let mut r = rng::seeded(seed, 1, 0);
        let mut layer = ConvLayer::new(2, 3, 4, &mut r);
        layer.bias = random_vec(3, &mut r).into();
        let input = random_matrix(5, 4, 1.0, &mut r);
        let w = random_vec(3, &mut r);
        let loss = |(l, s): &(ConvLayer, Matrix)| {
            let c = conv_maxpool_forward(s.clone(), l).unwrap();
            let pattern = c
                .argmax
                .iter()
                .chain(c.pooled_preact.iter().map(|&z| &[0usize, 1][usize::from(z > 0.0)]))
                .copied()
                .collect();
            (dot(&w, &c.features), pattern)
        };
        let cache = conv_maxpool_forward(input.clone(), &layer).unwrap();
        let mut grads = ConvGrads::zeros(&layer);
        let d_input = conv_maxpool_backward(&w, &cache, &layer, &mut grads, true)
            .unwrap()
            .unwrap();
        let base = (layer, input);
        vec![
            check_coords(
                "conv.filters",
                &base,
                |b| b.0.filters.as_mut_slice(),
                grads.filters.as_slice(),
                &all(24),
                loss,
            ),
            check_coords("conv.bias", &base, |b| &mut b.0.bias[..], &grads.bias, &all(3), loss),
            check_coords(
                "conv.input",
                &base,
                |b| b.1.as_mut_slice(),
                d_input.as_slice(),
                &all(20),
                loss,
            ),
        ]
    })
}

pub fn dense_relu(rate: f64) -> Vec<Outcome> {
    run(|seed| {
        let mut r = rng::seeded(seed, 2, 0);
        let mut layer = DenseLayer::new(3, 3, rate, &mut r);
        layer.bias = random_vec(3, &mut r).into();
        let x = random_vec(3, &mut r);
        let mask = DropoutMask::sample(3, rate, &mut r);
        let w = random_vec(3, &mut r);
        let loss = |(l, x): &(DenseLayer, Vec<f64>)| {
            let c = dense_relu_forward(x, l, mask.clone()).unwrap();
            (
                dot(&w, &c.output),
                c.preact.iter().map(|&z| usize::from(z > 0.0)).collect(),
            )
        };
        let cache = dense_relu_forward(&x, &layer, mask.clone()).unwrap();
        let mut grads = DenseGrads::zeros(&layer);
        let dx = dense_relu_backward(&w, &cache, &layer, &mut grads).unwrap();
        let base = (layer, x);
        vec![
            check_coords(
                "dense.weights",
                &base,
                |b| b.0.weights.as_mut_slice(),
                grads.weights.as_slice(),
                &all(9),
                loss,
            ),
            check_coords("dense.bias", &base, |b| &mut b.0.bias[..], &grads.bias, &all(3), loss),
            check_coords("dense.input", &base, |b| &mut b.1[..], &dx, &all(3), loss),
        ]
    })
}

fn cell(r: &mut Rng, dropout: f64) -> LstmCell {
    let mut c = LstmCell::new(3, 2, dropout, r);
    c.bias = random_vec(8, r).into();
    c
}

pub fn lstm_bptt(dropout: f64) -> Vec<Outcome> {
    run(|seed| {
        let mut r = rng::seeded(seed, 3, 0);
        let c = cell(&mut r, dropout);
        let masks = c.sample_masks(&mut r);
        let len = r.gen_range(1..=5);
        let seq: Vec<f64> = random_vec(3 * len, &mut r);
        let w = random_vec(2, &mut r);
        let steps = |s: &[f64]| s.chunks(3).map(<[f64]>::to_vec).collect::<Vec<_>>();
        let loss = |(c, s): &(LstmCell, Vec<f64>)| {
            let t = lstm_sequence(&steps(s), c, masks.clone()).unwrap();
            (dot(&w, t.final_hidden()), Vec::new())
        };
        let trace = lstm_sequence(&steps(&seq), &c, masks.clone()).unwrap();
        let mut grads = LstmGrads::zeros(&c);
        let dx: Vec<f64> = lstm_sequence_backward(&w, &trace, &c, &mut grads)
            .unwrap()
            .into_iter()
            .flat_map(Vector::into_inner)
            .collect();
        let base = (c, seq);
        vec![
            check_coords(
                "lstm.input_weights",
                &base,
                |b| b.0.input_weights.as_mut_slice(),
                grads.input_weights.as_slice(),
                &all(24),
                loss,
            ),
            check_coords(
                "lstm.recurrent_weights",
                &base,
                |b| b.0.recurrent_weights.as_mut_slice(),
                grads.recurrent_weights.as_slice(),
                &all(16),
                loss,
            ),
            check_coords("lstm.bias", &base, |b| &mut b.0.bias[..], &grads.bias, &all(8), loss),
            check_coords("lstm.input", &base, |b| &mut b.1[..], &dx, &all(3 * len), loss),
        ]
    })
}

pub fn bilstm() -> Vec<Outcome> {
    run(|seed| {
        let mut r = rng::seeded(seed, 4, 0);
        let fwd = cell(&mut r, 0.2);
        let bwd = cell(&mut r, 0.2);
        let (fm, bm) = (fwd.sample_masks(&mut r), bwd.sample_masks(&mut r));
        let len = r.gen_range(1..=5);
        let seq = random_vec(3 * len, &mut r);
        let w = random_vec(4, &mut r);
        let steps = |s: &[f64]| s.chunks(3).map(<[f64]>::to_vec).collect::<Vec<_>>();
        let loss = |(f, b, s): &(LstmCell, LstmCell, Vec<f64>)| {
            let (h, _) = bilstm_encode(&steps(s), f, b, fm.clone(), bm.clone()).unwrap();
            (dot(&w, &h), Vec::new())
        };
        let (_, trace) = bilstm_encode(&steps(&seq), &fwd, &bwd, fm.clone(), bm.clone()).unwrap();
        let (mut gf, mut gb) = (LstmGrads::zeros(&fwd), LstmGrads::zeros(&bwd));
        let dx: Vec<f64> = bilstm_backward(&w, &trace, &fwd, &bwd, &mut gf, &mut gb)
            .unwrap()
            .into_iter()
            .flat_map(Vector::into_inner)
            .collect();
        let base = (fwd, bwd, seq);
        vec![
            check_coords(
                "bilstm.fwd.input_weights",
                &base,
                |b| b.0.input_weights.as_mut_slice(),
                gf.input_weights.as_slice(),
                &all(24),
                loss,
            ),
            check_coords(
                "bilstm.fwd.recurrent_weights",
                &base,
                |b| b.0.recurrent_weights.as_mut_slice(),
                gf.recurrent_weights.as_slice(),
                &all(16),
                loss,
            ),
            check_coords(
                "bilstm.bwd.input_weights",
                &base,
                |b| b.1.input_weights.as_mut_slice(),
                gb.input_weights.as_slice(),
                &all(24),
                loss,
            ),
            check_coords("bilstm.bwd.bias", &base, |b| &mut b.1.bias[..], &gb.bias, &all(8), loss),
            check_coords("bilstm.input", &base, |b| &mut b.2[..], &dx, &all(3 * len), loss),
        ]
    })
}

pub fn softmax_cross_entropy(classes: usize) -> Vec<Outcome> {
    run(|seed| {
        let mut r = rng::seeded(seed, 5, classes as u64);
        let mut head = SoftmaxHead::new(4, classes, &mut r);
        head.bias = random_vec(classes, &mut r).into();
        let x = random_vec(4, &mut r);
        let gold = r.gen_range(0..classes);
        let loss = |(h, x): &(SoftmaxHead, Vec<f64>)| {
            let mut sink = HeadGrads::zeros(h);
            (softmax_xent(x, h, gold, &mut sink).unwrap().loss, Vec::new())
        };
        let mut grads = HeadGrads::zeros(&head);
        let out = softmax_xent(&x, &head, gold, &mut grads).unwrap();
        let base = (head, x);
        vec![
            check_coords(
                "head.weights",
                &base,
                |b| b.0.weights.as_mut_slice(),
                grads.weights.as_slice(),
                &all(4 * classes),
                loss,
            ),
            check_coords(
                "head.bias",
                &base,
                |b| &mut b.0.bias[..],
                &grads.bias,
                &all(classes),
                loss,
            ),
            check_coords("head.input", &base, |b| &mut b.1[..], &out.grad_input, &all(4), loss),
        ]
    })
}

/// Every layer suite at the rates and class counts the model uses.
pub fn all_layers() -> Vec<(String, Vec<Outcome>)> {
    let mut v = vec![("conv+maxpool".to_owned(), conv_maxpool())];
    for rate in [0.0, 0.4] {
        v.push((format!("dense dropout={rate}"), dense_relu(rate)));
    }
    for rate in [0.0, 0.2] {
        v.push((format!("lstm dropout={rate}"), lstm_bptt(rate)));
    }
    v.push(("bilstm".to_owned(), bilstm()));
    for c in [2, 3] {
        v.push((format!("softmax C={c}"), softmax_cross_entropy(c)));
    }
    v
}
