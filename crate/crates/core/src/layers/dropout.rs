use rand::Rng as _;

use crate::rng::Rng;

/// Inverted-dropout mask: kept units are scaled by `1 / keep_prob`, so the
/// inference mask is all ones.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMask {
    pub keep_prob: f64,
    pub mask: Vec<f64>,
}

impl DropoutMask {
    pub fn identity(len: usize) -> Self {
        DropoutMask {
            keep_prob: 1.0,
            mask: vec![1.0; len],
        }
    }

    /// Draws a training mask for the given drop rate. A rate of 0 yields the
    /// identity mask without consuming randomness.
    pub fn sample(len: usize, rate: f64, rng: &mut Rng) -> Self {
        debug_assert!((0.0..1.0).contains(&rate));
        if rate == 0.0 {
            return Self::identity(len);
        }
        let keep_prob = 1.0 - rate;
        let scale = 1.0 / keep_prob;
        DropoutMask {
            keep_prob,
            mask: (0..len)
                .map(|_| if rng.gen::<f64>() < keep_prob { scale } else { 0.0 })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.mask.len());
        x.iter().zip(&self.mask).map(|(a, m)| a * m).collect()
    }
}
