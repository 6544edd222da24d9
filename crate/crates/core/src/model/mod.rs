//! Shared-weight per-surface force predictor.
//!
//! One network scores every surface of a vehicle: each input row is a
//! surface feature block concatenated with the normalized global condition,
//! and the output row is that surface's force over density. Training is
//! plain f64 with hand-written backprop; a cast f32 forward path exists for
//! latency-sensitive inference.

pub mod data;
mod io;
pub mod loss;
pub mod metrics;
pub mod train;

pub use data::{build_inputs, fit_stats_for, ModelInputs, ModelManifest, Variant};
pub use io::{load_model, save_model, SavedModel};
pub use loss::{loss_and_grad, LossParams, LossTerms};
pub use metrics::{evaluate, ComponentMetrics, EvalReport};
pub use train::{history_to_csv, train, Adam, PlateauScheduler, TrainConfig, TrainReport};

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::seeding;

const TAG_INIT: u64 = 11;

pub const OUTPUT_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub surface_dim: usize,
    pub global_dim: usize,
    pub hidden: usize,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array2<f64>,
    pub b3: Array1<f64>,
}

/// Activations kept for the backward pass.
pub struct Forward {
    pub h1: Array2<f64>,
    pub h2: Array2<f64>,
    pub y: Array2<f64>,
}

fn he_uniform(rows: usize, cols: usize, fan_in: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let limit = (6.0 / fan_in as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| (2.0 * rng.random::<f64>() - 1.0) * limit)
}

impl Mlp {
    pub fn input_dim(&self) -> usize {
        self.surface_dim + self.global_dim
    }

    /// Fan-in-scaled uniform init for the weights, zero biases.
    pub fn init(surface_dim: usize, global_dim: usize, hidden: usize, seed: u64) -> Mlp {
        let d = surface_dim + global_dim;
        let rng = |layer: u64| {
            ChaCha8Rng::seed_from_u64(seeding::substream(seed, &[TAG_INIT, layer]))
        };
        Mlp {
            surface_dim,
            global_dim,
            hidden,
            w1: he_uniform(d, hidden, d, &mut rng(0)),
            b1: Array1::zeros(hidden),
            w2: he_uniform(hidden, hidden, hidden, &mut rng(1)),
            b2: Array1::zeros(hidden),
            w3: he_uniform(hidden, OUTPUT_DIM, hidden, &mut rng(2)),
            b3: Array1::zeros(OUTPUT_DIM),
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Forward {
        let mut h1 = x.dot(&self.w1);
        h1 += &self.b1;
        h1.mapv_inplace(|v| v.max(0.0));
        let mut h2 = h1.dot(&self.w2);
        h2 += &self.b2;
        h2.mapv_inplace(|v| v.max(0.0));
        let mut y = h2.dot(&self.w3);
        y += &self.b3;
        Forward { h1, h2, y }
    }

    pub fn predict(&self, x: &Array2<f64>) -> Array2<f64> {
        self.forward(x).y
    }

    /// Gradients of all parameters given dL/dy from the loss.
    pub fn backward(&self, x: &Array2<f64>, fwd: &Forward, dy: &Array2<f64>) -> Grads {
        let gw3 = fwd.h2.t().dot(dy);
        let gb3 = dy.sum_axis(Axis(0));
        let mut g2 = dy.dot(&self.w3.t());
        g2.zip_mut_with(&fwd.h2, |g, &h| {
            if h <= 0.0 {
                *g = 0.0;
            }
        });
        let gw2 = fwd.h1.t().dot(&g2);
        let gb2 = g2.sum_axis(Axis(0));
        let mut g1 = g2.dot(&self.w2.t());
        g1.zip_mut_with(&fwd.h1, |g, &h| {
            if h <= 0.0 {
                *g = 0.0;
            }
        });
        let gw1 = x.t().dot(&g1);
        let gb1 = g1.sum_axis(Axis(0));
        Grads {
            w1: gw1,
            b1: gb1,
            w2: gw2,
            b2: gb2,
            w3: gw3,
            b3: gb3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Grads {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array2<f64>,
    pub b3: Array1<f64>,
}

/// Single-precision mirror of the network for fast inference.
#[derive(Debug, Clone)]
pub struct MlpF32 {
    pub w1: Array2<f32>,
    pub b1: Array1<f32>,
    pub w2: Array2<f32>,
    pub b2: Array1<f32>,
    pub w3: Array2<f32>,
    pub b3: Array1<f32>,
}

impl MlpF32 {
    pub fn from_f64(m: &Mlp) -> MlpF32 {
        MlpF32 {
            w1: m.w1.mapv(|v| v as f32),
            b1: m.b1.mapv(|v| v as f32),
            w2: m.w2.mapv(|v| v as f32),
            b2: m.b2.mapv(|v| v as f32),
            w3: m.w3.mapv(|v| v as f32),
            b3: m.b3.mapv(|v| v as f32),
        }
    }

    pub fn predict(&self, x: &Array2<f32>) -> Array2<f32> {
        let mut h1 = x.dot(&self.w1);
        h1 += &self.b1;
        h1.mapv_inplace(|v| v.max(0.0));
        let mut h2 = h1.dot(&self.w2);
        h2 += &self.b2;
        h2.mapv_inplace(|v| v.max(0.0));
        let mut y = h2.dot(&self.w3);
        y += &self.b3;
        y
    }
}
