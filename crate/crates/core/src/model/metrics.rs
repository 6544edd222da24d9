//! Force-prediction error metrics.
//!
//! All reported values are in newtons: predictions come out of the network
//! as force over density and are scaled back by each sample's water
//! density before comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::NormStats;
use crate::defaults::{SMAPE_FLOOR, VAL_BATCH_SIZE};
use crate::model::data::{gather_batch, ModelInputs};
use crate::model::Mlp;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ComponentMetrics {
    pub mae: [f64; 3],
    pub rmse: [f64; 3],
    pub smape: [f64; 3],
    pub rel_mae: [f64; 3],
}

#[derive(Debug, Clone, Default)]
struct Accumulator {
    abs_err: [f64; 3],
    sq_err: [f64; 3],
    smape: [f64; 3],
    abs_truth: [f64; 3],
    n: usize,
}

impl Accumulator {
    fn push(&mut self, pred: [f64; 3], truth: [f64; 3]) {
        for c in 0..3 {
            let e = pred[c] - truth[c];
            self.abs_err[c] += e.abs();
            self.sq_err[c] += e * e;
            self.smape[c] +=
                200.0 * e.abs() / (pred[c].abs() + truth[c].abs()).max(SMAPE_FLOOR);
            self.abs_truth[c] += truth[c].abs();
        }
        self.n += 1;
    }

    fn finish(&self) -> ComponentMetrics {
        let n = self.n.max(1) as f64;
        let mut m = ComponentMetrics::default();
        for c in 0..3 {
            m.mae[c] = self.abs_err[c] / n;
            m.rmse[c] = (self.sq_err[c] / n).sqrt();
            m.smape[c] = self.smape[c] / n;
            m.rel_mae[c] = self.abs_err[c] / self.abs_truth[c].max(f64::MIN_POSITIVE);
        }
        m
    }

    fn mae(&self) -> [f64; 3] {
        let n = self.n.max(1) as f64;
        [self.abs_err[0] / n, self.abs_err[1] / n, self.abs_err[2] / n]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    /// Error of the summed force per sample.
    pub net: ComponentMetrics,
    /// Mean absolute per-surface force error, keyed by surface name.
    pub per_surface: BTreeMap<String, [f64; 3]>,
    /// Mean absolute per-surface force error, keyed by semantic type.
    pub per_category: BTreeMap<String, [f64; 3]>,
    pub n_samples: usize,
}

/// Evaluates the model over packed groups, reporting net and per-surface
/// force errors in newtons.
pub fn evaluate(model: &Mlp, groups: &[ModelInputs], stats: &NormStats) -> EvalReport {
    let mut net = Accumulator::default();
    let mut per_surface: BTreeMap<String, Accumulator> = BTreeMap::new();
    let mut per_category: BTreeMap<String, Accumulator> = BTreeMap::new();
    let mut n_samples = 0;

    for g in groups {
        n_samples += g.n;
        let ids: Vec<usize> = (0..g.n).collect();
        for chunk in ids.chunks(VAL_BATCH_SIZE) {
            let (x, _, yr, _) = gather_batch(g, chunk);
            let y = model.predict(&x);
            for (bi, &b) in chunk.iter().enumerate() {
                let rho = g.density[b];
                let mut net_pred = [0.0f64; 3];
                let mut net_truth = [0.0f64; 3];
                for s in 0..g.k {
                    let r = bi * g.k + s;
                    let mut pred = [0.0f64; 3];
                    let mut truth = [0.0f64; 3];
                    for c in 0..3 {
                        let denorm = y[[r, c]] * stats.sigma_target[c] + stats.mu_target[c];
                        pred[c] = rho * denorm;
                        truth[c] = rho * yr[[r, c]];
                        net_pred[c] += pred[c];
                        net_truth[c] += truth[c];
                    }
                    per_surface
                        .entry(g.surfaces[s].clone())
                        .or_default()
                        .push(pred, truth);
                    per_category
                        .entry(g.semantics[s].as_str().to_string())
                        .or_default()
                        .push(pred, truth);
                }
                net.push(net_pred, net_truth);
            }
        }
    }

    EvalReport {
        net: net.finish(),
        per_surface: per_surface.iter().map(|(k, a)| (k.clone(), a.mae())).collect(),
        per_category: per_category.iter().map(|(k, a)| (k.clone(), a.mae())).collect(),
        n_samples,
    }
}
