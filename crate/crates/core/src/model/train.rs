//! Adam training loop with plateau scheduling and best-weight retention.
//!
//! Batches are drawn from one vehicle group at a time so surface counts
//! stay uniform within a batch. Epoch shuffles come from a per-epoch seed
//! substream, making runs bit-reproducible for a given master seed.

use ndarray::Array;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::NormStats;
use crate::defaults::{
    ADAM_BETA1, ADAM_BETA2, ADAM_EPS, BATCH_SIZE, EPOCHS, LEARNING_RATE, SCHED_FACTOR,
    SCHED_MIN_DELTA, SCHED_PATIENCE, SMAPE_FLOOR, VAL_BATCH_SIZE,
};
use crate::error::{Error, Result};
use crate::model::data::{gather_batch, ModelInputs};
use crate::model::loss::{loss_and_grad, LossParams, LossTerms};
use crate::model::{Grads, Mlp};
use crate::seeding;

const TAG_EPOCH: u64 = 12;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub loss: LossParams,
    pub sched_factor: f64,
    pub sched_patience: usize,
    pub sched_min_delta: f64,
    /// Stop once the validation net streamwise-force sMAPE (percent) drops
    /// to this value; the weights from the stopping epoch are kept.
    pub early_stop_smape: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: EPOCHS,
            batch_size: BATCH_SIZE,
            lr: LEARNING_RATE,
            seed: 0,
            loss: LossParams::default(),
            sched_factor: SCHED_FACTOR,
            sched_patience: SCHED_PATIENCE,
            sched_min_delta: SCHED_MIN_DELTA,
            early_stop_smape: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub train: f64,
    pub val: f64,
    pub val_net_fx_smape: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub history: Vec<EpochStats>,
    pub best_val_loss: f64,
    pub epochs_run: usize,
    pub final_lr: f64,
    pub stopped_early: bool,
}

pub fn history_to_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,lr,train_loss,val_loss,val_net_fx_smape\n");
    for e in history {
        out.push_str(&format!(
            "{},{:?},{:?},{:?},{:?}\n",
            e.epoch, e.lr, e.train, e.val, e.val_net_fx_smape
        ));
    }
    out
}

pub struct Adam {
    lr: f64,
    t: u64,
    m: Grads,
    v: Grads,
}

fn zeros_like(model: &Mlp) -> Grads {
    Grads {
        w1: Array::zeros(model.w1.raw_dim()),
        b1: Array::zeros(model.b1.raw_dim()),
        w2: Array::zeros(model.w2.raw_dim()),
        b2: Array::zeros(model.b2.raw_dim()),
        w3: Array::zeros(model.w3.raw_dim()),
        b3: Array::zeros(model.b3.raw_dim()),
    }
}

fn adam_update<D: ndarray::Dimension>(
    p: &mut Array<f64, D>,
    m: &mut Array<f64, D>,
    v: &mut Array<f64, D>,
    g: &Array<f64, D>,
    lr: f64,
    bc1: f64,
    bc2: f64,
) {
    ndarray::Zip::from(p)
        .and(m)
        .and(v)
        .and(g)
        .for_each(|p, m, v, &g| {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
        });
}

impl Adam {
    pub fn new(model: &Mlp, lr: f64) -> Adam {
        Adam {
            lr,
            t: 0,
            m: zeros_like(model),
            v: zeros_like(model),
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn step(&mut self, model: &mut Mlp, g: &Grads) {
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        adam_update(&mut model.w1, &mut self.m.w1, &mut self.v.w1, &g.w1, self.lr, bc1, bc2);
        adam_update(&mut model.b1, &mut self.m.b1, &mut self.v.b1, &g.b1, self.lr, bc1, bc2);
        adam_update(&mut model.w2, &mut self.m.w2, &mut self.v.w2, &g.w2, self.lr, bc1, bc2);
        adam_update(&mut model.b2, &mut self.m.b2, &mut self.v.b2, &g.b2, self.lr, bc1, bc2);
        adam_update(&mut model.w3, &mut self.m.w3, &mut self.v.w3, &g.w3, self.lr, bc1, bc2);
        adam_update(&mut model.b3, &mut self.m.b3, &mut self.v.b3, &g.b3, self.lr, bc1, bc2);
    }
}

#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    pub lr: f64,
    factor: f64,
    patience: usize,
    min_delta: f64,
    best: f64,
    since: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, factor: f64, patience: usize, min_delta: f64) -> PlateauScheduler {
        PlateauScheduler {
            lr,
            factor,
            patience,
            min_delta,
            best: f64::INFINITY,
            since: 0,
        }
    }

    /// Feeds one validation loss; returns true when the rate just decayed.
    pub fn observe(&mut self, val: f64) -> bool {
        if val < self.best - self.min_delta {
            self.best = val;
            self.since = 0;
            return false;
        }
        self.since += 1;
        if self.since >= self.patience {
            self.lr *= self.factor;
            self.since = 0;
            true
        } else {
            false
        }
    }
}

/// Evaluates loss terms and the net streamwise-force sMAPE over groups,
/// chunked so memory stays bounded. Chunked sums aggregate exactly.
fn validate(
    model: &Mlp,
    groups: &[ModelInputs],
    stats: &NormStats,
    params: &LossParams,
) -> (LossTerms, f64) {
    let mut terms = LossTerms::default();
    let mut smape_sum = 0.0;
    let mut smape_n = 0usize;
    for g in groups {
        let ids: Vec<usize> = (0..g.n).collect();
        for chunk in ids.chunks(VAL_BATCH_SIZE) {
            let (x, yn, yr, dry) = gather_batch(g, chunk);
            let y = model.predict(&x);
            let (t, _) = loss_and_grad(&y, &yn, &yr, &dry, g.k, stats, params);
            terms.accumulate(&t);
            for (bi, &b) in chunk.iter().enumerate() {
                let mut pred = 0.0;
                let mut truth = 0.0;
                for s in 0..g.k {
                    let r = bi * g.k + s;
                    pred += y[[r, 0]] * stats.sigma_target[0] + stats.mu_target[0];
                    truth += yr[[r, 0]];
                }
                let rho = g.density[b];
                let (pf, tf) = (rho * pred, rho * truth);
                smape_sum += 200.0 * (pf - tf).abs() / (pf.abs() + tf.abs()).max(SMAPE_FLOOR);
                smape_n += 1;
            }
        }
    }
    (terms, smape_sum / smape_n.max(1) as f64)
}

pub fn train(
    model: &mut Mlp,
    train_groups: &[ModelInputs],
    val_groups: &[ModelInputs],
    stats: &NormStats,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    if train_groups.iter().map(|g| g.n).sum::<usize>() == 0 {
        return Err(Error::Data("training set is empty".into()));
    }
    if val_groups.iter().map(|g| g.n).sum::<usize>() == 0 {
        return Err(Error::Data("validation set is empty".into()));
    }

    let mut opt = Adam::new(model, cfg.lr);
    let mut sched = PlateauScheduler::new(cfg.lr, cfg.sched_factor, cfg.sched_patience, cfg.sched_min_delta);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best_val = f64::INFINITY;
    let mut best_weights: Option<Mlp> = None;
    let mut stopped_early = false;
    let mut epochs_run = 0;

    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(seeding::substream(
            cfg.seed,
            &[TAG_EPOCH, epoch as u64],
        ));
        let mut batches: Vec<(usize, Vec<usize>)> = Vec::new();
        for (gi, g) in train_groups.iter().enumerate() {
            let mut order: Vec<usize> = (0..g.n).collect();
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.batch_size) {
                batches.push((gi, chunk.to_vec()));
            }
        }
        batches.shuffle(&mut rng);

        let mut train_terms = LossTerms::default();
        for (batch, (gi, ids)) in batches.iter().enumerate() {
            let g = &train_groups[*gi];
            let (x, yn, yr, dry) = gather_batch(g, ids);
            let fwd = model.forward(&x);
            let (t, dy) = loss_and_grad(&fwd.y, &yn, &yr, &dry, g.k, stats, &cfg.loss);
            if !t.total(&cfg.loss).is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
            train_terms.accumulate(&t);
            let grads = model.backward(&x, &fwd, &dy);
            opt.step(model, &grads);
        }

        let (val_terms, val_smape) = validate(model, val_groups, stats, &cfg.loss);
        let val_total = val_terms.total(&cfg.loss);
        if !val_total.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: usize::MAX });
        }
        history.push(EpochStats {
            epoch,
            lr: opt.lr(),
            train: train_terms.total(&cfg.loss),
            val: val_total,
            val_net_fx_smape: val_smape,
        });
        epochs_run = epoch + 1;

        if val_total < best_val {
            best_val = val_total;
            best_weights = Some(model.clone());
        }
        if sched.observe(val_total) {
            opt.set_lr(sched.lr);
        }
        if let Some(threshold) = cfg.early_stop_smape {
            if val_smape <= threshold {
                stopped_early = true;
                break;
            }
        }
    }

    if !stopped_early {
        if let Some(bw) = best_weights {
            *model = bw;
        }
    }

    Ok(TrainReport {
        history,
        best_val_loss: best_val,
        epochs_run,
        final_lr: opt.lr(),
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{assemble_dataset, split_by_case, CampaignSpec};
    use crate::defaults::{RANGES_MINI_HUSKY, SECTION_COUNT, TRANSIENT_CUTOFF};
    use crate::geometry::toys;
    use crate::model::data::{build_inputs, fit_stats_for, Variant};
    use crate::prepare::prepare_vehicle;
    use approx::assert_relative_eq;

    #[test]
    fn adam_constant_gradient_steps_by_learning_rate() {
        let mut m = Mlp::init(1, 1, 2, 0);
        let w0 = m.w1.clone();
        let mut opt = Adam::new(&m, 1e-3);
        let ones = Grads {
            w1: Array::ones(m.w1.raw_dim()),
            b1: Array::ones(m.b1.raw_dim()),
            w2: Array::ones(m.w2.raw_dim()),
            b2: Array::ones(m.b2.raw_dim()),
            w3: Array::ones(m.w3.raw_dim()),
            b3: Array::ones(m.b3.raw_dim()),
        };
        opt.step(&mut m, &ones);
        opt.step(&mut m, &ones);
        // Bias-corrected moments of a constant unit gradient give a step of
        // lr / (1 + eps) every iteration.
        let expect = 2.0 * 1e-3 / (1.0 + ADAM_EPS);
        for (a, b) in m.w1.iter().zip(w0.iter()) {
            assert_relative_eq!(b - a, expect, epsilon = 1e-12);
        }
        assert_relative_eq!(m.b3[0], -expect, epsilon = 1e-12);
    }

    #[test]
    fn scheduler_decays_after_patience_and_resets_on_improvement() {
        let mut s = PlateauScheduler::new(1.0, 0.5, 3, 1e-8);
        assert!(!s.observe(1.0));
        assert!(!s.observe(1.0));
        assert!(!s.observe(1.0 - 1e-9));
        assert!(s.observe(1.0));
        assert_relative_eq!(s.lr, 0.5);
        assert!(!s.observe(0.5));
        assert!(!s.observe(0.6));
        assert!(!s.observe(0.6));
        assert!(s.observe(0.6));
        assert_relative_eq!(s.lr, 0.25);
    }

    fn packed_husky(seed: u64) -> (Vec<ModelInputs>, Vec<ModelInputs>, NormStats) {
        let v = toys::mini_husky();
        let prep = prepare_vehicle(&v.mesh, &v.labels, &v.spec, 512, 11).unwrap();
        let mut spec = CampaignSpec::standard(RANGES_MINI_HUSKY, seed);
        spec.cases = 5;
        let records = crate::dataset::generate_campaign(&prep, &spec);
        let samples = assemble_dataset(&prep, records, TRANSIENT_CUTOFF, SECTION_COUNT, false).unwrap();
        let (tr, va) = split_by_case(&samples, 0.8, seed).unwrap();
        let stats = fit_stats_for(&samples, Variant::Full).unwrap();
        let train_g = build_inputs(&samples, &tr, &stats, Variant::Full).unwrap();
        let val_g = build_inputs(&samples, &va, &stats, Variant::Full).unwrap();
        (train_g, val_g, stats)
    }

    #[test]
    fn training_reduces_loss_and_reruns_bit_identically() {
        let (tr, va, stats) = packed_husky(17);
        let cfg = TrainConfig {
            epochs: 25,
            batch_size: 8,
            seed: 3,
            ..TrainConfig::default()
        };
        let dim = Variant::Full;
        let mut m1 = Mlp::init(dim.surface_dim(), dim.global_dim(), 16, 3);
        let r1 = train(&mut m1, &tr, &va, &stats, &cfg).unwrap();
        let mut m2 = Mlp::init(dim.surface_dim(), dim.global_dim(), 16, 3);
        let r2 = train(&mut m2, &tr, &va, &stats, &cfg).unwrap();

        assert!(r1.history.last().unwrap().train < r1.history[0].train);
        let min_val = r1.history.iter().map(|e| e.val).fold(f64::INFINITY, f64::min);
        assert_eq!(r1.best_val_loss, min_val);
        // The returned weights are the best-validation snapshot.
        let (terms, _) = validate(&m1, &va, &stats, &cfg.loss);
        assert_eq!(terms.total(&cfg.loss), r1.best_val_loss);
        assert_eq!(r1.epochs_run, 25);
        assert!(!r1.stopped_early);
        assert_eq!(m1, m2);
        let h1: Vec<(f64, f64)> = r1.history.iter().map(|e| (e.train, e.val)).collect();
        let h2: Vec<(f64, f64)> = r2.history.iter().map(|e| (e.train, e.val)).collect();
        assert_eq!(h1, h2);
        assert_relative_eq!(r1.best_val_loss, r2.best_val_loss, epsilon = 0.0);
    }

    #[test]
    fn non_finite_targets_abort_with_location() {
        let (mut tr, va, stats) = packed_husky(19);
        tr[0].y_norm[[0, 0]] = f64::NAN;
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: usize::MAX,
            seed: 1,
            ..TrainConfig::default()
        };
        let mut m = Mlp::init(15, 12, 8, 5);
        match train(&mut m, &tr, &va, &stats, &cfg) {
            Err(Error::NonFiniteLoss { epoch: 0, .. }) => {}
            other => panic!("expected non-finite loss abort, got {other:?}"),
        }
    }

    #[test]
    fn smape_threshold_stops_early() {
        let (tr, va, stats) = packed_husky(23);
        let cfg = TrainConfig {
            epochs: 50,
            batch_size: 8,
            seed: 7,
            early_stop_smape: Some(1e9),
            ..TrainConfig::default()
        };
        let mut m = Mlp::init(15, 12, 8, 9);
        let r = train(&mut m, &tr, &va, &stats, &cfg).unwrap();
        assert!(r.stopped_early);
        assert_eq!(r.epochs_run, 1);
        assert_eq!(r.history.len(), 1);
    }

    #[test]
    fn history_csv_has_header_and_rows() {
        let history = vec![EpochStats {
            epoch: 0,
            lr: 1e-3,
            train: 2.5,
            val: 3.0,
            val_net_fx_smape: 40.0,
        }];
        let csv = history_to_csv(&history);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "epoch,lr,train_loss,val_loss,val_net_fx_smape"
        );
        assert_eq!(lines.next().unwrap(), "0,0.001,2.5,3.0,40.0");
    }
}
