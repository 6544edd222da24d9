//! Composite training loss.
//!
//! Three terms: a hybrid of squared and floored-relative error in
//! normalized target space, a net-force consistency penalty comparing
//! per-sample surface sums in raw target space, and a dry-surface penalty
//! on raw predictions for surfaces out of the water. Sums and counts are
//! kept separate so batch results aggregate exactly.

use ndarray::Array2;

use crate::dataset::NormStats;
use crate::defaults::{DRY_THRESHOLD, LAMBDA_NET, LAMBDA_PHYS, LOSS_ALPHA, LOSS_REL_EPS};

#[derive(Debug, Clone, Copy)]
pub struct LossParams {
    pub alpha: f64,
    pub rel_eps: f64,
    pub lambda_net: f64,
    pub lambda_phys: f64,
}

impl Default for LossParams {
    fn default() -> Self {
        LossParams {
            alpha: LOSS_ALPHA,
            rel_eps: LOSS_REL_EPS,
            lambda_net: LAMBDA_NET,
            lambda_phys: LAMBDA_PHYS,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LossTerms {
    pub hybrid_sum: f64,
    pub entries: usize,
    pub net_sum: f64,
    pub samples: usize,
    pub phys_sum: f64,
    pub dry_entries: usize,
}

impl LossTerms {
    pub fn accumulate(&mut self, o: &LossTerms) {
        self.hybrid_sum += o.hybrid_sum;
        self.entries += o.entries;
        self.net_sum += o.net_sum;
        self.samples += o.samples;
        self.phys_sum += o.phys_sum;
        self.dry_entries += o.dry_entries;
    }

    pub fn hybrid(&self) -> f64 {
        self.hybrid_sum / self.entries as f64
    }

    pub fn net(&self) -> f64 {
        self.net_sum / (3.0 * self.samples as f64)
    }

    pub fn phys(&self) -> f64 {
        if self.dry_entries == 0 {
            0.0
        } else {
            self.phys_sum / self.dry_entries as f64
        }
    }

    pub fn total(&self, p: &LossParams) -> f64 {
        self.hybrid() + p.lambda_net * self.net() + p.lambda_phys * self.phys()
    }
}

/// Loss terms and the gradient of the total loss with respect to the
/// network output. Rows are sample-major blocks of `k` surfaces.
pub fn loss_and_grad(
    yhat: &Array2<f64>,
    y_norm: &Array2<f64>,
    y_raw: &Array2<f64>,
    dry: &[bool],
    k: usize,
    stats: &NormStats,
    params: &LossParams,
) -> (LossTerms, Array2<f64>) {
    let rows = yhat.nrows();
    debug_assert_eq!(rows % k, 0);
    debug_assert_eq!(dry.len(), rows);
    let n = rows / k;
    let entries = rows * 3;
    let mut terms = LossTerms {
        entries,
        samples: n,
        ..Default::default()
    };
    let mut grad = Array2::zeros((rows, 3));

    for r in 0..rows {
        for c in 0..3 {
            let e = yhat[[r, c]] - y_norm[[r, c]];
            let den = y_norm[[r, c]].abs().max(params.rel_eps);
            terms.hybrid_sum += (1.0 - params.alpha) * e * e
                + params.alpha * (e / den) * (e / den);
            grad[[r, c]] += 2.0 / entries as f64
                * ((1.0 - params.alpha) * e + params.alpha * e / (den * den));
        }
    }

    let sigma = &stats.sigma_target;
    let mu = &stats.mu_target;
    for b in 0..n {
        let mut diff = [0.0f64; 3];
        for s in 0..k {
            let r = b * k + s;
            for c in 0..3 {
                diff[c] += yhat[[r, c]] * sigma[c] + mu[c] - y_raw[[r, c]];
            }
        }
        for c in 0..3 {
            terms.net_sum += diff[c] * diff[c];
        }
        let scale = params.lambda_net * 2.0 / (3.0 * n as f64);
        for s in 0..k {
            let r = b * k + s;
            for c in 0..3 {
                grad[[r, c]] += scale * diff[c] * sigma[c];
            }
        }
    }

    terms.dry_entries = dry.iter().filter(|&&d| d).count() * 3;
    if terms.dry_entries > 0 {
        let scale = params.lambda_phys * 2.0 / terms.dry_entries as f64;
        for (r, &is_dry) in dry.iter().enumerate() {
            if !is_dry {
                continue;
            }
            for c in 0..3 {
                let pred = yhat[[r, c]] * sigma[c] + mu[c];
                terms.phys_sum += pred * pred;
                grad[[r, c]] += scale * pred * sigma[c];
            }
        }
    }

    (terms, grad)
}

/// Row dryness from a submerged fraction.
pub fn is_dry(sub_frac: f64) -> bool {
    sub_frac < DRY_THRESHOLD
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults::SCHEMA_VERSION;
    use approx::assert_relative_eq;
    use ndarray::arr2;

    fn unit_stats() -> NormStats {
        NormStats {
            schema_version: SCHEMA_VERSION,
            mu_global: vec![0.0; 12],
            sigma_global: vec![1.0; 12],
            mu_target: [0.0; 3],
            sigma_target: [1.0; 3],
        }
    }

    #[test]
    fn hybrid_fixture_unit_error_against_zero() {
        let yhat = arr2(&[[1.0, 1.0, 1.0]]);
        let y = arr2(&[[0.0, 0.0, 0.0]]);
        let stats = unit_stats();
        let params = LossParams::default();
        let (t, _) = loss_and_grad(&yhat, &y, &y, &[false], 1, &stats, &params);
        assert_relative_eq!(t.hybrid(), 5000.5, epsilon = 1e-9);
        assert_relative_eq!(t.net(), 1.0, epsilon = 1e-12);
        assert_eq!(t.phys(), 0.0);
        assert_relative_eq!(t.total(&params), 5000.5 + 0.1, epsilon = 1e-9);

        let (t, _) = loss_and_grad(&yhat, &y, &y, &[true], 1, &stats, &params);
        assert_relative_eq!(t.phys(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(t.total(&params), 5001.1, epsilon = 1e-9);
    }

    #[test]
    fn net_term_vanishes_when_sums_match() {
        // Two surfaces whose predictions rearrange force between them but
        // keep the sample total.
        let yhat = arr2(&[[2.0, 0.5, 1.0], [0.0, 1.5, -1.0]]);
        let y_norm = arr2(&[[1.0, 1.0, 0.0], [1.0, 1.0, 0.0]]);
        let y_raw = y_norm.clone();
        let stats = unit_stats();
        let params = LossParams::default();
        let (t, _) = loss_and_grad(&yhat, &y_norm, &y_raw, &[false, false], 2, &stats, &params);
        assert_relative_eq!(t.net(), 0.0, epsilon = 1e-12);
        assert!(t.hybrid() > 0.0);
    }

    #[test]
    fn aggregation_matches_single_pass() {
        let yhat = arr2(&[[1.0, 0.1, -0.4], [0.2, 0.0, 0.7], [-0.3, 0.5, 0.9], [0.0, 0.0, 0.0]]);
        let y = arr2(&[[0.5, 0.0, -0.2], [0.1, 0.2, 0.5], [0.0, 0.4, 1.0], [0.1, -0.1, 0.0]]);
        let dry = [false, true, false, true];
        let stats = unit_stats();
        let params = LossParams::default();
        let (whole, _) = loss_and_grad(&yhat, &y, &y, &dry, 2, &stats, &params);

        let mut agg = LossTerms::default();
        for b in 0..2 {
            let rows = b * 2..(b + 1) * 2;
            let (part, _) = loss_and_grad(
                &yhat.slice(ndarray::s![rows.clone(), ..]).to_owned(),
                &y.slice(ndarray::s![rows.clone(), ..]).to_owned(),
                &y.slice(ndarray::s![rows.clone(), ..]).to_owned(),
                &dry[rows],
                2,
                &stats,
                &params,
            );
            agg.accumulate(&part);
        }
        assert_relative_eq!(agg.total(&params), whole.total(&params), epsilon = 1e-12);
        assert_eq!(agg.entries, whole.entries);
        assert_eq!(agg.dry_entries, whole.dry_entries);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let stats = NormStats {
            schema_version: SCHEMA_VERSION,
            mu_global: vec![0.0; 12],
            sigma_global: vec![1.0; 12],
            mu_target: [0.1, -0.2, 0.3],
            sigma_target: [2.0, 0.5, 1.5],
        };
        let params = LossParams::default();
        let mut yhat = arr2(&[
            [0.3, -0.7, 1.1],
            [0.9, 0.2, -0.4],
            [-1.2, 0.8, 0.05],
            [0.0, 0.6, -0.9],
        ]);
        let y_norm = arr2(&[
            [0.1, -0.5, 1.0],
            [1.0, 0.0, -0.5],
            [-1.0, 1.0, 0.0],
            [0.2, 0.5, -1.0],
        ]);
        let y_raw = y_norm.mapv(|v| v * 1.3 + 0.05);
        let dry = [false, true, true, false];
        let (_, grad) = loss_and_grad(&yhat, &y_norm, &y_raw, &dry, 2, &stats, &params);

        let eps = 1e-7;
        for r in 0..4 {
            for c in 0..3 {
                let orig = yhat[[r, c]];
                yhat[[r, c]] = orig + eps;
                let up = loss_and_grad(&yhat, &y_norm, &y_raw, &dry, 2, &stats, &params)
                    .0
                    .total(&params);
                yhat[[r, c]] = orig - eps;
                let dn = loss_and_grad(&yhat, &y_norm, &y_raw, &dry, 2, &stats, &params)
                    .0
                    .total(&params);
                yhat[[r, c]] = orig;
                let numeric = (up - dn) / (2.0 * eps);
                assert_relative_eq!(grad[[r, c]], numeric, epsilon = 1e-6, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn gradient_flows_through_the_network() {
        use crate::model::Mlp;
        let stats = unit_stats();
        let params = LossParams::default();
        let mut m = Mlp::init(2, 3, 6, 4);
        let x = ndarray::Array2::from_shape_fn((6, 5), |(i, j)| ((i * 5 + j) as f64 * 0.37).sin());
        let y_norm = ndarray::Array2::from_shape_fn((6, 3), |(i, j)| ((i + j) as f64 * 0.21).cos());
        let y_raw = y_norm.mapv(|v| v * 0.8);
        let dry = [false, true, false, false, true, false];

        let loss_of = |m: &Mlp| {
            let y = m.predict(&x);
            loss_and_grad(&y, &y_norm, &y_raw, &dry, 3, &stats, &params)
                .0
                .total(&params)
        };
        let fwd = m.forward(&x);
        let (_, dy) = loss_and_grad(&fwd.y, &y_norm, &y_raw, &dry, 3, &stats, &params);
        let g = m.backward(&x, &fwd, &dy);

        let eps = 1e-6;
        for (r, c) in [(0, 0), (3, 5), (4, 2)] {
            let orig = m.w1[[r, c]];
            m.w1[[r, c]] = orig + eps;
            let up = loss_of(&m);
            m.w1[[r, c]] = orig - eps;
            let dn = loss_of(&m);
            m.w1[[r, c]] = orig;
            assert_relative_eq!(
                g.w1[[r, c]],
                (up - dn) / (2.0 * eps),
                epsilon = 1e-6,
                max_relative = 1e-4
            );
        }
        for (r, c) in [(0, 1), (5, 2)] {
            let orig = m.w3[[r, c]];
            m.w3[[r, c]] = orig + eps;
            let up = loss_of(&m);
            m.w3[[r, c]] = orig - eps;
            let dn = loss_of(&m);
            m.w3[[r, c]] = orig;
            assert_relative_eq!(
                g.w3[[r, c]],
                (up - dn) / (2.0 * eps),
                epsilon = 1e-6,
                max_relative = 1e-4
            );
        }
    }
}
