//! End-to-end force inference for a prepared vehicle.
//!
//! Packs live conditions into the model's input layout exactly as the
//! training data was packed, runs the network, and scales outputs back to
//! forces in newtons.

use nalgebra::Vector3;
use ndarray::Array2;

use crate::dataset::NormStats;
use crate::defaults::GLOBAL_DIM;
use crate::error::{Error, Result};
use crate::features::{global_features, surface_features};
use crate::model::{Mlp, MlpF32, Variant};
use crate::prepare::PreparedVehicle;

/// Predicted forces in newtons, in the vehicle frame.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub surfaces: Vec<(String, Vector3<f64>)>,
    pub net: Vector3<f64>,
}

pub struct InferencePipeline {
    pub prep: PreparedVehicle,
    pub model: Mlp,
    pub model_f32: MlpF32,
    pub stats: NormStats,
    pub variant: Variant,
}

impl InferencePipeline {
    pub fn new(
        prep: PreparedVehicle,
        model: Mlp,
        stats: NormStats,
        variant: Variant,
    ) -> Result<InferencePipeline> {
        if model.surface_dim != variant.surface_dim() || model.global_dim != variant.global_dim() {
            return Err(Error::Shape(format!(
                "model dims {}+{} do not match variant {:?}",
                model.surface_dim, model.global_dim, variant
            )));
        }
        if stats.mu_global.len() != GLOBAL_DIM {
            return Err(Error::Shape(format!(
                "normalization stats cover {} global features, expected {}",
                stats.mu_global.len(),
                GLOBAL_DIM
            )));
        }
        let model_f32 = MlpF32::from_f64(&model);
        Ok(InferencePipeline {
            prep,
            model,
            model_f32,
            stats,
            variant,
        })
    }

    fn rows(&self) -> usize {
        match self.variant {
            Variant::GlobalOnly => 1,
            _ => self.prep.patches.len(),
        }
    }

    /// Model input rows for the given vehicle-frame conditions: one row per
    /// surface, or a single row for the global-only variant.
    pub fn assemble(
        &self,
        velocity: &Vector3<f64>,
        density: f64,
        depth: f64,
        gravity: f64,
    ) -> Array2<f64> {
        let global = global_features(velocity, density, depth, gravity, &self.prep.spec);
        let g_norm = self.stats.normalize_global(&global);
        let ds = self.variant.surface_dim();
        let dg = self.variant.global_dim();
        let mut x = Array2::zeros((self.rows(), ds + dg));
        if self.variant == Variant::GlobalOnly {
            for j in 0..dg {
                x[[0, j]] = g_norm[j];
            }
            return x;
        }
        let sub = self.prep.submergence(self.prep.water_level(depth));
        for (i, patch) in self.prep.patches.iter().enumerate() {
            let (sf, sd) = sub[i];
            let f = surface_features(patch, &self.prep.spec, velocity, sf, sd);
            for j in 0..ds {
                x[[i, j]] = f[j];
            }
            for j in 0..dg {
                x[[i, ds + j]] = g_norm[j];
            }
        }
        x
    }

    fn collect(&self, forces: Vec<Vector3<f64>>) -> Prediction {
        let names: Vec<String> = match self.variant {
            Variant::GlobalOnly => vec!["net".to_string()],
            _ => self.prep.patches.iter().map(|p| p.name.clone()).collect(),
        };
        let mut net = Vector3::zeros();
        for f in &forces {
            net += f;
        }
        Prediction {
            surfaces: names.into_iter().zip(forces).collect(),
            net,
        }
    }

    /// Per-surface and net forces in newtons.
    pub fn predict(
        &self,
        velocity: &Vector3<f64>,
        density: f64,
        depth: f64,
        gravity: f64,
    ) -> Prediction {
        let x = self.assemble(velocity, density, depth, gravity);
        let y = self.model.predict(&x);
        let forces = (0..y.nrows())
            .map(|r| {
                Vector3::new(
                    density * (y[[r, 0]] * self.stats.sigma_target[0] + self.stats.mu_target[0]),
                    density * (y[[r, 1]] * self.stats.sigma_target[1] + self.stats.mu_target[1]),
                    density * (y[[r, 2]] * self.stats.sigma_target[2] + self.stats.mu_target[2]),
                )
            })
            .collect();
        self.collect(forces)
    }

    /// Same as `predict` through the single-precision network.
    pub fn predict_f32(
        &self,
        velocity: &Vector3<f64>,
        density: f64,
        depth: f64,
        gravity: f64,
    ) -> Prediction {
        let x = self.assemble(velocity, density, depth, gravity).mapv(|v| v as f32);
        let y = self.model_f32.predict(&x);
        let forces = (0..y.nrows())
            .map(|r| {
                Vector3::new(
                    density
                        * (y[[r, 0]] as f64 * self.stats.sigma_target[0] + self.stats.mu_target[0]),
                    density
                        * (y[[r, 1]] as f64 * self.stats.sigma_target[1] + self.stats.mu_target[1]),
                    density
                        * (y[[r, 2]] as f64 * self.stats.sigma_target[2] + self.stats.mu_target[2]),
                )
            })
            .collect();
        self.collect(forces)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{assemble_dataset, CampaignSpec};
    use crate::defaults::{HIDDEN_WIDTH, RANGES_MINI_HUSKY, SECTION_COUNT, TRANSIENT_CUTOFF};
    use crate::geometry::toys;
    use crate::model::{build_inputs, fit_stats_for};
    use crate::prepare::prepare_vehicle;

    fn husky_pipeline(variant: Variant) -> (InferencePipeline, Vec<crate::dataset::Sample>) {
        let v = toys::mini_husky();
        let prep = prepare_vehicle(&v.mesh, &v.labels, &v.spec, 512, 11).unwrap();
        let mut spec = CampaignSpec::standard(RANGES_MINI_HUSKY, 29);
        spec.cases = 2;
        let records = crate::dataset::generate_campaign(&prep, &spec);
        let samples =
            assemble_dataset(&prep, records, TRANSIENT_CUTOFF, SECTION_COUNT, false).unwrap();
        let stats = fit_stats_for(&samples, variant).unwrap();
        let model = Mlp::init(variant.surface_dim(), variant.global_dim(), 16, 5);
        let pipe = InferencePipeline::new(prep, model, stats, variant).unwrap();
        (pipe, samples)
    }

    #[test]
    fn assemble_matches_training_packing() {
        let (pipe, samples) = husky_pipeline(Variant::Full);
        let all: Vec<usize> = (0..samples.len()).collect();
        let g = &build_inputs(&samples, &all, &pipe.stats, Variant::Full).unwrap()[0];

        let s = &samples[0];
        let x = pipe.assemble(&Vector3::from(s.velocity), s.density, s.depth, s.gravity);
        assert_eq!(x.nrows(), g.k);
        for r in 0..g.k {
            for c in 0..x.ncols() {
                assert_eq!(x[[r, c]], g.x[[r, c]], "row {r} col {c}");
            }
        }
    }

    #[test]
    fn net_is_the_sum_of_surfaces() {
        let (pipe, _) = husky_pipeline(Variant::Full);
        let p = pipe.predict(&Vector3::new(0.0, 2.0, 0.0), 1000.0, 0.3, 9.81);
        assert_eq!(p.surfaces.len(), 13);
        let mut sum = Vector3::zeros();
        for (_, f) in &p.surfaces {
            sum += f;
        }
        assert_eq!(sum, p.net);
        assert!(p.net.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn global_only_gives_one_net_row() {
        let (pipe, _) = husky_pipeline(Variant::GlobalOnly);
        let p = pipe.predict(&Vector3::new(0.0, 1.5, 0.0), 1200.0, 0.2, 9.81);
        assert_eq!(p.surfaces.len(), 1);
        assert_eq!(p.surfaces[0].0, "net");
        assert_eq!(p.surfaces[0].1, p.net);
    }

    #[test]
    fn f32_forces_track_f64() {
        let (pipe, _) = husky_pipeline(Variant::Full);
        let v = Vector3::new(0.4, 2.5, 0.0);
        let a = pipe.predict(&v, 1100.0, 0.25, 9.81);
        let b = pipe.predict_f32(&v, 1100.0, 0.25, 9.81);
        for ((_, fa), (_, fb)) in a.surfaces.iter().zip(b.surfaces.iter()) {
            for c in 0..3 {
                let scale = fa[c].abs().max(1.0);
                assert!((fa[c] - fb[c]).abs() / scale < 1e-3);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let v = toys::mini_husky();
        let prep = prepare_vehicle(&v.mesh, &v.labels, &v.spec, 256, 11).unwrap();
        let stats = NormStats {
            schema_version: crate::defaults::SCHEMA_VERSION,
            mu_global: vec![0.0; GLOBAL_DIM],
            sigma_global: vec![1.0; GLOBAL_DIM],
            mu_target: [0.0; 3],
            sigma_target: [1.0; 3],
        };
        let model = Mlp::init(15, 12, HIDDEN_WIDTH, 1);
        assert!(matches!(
            InferencePipeline::new(prep, model, stats, Variant::GlobalOnly),
            Err(Error::Shape(_))
        ));
    }
}
