//! Analytic force oracle standing in for a flow solver.
//!
//! Each surface takes a quadratic drag term against its submerged projected
//! area and a hydrostatic lift term from its submerged fraction and depth.
//! Case histories add multiplicative Gaussian noise from a substream keyed
//! by case and step, so records are reproducible regardless of generation
//! order. Conditions are sampled by a Latin hypercube over speed, heading,
//! density, and water depth.

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::defaults::{
    CampaignRanges, CAMPAIGN_CASES, CASE_DT, CASE_DURATION, GRAVITY, ORACLE_DRAG_COEFF,
    ORACLE_NOISE_FRAC,
};
use crate::features::projected_area;
use crate::geometry::SemanticType;
use crate::prepare::PreparedVehicle;
use crate::seeding;

use super::case::{vehicle_frame_velocity, vehicle_to_solver, CaseConditions, CaseRecord, Frame};

const TAG_LHS: u64 = 1;
const TAG_NOISE: u64 = 2;

pub fn drag_coefficient(semantic: SemanticType) -> f64 {
    ORACLE_DRAG_COEFF[semantic.one_hot_index()]
}

/// Quadratic drag opposing the motion, scaled by submerged projected area.
pub fn drag_force(
    density: f64,
    coeff: f64,
    projected: f64,
    sub_frac: f64,
    velocity: &Vector3<f64>,
) -> Vector3<f64> {
    let scalar = -0.5 * density * coeff * projected * sub_frac * velocity.norm();
    velocity * scalar
}

/// Hydrostatic lift from the submerged part of a surface.
pub fn buoyancy_force(
    density: f64,
    gravity: f64,
    area: f64,
    sub_frac: f64,
    sub_depth_norm: f64,
    h_sub: f64,
) -> Vector3<f64> {
    Vector3::new(
        0.0,
        0.0,
        density * gravity * area * sub_frac * sub_depth_norm * h_sub,
    )
}

/// Noise-free per-surface forces in the vehicle frame, ordered like the
/// prepared patches.
pub fn oracle_mean_forces(
    prep: &PreparedVehicle,
    velocity: &Vector3<f64>,
    density: f64,
    depth: f64,
    gravity: f64,
) -> Vec<Vector3<f64>> {
    let subs = prep.submergence(prep.water_level(depth));
    prep.patches
        .iter()
        .zip(subs.iter())
        .map(|(patch, &(sub_frac, sub_depth))| {
            let projected = projected_area(patch.area, &patch.normal, velocity);
            drag_force(
                density,
                drag_coefficient(patch.semantic),
                projected,
                sub_frac,
                velocity,
            ) + buoyancy_force(
                density,
                gravity,
                patch.area,
                sub_frac,
                sub_depth,
                prep.spec.submergence_ref,
            )
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CampaignSpec {
    pub cases: usize,
    pub seed: u64,
    pub ranges: CampaignRanges,
    pub duration: f64,
    pub dt: f64,
    pub noise_frac: f64,
    pub gravity: f64,
}

impl CampaignSpec {
    pub fn standard(ranges: CampaignRanges, seed: u64) -> Self {
        CampaignSpec {
            cases: CAMPAIGN_CASES,
            seed,
            ranges,
            duration: CASE_DURATION,
            dt: CASE_DT,
            noise_frac: ORACLE_NOISE_FRAC,
            gravity: GRAVITY,
        }
    }
}

/// Latin hypercube in the unit cube: per dimension, one jittered point in
/// each of `n` shuffled strata. Indexed `[dim][case]`.
pub fn latin_hypercube(n: usize, dims: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..dims)
        .map(|d| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seeding::substream(seed, &[TAG_LHS, d as u64]));
            let mut strata: Vec<usize> = (0..n).collect();
            strata.shuffle(&mut rng);
            strata
                .into_iter()
                .map(|s| (s as f64 + rng.random::<f64>()) / n as f64)
                .collect()
        })
        .collect()
}

pub fn campaign_conditions(spec: &CampaignSpec, vehicle: &str) -> Vec<CaseConditions> {
    let unit = latin_hypercube(spec.cases, 4, spec.seed);
    let scale = |(lo, hi): (f64, f64), x: f64| lo + x * (hi - lo);
    (0..spec.cases)
        .map(|i| CaseConditions {
            vehicle: vehicle.to_string(),
            case_index: i as u32,
            speed: scale(spec.ranges.speed, unit[0][i]),
            heading_deg: scale(spec.ranges.heading_deg, unit[1][i]),
            density: scale(spec.ranges.density, unit[2][i]),
            depth: scale(spec.ranges.depth, unit[3][i]),
        gravity: spec.gravity,
        })
        .collect()
}

/// Full noisy force history for one case, in the solver frame.
pub fn oracle_case_record(
    prep: &PreparedVehicle,
    cond: &CaseConditions,
    spec: &CampaignSpec,
) -> CaseRecord {
    let velocity = vehicle_frame_velocity(cond.speed, cond.heading_deg);
    let mean = oracle_mean_forces(prep, &velocity, cond.density, cond.depth, cond.gravity);
    let steps = (spec.duration / spec.dt).round() as usize + 1;
    let mut time = Vec::with_capacity(steps);
    let mut forces = Vec::with_capacity(steps);
    for k in 0..steps {
        time.push(k as f64 * spec.dt);
        let mut rng = ChaCha8Rng::seed_from_u64(seeding::substream(
            spec.seed,
            &[TAG_NOISE, cond.case_index as u64, k as u64],
        ));
        let row = mean
            .iter()
            .map(|f| {
                let mut noisy = Vector3::zeros();
                for i in 0..3 {
                    let g: f64 = rng.sample(StandardNormal);
                    noisy[i] = f[i] * (1.0 + spec.noise_frac * g);
                }
                vehicle_to_solver(&noisy)
            })
            .collect();
        forces.push(row);
    }
    CaseRecord {
        conditions: cond.clone(),
        frame: Frame::SolverZFlow,
        surfaces: prep.patches.iter().map(|p| p.name.clone()).collect(),
        time,
        forces,
    }
}

/// Generates every case of a campaign. Per-case records are independent,
/// so parallel generation is deterministic.
pub fn generate_campaign(prep: &PreparedVehicle, spec: &CampaignSpec) -> Vec<CaseRecord> {
    let conds = campaign_conditions(spec, &prep.spec.name);
    conds
        .par_iter()
        .map(|c| oracle_case_record(prep, c, spec))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::toys;
    use crate::prepare::prepare_vehicle;
    use approx::assert_relative_eq;

    fn husky_prep() -> PreparedVehicle {
        let v = toys::mini_husky();
        prepare_vehicle(&v.mesh, &v.labels, &v.spec, 512, 11).unwrap()
    }

    #[test]
    fn drag_hand_value() {
        let f = drag_force(1000.0, 1.1, 0.2, 0.5, &Vector3::new(2.0, 0.0, 0.0));
        assert_relative_eq!(f.x, -220.0, epsilon = 1e-9);
        assert_eq!(f.y, 0.0);
        assert_eq!(f.z, 0.0);
        assert_eq!(
            drag_force(1000.0, 1.1, 0.2, 0.5, &Vector3::zeros()),
            Vector3::zeros()
        );
    }

    #[test]
    fn buoyancy_hand_value() {
        let f = buoyancy_force(1000.0, 9.81, 0.3, 0.5, 0.4, 0.366);
        assert_relative_eq!(f.z, 215.4276, epsilon = 1e-9);
        assert_eq!(f.x, 0.0);
    }

    #[test]
    fn dry_vehicle_sees_no_force() {
        let prep = husky_prep();
        let f = oracle_mean_forces(&prep, &Vector3::new(1.0, 0.0, 0.0), 1000.0, -0.5, 9.81);
        assert!(f.iter().all(|v| *v == Vector3::zeros()));
    }

    #[test]
    fn density_doubling_doubles_forces_exactly() {
        let prep = husky_prep();
        let v = Vector3::new(0.8, 0.3, 0.0);
        let base = oracle_mean_forces(&prep, &v, 997.0, 0.15, 9.81);
        let doubled = oracle_mean_forces(&prep, &v, 2.0 * 997.0, 0.15, 9.81);
        for (a, b) in base.iter().zip(doubled.iter()) {
            for i in 0..3 {
                assert_eq!((2.0 * a[i]).to_bits(), b[i].to_bits());
            }
        }
    }

    #[test]
    fn noisy_records_double_with_density_too() {
        let prep = husky_prep();
        let spec = CampaignSpec {
            cases: 1,
            seed: 99,
            ranges: crate::defaults::RANGES_MINI_HUSKY,
            duration: 0.2,
            dt: 0.02,
            noise_frac: 0.03,
            gravity: 9.81,
        };
        let mut cond = CaseConditions {
            vehicle: "mini_husky".into(),
            case_index: 5,
            speed: 0.7,
            heading_deg: 60.0,
            density: 1100.0,
            depth: 0.16,
            gravity: 9.81,
        };
        let base = oracle_case_record(&prep, &cond, &spec);
        cond.density *= 2.0;
        let doubled = oracle_case_record(&prep, &cond, &spec);
        for (ra, rb) in base.forces.iter().zip(doubled.forces.iter()) {
            for (a, b) in ra.iter().zip(rb.iter()) {
                for i in 0..3 {
                    assert_eq!((2.0 * a[i]).to_bits(), b[i].to_bits());
                }
            }
        }
    }

    #[test]
    fn noise_is_reproducible_and_case_keyed() {
        let prep = husky_prep();
        let spec = CampaignSpec {
            cases: 2,
            seed: 7,
            ranges: crate::defaults::RANGES_MINI_HUSKY,
            duration: 0.1,
            dt: 0.02,
            noise_frac: 0.03,
            gravity: 9.81,
        };
        let cond = CaseConditions {
            vehicle: "mini_husky".into(),
            case_index: 0,
            speed: 0.7,
            heading_deg: 75.0,
            density: 1100.0,
            depth: 0.16,
            gravity: 9.81,
        };
        let a = oracle_case_record(&prep, &cond, &spec);
        let b = oracle_case_record(&prep, &cond, &spec);
        assert_eq!(a.forces, b.forces);
        let mut cond2 = cond.clone();
        cond2.case_index = 1;
        let c = oracle_case_record(&prep, &cond2, &spec);
        assert_ne!(a.forces, c.forces);
        assert_eq!(a.surfaces, prep.patches.iter().map(|p| p.name.clone()).collect::<Vec<_>>());
        assert_eq!(a.time.len(), 6);
        assert_eq!(a.frame, Frame::SolverZFlow);
    }

    #[test]
    fn noise_averages_back_to_the_mean() {
        let prep = husky_prep();
        let spec = CampaignSpec {
            cases: 1,
            seed: 13,
            ranges: crate::defaults::RANGES_MINI_HUSKY,
            duration: 40.0,
            dt: 0.02,
            noise_frac: 0.03,
            gravity: 9.81,
        };
        let cond = CaseConditions {
            vehicle: "mini_husky".into(),
            case_index: 0,
            speed: 0.9,
            heading_deg: 90.0,
            density: 1200.0,
            depth: 0.18,
            gravity: 9.81,
        };
        let rec = oracle_case_record(&prep, &cond, &spec);
        let v = vehicle_frame_velocity(cond.speed, cond.heading_deg);
        let mean = oracle_mean_forces(&prep, &v, cond.density, cond.depth, cond.gravity);
        let front = prep.patch_index("front_mid").unwrap();
        let n = rec.time.len() as f64;
        let avg_fx: f64 =
            rec.forces.iter().map(|row| -row[front].z).sum::<f64>() / n;
        // 2001 draws of 3 percent noise: the mean should sit within a
        // fraction of a percent of nominal.
        assert_relative_eq!(avg_fx, mean[front].x, max_relative = 5e-3);
    }

    #[test]
    fn hypercube_stratifies_each_dimension() {
        let n = 64;
        let cube = latin_hypercube(n, 4, 3);
        assert_eq!(cube.len(), 4);
        for dim in &cube {
            assert_eq!(dim.len(), n);
            let mut sorted = dim.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (i, x) in sorted.iter().enumerate() {
                assert!(*x >= i as f64 / n as f64 && *x < (i + 1) as f64 / n as f64);
            }
        }
        assert_eq!(latin_hypercube(n, 4, 3), cube);
        assert_ne!(latin_hypercube(n, 4, 4), cube);
    }

    #[test]
    fn conditions_cover_the_ranges() {
        let spec = CampaignSpec::standard(crate::defaults::RANGES_MINI_HUSKY, 21);
        let conds = campaign_conditions(&spec, "mini_husky");
        assert_eq!(conds.len(), CAMPAIGN_CASES);
        let r = &spec.ranges;
        for (i, c) in conds.iter().enumerate() {
            assert_eq!(c.case_index as usize, i);
            assert!(c.speed >= r.speed.0 && c.speed < r.speed.1);
            assert!(c.heading_deg >= r.heading_deg.0 && c.heading_deg < r.heading_deg.1);
            assert!(c.density >= r.density.0 && c.density < r.density.1);
            assert!(c.depth >= r.depth.0 && c.depth < r.depth.1);
        }
        // Strata force good spread: the extremes of each range get visited.
        let min_speed = conds.iter().map(|c| c.speed).fold(f64::INFINITY, f64::min);
        let max_speed = conds.iter().map(|c| c.speed).fold(0.0, f64::max);
        assert!(min_speed < r.speed.0 + (r.speed.1 - r.speed.0) / 100.0);
        assert!(max_speed > r.speed.1 - (r.speed.1 - r.speed.0) / 100.0);
    }

    #[test]
    fn campaign_generation_is_deterministic() {
        let prep = husky_prep();
        let mut spec = CampaignSpec::standard(crate::defaults::RANGES_MINI_HUSKY, 5);
        spec.cases = 3;
        spec.duration = 0.1;
        let a = generate_campaign(&prep, &spec);
        let b = generate_campaign(&prep, &spec);
        assert_eq!(a.len(), 3);
        for (ra, rb) in a.iter().zip(b.iter()) {
            assert_eq!(ra.forces, rb.forces);
            assert_eq!(ra.conditions, rb.conditions);
        }
    }
}
