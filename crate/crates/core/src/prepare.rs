//! One-time per-vehicle preparation shared by dataset generation and
//! inference: patch decomposition, ground plane resolution, and seeded
//! depth sampling of every patch.

use crate::defaults::DEPTH_SAMPLES_PER_PATCH;
use crate::error::{Error, Result};
use crate::features::submergence_metrics;
use crate::geometry::{
    decompose_patches, sample_patch_depths, DepthSamples, Mesh, PatchLabel, SemanticType,
    SurfacePatch, VehicleSpec,
};
use crate::seeding;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PreparedVehicle {
    pub spec: VehicleSpec,
    pub patches: Vec<SurfacePatch>,
    /// Depth samples per patch, parallel to `patches`.
    pub samples: Vec<DepthSamples>,
    /// Height of the ground plane in mesh coordinates. Water depth is
    /// measured upward from here.
    pub ground_z: f64,
    pub mesh_hash: [u8; 32],
}

impl PreparedVehicle {
    pub fn patch_index(&self, name: &str) -> Option<usize> {
        self.patches.iter().position(|p| p.name == name)
    }

    /// Waterline height for a given water depth over the ground plane.
    pub fn water_level(&self, depth: f64) -> f64 {
        self.ground_z + depth
    }

    /// Per-patch (submerged fraction, mean normalized depth) at a waterline.
    pub fn submergence(&self, z_water: f64) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .map(|s| submergence_metrics(&s.z, z_water, self.spec.submergence_ref))
            .collect()
    }
}

/// Lowest vertex over all wheel-labeled faces; the resting ground height
/// when the spec does not pin one explicitly.
fn wheel_ground_z(mesh: &Mesh, patches: &[SurfacePatch]) -> Result<f64> {
    let mut lowest = f64::INFINITY;
    for patch in patches.iter().filter(|p| p.semantic == SemanticType::Wheel) {
        for &f in &patch.faces {
            for &vi in &mesh.faces[f] {
                lowest = lowest.min(mesh.vertices[vi].z);
            }
        }
    }
    if lowest.is_finite() {
        Ok(lowest)
    } else {
        Err(Error::Config(
            "ground height is not set and no wheel patches exist to infer it".into(),
        ))
    }
}

pub fn prepare_vehicle(
    mesh: &Mesh,
    labels: &[PatchLabel],
    spec: &VehicleSpec,
    samples_per_patch: usize,
    seed: u64,
) -> Result<PreparedVehicle> {
    spec.validate(labels)?;
    mesh.check_watertight()?;
    let patches = decompose_patches(mesh, labels)?;
    let ground_z = match spec.ground_z {
        Some(z) => z,
        None => wheel_ground_z(mesh, &patches)?,
    };
    let samples = patches
        .iter()
        .enumerate()
        .map(|(i, patch)| {
            sample_patch_depths(
                mesh,
                patch,
                samples_per_patch,
                ground_z,
                seeding::substream(seed, &[i as u64]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedVehicle {
        spec: spec.clone(),
        patches,
        samples,
        ground_z,
        mesh_hash: mesh.content_hash(),
    })
}

/// Preparation with the default per-patch sample count.
pub fn prepare_vehicle_default(
    mesh: &Mesh,
    labels: &[PatchLabel],
    spec: &VehicleSpec,
    seed: u64,
) -> Result<PreparedVehicle> {
    prepare_vehicle(mesh, labels, spec, DEPTH_SAMPLES_PER_PATCH, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::toys;

    #[test]
    fn husky_prepares_with_wheel_ground() {
        let v = toys::mini_husky();
        let prep = prepare_vehicle(&v.mesh, &v.labels, &v.spec, 512, 11).unwrap();
        assert_eq!(prep.ground_z, 0.0);
        assert_eq!(prep.patches.len(), 13);
        assert_eq!(prep.samples.len(), 13);
        assert!(prep.samples.iter().all(|s| !s.z.is_empty()));
        assert_eq!(prep.mesh_hash, v.mesh.content_hash());
        assert!(prep.patch_index("front_mid").is_some());
        assert!(prep.patch_index("nope").is_none());
        assert_eq!(prep.water_level(0.15), 0.15);
    }

    #[test]
    fn preparation_is_reproducible() {
        let v = toys::mini_warthog();
        let a = prepare_vehicle(&v.mesh, &v.labels, &v.spec, 256, 5).unwrap();
        let b = prepare_vehicle(&v.mesh, &v.labels, &v.spec, 256, 5).unwrap();
        for (sa, sb) in a.samples.iter().zip(b.samples.iter()) {
            assert_eq!(sa.z, sb.z);
        }
        let c = prepare_vehicle(&v.mesh, &v.labels, &v.spec, 256, 6).unwrap();
        assert!(a.samples[0].z != c.samples[0].z);
    }

    #[test]
    fn submergence_rises_with_water_level() {
        let v = toys::mini_husky();
        let prep = prepare_vehicle(&v.mesh, &v.labels, &v.spec, 512, 11).unwrap();
        let dry = prep.submergence(-0.1);
        assert!(dry.iter().all(|&(f, d)| f == 0.0 && d == 0.0));
        let low = prep.submergence(prep.water_level(0.10));
        let high = prep.submergence(prep.water_level(0.30));
        for ((fl, _), (fh, _)) in low.iter().zip(high.iter()) {
            assert!(fh >= fl);
        }
        // At 10 cm the wheels are partly wet and the body bottom (at 12 cm)
        // is still dry.
        let bottom = prep.patch_index("bottom").unwrap();
        let wheel = prep.patch_index("wheel_fl").unwrap();
        assert_eq!(low[bottom].0, 0.0);
        assert!(low[wheel].0 > 0.0 && low[wheel].0 < 1.0);
        // Fully drowned vehicle.
        let drowned = prep.submergence(10.0);
        assert!(drowned.iter().all(|&(f, _)| f == 1.0));
    }

    #[test]
    fn explicit_ground_height_wins() {
        let v = toys::mini_husky();
        let mut spec = v.spec.clone();
        spec.ground_z = Some(0.05);
        let prep = prepare_vehicle(&v.mesh, &v.labels, &spec, 512, 11).unwrap();
        assert_eq!(prep.ground_z, 0.05);
    }
}
