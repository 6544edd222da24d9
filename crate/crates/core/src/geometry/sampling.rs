//! Area-proportionate surface point sampling for depth distributions.

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::patches::SurfacePatch;
use super::Mesh;
use crate::defaults::DEPTH_SAMPLES_MIN;
use crate::error::{Error, Result};

/// Fixed surface-point sample set for one patch: heights and local normals,
/// drawn area-proportionately and filtered against the ground plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepthSamples {
    /// Sample heights z_s in the vehicle frame, one per surviving point.
    pub z: Vec<f64>,
    /// Unit normal of the face each surviving point was drawn from.
    pub normals: Vec<Vector3<f64>>,
    /// Points requested before ground filtering.
    pub requested: usize,
    /// RNG seed used for the draw.
    pub seed: u64,
}

/// Draws `count` points on the patch, each face chosen with probability
/// proportional to its area and the point uniform within the face. Points
/// below `ground_z` are discarded so buried faces (wheel undersides at rest)
/// do not count toward submergence.
pub fn sample_patch_depths(
    mesh: &Mesh,
    patch: &SurfacePatch,
    count: usize,
    ground_z: f64,
    seed: u64,
) -> Result<DepthSamples> {
    if count < DEPTH_SAMPLES_MIN {
        return Err(Error::Config(format!(
            "depth sample count {count} below minimum {DEPTH_SAMPLES_MIN}"
        )));
    }
    let mut cum = Vec::with_capacity(patch.faces.len());
    let mut total = 0.0;
    for &f in &patch.faces {
        total += mesh.face_area(f);
        cum.push(total);
    }
    if total <= 0.0 {
        return Err(Error::EmptyPatch {
            patch: patch.name.clone(),
            reason: "zero sampling area".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = Vec::with_capacity(count);
    let mut normals = Vec::with_capacity(count);
    for _ in 0..count {
        let u = rng.random::<f64>() * total;
        let k = cum.partition_point(|&c| c <= u).min(patch.faces.len() - 1);
        let face = patch.faces[k];
        let [a, b, c] = mesh.face_vertices(face);
        // Uniform barycentric draw.
        let r1: f64 = rng.random();
        let r2: f64 = rng.random();
        let s = r1.sqrt();
        let p = a.coords * (1.0 - s) + b.coords * (s * (1.0 - r2)) + c.coords * (s * r2);
        if p.z < ground_z {
            continue;
        }
        z.push(p.z);
        normals.push(mesh.face_normal(face));
    }
    if z.is_empty() {
        return Err(Error::EmptyPatch {
            patch: patch.name.clone(),
            reason: format!("all {count} samples fell below ground_z={ground_z}"),
        });
    }
    Ok(DepthSamples {
        z,
        normals,
        requested: count,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::patches::{decompose_patches, PatchLabel, SemanticType};
    use crate::geometry::tests::unit_cube;
    use nalgebra::Point3;

    fn front_patch() -> (Mesh, SurfacePatch) {
        let mesh = unit_cube();
        let labels = vec![PatchLabel {
            name: "front".into(),
            semantic: SemanticType::Front,
            faces: vec![4, 5],
        }];
        let patch = decompose_patches(&mesh, &labels).unwrap().remove(0);
        (mesh, patch)
    }

    #[test]
    fn seeded_draws_are_reproducible() {
        let (mesh, patch) = front_patch();
        let a = sample_patch_depths(&mesh, &patch, 512, -1.0, 7).unwrap();
        let b = sample_patch_depths(&mesh, &patch, 512, -1.0, 7).unwrap();
        assert_eq!(a.z, b.z);
        let c = sample_patch_depths(&mesh, &patch, 512, -1.0, 8).unwrap();
        assert_ne!(a.z, c.z);
    }

    #[test]
    fn ground_filter_discards_buried_points() {
        let (mesh, patch) = front_patch();
        // Cube spans z in [-0.5, 0.5]; ground at 0 keeps the upper half.
        let s = sample_patch_depths(&mesh, &patch, 2048, 0.0, 11).unwrap();
        assert!(s.z.iter().all(|&z| z >= 0.0));
        assert!(s.z.len() < s.requested);
        // Roughly half survive; 3-sigma binomial band.
        let frac = s.z.len() as f64 / 2048.0;
        assert!((frac - 0.5).abs() < 3.0 * 0.5 / (2048f64).sqrt());
    }

    #[test]
    fn area_proportionate_face_choice() {
        // Two triangles with areas 1 and 3: share of the larger face should
        // sit near 0.75 within a 3-sigma binomial band.
        let vertices = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 3.0),
            Point3::new(2.0, 0.0, 3.0),
            Point3::new(2.0, 3.0, 3.0),
        ];
        let faces = vec![[0usize, 1, 2], [3, 4, 5]];
        let mesh = Mesh::new(vertices, faces).unwrap();
        let patch = SurfacePatch {
            name: "p".into(),
            semantic: SemanticType::Side,
            faces: vec![0, 1],
            area: 4.0,
            centroid: Point3::origin(),
            normal: Vector3::new(0.0, 0.0, 1.0),
            normal_fallback: false,
        };
        let n = 4096;
        let s = sample_patch_depths(&mesh, &patch, n, -10.0, 3).unwrap();
        // Face 1 lies in the z=3 plane, face 0 in z=0.
        let big = s.z.iter().filter(|&&z| z > 1.0).count() as f64;
        let share = big / n as f64;
        let sigma = (0.75f64 * 0.25 / n as f64).sqrt();
        assert!(
            (share - 0.75).abs() < 3.0 * sigma,
            "share {share} too far from 0.75"
        );
    }

    #[test]
    fn all_buried_is_an_error() {
        let (mesh, patch) = front_patch();
        let err = sample_patch_depths(&mesh, &patch, 256, 2.0, 5).unwrap_err();
        assert!(matches!(err, Error::EmptyPatch { .. }));
    }

    #[test]
    fn tiny_counts_rejected() {
        let (mesh, patch) = front_patch();
        assert!(matches!(
            sample_patch_depths(&mesh, &patch, 10, 0.0, 5),
            Err(Error::Config(_))
        ));
    }
}
