//! Hull meshes, semantic surface patches, and surface depth sampling.

pub mod patches;
pub mod sampling;
pub mod stl;
pub mod toys;
pub mod vehicle;

pub use patches::{
    decompose_patches, merge_labels, parse_labels, write_labels, PatchLabel, SemanticType,
    SurfacePatch, SEMANTIC_COUNT,
};
pub use sampling::{sample_patch_depths, DepthSamples};
pub use vehicle::VehicleSpec;

use nalgebra::{Matrix3, Point3, Vector3};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Rigid transform applied to a mesh at load time.
#[derive(Debug, Clone)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }
}

/// Indexed triangle mesh with deduplicated vertices.
///
/// Faces wind counterclockwise when viewed from outside, so face normals
/// point out of the hull.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

impl Mesh {
    /// Builds a mesh and checks structural validity: vertex indices in
    /// range, finite coordinates, no degenerate faces.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        for (i, v) in vertices.iter().enumerate() {
            if !v.coords.iter().all(|c| c.is_finite()) {
                return Err(Error::Data(format!("vertex {i} has non-finite coordinates")));
            }
        }
        for (fi, f) in faces.iter().enumerate() {
            for &vi in f {
                if vi >= vertices.len() {
                    return Err(Error::Data(format!(
                        "face {fi} references vertex {vi} of {}",
                        vertices.len()
                    )));
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateFace { face: fi });
            }
        }
        let mesh = Mesh { vertices, faces };
        for fi in 0..mesh.faces.len() {
            if mesh.face_area(fi) == 0.0 {
                return Err(Error::DegenerateFace { face: fi });
            }
        }
        Ok(mesh)
    }

    pub fn face_vertices(&self, face: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.face_vertices(face);
        ((b - a).cross(&(c - a))).norm() * 0.5
    }

    /// Unit outward normal of a face.
    pub fn face_normal(&self, face: usize) -> Vector3<f64> {
        let [a, b, c] = self.face_vertices(face);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn face_centroid(&self, face: usize) -> Point3<f64> {
        let [a, b, c] = self.face_vertices(face);
        Point3::from((a.coords + b.coords + c.coords) / 3.0)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Volume enclosed by the hull via the divergence theorem. Positive for
    /// outward-wound watertight meshes.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|&[a, b, c]| {
                let (a, b, c) = (
                    self.vertices[a].coords,
                    self.vertices[b].coords,
                    self.vertices[c].coords,
                );
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            for i in 0..3 {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }

    pub fn transform(&mut self, t: &RigidTransform) {
        for v in self.vertices.iter_mut() {
            *v = t.apply(v);
        }
    }

    /// Checks that every undirected edge is shared by exactly two faces with
    /// opposite winding. Returns the offending edges otherwise.
    pub fn check_watertight(&self) -> Result<()> {
        use std::collections::HashMap;
        // (min, max) -> (forward count, reverse count)
        let mut edges: HashMap<(usize, usize), (u32, u32)> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let entry = edges.entry(key).or_insert((0, 0));
                if a < b {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
            }
        }
        let mut bad: Vec<(usize, usize)> = edges
            .iter()
            .filter(|(_, &(fwd, rev))| fwd != 1 || rev != 1)
            .map(|(&e, _)| e)
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            bad.sort_unstable();
            let count = bad.len();
            bad.truncate(8);
            Err(Error::NotWatertight { count, sample: bad })
        }
    }

    /// SHA-256 over the canonical byte layout (vertex f64 LE triples, then
    /// face u32 LE triples). Used for staleness checks on derived artifacts.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for v in &self.vertices {
            for c in 0..3 {
                h.update(v[c].to_le_bytes());
            }
        }
        for f in &self.faces {
            for &vi in f {
                h.update((vi as u32).to_le_bytes());
            }
        }
        h.finalize().into()
    }
}

pub fn hash_hex(hash: &[u8; 32]) -> String {
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

/// Loads an STL file (binary or ASCII), deduplicates vertices exactly, and
/// validates that the result is a watertight oriented hull. An optional
/// rigid transform maps the file's frame into the vehicle frame.
pub fn load_mesh(path: &std::path::Path, transform: Option<&RigidTransform>) -> Result<Mesh> {
    let bytes = std::fs::read(path)?;
    let tris = stl::parse_stl(&bytes)?;
    let mut mesh = stl::index_triangles(&tris)?;
    if let Some(t) = transform {
        mesh.transform(t);
    }
    mesh.check_watertight()?;
    Ok(mesh)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn unit_cube() -> Mesh {
        // Centered at the origin, side 1, outward winding.
        let p = |x: f64, y: f64, z: f64| Point3::new(x, y, z);
        let vertices = vec![
            p(-0.5, -0.5, -0.5),
            p(0.5, -0.5, -0.5),
            p(0.5, 0.5, -0.5),
            p(-0.5, 0.5, -0.5),
            p(-0.5, -0.5, 0.5),
            p(0.5, -0.5, 0.5),
            p(0.5, 0.5, 0.5),
            p(-0.5, 0.5, 0.5),
        ];
        let faces = vec![
            [0, 3, 2],
            [0, 2, 1], // bottom (-z)
            [4, 5, 6],
            [4, 6, 7], // top (+z)
            [1, 2, 6],
            [1, 6, 5], // +x
            [0, 4, 7],
            [0, 7, 3], // -x
            [2, 3, 7],
            [2, 7, 6], // +y
            [0, 1, 5],
            [0, 5, 4], // -y
        ];
        Mesh::new(vertices, faces).unwrap()
    }

    #[test]
    fn cube_area_volume_watertight() {
        let m = unit_cube();
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.faces.len(), 12);
        assert_relative_eq!(m.total_area(), 6.0, epsilon = 1e-12);
        assert_relative_eq!(m.signed_volume(), 1.0, epsilon = 1e-12);
        m.check_watertight().unwrap();
    }

    #[test]
    fn open_mesh_reports_boundary_edges() {
        let mut m = unit_cube();
        m.faces.pop(); // drop one bottom... actually last face is -y half
        let err = m.check_watertight().unwrap_err();
        match err {
            Error::NotWatertight { count, sample } => {
                assert_eq!(count, 3);
                assert_eq!(sample.len(), 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn degenerate_face_rejected() {
        let vertices = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        let err = Mesh::new(vertices, vec![[0, 1, 2]]).unwrap_err();
        assert!(matches!(err, Error::DegenerateFace { face: 0 }));
    }

    #[test]
    fn transform_rotates_and_translates() {
        let mut m = unit_cube();
        // 90 degrees about +Z maps +X to +Y.
        let rot = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        m.transform(&RigidTransform {
            rotation: rot,
            translation: Vector3::new(10.0, 0.0, 0.0),
        });
        let (lo, hi) = m.bounding_box();
        assert_relative_eq!(lo.x, 9.5, epsilon = 1e-12);
        assert_relative_eq!(hi.x, 10.5, epsilon = 1e-12);
        assert_relative_eq!(m.signed_volume(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn content_hash_tracks_geometry() {
        let m = unit_cube();
        let mut m2 = m.clone();
        assert_eq!(m.content_hash(), m2.content_hash());
        m2.vertices[0].x += 1e-9;
        assert_ne!(m.content_hash(), m2.content_hash());
    }
}
