//! Built-in demonstration vehicles.
//!
//! Two small hulls exercise the full pipeline out of the box: a
//! box-and-cylinders skid-steer ("mini-husky", 13 patches with
//! depth-stratified front and rear bands) and a wider flat-slab UGV
//! ("mini-warthog", 10 patches with a split underbody). Both sit with wheel
//! bottoms exactly on the z = 0 ground plane.

use nalgebra::Point3;
use std::collections::HashMap;

use super::patches::{PatchLabel, SemanticType};
use super::vehicle::VehicleSpec;
use super::Mesh;

pub struct ToyVehicle {
    pub mesh: Mesh,
    pub labels: Vec<PatchLabel>,
    pub spec: VehicleSpec,
}

const WHEEL_SEGMENTS: usize = 16;

struct MeshBuilder {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    cache: HashMap<[u64; 3], usize>,
}

impl MeshBuilder {
    fn new() -> Self {
        MeshBuilder {
            vertices: Vec::new(),
            faces: Vec::new(),
            cache: HashMap::new(),
        }
    }

    fn vertex(&mut self, p: Point3<f64>) -> usize {
        let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
        *self.cache.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            self.vertices.len() - 1
        })
    }

    /// Pushes a quad as two triangles; corners wind counterclockwise seen
    /// from outside. Returns the two face indices.
    fn quad(&mut self, a: Point3<f64>, b: Point3<f64>, c: Point3<f64>, d: Point3<f64>) -> [usize; 2] {
        let (ia, ib, ic, id) = (self.vertex(a), self.vertex(b), self.vertex(c), self.vertex(d));
        self.faces.push([ia, ib, ic]);
        self.faces.push([ia, ic, id]);
        [self.faces.len() - 2, self.faces.len() - 1]
    }

    fn triangle(&mut self, a: Point3<f64>, b: Point3<f64>, c: Point3<f64>) -> usize {
        let (ia, ib, ic) = (self.vertex(a), self.vertex(b), self.vertex(c));
        self.faces.push([ia, ib, ic]);
        self.faces.len() - 1
    }

    fn finish(self) -> Mesh {
        Mesh::new(self.vertices, self.faces).expect("builder produced invalid mesh")
    }
}

/// Which side of a gridded box a cell face belongs to, with its cell
/// coordinates along that side's two axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BoxSide {
    XNeg,
    XPos,
    YNeg,
    YPos,
    ZNeg,
    ZPos,
}

/// Emits a rectangular box whose surface is subdivided at the given axis
/// cut levels, so faces on adjacent sides share edges exactly. Returns face
/// indices tagged by side and cell.
fn grid_box(
    b: &mut MeshBuilder,
    xs: &[f64],
    ys: &[f64],
    zs: &[f64],
) -> Vec<(BoxSide, usize, usize, [usize; 2])> {
    assert!(xs.len() >= 2 && ys.len() >= 2 && zs.len() >= 2);
    let (x0, x1) = (xs[0], *xs.last().unwrap());
    let (y0, y1) = (ys[0], *ys.last().unwrap());
    let (z0, z1) = (zs[0], *zs.last().unwrap());
    let mut out = Vec::new();
    let p = Point3::new;
    // Each side gets (u, v) axes with u cross v pointing outward.
    for i in 0..ys.len() - 1 {
        for j in 0..xs.len() - 1 {
            // z = z0, u = y, v = x
            let f = b.quad(
                p(xs[j], ys[i], z0),
                p(xs[j], ys[i + 1], z0),
                p(xs[j + 1], ys[i + 1], z0),
                p(xs[j + 1], ys[i], z0),
            );
            out.push((BoxSide::ZNeg, i, j, f));
        }
    }
    for i in 0..xs.len() - 1 {
        for j in 0..ys.len() - 1 {
            // z = z1, u = x, v = y
            let f = b.quad(
                p(xs[i], ys[j], z1),
                p(xs[i + 1], ys[j], z1),
                p(xs[i + 1], ys[j + 1], z1),
                p(xs[i], ys[j + 1], z1),
            );
            out.push((BoxSide::ZPos, i, j, f));
        }
    }
    for i in 0..ys.len() - 1 {
        for j in 0..zs.len() - 1 {
            // x = x1, u = y, v = z
            let f = b.quad(
                p(x1, ys[i], zs[j]),
                p(x1, ys[i + 1], zs[j]),
                p(x1, ys[i + 1], zs[j + 1]),
                p(x1, ys[i], zs[j + 1]),
            );
            out.push((BoxSide::XPos, i, j, f));
        }
    }
    for i in 0..zs.len() - 1 {
        for j in 0..ys.len() - 1 {
            // x = x0, u = z, v = y
            let f = b.quad(
                p(x0, ys[j], zs[i]),
                p(x0, ys[j], zs[i + 1]),
                p(x0, ys[j + 1], zs[i + 1]),
                p(x0, ys[j + 1], zs[i]),
            );
            out.push((BoxSide::XNeg, i, j, f));
        }
    }
    for i in 0..zs.len() - 1 {
        for j in 0..xs.len() - 1 {
            // y = y1, u = z, v = x
            let f = b.quad(
                p(xs[j], y1, zs[i]),
                p(xs[j], y1, zs[i + 1]),
                p(xs[j + 1], y1, zs[i + 1]),
                p(xs[j + 1], y1, zs[i]),
            );
            out.push((BoxSide::YPos, i, j, f));
        }
    }
    for i in 0..xs.len() - 1 {
        for j in 0..zs.len() - 1 {
            // y = y0, u = x, v = z
            let f = b.quad(
                p(xs[i], y0, zs[j]),
                p(xs[i + 1], y0, zs[j]),
                p(xs[i + 1], y0, zs[j + 1]),
                p(xs[i], y0, zs[j + 1]),
            );
            out.push((BoxSide::YNeg, i, j, f));
        }
    }
    out
}

fn snap(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        0.0
    } else if (v - 1.0).abs() < 1e-12 {
        1.0
    } else if (v + 1.0).abs() < 1e-12 {
        -1.0
    } else {
        v
    }
}

/// Emits a regular-polygon prism along the Y axis (a wheel). Returns all
/// face indices.
fn wheel(b: &mut MeshBuilder, cx: f64, cy: f64, cz: f64, r: f64, half_width: f64) -> Vec<usize> {
    let n = WHEEL_SEGMENTS;
    let ring = |k: usize, y: f64| {
        let t = 2.0 * std::f64::consts::PI * (k % n) as f64 / n as f64;
        Point3::new(cx + r * snap(t.cos()), y, cz + r * snap(t.sin()))
    };
    let (y0, y1) = (cy - half_width, cy + half_width);
    let mut faces = Vec::new();
    for k in 0..n {
        let a = ring(k, y0);
        let bb = ring(k + 1, y0);
        let c = ring(k + 1, y1);
        let d = ring(k, y1);
        faces.push(b.triangle(a, d, c));
        faces.push(b.triangle(a, c, bb));
    }
    for k in 1..n - 1 {
        faces.push(b.triangle(ring(0, y0), ring(k, y0), ring(k + 1, y0)));
        faces.push(b.triangle(ring(0, y1), ring(k + 1, y1), ring(k, y1)));
    }
    faces
}

fn label(name: &str, semantic: SemanticType, faces: Vec<usize>) -> PatchLabel {
    PatchLabel {
        name: name.into(),
        semantic,
        faces,
    }
}

fn collect(tagged: &[(BoxSide, usize, usize, [usize; 2])], want: impl Fn(BoxSide, usize, usize) -> bool) -> Vec<usize> {
    let mut faces = Vec::new();
    for &(side, i, j, f) in tagged {
        if want(side, i, j) {
            faces.extend_from_slice(&f);
        }
    }
    faces
}

/// Box-and-cylinders skid-steer, 13 patches: three depth bands on front and
/// rear, two sides, one bottom plate, four wheels. Deck stays unlabeled.
pub fn mini_husky() -> ToyVehicle {
    let mut b = MeshBuilder::new();
    let xs = [-0.45, 0.45];
    let ys = [-0.285, 0.285];
    let zs = [0.12, 0.21, 0.30, 0.39];
    let body = grid_box(&mut b, &xs, &ys, &zs);

    // Band keys follow grid_box tag axes: XPos cells are (y cell, z cell),
    // XNeg cells are (z cell, y cell).
    let front_band = |z: usize| collect(&body, |s, _, j| s == BoxSide::XPos && j == z);
    let rear_band = |z: usize| collect(&body, |s, i, _| s == BoxSide::XNeg && i == z);
    let mut labels = vec![
        label("bottom", SemanticType::Bottom, collect(&body, |s, _, _| s == BoxSide::ZNeg)),
        label("front_lower", SemanticType::Front, front_band(0)),
        label("front_mid", SemanticType::Front, front_band(1)),
        label("front_upper", SemanticType::Front, front_band(2)),
        label("rear_lower", SemanticType::Rear, rear_band(0)),
        label("rear_mid", SemanticType::Rear, rear_band(1)),
        label("rear_upper", SemanticType::Rear, rear_band(2)),
        label("side_left", SemanticType::Side, collect(&body, |s, _, _| s == BoxSide::YPos)),
        label("side_right", SemanticType::Side, collect(&body, |s, _, _| s == BoxSide::YNeg)),
    ];

    let (r, hw, wx, wy, wz) = (0.165, 0.02, 0.28, 0.31, 0.165);
    labels.push(label("wheel_fl", SemanticType::Wheel, wheel(&mut b, wx, wy, wz, r, hw)));
    labels.push(label("wheel_fr", SemanticType::Wheel, wheel(&mut b, wx, -wy, wz, r, hw)));
    labels.push(label("wheel_rl", SemanticType::Wheel, wheel(&mut b, -wx, wy, wz, r, hw)));
    labels.push(label("wheel_rr", SemanticType::Wheel, wheel(&mut b, -wx, -wy, wz, r, hw)));

    let spec = VehicleSpec {
        name: "mini-husky".into(),
        length_ref: 0.9,
        width_ref: 0.67,
        height_ref: 0.39,
        submergence_ref: 0.366,
        ground_z: None,
        mirror_pairs: vec![
            ("side_left".into(), "side_right".into()),
            ("wheel_fl".into(), "wheel_fr".into()),
            ("wheel_rl".into(), "wheel_rr".into()),
        ],
        swap_pairs: vec![
            ("front_lower".into(), "rear_lower".into()),
            ("front_mid".into(), "rear_mid".into()),
            ("front_upper".into(), "rear_upper".into()),
            ("wheel_fl".into(), "wheel_rl".into()),
            ("wheel_fr".into(), "wheel_rr".into()),
        ],
        symmetry_plane_patches: vec![
            "bottom".into(),
            "front_lower".into(),
            "front_mid".into(),
            "front_upper".into(),
            "rear_lower".into(),
            "rear_mid".into(),
            "rear_upper".into(),
        ],
    };
    ToyVehicle {
        mesh: b.finish(),
        labels,
        spec,
    }
}

/// Flat-slab UGV, 10 patches: single front and rear plates, two sides, a
/// laterally split underbody, four wheels.
pub fn mini_warthog() -> ToyVehicle {
    let mut b = MeshBuilder::new();
    let xs = [-0.7, 0.7];
    let ys = [-0.55, 0.0, 0.55];
    let zs = [0.25, 0.83];
    let body = grid_box(&mut b, &xs, &ys, &zs);

    let mut labels = vec![
        // ZNeg tags are (i = y cell, j = x cell); y cell 0 is y < 0.
        label("underbody_right", SemanticType::Bottom, collect(&body, |s, i, _| s == BoxSide::ZNeg && i == 0)),
        label("underbody_left", SemanticType::Bottom, collect(&body, |s, i, _| s == BoxSide::ZNeg && i == 1)),
        label("front", SemanticType::Front, collect(&body, |s, _, _| s == BoxSide::XPos)),
        label("rear", SemanticType::Rear, collect(&body, |s, _, _| s == BoxSide::XNeg)),
        label("side_left", SemanticType::Side, collect(&body, |s, _, _| s == BoxSide::YPos)),
        label("side_right", SemanticType::Side, collect(&body, |s, _, _| s == BoxSide::YNeg)),
    ];
    let (r, hw, wx, wy, wz) = (0.25, 0.04, 0.45, 0.61, 0.25);
    labels.push(label("wheel_fl", SemanticType::Wheel, wheel(&mut b, wx, wy, wz, r, hw)));
    labels.push(label("wheel_fr", SemanticType::Wheel, wheel(&mut b, wx, -wy, wz, r, hw)));
    labels.push(label("wheel_rl", SemanticType::Wheel, wheel(&mut b, -wx, wy, wz, r, hw)));
    labels.push(label("wheel_rr", SemanticType::Wheel, wheel(&mut b, -wx, -wy, wz, r, hw)));

    let spec = VehicleSpec {
        name: "mini-warthog".into(),
        length_ref: 1.4,
        width_ref: 1.3,
        height_ref: 0.83,
        submergence_ref: 0.78,
        ground_z: None,
        mirror_pairs: vec![
            ("side_left".into(), "side_right".into()),
            ("underbody_left".into(), "underbody_right".into()),
            ("wheel_fl".into(), "wheel_fr".into()),
            ("wheel_rl".into(), "wheel_rr".into()),
        ],
        swap_pairs: vec![
            ("front".into(), "rear".into()),
            ("wheel_fl".into(), "wheel_rl".into()),
            ("wheel_fr".into(), "wheel_rr".into()),
        ],
        symmetry_plane_patches: vec!["front".into(), "rear".into()],
    };
    ToyVehicle {
        mesh: b.finish(),
        labels,
        spec,
    }
}

/// The built-in vehicles by name.
pub fn by_name(name: &str) -> Option<ToyVehicle> {
    match name {
        "mini-husky" => Some(mini_husky()),
        "mini-warthog" => Some(mini_warthog()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::patches::decompose_patches;
    use approx::assert_relative_eq;

    fn wheel_volume(r: f64, width: f64) -> f64 {
        let n = WHEEL_SEGMENTS as f64;
        0.5 * n * r * r * (2.0 * std::f64::consts::PI / n).sin() * width
    }

    #[test]
    fn husky_is_watertight_with_13_patches() {
        let v = mini_husky();
        v.mesh.check_watertight().unwrap();
        assert_eq!(v.labels.len(), 13);
        let patches = decompose_patches(&v.mesh, &v.labels).unwrap();
        v.spec.validate(&v.labels).unwrap();
        let expected = 0.9 * 0.57 * 0.27 + 4.0 * wheel_volume(0.165, 0.04);
        assert_relative_eq!(v.mesh.signed_volume(), expected, epsilon = 1e-12);
        // Wheels are closed surfaces: fallback normal, flagged.
        for p in patches.iter().filter(|p| p.name.starts_with("wheel")) {
            assert!(p.normal_fallback);
        }
        // Front bands face +X and stack in z.
        let front_mid = patches.iter().find(|p| p.name == "front_mid").unwrap();
        assert_relative_eq!(front_mid.normal.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(front_mid.centroid.z, 0.255, epsilon = 1e-12);
    }

    #[test]
    fn warthog_is_watertight_with_10_patches() {
        let v = mini_warthog();
        v.mesh.check_watertight().unwrap();
        assert_eq!(v.labels.len(), 10);
        let patches = decompose_patches(&v.mesh, &v.labels).unwrap();
        v.spec.validate(&v.labels).unwrap();
        let expected = 1.4 * 1.1 * 0.58 + 4.0 * wheel_volume(0.25, 0.08);
        assert_relative_eq!(v.mesh.signed_volume(), expected, epsilon = 1e-12);
        let ul = patches.iter().find(|p| p.name == "underbody_left").unwrap();
        assert!(ul.centroid.y > 0.0);
        assert_relative_eq!(ul.normal.z, -1.0, epsilon = 1e-12);
        assert_relative_eq!(ul.area, 1.4 * 0.55, epsilon = 1e-12);
    }

    #[test]
    fn wheel_bottoms_touch_ground() {
        for v in [mini_husky(), mini_warthog()] {
            let min_z = v
                .mesh
                .vertices
                .iter()
                .map(|p| p.z)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(min_z, 0.0, "{}", v.spec.name);
        }
    }

    #[test]
    fn every_labeled_face_exists_once() {
        for v in [mini_husky(), mini_warthog()] {
            let mut seen = vec![false; v.mesh.faces.len()];
            for l in &v.labels {
                for &f in &l.faces {
                    assert!(!seen[f], "face {f} labeled twice in {}", v.spec.name);
                    seen[f] = true;
                }
            }
        }
    }
}
