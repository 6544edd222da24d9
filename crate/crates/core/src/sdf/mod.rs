//! Signed distance field on a regular grid.
//!
//! The hull's bounding box is expanded by a fixed margin, the longest
//! expanded axis is divided into a fixed cell count, and that spacing is
//! reused on all axes. Node values are exact signed distances: magnitude
//! from a BVH-accelerated closest-triangle query, sign from a
//! majority-voted ray-parity test. Arbitrary-point queries interpolate
//! trilinearly; gradients are central differences of the interpolant.

pub mod bvh;
mod io;
pub mod primitives;

pub use io::{load_grid, save_grid};

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::defaults::{SDF_MARGIN, SDF_NEAR_HULL_CELLS, SDF_RESOLUTION};
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use bvh::Bvh;

#[derive(Debug, Clone, PartialEq)]
pub struct SdfGrid {
    /// Position of node (0, 0, 0): the expanded bounds minimum.
    pub origin: Point3<f64>,
    /// Expanded bounds maximum (nodes may stop one cell short on the
    /// non-longest axes).
    pub bounds_max: Point3<f64>,
    /// Uniform node spacing.
    pub spacing: f64,
    /// Node counts per axis.
    pub dims: [usize; 3],
    /// Node values, indexed `(ix * dims[1] + iy) * dims[2] + iz`. Negative
    /// strictly inside the hull.
    pub values: Vec<f64>,
    /// Nodes within the near-hull band (|value| < 2 cells).
    pub near_hull: Vec<bool>,
    /// Hash of the source mesh, for staleness checks.
    pub mesh_hash: [u8; 32],
}

impl SdfGrid {
    #[inline]
    pub fn node_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.dims[1] + iy) * self.dims[2] + iz
    }

    pub fn node_position(&self, ix: usize, iy: usize, iz: usize) -> Point3<f64> {
        Point3::new(
            self.origin.x + self.spacing * ix as f64,
            self.origin.y + self.spacing * iy as f64,
            self.origin.z + self.spacing * iz as f64,
        )
    }

    /// Trilinearly interpolated value. The point must lie inside the node
    /// lattice.
    pub fn sample(&self, p: &Point3<f64>) -> Result<f64> {
        let (cell, frac) = self.locate(p)?;
        let [ix, iy, iz] = cell;
        let [fx, fy, fz] = frac;
        let v = |dx: usize, dy: usize, dz: usize| {
            self.values[self.node_index(ix + dx, iy + dy, iz + dz)]
        };
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let c00 = lerp(v(0, 0, 0), v(1, 0, 0), fx);
        let c10 = lerp(v(0, 1, 0), v(1, 1, 0), fx);
        let c01 = lerp(v(0, 0, 1), v(1, 0, 1), fx);
        let c11 = lerp(v(0, 1, 1), v(1, 1, 1), fx);
        let c0 = lerp(c00, c10, fy);
        let c1 = lerp(c01, c11, fy);
        Ok(lerp(c0, c1, fz))
    }

    /// Central-difference gradient of the interpolated field with a half-cell
    /// step. The point needs a one-cell interior margin.
    pub fn gradient(&self, p: &Point3<f64>) -> Result<Vector3<f64>> {
        let h = self.spacing * 0.5;
        for i in 0..3 {
            let lo = self.origin[i] + self.spacing;
            let hi = self.origin[i] + self.spacing * (self.dims[i] as f64 - 2.0);
            if !(p[i] >= lo && p[i] <= hi) {
                return Err(Error::OutOfDomain {
                    point: [p.x, p.y, p.z],
                });
            }
        }
        let mut g = Vector3::zeros();
        for i in 0..3 {
            let mut hi_p = *p;
            let mut lo_p = *p;
            hi_p[i] += h;
            lo_p[i] -= h;
            g[i] = (self.sample(&hi_p)? - self.sample(&lo_p)?) / (2.0 * h);
        }
        Ok(g)
    }

    fn locate(&self, p: &Point3<f64>) -> Result<([usize; 3], [f64; 3])> {
        let mut cell = [0usize; 3];
        let mut frac = [0f64; 3];
        for i in 0..3 {
            let t = (p[i] - self.origin[i]) / self.spacing;
            let max_node = self.dims[i] as f64 - 1.0;
            if !(t >= 0.0 && t <= max_node) {
                return Err(Error::OutOfDomain {
                    point: [p.x, p.y, p.z],
                });
            }
            let c = (t.floor() as usize).min(self.dims[i] - 2);
            cell[i] = c;
            frac[i] = t - c as f64;
        }
        Ok((cell, frac))
    }
}

/// Points closer to the hull than this count as on the surface; rays cast
/// from them are degenerate in every direction, so the parity test is
/// skipped and the distance is zero.
const ON_SURFACE_EPS: f64 = 1e-12;

/// Exact signed distance via BVH nearest-triangle distance and ray-parity
/// sign. This is the evaluator used to fill grid nodes.
pub fn exact_signed_distance(bvh: &Bvh, p: &Point3<f64>) -> Result<f64> {
    let d = bvh.nearest_distance(p);
    if d <= ON_SURFACE_EPS {
        return Ok(0.0);
    }
    if point_is_inside(bvh, p)? {
        Ok(-d)
    } else {
        Ok(d)
    }
}

/// Fallback directions tried when an axis ray grazes an edge or vertex.
/// Components are arbitrary irrational-ish values so recasts stay generic.
const RECAST_DIRS: [[f64; 3]; 6] = [
    [0.5377215, 0.8612547, 0.1131239],
    [-0.7219334, 0.4178023, 0.5511217],
    [0.3318751, -0.6120937, 0.7179112],
    [0.8817341, 0.2213873, -0.4157219],
    [-0.2931178, -0.5317559, -0.7944313],
    [0.6172133, -0.7731911, 0.1457821],
];

/// Majority-voted parity inside test over the three coordinate axes.
/// Degenerate axis rays are recast along fixed fallback directions.
pub fn point_is_inside(bvh: &Bvh, p: &Point3<f64>) -> Result<bool> {
    let axes = [
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.0, 0.0),
        Vector3::new(0.0, 0.0, 1.0),
    ];
    let mut votes = 0;
    for (ai, axis) in axes.iter().enumerate() {
        let mut crossings = bvh.ray_crossings(p, axis);
        let mut attempt = 0;
        while crossings.is_none() && attempt < RECAST_DIRS.len() {
            // Offset the fallback table per axis so the three votes stay
            // independent even when all of them recast.
            let d = RECAST_DIRS[(attempt + 2 * ai) % RECAST_DIRS.len()];
            let dir = Vector3::new(d[0], d[1], d[2]);
            crossings = bvh.ray_crossings(p, &dir);
            attempt += 1;
        }
        match crossings {
            Some(n) => {
                if n % 2 == 1 {
                    votes += 1;
                }
            }
            None => {
                return Err(Error::Numeric(format!(
                    "parity test exhausted recast directions at ({}, {}, {})",
                    p.x, p.y, p.z
                )))
            }
        }
    }
    Ok(votes >= 2)
}

/// Builds the signed distance grid for a hull mesh.
pub fn build_sdf_grid(mesh: &Mesh) -> Result<SdfGrid> {
    mesh.check_watertight()?;
    let (lo, hi) = mesh.bounding_box();
    let origin = Point3::new(lo.x - SDF_MARGIN, lo.y - SDF_MARGIN, lo.z - SDF_MARGIN);
    let bounds_max = Point3::new(hi.x + SDF_MARGIN, hi.y + SDF_MARGIN, hi.z + SDF_MARGIN);
    let extent = bounds_max - origin;
    let spacing = extent.max() / SDF_RESOLUTION as f64;
    let dims = [
        (extent.x / spacing).floor() as usize + 1,
        (extent.y / spacing).floor() as usize + 1,
        (extent.z / spacing).floor() as usize + 1,
    ];
    let bvh = Bvh::build(mesh);
    let n = dims[0] * dims[1] * dims[2];
    let mut grid = SdfGrid {
        origin,
        bounds_max,
        spacing,
        dims,
        values: vec![0.0; n],
        near_hull: vec![false; n],
        mesh_hash: mesh.content_hash(),
    };
    // Node values are independent, so parallel slabs stay deterministic.
    let slab = dims[1] * dims[2];
    let results: Vec<Result<Vec<f64>>> = (0..dims[0])
        .into_par_iter()
        .map(|ix| {
            let mut vals = Vec::with_capacity(slab);
            for iy in 0..dims[1] {
                for iz in 0..dims[2] {
                    let p = grid.node_position(ix, iy, iz);
                    vals.push(exact_signed_distance(&bvh, &p)?);
                }
            }
            Ok(vals)
        })
        .collect();
    for (ix, r) in results.into_iter().enumerate() {
        let vals = r?;
        grid.values[ix * slab..(ix + 1) * slab].copy_from_slice(&vals);
    }
    let band = SDF_NEAR_HULL_CELLS * spacing;
    for (v, m) in grid.values.iter().zip(grid.near_hull.iter_mut()) {
        *m = v.abs() < band;
    }
    Ok(grid)
}
