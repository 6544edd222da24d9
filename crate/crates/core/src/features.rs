//! Feature assembly for the force predictor.
//!
//! Global features describe the flow condition and reference dims of the
//! vehicle; surface features describe one patch under that condition.
//! Index constants are exported so augmentation and tests can address
//! entries by name instead of magic numbers.

use nalgebra::Vector3;

use crate::defaults::{
    FROUDE_DEPTH_MAX, GLOBAL_DIM, REYNOLDS_SCALE, SURFACE_DIM, WATER_VISCOSITY,
};
use crate::geometry::{SurfacePatch, VehicleSpec, SEMANTIC_COUNT};

pub const G_SPEED: usize = 0;
pub const G_DENSITY: usize = 1;
pub const G_DEPTH: usize = 2;
pub const G_VX: usize = 3;
pub const G_VY: usize = 4;
pub const G_VZ: usize = 5;
pub const G_FROUDE_LENGTH: usize = 6;
pub const G_FROUDE_DEPTH: usize = 7;
pub const G_REYNOLDS: usize = 8;
pub const G_LENGTH: usize = 9;
pub const G_WIDTH: usize = 10;
pub const G_HEIGHT: usize = 11;

pub const S_POS_X: usize = SEMANTIC_COUNT;
pub const S_POS_Y: usize = SEMANTIC_COUNT + 1;
pub const S_POS_Z: usize = SEMANTIC_COUNT + 2;
pub const S_NORMAL_X: usize = SEMANTIC_COUNT + 3;
pub const S_NORMAL_Y: usize = SEMANTIC_COUNT + 4;
pub const S_NORMAL_Z: usize = SEMANTIC_COUNT + 5;
pub const S_AREA: usize = SEMANTIC_COUNT + 6;
pub const S_SUB_FRAC: usize = SEMANTIC_COUNT + 7;
pub const S_SUB_DEPTH: usize = SEMANTIC_COUNT + 8;
pub const S_PROJ_AREA: usize = SEMANTIC_COUNT + 9;

/// Submerged fraction and mean normalized submergence depth of a patch,
/// from its depth-sample heights. A sample at exactly the waterline counts
/// as submerged. Sums run in sample order so results are reproducible to
/// the bit.
pub fn submergence_metrics(sample_z: &[f64], z_water: f64, h_sub: f64) -> (f64, f64) {
    if sample_z.is_empty() {
        return (0.0, 0.0);
    }
    let mut submerged = 0usize;
    let mut depth_sum = 0.0;
    for &z in sample_z {
        if z_water >= z {
            submerged += 1;
            depth_sum += (z_water - z) / h_sub;
        }
    }
    if submerged == 0 {
        return (0.0, 0.0);
    }
    (
        submerged as f64 / sample_z.len() as f64,
        depth_sum / submerged as f64,
    )
}

/// Area of the patch projected onto the flow direction. Zero when the
/// vehicle is at rest.
pub fn projected_area(area: f64, normal: &Vector3<f64>, velocity: &Vector3<f64>) -> f64 {
    let speed = velocity.norm();
    if speed == 0.0 {
        return 0.0;
    }
    area * (normal.dot(velocity) / speed).abs()
}

/// Global condition features. Dimensionless groups are zeroed at rest, and
/// the depth Froude number is clamped to a fixed ceiling so shallow water
/// does not blow up the input scale.
pub fn global_features(
    velocity: &Vector3<f64>,
    density: f64,
    depth: f64,
    gravity: f64,
    spec: &VehicleSpec,
) -> [f64; GLOBAL_DIM] {
    let speed = velocity.norm();
    let l = spec.length_ref;
    let (froude_length, froude_depth, reynolds) = if speed > 0.0 {
        (
            speed / (gravity * l).sqrt(),
            (speed / (gravity * depth).sqrt()).min(FROUDE_DEPTH_MAX),
            density * speed * l / WATER_VISCOSITY * REYNOLDS_SCALE,
        )
    } else {
        (0.0, 0.0, 0.0)
    };
    [
        speed,
        density,
        depth,
        velocity.x,
        velocity.y,
        velocity.z,
        froude_length,
        froude_depth,
        reynolds,
        l,
        spec.width_ref,
        spec.height_ref,
    ]
}

/// Per-surface features for one patch under the given condition. Lengths
/// and areas are normalized by the vehicle's reference dims.
pub fn surface_features(
    patch: &SurfacePatch,
    spec: &VehicleSpec,
    velocity: &Vector3<f64>,
    sub_frac: f64,
    sub_depth_norm: f64,
) -> [f64; SURFACE_DIM] {
    let mut f = [0.0; SURFACE_DIM];
    f[patch.semantic.one_hot_index()] = 1.0;
    f[S_POS_X] = patch.centroid.x / spec.length_ref;
    f[S_POS_Y] = patch.centroid.y / spec.width_ref;
    f[S_POS_Z] = patch.centroid.z / spec.height_ref;
    f[S_NORMAL_X] = patch.normal.x;
    f[S_NORMAL_Y] = patch.normal.y;
    f[S_NORMAL_Z] = patch.normal.z;
    let area_scale = spec.length_ref * spec.height_ref;
    f[S_AREA] = patch.area / area_scale;
    f[S_SUB_FRAC] = sub_frac;
    f[S_SUB_DEPTH] = sub_depth_norm;
    f[S_PROJ_AREA] = projected_area(patch.area, &patch.normal, velocity) / area_scale;
    f
}

/// Sanity bounds used by dataset assembly: semantic one-hot blocks must be
/// exactly one-hot and submergence values must stay in range.
pub fn check_surface_features(f: &[f64; SURFACE_DIM]) -> bool {
    let hot: f64 = f[..SEMANTIC_COUNT].iter().sum();
    hot == 1.0
        && f[..SEMANTIC_COUNT].iter().all(|&x| x == 0.0 || x == 1.0)
        && (0.0..=1.0).contains(&f[S_SUB_FRAC])
        && f[S_SUB_DEPTH] >= 0.0
}
