//! Rigid-body kinematics recovered from tracked poses.

use nalgebra::{Quaternion, Vector3};
use serde::Serialize;

use super::trace::{savgol_derivative, TrialTrace};
use crate::defaults::{SG_POLYORDER, SG_WINDOW};
use crate::error::Result;

/// World-frame marker velocity by filtered differentiation of each
/// position component.
pub fn velocity_series(trace: &TrialTrace, dt: f64) -> Result<Vec<Vector3<f64>>> {
    let get = |f: fn(&nalgebra::Point3<f64>) -> f64| -> Vec<f64> {
        trace.positions.iter().map(f).collect()
    };
    let vx = savgol_derivative(&get(|p| p.x), SG_WINDOW, SG_POLYORDER, dt)?;
    let vy = savgol_derivative(&get(|p| p.y), SG_WINDOW, SG_POLYORDER, dt)?;
    let vz = savgol_derivative(&get(|p| p.z), SG_WINDOW, SG_POLYORDER, dt)?;
    Ok((0..vx.len())
        .map(|k| Vector3::new(vx[k], vy[k], vz[k]))
        .collect())
}

/// World-frame angular velocity: the vector part of 2 q_dot q*, with the
/// quaternion series hemisphere-aligned before differentiation.
pub fn angular_velocity_series(trace: &TrialTrace, dt: f64) -> Result<Vec<Vector3<f64>>> {
    let mut q: Vec<Quaternion<f64>> = trace
        .orientations
        .iter()
        .map(|u| *u.as_ref())
        .collect();
    for i in 1..q.len() {
        if q[i - 1].dot(&q[i]) < 0.0 {
            q[i] = -q[i];
        }
    }
    let comp = |f: fn(&Quaternion<f64>) -> f64| -> Vec<f64> { q.iter().map(f).collect() };
    let dw = savgol_derivative(&comp(|q| q.w), SG_WINDOW, SG_POLYORDER, dt)?;
    let di = savgol_derivative(&comp(|q| q.i), SG_WINDOW, SG_POLYORDER, dt)?;
    let dj = savgol_derivative(&comp(|q| q.j), SG_WINDOW, SG_POLYORDER, dt)?;
    let dk = savgol_derivative(&comp(|q| q.k), SG_WINDOW, SG_POLYORDER, dt)?;
    Ok((0..q.len())
        .map(|t| {
            let qdot = Quaternion::new(dw[t], di[t], dj[t], dk[t]);
            let w = qdot * q[t].conjugate();
            2.0 * w.vector()
        })
        .collect())
}

/// Translational velocity transferred from the tracked marker to the
/// center of mass: v + omega x r.
pub fn com_velocity(
    v_marker: &Vector3<f64>,
    omega: &Vector3<f64>,
    r_cp: &Vector3<f64>,
) -> Vector3<f64> {
    v_marker + omega.cross(r_cp)
}

/// Effective water depth over the vehicle's ground plane at each step.
/// The body-origin altitude is the marker altitude minus the rotated
/// body-to-marker offset; the quiescent depth is the far-field level.
pub fn water_level_series(trace: &TrialTrace, marker_offset: &Vector3<f64>) -> Vec<f64> {
    trace
        .positions
        .iter()
        .zip(&trace.orientations)
        .map(|(p, q)| {
            let body_alt = p.z - (q * marker_offset).z;
            trace.depth - body_alt
        })
        .collect()
}

/// A contiguous run of steady planar travel, with predicted forces filled
/// in afterwards by the validation suite.
#[derive(Debug, Clone, Serialize)]
pub struct PlanarSection {
    pub start: usize,
    /// Exclusive end index.
    pub end: usize,
    pub duration: f64,
    pub mean_speed: f64,
    pub mean_vz: f64,
    pub mean_depth: f64,
    pub fx: Vec<f64>,
    pub fz: Vec<f64>,
}

/// Maximal contiguous runs where the vertical velocity stays inside the
/// limit and the run outlasts the minimum duration.
pub fn extract_planar_sections(
    velocities: &[Vector3<f64>],
    depths: &[f64],
    dt: f64,
    min_duration: f64,
    vz_limit: f64,
) -> Vec<PlanarSection> {
    let mut sections = Vec::new();
    let mut start = None;
    for k in 0..=velocities.len() {
        let planar = k < velocities.len() && velocities[k].z.abs() < vz_limit;
        match (planar, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                push_section(&mut sections, velocities, depths, s, k, dt, min_duration);
                start = None;
            }
            _ => {}
        }
    }
    sections
}

fn push_section(
    sections: &mut Vec<PlanarSection>,
    velocities: &[Vector3<f64>],
    depths: &[f64],
    start: usize,
    end: usize,
    dt: f64,
    min_duration: f64,
) {
    let duration = (end - start).saturating_sub(1) as f64 * dt;
    if duration <= min_duration {
        return;
    }
    let n = (end - start) as f64;
    let mean_speed = velocities[start..end].iter().map(|v| v.norm()).sum::<f64>() / n;
    let mean_vz = velocities[start..end].iter().map(|v| v.z).sum::<f64>() / n;
    let mean_depth = depths[start..end].iter().sum::<f64>() / n;
    sections.push(PlanarSection {
        start,
        end,
        duration,
        mean_speed,
        mean_vz,
        mean_depth,
        fx: Vec::new(),
        fz: Vec::new(),
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Point3, UnitQuaternion};

    #[test]
    fn com_velocity_hand_cases() {
        let v = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(com_velocity(&v, &Vector3::zeros(), &Vector3::new(0.2, 0.0, -0.63)), v);
        let corrected = com_velocity(
            &Vector3::zeros(),
            &Vector3::new(0.0, 0.0, 1.0),
            &Vector3::new(0.2, 0.0, -0.63),
        );
        assert_relative_eq!(corrected.x, 0.0, epsilon = 1e-15);
        assert_relative_eq!(corrected.y, 0.2, epsilon = 1e-15);
        assert_relative_eq!(corrected.z, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn marker_correction_recovers_com_velocity_exactly() {
        // A rigid body spinning at constant omega about a translating COM.
        let omega = Vector3::new(0.3, -0.2, 0.8);
        let v_com = Vector3::new(1.2, 0.4, -0.1);
        let r_marker_body = Vector3::new(-0.2, 0.0, 0.63);
        for &t in &[0.0, 0.7, 1.9] {
            let q = UnitQuaternion::from_scaled_axis(omega * t);
            let r_world = q * r_marker_body;
            let v_marker = v_com + omega.cross(&r_world);
            let restored = com_velocity(&v_marker, &omega, &(-r_world));
            assert_relative_eq!(restored.x, v_com.x, epsilon = 1e-9);
            assert_relative_eq!(restored.y, v_com.y, epsilon = 1e-9);
            assert_relative_eq!(restored.z, v_com.z, epsilon = 1e-9);
        }
    }

    #[test]
    fn angular_velocity_from_quaternions_matches_truth() {
        let omega = Vector3::new(0.25, -0.4, 0.9);
        let rate = 120.0;
        let n = 240;
        let trace = TrialTrace {
            times: (0..n).map(|k| k as f64 / rate).collect(),
            positions: vec![Point3::origin(); n],
            orientations: (0..n)
                .map(|k| UnitQuaternion::from_scaled_axis(omega * (k as f64 / rate)))
                .collect(),
            depth: 0.2,
            direction: "in".into(),
            command_speed: 0.0,
        };
        let series = angular_velocity_series(&trace, 1.0 / rate).unwrap();
        for w in &series[10..n - 10] {
            assert_relative_eq!(w.x, omega.x, epsilon = 1e-3);
            assert_relative_eq!(w.y, omega.y, epsilon = 1e-3);
            assert_relative_eq!(w.z, omega.z, epsilon = 1e-3);
        }
    }

    #[test]
    fn water_level_follows_altitude_and_pitch() {
        let marker_offset = Vector3::new(-0.2, 0.0, 0.63);
        let flat = TrialTrace {
            times: vec![0.0, 0.1],
            positions: vec![Point3::new(0.0, 0.0, 0.63), Point3::new(1.0, 0.0, 0.63)],
            orientations: vec![UnitQuaternion::identity(); 2],
            depth: 0.30,
            direction: "in".into(),
            command_speed: 1.0,
        };
        let series = water_level_series(&flat, &marker_offset);
        assert_relative_eq!(series[0], 0.30, epsilon = 1e-12);
        assert_relative_eq!(series[1], 0.30, epsilon = 1e-12);

        // Pitch about y moves the marker relative to the body origin by
        // the rotated offset.
        let theta: f64 = 0.2;
        let q = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), theta);
        let pitched = TrialTrace {
            orientations: vec![q; 2],
            ..flat.clone()
        };
        let series_p = water_level_series(&pitched, &marker_offset);
        let expected_offset_z = (q * marker_offset).z;
        assert_relative_eq!(
            series_p[0],
            0.30 - (0.63 - expected_offset_z),
            epsilon = 1e-12
        );
        assert!((series_p[0] - series[0]).abs() > 1e-3);
    }

    #[test]
    fn sections_select_the_flat_interval() {
        let dt = 1.0 / 111.0;
        let mut v = Vec::new();
        v.extend(std::iter::repeat(Vector3::new(1.0, 0.0, -0.5)).take(30));
        v.extend(std::iter::repeat(Vector3::new(1.0, 0.0, 0.0)).take(50));
        v.extend(std::iter::repeat(Vector3::new(1.0, 0.0, 0.5)).take(30));
        let depths = vec![0.2; v.len()];
        let sections = extract_planar_sections(&v, &depths, dt, 0.2, 0.05);
        assert_eq!(sections.len(), 1);
        let s = &sections[0];
        assert_eq!((s.start, s.end), (30, 80));
        assert_relative_eq!(s.mean_speed, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.mean_vz, 0.0, epsilon = 1e-12);
        assert_relative_eq!(s.mean_depth, 0.2, epsilon = 1e-12);

        let choppy: Vec<Vector3<f64>> =
            std::iter::repeat(Vector3::new(1.0, 0.0, 0.1)).take(100).collect();
        assert!(extract_planar_sections(&choppy, &depths[..100], dt, 0.2, 0.05).is_empty());

        let brief: Vec<Vector3<f64>> =
            std::iter::repeat(Vector3::new(1.0, 0.0, 0.0)).take(16).collect();
        assert!(extract_planar_sections(&brief, &depths[..16], dt, 0.2, 0.05).is_empty());
    }

    #[test]
    fn sections_are_maximal_runs() {
        let dt = 1.0 / 111.0;
        let mut v = Vec::new();
        v.extend(std::iter::repeat(Vector3::new(1.0, 0.0, 0.0)).take(30));
        v.push(Vector3::new(1.0, 0.0, 0.2));
        v.extend(std::iter::repeat(Vector3::new(1.0, 0.0, 0.0)).take(30));
        let depths = vec![0.2; v.len()];
        let sections = extract_planar_sections(&v, &depths, dt, 0.2, 0.05);
        assert_eq!(sections.len(), 2);
        assert_eq!((sections[0].start, sections[0].end), (0, 30));
        assert_eq!((sections[1].start, sections[1].end), (31, 61));
    }
}
