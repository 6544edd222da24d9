//! Physics-based validation of force predictions against tracked trials.
//!
//! Trial traces carry only kinematics. The suite preprocesses them,
//! extracts steady planar sections, queries the force predictor at the
//! measured conditions, and checks the predictions against drag-speed
//! scaling and vertical-force consistency laws.

pub mod fits;
pub mod kinematics;
pub mod trace;

pub use fits::{
    fit_drag, fit_linear, fit_vertical, matched_pair_check, physical_cd, FitResult, PairPoint,
    PairStats,
};
pub use kinematics::{
    angular_velocity_series, com_velocity, extract_planar_sections, velocity_series,
    water_level_series, PlanarSection,
};
pub use trace::{read_trace, resample_uniform, savgol_derivative, write_trace, TrialTrace};

use nalgebra::{Point3, UnitQuaternion, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::defaults::{
    COM_OFFSET, GRAVITY, PAIR_MIN_SPEED, PAIR_SPEED_TOL, R2_THRESHOLD, RESAMPLE_HZ,
    SECTION_MIN_DURATION, SECTION_VZ_LIMIT, WATER_DENSITY,
};
use crate::error::{Error, Result};
use crate::geometry::VehicleSpec;

#[derive(Debug, Clone)]
pub struct ValidationConfig {
    pub rate: f64,
    pub density: f64,
    pub gravity: f64,
    /// Marker-to-COM lever arm in the body frame.
    pub r_cp: Vector3<f64>,
    pub min_duration: f64,
    pub vz_limit: f64,
    pub speed_tol: f64,
    pub min_speed: f64,
    pub r2_threshold: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            rate: RESAMPLE_HZ,
            density: WATER_DENSITY,
            gravity: GRAVITY,
            r_cp: Vector3::from(COM_OFFSET),
            min_duration: SECTION_MIN_DURATION,
            vz_limit: SECTION_VZ_LIMIT,
            speed_tol: PAIR_SPEED_TOL,
            min_speed: PAIR_MIN_SPEED,
            r2_threshold: R2_THRESHOLD,
        }
    }
}

/// One qualifying section reduced to the quantities the fits consume.
#[derive(Debug, Clone, Serialize)]
pub struct SectionPoint {
    /// Nominal quiescent depth of the trial (m).
    pub depth: f64,
    pub duration: f64,
    pub mean_speed: f64,
    pub mean_vz: f64,
    pub mean_depth: f64,
    /// Magnitude of the section-mean streamwise force (N).
    pub fx_abs: f64,
    /// Section-mean vertical force (N).
    pub fz_mean: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DepthCd {
    pub depth: f64,
    pub cd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DragTest {
    pub fits: Vec<FitResult>,
    pub physical_cd: Vec<DepthCd>,
    pub pairs: Vec<PairStats>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerticalTest {
    pub fits: Vec<FitResult>,
    /// Buoyancy intercept F_0 regressed against depth.
    pub f0_line: Option<LineFit>,
    pub mean_fz_monotonic: bool,
    pub ordering_checked: usize,
    pub ordering_correct: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub n_traces: usize,
    pub n_sections: usize,
    pub r2_threshold: f64,
    pub drag: DragTest,
    pub vertical: VerticalTest,
    pub passed: bool,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ValidationOutput {
    pub report: ValidationReport,
    pub points: Vec<SectionPoint>,
}

impl ValidationReport {
    /// Stable key-value lines for log scraping.
    pub fn summary_text(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let _ = writeln!(s, "validation.passed {}", self.passed);
        let _ = writeln!(s, "validation.traces {}", self.n_traces);
        let _ = writeln!(s, "validation.sections {}", self.n_sections);
        for f in &self.drag.fits {
            let _ = writeln!(
                s,
                "drag.fit depth {:.4} c {:.4} r2 {:.4} n {}",
                f.depth, f.coeffs[0], f.r2, f.n
            );
        }
        for c in &self.drag.physical_cd {
            let _ = writeln!(s, "drag.cd depth {:.4} cd {:.4}", c.depth, c.cd);
        }
        for p in &self.drag.pairs {
            let _ = writeln!(
                s,
                "drag.pairs depths {:.4} {:.4} n {} ratio {:.4} fit {:.4} dev_pct {:.2}",
                p.depth_a, p.depth_b, p.n_pairs, p.mean_ratio, p.fit_ratio, p.pct_dev
            );
        }
        let _ = writeln!(s, "drag.pass {}", self.drag.pass);
        for f in &self.vertical.fits {
            let _ = writeln!(
                s,
                "vertical.fit depth {:.4} f0 {:.4} cl {:.4} r2 {:.4} n {}",
                f.depth, f.coeffs[0], f.coeffs[1], f.r2, f.n
            );
        }
        if let Some(l) = &self.vertical.f0_line {
            let _ = writeln!(
                s,
                "vertical.f0_line slope {:.4} intercept {:.4} r2 {:.4}",
                l.slope, l.intercept, l.r2
            );
        }
        let _ = writeln!(
            s,
            "vertical.monotonic {} ordering {}/{}",
            self.vertical.mean_fz_monotonic, self.vertical.ordering_correct, self.vertical.ordering_checked
        );
        let _ = writeln!(s, "vertical.pass {}", self.vertical.pass);
        for f in &self.flags {
            let _ = writeln!(s, "flag {f}");
        }
        s
    }
}

pub fn points_to_csv(points: &[SectionPoint]) -> String {
    let mut out =
        String::from("depth,duration,mean_speed,mean_vz,mean_depth,fx_abs,fz_mean,n_steps\n");
    for p in points {
        out.push_str(&format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}\n",
            p.depth, p.duration, p.mean_speed, p.mean_vz, p.mean_depth, p.fx_abs, p.fz_mean,
            p.n_steps
        ));
    }
    out
}

fn process_trace<F>(
    predict: &F,
    trial: &TrialTrace,
    cfg: &ValidationConfig,
) -> Result<Vec<PlanarSection>>
where
    F: Fn(&Vector3<f64>, f64, f64, f64) -> Vector3<f64> + Sync,
{
    let rs = resample_uniform(trial, cfg.rate)?;
    let dt = 1.0 / cfg.rate;
    let v_marker = velocity_series(&rs, dt)?;
    let omega = angular_velocity_series(&rs, dt)?;
    let marker_offset = -cfg.r_cp;
    let depths = water_level_series(&rs, &marker_offset);
    let v_body: Vec<Vector3<f64>> = (0..v_marker.len())
        .map(|t| {
            let q = rs.orientations[t];
            let r_world = q * cfg.r_cp;
            let v_com = com_velocity(&v_marker[t], &omega[t], &r_world);
            q.inverse() * v_com
        })
        .collect();
    let mut sections =
        extract_planar_sections(&v_body, &depths, dt, cfg.min_duration, cfg.vz_limit);
    for s in &mut sections {
        for t in s.start..s.end {
            let f = predict(&v_body[t], cfg.density, depths[t], cfg.gravity);
            s.fx.push(f.x);
            s.fz.push(f.z);
        }
    }
    Ok(sections)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Runs the full validation campaign: preprocess every trace, predict
/// forces on qualifying sections, and evaluate both scaling-law tests.
pub fn run_validation_suite<F>(
    predict: F,
    traces: &[TrialTrace],
    spec: &VehicleSpec,
    cfg: &ValidationConfig,
) -> Result<ValidationOutput>
where
    F: Fn(&Vector3<f64>, f64, f64, f64) -> Vector3<f64> + Sync,
{
    if traces.is_empty() {
        return Err(Error::Data("validation needs at least one trace".into()));
    }
    let processed: Vec<Result<(f64, Vec<PlanarSection>)>> = traces
        .par_iter()
        .map(|t| process_trace(&predict, t, cfg).map(|s| (t.depth, s)))
        .collect();
    let mut points = Vec::new();
    for r in processed {
        let (depth, sections) = r?;
        for s in sections {
            points.push(SectionPoint {
                depth,
                duration: s.duration,
                mean_speed: s.mean_speed,
                mean_vz: s.mean_vz,
                mean_depth: s.mean_depth,
                fx_abs: mean(&s.fx).abs(),
                fz_mean: mean(&s.fz),
                n_steps: s.fx.len(),
            });
        }
    }

    let mut flags = Vec::new();
    if points.is_empty() {
        flags.push("no qualifying sections".to_string());
        let report = ValidationReport {
            n_traces: traces.len(),
            n_sections: 0,
            r2_threshold: cfg.r2_threshold,
            drag: DragTest { fits: Vec::new(), physical_cd: Vec::new(), pairs: Vec::new(), pass: false },
            vertical: VerticalTest {
                fits: Vec::new(),
                f0_line: None,
                mean_fz_monotonic: false,
                ordering_checked: 0,
                ordering_correct: 0,
                pass: false,
            },
            passed: false,
            flags,
        };
        return Ok(ValidationOutput { report, points });
    }

    let mut depths: Vec<f64> = points.iter().map(|p| p.depth).collect();
    depths.sort_by(|a, b| a.partial_cmp(b).unwrap());
    depths.dedup();

    let mut drag_fits = Vec::new();
    let mut vertical_fits = Vec::new();
    for &d in &depths {
        let group: Vec<&SectionPoint> = points.iter().filter(|p| p.depth == d).collect();
        if group.len() < 2 {
            flags.push(format!("depth {d}: fewer than two sections, fits skipped"));
            continue;
        }
        let drag_pts: Vec<(f64, f64)> = group
            .iter()
            .map(|p| (p.mean_speed * p.mean_speed, p.fx_abs))
            .collect();
        match fit_drag(&drag_pts, d) {
            Ok(f) => {
                if f.coeffs[0] <= 0.0 {
                    flags.push(format!("depth {d}: nonpositive drag coefficient"));
                }
                drag_fits.push(f);
            }
            Err(e) => flags.push(format!("depth {d}: drag fit failed: {e}")),
        }
        let vert_pts: Vec<(f64, f64)> = group
            .iter()
            .map(|p| (p.mean_speed * p.mean_speed, p.fz_mean))
            .collect();
        match fit_vertical(&vert_pts, d) {
            Ok(f) => vertical_fits.push(f),
            Err(e) => flags.push(format!("depth {d}: vertical fit failed: {e}")),
        }
    }

    let mut cd_table = Vec::new();
    for f in &drag_fits {
        match physical_cd(f.coeffs[0], cfg.density, spec.width_ref, f.depth) {
            Ok(cd) => cd_table.push(DepthCd { depth: f.depth, cd }),
            Err(e) => flags.push(format!("depth {}: drag coefficient not scaled: {e}", f.depth)),
        }
    }

    let pair_points: Vec<PairPoint> = points
        .iter()
        .map(|p| PairPoint { depth: p.depth, speed: p.mean_speed, fx_abs: p.fx_abs })
        .collect();
    let pairs = matched_pair_check(&pair_points, &drag_fits, cfg.speed_tol, cfg.min_speed);
    if pairs.is_empty() && depths.len() > 1 {
        flags.push("no speed-matched cross-depth pairs".to_string());
    }

    let drag_pass = !drag_fits.is_empty()
        && drag_fits.len() == depths.len()
        && drag_fits.iter().all(|f| f.r2 >= cfg.r2_threshold && f.coeffs[0] > 0.0);

    let mut f0_line = None;
    let mut monotonic = true;
    let mut ordering_checked = 0;
    let mut ordering_correct = 0;
    if depths.len() < 2 {
        flags.push("single depth: cross-depth checks skipped".to_string());
    } else {
        let mean_fz_by_depth: Vec<f64> = depths
            .iter()
            .map(|&d| {
                let vals: Vec<f64> = points
                    .iter()
                    .filter(|p| p.depth == d)
                    .map(|p| p.fz_mean)
                    .collect();
                mean(&vals)
            })
            .collect();
        monotonic = mean_fz_by_depth.windows(2).all(|w| w[1] > w[0]);
        if vertical_fits.len() >= 2 {
            let f0_pts: Vec<(f64, f64)> = vertical_fits
                .iter()
                .map(|f| (f.depth, f.coeffs[0]))
                .collect();
            match fit_linear(&f0_pts) {
                Ok((a, b, r2)) => f0_line = Some(LineFit { intercept: a, slope: b, r2 }),
                Err(e) => flags.push(format!("buoyancy-depth regression failed: {e}")),
            }
        }
        for (i, &da) in depths.iter().enumerate() {
            for &db in &depths[i + 1..] {
                for pa in points.iter().filter(|p| p.depth == da) {
                    for pb in points.iter().filter(|p| p.depth == db) {
                        if pa.mean_speed >= cfg.min_speed
                            && pb.mean_speed >= cfg.min_speed
                            && (pa.mean_speed - pb.mean_speed).abs() <= cfg.speed_tol
                        {
                            ordering_checked += 1;
                            if pb.fz_mean > pa.fz_mean {
                                ordering_correct += 1;
                            }
                        }
                    }
                }
            }
        }
    }

    let vertical_pass = !vertical_fits.is_empty()
        && vertical_fits.len() == depths.len()
        && monotonic
        && f0_line.as_ref().map_or(depths.len() < 2, |l| l.r2 >= cfg.r2_threshold)
        && ordering_correct == ordering_checked;

    let passed = drag_pass && vertical_pass;
    let report = ValidationReport {
        n_traces: traces.len(),
        n_sections: points.len(),
        r2_threshold: cfg.r2_threshold,
        drag: DragTest { fits: drag_fits, physical_cd: cd_table, pairs, pass: drag_pass },
        vertical: VerticalTest {
            fits: vertical_fits,
            f0_line,
            mean_fz_monotonic: monotonic,
            ordering_checked,
            ordering_correct,
            pass: vertical_pass,
        },
        passed,
        flags,
    };
    Ok(ValidationOutput { report, points })
}

const SYNTH_RATE: f64 = 120.0;
const SYNTH_RAMP: f64 = 1.0 / 3.0;
const SYNTH_FLAT: f64 = 8.0 / 3.0;
const SYNTH_HEIGHT: f64 = 1.0 / 3.0;

/// One synthetic ford pass: a descending approach ramp, steady travel
/// across the flat floor, and an exit climb, tracked at 120 Hz with
/// identity orientation. Ramp transitions land on both the native and the
/// resampled time grids so the flat interval stays numerically clean.
pub fn synthetic_trace(speed: f64, depth: f64, direction: &str) -> TrialTrace {
    let marker = -Vector3::from(COM_OFFSET);
    let total = SYNTH_RAMP + SYNTH_FLAT + SYNTH_RAMP;
    let flat_end = SYNTH_RAMP + SYNTH_FLAT;
    let n = (total * SYNTH_RATE).round() as usize + 1;
    let sign = if direction == "out" { -1.0 } else { 1.0 };
    let mut t_series = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 / SYNTH_RATE;
        let alt = if t < SYNTH_RAMP {
            SYNTH_HEIGHT * (1.0 - t / SYNTH_RAMP)
        } else if t < flat_end {
            0.0
        } else {
            SYNTH_HEIGHT * (t - flat_end) / SYNTH_RAMP
        };
        t_series.push(t);
        positions.push(Point3::new(
            sign * speed * t + marker.x,
            marker.y,
            alt + marker.z,
        ));
    }
    TrialTrace {
        times: t_series,
        positions,
        orientations: vec![UnitQuaternion::identity(); n],
        depth,
        direction: direction.to_string(),
        command_speed: speed,
    }
}

/// Evenly spaced speed grid for a synthetic campaign.
pub fn speed_grid(span: (f64, f64), count: usize) -> Vec<f64> {
    let (lo, hi) = span;
    let step = (hi - lo) / (count.max(2) - 1) as f64;
    (0..count).map(|k| lo + k as f64 * step).collect()
}

/// A full synthetic campaign: every speed at every depth, alternating
/// travel direction.
pub fn synthetic_traces(speeds: &[f64], depths: &[f64]) -> Vec<TrialTrace> {
    let mut out = Vec::with_capacity(speeds.len() * depths.len());
    for &d in depths {
        for (i, &s) in speeds.iter().enumerate() {
            let dir = if i % 2 == 0 { "in" } else { "out" };
            out.push(synthetic_trace(s, d, dir));
        }
    }
    out
}
