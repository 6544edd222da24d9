//! Tracked-trajectory ingestion and preprocessing.
//!
//! Traces are delimited text files of marker pose over time. Preprocessing
//! resamples them to a uniform grid (linear positions, shortest-arc
//! spherical orientation interpolation) and differentiates with a local
//! quadratic least-squares filter whose window shrinks at the edges
//! instead of padding.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Point3, Quaternion, UnitQuaternion};

use crate::defaults::{GAP_FACTOR, SCHEMA_VERSION};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TrialTrace {
    pub times: Vec<f64>,
    pub positions: Vec<Point3<f64>>,
    pub orientations: Vec<UnitQuaternion<f64>>,
    /// Quiescent water depth for the trial (m).
    pub depth: f64,
    /// Travel direction tag, "in" or "out".
    pub direction: String,
    /// Commanded speed (m/s).
    pub command_speed: f64,
}

impl TrialTrace {
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if n < 2 {
            return Err(Error::Data("trace needs at least two samples".into()));
        }
        if self.positions.len() != n || self.orientations.len() != n {
            return Err(Error::Shape("trace column lengths differ".into()));
        }
        for w in self.times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Data(format!(
                    "timestamps not strictly increasing at t = {}",
                    w[0]
                )));
            }
        }
        for q in &self.orientations {
            if (q.as_ref().norm() - 1.0).abs() > 1e-6 {
                return Err(Error::Data("orientation quaternion not unit norm".into()));
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }
}

pub fn write_trace(trace: &TrialTrace, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# schema {SCHEMA_VERSION}");
    let _ = writeln!(out, "# depth {:?}", trace.depth);
    let _ = writeln!(out, "# direction {}", trace.direction);
    let _ = writeln!(out, "# speed {:?}", trace.command_speed);
    out.push_str("t,x,y,z,qw,qx,qy,qz\n");
    for (k, t) in trace.times.iter().enumerate() {
        let p = &trace.positions[k];
        let q = trace.orientations[k].as_ref();
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            t, p.x, p.y, p.z, q.w, q.i, q.j, q.k
        );
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<TrialTrace> {
    let text = fs::read_to_string(path)?;
    let mut depth = None;
    let mut direction = None;
    let mut speed = None;
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.peek() {
        let Some(rest) = line.strip_prefix("# ") else {
            break;
        };
        let (key, value) = rest
            .split_once(' ')
            .ok_or_else(|| Error::Format(format!("malformed header line '{line}'")))?;
        match key {
            "schema" => {
                let found: u32 = value
                    .parse()
                    .map_err(|_| Error::Format("bad schema value".into()))?;
                if found != SCHEMA_VERSION {
                    return Err(Error::SchemaVersion {
                        found,
                        expected: SCHEMA_VERSION,
                    });
                }
            }
            "depth" => depth = Some(parse_f64(value)?),
            "direction" => direction = Some(value.to_string()),
            "speed" => speed = Some(parse_f64(value)?),
            other => return Err(Error::Format(format!("unknown trace header '{other}'"))),
        }
        lines.next();
    }
    let columns = lines
        .next()
        .ok_or_else(|| Error::Format("trace has no column header".into()))?;
    if columns != "t,x,y,z,qw,qx,qy,qz" {
        return Err(Error::Format(format!("unexpected trace columns '{columns}'")));
    }
    let mut trace = TrialTrace {
        times: Vec::new(),
        positions: Vec::new(),
        orientations: Vec::new(),
        depth: depth.ok_or_else(|| Error::Format("trace header missing depth".into()))?,
        direction: direction.ok_or_else(|| Error::Format("trace header missing direction".into()))?,
        command_speed: speed.ok_or_else(|| Error::Format("trace header missing speed".into()))?,
    };
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(parse_f64)
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != 8 {
            return Err(Error::Format(format!(
                "trace row has {} columns, expected 8",
                vals.len()
            )));
        }
        trace.times.push(vals[0]);
        trace.positions.push(Point3::new(vals[1], vals[2], vals[3]));
        trace.orientations.push(UnitQuaternion::new_unchecked(
            Quaternion::new(vals[4], vals[5], vals[6], vals[7]),
        ));
    }
    trace.validate()?;
    Ok(trace)
}

fn parse_f64(s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Format(format!("bad number '{s}'")))?;
    if !v.is_finite() {
        return Err(Error::Data(format!("non-finite value '{s}'")));
    }
    Ok(v)
}

/// Resamples a trace onto a uniform grid at the given rate. Positions are
/// interpolated linearly; orientations by shortest-arc spherical
/// interpolation after hemisphere alignment, then renormalized.
pub fn resample_uniform(trace: &TrialTrace, rate: f64) -> Result<TrialTrace> {
    trace.validate()?;
    let n = trace.times.len();
    let mut dts: Vec<f64> = trace.times.windows(2).map(|w| w[1] - w[0]).collect();
    dts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_dt = dts[dts.len() / 2];
    let gaps: Vec<(f64, f64)> = trace
        .times
        .windows(2)
        .filter(|w| w[1] - w[0] > GAP_FACTOR * median_dt)
        .map(|w| (w[0], w[1]))
        .collect();
    if !gaps.is_empty() {
        return Err(Error::TimestampGaps(gaps));
    }

    let mut quats: Vec<UnitQuaternion<f64>> = trace.orientations.clone();
    for i in 1..n {
        if quats[i - 1].as_ref().dot(quats[i].as_ref()) < 0.0 {
            let negated = -*quats[i].as_ref();
            quats[i] = UnitQuaternion::new_unchecked(negated);
        }
    }

    let t0 = trace.times[0];
    let t_end = trace.times[n - 1];
    let dt = 1.0 / rate;
    let steps = ((t_end - t0) / dt).floor() as usize + 1;
    let mut out = TrialTrace {
        times: Vec::with_capacity(steps),
        positions: Vec::with_capacity(steps),
        orientations: Vec::with_capacity(steps),
        depth: trace.depth,
        direction: trace.direction.clone(),
        command_speed: trace.command_speed,
    };
    let mut seg = 0usize;
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        while seg + 2 < n && trace.times[seg + 1] < t {
            seg += 1;
        }
        let (ta, tb) = (trace.times[seg], trace.times[seg + 1]);
        let u = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        let (pa, pb) = (&trace.positions[seg], &trace.positions[seg + 1]);
        out.times.push(t);
        let (p, q) = if u == 0.0 {
            (*pa, quats[seg])
        } else if u == 1.0 {
            (*pb, quats[seg + 1])
        } else {
            (
                Point3::new(
                    pa.x + (pb.x - pa.x) * u,
                    pa.y + (pb.y - pa.y) * u,
                    pa.z + (pb.z - pa.z) * u,
                ),
                UnitQuaternion::from_quaternion(quats[seg].slerp(&quats[seg + 1], u).into_inner()),
            )
        };
        out.positions.push(p);
        out.orientations.push(q);
    }
    Ok(out)
}

/// Derivative of a uniformly sampled series by local quadratic least
/// squares over an odd window, evaluated at each point. Near the ends the
/// window shrinks (staying centered where possible) instead of padding.
pub fn savgol_derivative(series: &[f64], window: usize, polyorder: usize, dt: f64) -> Result<Vec<f64>> {
    if window % 2 == 0 {
        return Err(Error::Config("smoothing window must be odd".into()));
    }
    if polyorder >= window {
        return Err(Error::Config("polynomial order must be below the window".into()));
    }
    let n = series.len();
    if n < window {
        return Err(Error::Data(format!(
            "series of {n} samples is shorter than the window {window}"
        )));
    }
    let h = window / 2;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let half = h.min(i).min(n - 1 - i);
        let (lo, center) = if 2 * half + 1 > polyorder {
            (i - half, half)
        } else {
            // Too close to an edge for a centered fit: use the smallest
            // one-sided window that determines the polynomial.
            let lo = i.min(n - (polyorder + 1));
            (lo, i - lo)
        };
        let len = if 2 * half + 1 > polyorder { 2 * half + 1 } else { polyorder + 1 };
        out.push(poly_fit_derivative(&series[lo..lo + len], polyorder, center) / dt);
    }
    Ok(out)
}

/// Least-squares polynomial fit over points y_j at x = j, returning the
/// fitted derivative at x = center.
fn poly_fit_derivative(y: &[f64], polyorder: usize, center: usize) -> f64 {
    let m = polyorder + 1;
    // Normal equations around x = center keep the system small and
    // well-conditioned for the window sizes used here.
    let mut ata = vec![vec![0.0f64; m]; m];
    let mut atb = vec![0.0f64; m];
    for (j, &yj) in y.iter().enumerate() {
        let x = j as f64 - center as f64;
        let mut pow = vec![0.0f64; m];
        pow[0] = 1.0;
        for p in 1..m {
            pow[p] = pow[p - 1] * x;
        }
        for r in 0..m {
            for c in 0..m {
                ata[r][c] += pow[r] * pow[c];
            }
            atb[r] += pow[r] * yj;
        }
    }
    let coeffs = solve_dense(&mut ata, &mut atb);
    coeffs[1]
}

/// Gaussian elimination with partial pivoting for the tiny normal systems.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Vec<f64> {
    let m = b.len();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        for r in col + 1..m {
            let f = a[r][col] / p;
            for c in col..m {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0f64; m];
    for col in (0..m).rev() {
        let mut s = b[col];
        for c in col + 1..m {
            s -= a[col][c] * x[c];
        }
        x[col] = s / a[col][col];
    }
    x
}
