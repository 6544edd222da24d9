//! Per-case force histories as a flow solver would emit them.
//!
//! Solver output uses a flow-aligned frame: +Z points along the nominal
//! inflow and +Y is up. Everything downstream of ingestion works in the
//! vehicle frame: +X forward, +Z up. Records carry a frame tag and refuse
//! to convert twice.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::defaults::SCHEMA_VERSION;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    #[serde(rename = "solver-zflow")]
    SolverZFlow,
    #[serde(rename = "vehicle-xfwd")]
    VehicleXForward,
}

impl Frame {
    pub fn tag(&self) -> &'static str {
        match self {
            Frame::SolverZFlow => "solver-zflow",
            Frame::VehicleXForward => "vehicle-xfwd",
        }
    }

    pub fn parse(s: &str) -> Result<Frame> {
        match s {
            "solver-zflow" => Ok(Frame::SolverZFlow),
            "vehicle-xfwd" => Ok(Frame::VehicleXForward),
            other => Err(Error::Frame(format!("unknown frame tag '{other}'"))),
        }
    }
}

/// Maps a solver-frame vector into the vehicle frame.
pub fn solver_to_vehicle(v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(-v.z, -v.x, v.y)
}

/// Maps a vehicle-frame vector into the solver frame.
pub fn vehicle_to_solver(v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(-v.y, v.z, -v.x)
}

/// Vehicle velocity for a case: heading is measured in the ground plane,
/// 90 degrees means straight ahead.
pub fn vehicle_frame_velocity(speed: f64, heading_deg: f64) -> Vector3<f64> {
    let phi = heading_deg.to_radians();
    Vector3::new(speed * phi.sin(), speed * phi.cos(), 0.0)
}

/// Nominal inflow vector in the solver frame for the same case.
pub fn solver_frame_inflow(speed: f64, heading_deg: f64) -> Vector3<f64> {
    let phi = heading_deg.to_radians();
    Vector3::new(speed * phi.cos(), 0.0, speed * phi.sin())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConditions {
    pub vehicle: String,
    pub case_index: u32,
    pub speed: f64,
    pub heading_deg: f64,
    pub density: f64,
    pub depth: f64,
    pub gravity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseRecord {
    pub conditions: CaseConditions,
    pub frame: Frame,
    pub surfaces: Vec<String>,
    pub time: Vec<f64>,
    /// Force per step and surface, in the frame given by `frame`.
    pub forces: Vec<Vec<Vector3<f64>>>,
}

impl CaseRecord {
    /// Converts a solver-frame record into the vehicle frame. Converting a
    /// record that is already in the vehicle frame is an error.
    pub fn to_vehicle_frame(mut self) -> Result<CaseRecord> {
        if self.frame != Frame::SolverZFlow {
            return Err(Error::Frame(
                "record is already in the vehicle frame".into(),
            ));
        }
        for step in &mut self.forces {
            for f in step.iter_mut() {
                *f = solver_to_vehicle(f);
            }
        }
        self.frame = Frame::VehicleXForward;
        Ok(self)
    }

    /// Vehicle velocity implied by the case conditions.
    pub fn vehicle_velocity(&self) -> Vector3<f64> {
        vehicle_frame_velocity(self.conditions.speed, self.conditions.heading_deg)
    }
}

/// Writes a case as a commented-header CSV. Floats use the shortest
/// representation that parses back to the same bits.
pub fn write_case_file(record: &CaseRecord, path: &Path) -> Result<()> {
    let c = &record.conditions;
    let mut out = String::new();
    let _ = writeln!(out, "# schema {SCHEMA_VERSION}");
    let _ = writeln!(out, "# frame {}", record.frame.tag());
    let _ = writeln!(out, "# vehicle {}", c.vehicle);
    let _ = writeln!(out, "# case {}", c.case_index);
    let _ = writeln!(out, "# speed {:?}", c.speed);
    let _ = writeln!(out, "# heading_deg {:?}", c.heading_deg);
    let _ = writeln!(out, "# density {:?}", c.density);
    let _ = writeln!(out, "# depth {:?}", c.depth);
    let _ = writeln!(out, "# gravity {:?}", c.gravity);
    out.push('t');
    for name in &record.surfaces {
        let _ = write!(out, ",{name}_fx,{name}_fy,{name}_fz");
    }
    out.push('\n');
    for (k, t) in record.time.iter().enumerate() {
        let _ = write!(out, "{t:?}");
        for f in &record.forces[k] {
            let _ = write!(out, ",{:?},{:?},{:?}", f.x, f.y, f.z);
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_case_file(path: &Path) -> Result<CaseRecord> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().peekable();

    let mut schema = None;
    let mut frame = None;
    let mut vehicle = None;
    let mut case_index = None;
    let mut floats: std::collections::HashMap<&str, f64> = Default::default();
    while let Some(line) = lines.peek() {
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        let mut parts = rest.split_whitespace();
        let key = parts
            .next()
            .ok_or_else(|| Error::Data("empty header line in case file".into()))?;
        let value = parts
            .next()
            .ok_or_else(|| Error::Data(format!("header '{key}' has no value")))?;
        match key {
            "schema" => schema = Some(parse_u32(key, value)?),
            "frame" => frame = Some(Frame::parse(value)?),
            "vehicle" => vehicle = Some(value.to_string()),
            "case" => case_index = Some(parse_u32(key, value)?),
            "speed" | "heading_deg" | "density" | "depth" | "gravity" => {
                floats.insert(
                    match key {
                        "speed" => "speed",
                        "heading_deg" => "heading_deg",
                        "density" => "density",
                        "depth" => "depth",
                        _ => "gravity",
                    },
                    parse_f64(key, value)?,
                );
            }
            other => return Err(Error::Data(format!("unknown case header '{other}'"))),
        }
        lines.next();
    }
    let schema = schema.ok_or_else(|| Error::Data("case file missing schema header".into()))?;
    if schema != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: schema,
            expected: SCHEMA_VERSION,
        });
    }
    let frame = frame.ok_or_else(|| Error::Frame("case file has no frame tag".into()))?;
    let need = |k: &str| -> Result<f64> {
        floats
            .get(k)
            .copied()
            .ok_or_else(|| Error::Data(format!("case file missing '{k}' header")))
    };
    let conditions = CaseConditions {
        vehicle: vehicle.ok_or_else(|| Error::Data("case file missing vehicle header".into()))?,
        case_index: case_index
            .ok_or_else(|| Error::Data("case file missing case header".into()))?,
        speed: need("speed")?,
        heading_deg: need("heading_deg")?,
        density: need("density")?,
        depth: need("depth")?,
        gravity: need("gravity")?,
    };

    let header = lines
        .next()
        .ok_or_else(|| Error::Data("case file has no column header".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") || (cols.len() - 1) % 3 != 0 {
        return Err(Error::Data("malformed case column header".into()));
    }
    let mut surfaces = Vec::new();
    for chunk in cols[1..].chunks(3) {
        let name = chunk[0]
            .strip_suffix("_fx")
            .ok_or_else(|| Error::Data(format!("expected *_fx column, got '{}'", chunk[0])))?;
        if chunk[1] != format!("{name}_fy") || chunk[2] != format!("{name}_fz") {
            return Err(Error::Data(format!(
                "force columns for '{name}' are not contiguous"
            )));
        }
        surfaces.push(name.to_string());
    }

    let mut time = Vec::new();
    let mut forces = Vec::new();
    for (row_idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Data(format!(
                "row {} has {} fields, expected {}",
                row_idx,
                fields.len(),
                cols.len()
            )));
        }
        time.push(parse_f64("t", fields[0])?);
        let mut row = Vec::with_capacity(surfaces.len());
        for chunk in fields[1..].chunks(3) {
            let v = Vector3::new(
                parse_f64("fx", chunk[0])?,
                parse_f64("fy", chunk[1])?,
                parse_f64("fz", chunk[2])?,
            );
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(Error::Data(format!("non-finite force in row {row_idx}")));
            }
            row.push(v);
        }
        forces.push(row);
    }
    if time.is_empty() {
        return Err(Error::Data("case file has no data rows".into()));
    }
    Ok(CaseRecord {
        conditions,
        frame,
        surfaces,
        time,
        forces,
    })
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Data(format!("bad float for '{key}': '{value}'")))
}

fn parse_u32(key: &str, value: &str) -> Result<u32> {
    value
        .parse::<u32>()
        .map_err(|_| Error::Data(format!("bad integer for '{key}': '{value}'")))
}
