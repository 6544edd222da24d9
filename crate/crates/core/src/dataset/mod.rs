//! Training sample assembly from case histories.
//!
//! A case's force history is section-averaged after a transient cutoff,
//! paired with the features of its flow condition, and optionally expanded
//! four ways by lateral mirror and travel reversal, both exact involutions
//! on stored values. Targets are stored as force over density.

pub mod case;
pub mod oracle;

pub use case::{
    read_case_file, solver_to_vehicle, vehicle_frame_velocity, vehicle_to_solver,
    write_case_file, CaseConditions, CaseRecord, Frame,
};
pub use oracle::{generate_campaign, oracle_mean_forces, CampaignSpec};

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::defaults::{GLOBAL_DIM, SCHEMA_VERSION, SIGMA_FLOOR};
use crate::error::{Error, Result};
use crate::features::{
    global_features, surface_features, G_VX, G_VY, S_PROJ_AREA, S_SUB_DEPTH, S_SUB_FRAC,
};
use crate::geometry::VehicleSpec;
use crate::prepare::PreparedVehicle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceState {
    pub name: String,
    pub sub_frac: f64,
    pub sub_depth_norm: f64,
    pub features: Vec<f64>,
    /// Section-mean force divided by density, vehicle frame.
    pub target: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub case_index: u32,
    pub section: u32,
    pub mirrored: bool,
    pub reversed: bool,
    pub vehicle: String,
    pub velocity: [f64; 3],
    pub speed: f64,
    pub density: f64,
    pub depth: f64,
    pub gravity: f64,
    pub global: Vec<f64>,
    pub surfaces: Vec<SurfaceState>,
}

/// Splits a vehicle-frame case history into section-averaged samples.
pub fn case_to_samples(
    prep: &PreparedVehicle,
    record: &CaseRecord,
    transient_cutoff: f64,
    sections: usize,
) -> Result<Vec<Sample>> {
    if record.frame != Frame::VehicleXForward {
        return Err(Error::Frame(
            "case history must be converted to the vehicle frame first".into(),
        ));
    }
    if sections == 0 {
        return Err(Error::Config("section count must be positive".into()));
    }
    if record.surfaces.len() != prep.patches.len() {
        return Err(Error::Data(format!(
            "case history has {} surfaces, vehicle has {}",
            record.surfaces.len(),
            prep.patches.len()
        )));
    }
    let column: Vec<usize> = prep
        .patches
        .iter()
        .map(|p| {
            record
                .surfaces
                .iter()
                .position(|n| *n == p.name)
                .ok_or_else(|| Error::Data(format!("case history lacks surface '{}'", p.name)))
        })
        .collect::<Result<Vec<_>>>()?;

    let cond = &record.conditions;
    let velocity = record.vehicle_velocity();
    let subs = prep.submergence(prep.water_level(cond.depth));
    let global = global_features(&velocity, cond.density, cond.depth, cond.gravity, &prep.spec);
    let statics: Vec<(Vec<f64>, f64, f64)> = prep
        .patches
        .iter()
        .zip(subs.iter())
        .map(|(p, &(sf, sd))| {
            (
                surface_features(p, &prep.spec, &velocity, sf, sd).to_vec(),
                sf,
                sd,
            )
        })
        .collect();

    let kept: Vec<usize> = (0..record.time.len())
        .filter(|&k| record.time[k] > transient_cutoff)
        .collect();
    if kept.is_empty() {
        return Err(Error::Data(
            "no time steps remain after the transient cutoff".into(),
        ));
    }
    if kept.len() % sections != 0 {
        return Err(Error::Data(format!(
            "{} retained steps cannot form {} equal sections",
            kept.len(),
            sections
        )));
    }
    let chunk = kept.len() / sections;

    let mut samples = Vec::with_capacity(sections);
    for s in 0..sections {
        let steps = &kept[s * chunk..(s + 1) * chunk];
        let surfaces = prep
            .patches
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut sum = [0.0f64; 3];
                for &k in steps {
                    let f = &record.forces[k][column[i]];
                    for c in 0..3 {
                        sum[c] += f[c];
                    }
                }
                let mut target = [0.0f64; 3];
                for c in 0..3 {
                    target[c] = sum[c] / chunk as f64 / cond.density;
                }
                let (ref features, sf, sd) = statics[i];
                SurfaceState {
                    name: p.name.clone(),
                    sub_frac: sf,
                    sub_depth_norm: sd,
                    features: features.clone(),
                    target,
                }
            })
            .collect();
        samples.push(Sample {
            case_index: cond.case_index,
            section: s as u32,
            mirrored: false,
            reversed: false,
            vehicle: cond.vehicle.clone(),
            velocity: [velocity.x, velocity.y, velocity.z],
            speed: cond.speed,
            density: cond.density,
            depth: cond.depth,
            gravity: cond.gravity,
            global: global.to_vec(),
            surfaces,
        });
    }
    Ok(samples)
}

fn surface_index(sample: &Sample, name: &str) -> Result<usize> {
    sample
        .surfaces
        .iter()
        .position(|s| s.name == name)
        .ok_or_else(|| Error::Data(format!("sample has no surface '{name}'")))
}

/// Exchanges the flow-dependent state of two surfaces: submergence, the
/// projected-area feature, and the target. Static descriptors stay put.
fn swap_dynamic(surfaces: &mut [SurfaceState], ia: usize, ib: usize) {
    let (lo, hi) = if ia < ib { (ia, ib) } else { (ib, ia) };
    let (head, tail) = surfaces.split_at_mut(hi);
    let a = &mut head[lo];
    let b = &mut tail[0];
    std::mem::swap(&mut a.sub_frac, &mut b.sub_frac);
    std::mem::swap(&mut a.sub_depth_norm, &mut b.sub_depth_norm);
    for idx in [S_SUB_FRAC, S_SUB_DEPTH, S_PROJ_AREA] {
        std::mem::swap(&mut a.features[idx], &mut b.features[idx]);
    }
    std::mem::swap(&mut a.target, &mut b.target);
}

/// Mirrors a sample across the vehicle's lateral symmetry plane. Paired
/// surfaces exchange dynamic state, every lateral force component flips,
/// and the condition's lateral velocity flips. An exact involution.
pub fn mirror_lateral(sample: &Sample, spec: &VehicleSpec) -> Result<Sample> {
    for st in &sample.surfaces {
        if spec.mirror_partner(&st.name).is_none() && !spec.is_on_symmetry_plane(&st.name) {
            return Err(Error::Data(format!(
                "surface '{}' has no lateral mirror rule",
                st.name
            )));
        }
    }
    let mut s = sample.clone();
    for (a, b) in &spec.mirror_pairs {
        let ia = surface_index(&s, a)?;
        let ib = surface_index(&s, b)?;
        swap_dynamic(&mut s.surfaces, ia, ib);
    }
    for st in &mut s.surfaces {
        st.target[1] = -st.target[1];
    }
    s.velocity[1] = -s.velocity[1];
    s.global[G_VY] = -s.global[G_VY];
    s.mirrored = !s.mirrored;
    Ok(s)
}

/// Reverses the direction of travel. Fore-aft pairs exchange dynamic
/// state; surfaces outside any pair are taken as fore-aft symmetric and
/// keep their own state. Every longitudinal force component flips, as does
/// the condition's longitudinal velocity. An exact involution.
pub fn reverse_longitudinal(sample: &Sample, spec: &VehicleSpec) -> Result<Sample> {
    let mut s = sample.clone();
    for (a, b) in &spec.swap_pairs {
        let ia = surface_index(&s, a)?;
        let ib = surface_index(&s, b)?;
        swap_dynamic(&mut s.surfaces, ia, ib);
    }
    for st in &mut s.surfaces {
        st.target[0] = -st.target[0];
    }
    s.velocity[0] = -s.velocity[0];
    s.global[G_VX] = -s.global[G_VX];
    s.reversed = !s.reversed;
    Ok(s)
}

/// Expands each sample four ways: identity, mirrored, reversed, both.
pub fn augment_samples(samples: &[Sample], spec: &VehicleSpec) -> Result<Vec<Sample>> {
    let mut out = Vec::with_capacity(samples.len() * 4);
    for s in samples {
        let m = mirror_lateral(s, spec)?;
        let r = reverse_longitudinal(s, spec)?;
        let mr = reverse_longitudinal(&m, spec)?;
        out.push(s.clone());
        out.push(m);
        out.push(r);
        out.push(mr);
    }
    Ok(out)
}

/// Reads solver-frame case histories into an optionally augmented sample
/// set.
pub fn assemble_dataset(
    prep: &PreparedVehicle,
    records: Vec<CaseRecord>,
    transient_cutoff: f64,
    sections: usize,
    augment: bool,
) -> Result<Vec<Sample>> {
    let mut samples = Vec::new();
    for record in records {
        let record = record.to_vehicle_frame()?;
        samples.extend(case_to_samples(prep, &record, transient_cutoff, sections)?);
    }
    if augment {
        samples = augment_samples(&samples, &prep.spec)?;
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub schema_version: u32,
    pub mu_global: Vec<f64>,
    pub sigma_global: Vec<f64>,
    pub mu_target: [f64; 3],
    pub sigma_target: [f64; 3],
}

/// Population mean and deviation of the global features, and of the target
/// components pooled over all surfaces. Deviations are floored so constant
/// columns stay usable.
pub fn fit_norm_stats(samples: &[Sample]) -> Result<NormStats> {
    if samples.is_empty() {
        return Err(Error::Data("cannot fit statistics on an empty set".into()));
    }
    let n = samples.len() as f64;
    let mut mu_global = vec![0.0; GLOBAL_DIM];
    for s in samples {
        if s.global.len() != GLOBAL_DIM {
            return Err(Error::Shape(format!(
                "global feature length {} != {}",
                s.global.len(),
                GLOBAL_DIM
            )));
        }
        for (m, g) in mu_global.iter_mut().zip(s.global.iter()) {
            *m += g;
        }
    }
    for m in &mut mu_global {
        *m /= n;
    }
    let mut var_global = vec![0.0; GLOBAL_DIM];
    for s in samples {
        for j in 0..GLOBAL_DIM {
            let d = s.global[j] - mu_global[j];
            var_global[j] += d * d;
        }
    }
    let sigma_global = var_global
        .iter()
        .map(|v| (v / n).sqrt().max(SIGMA_FLOOR))
        .collect();

    let mut count = 0usize;
    let mut mu_target = [0.0f64; 3];
    for s in samples {
        for st in &s.surfaces {
            count += 1;
            for c in 0..3 {
                mu_target[c] += st.target[c];
            }
        }
    }
    if count == 0 {
        return Err(Error::Data("samples have no surfaces".into()));
    }
    for m in &mut mu_target {
        *m /= count as f64;
    }
    let mut var_target = [0.0f64; 3];
    for s in samples {
        for st in &s.surfaces {
            for c in 0..3 {
                let d = st.target[c] - mu_target[c];
                var_target[c] += d * d;
            }
        }
    }
    let mut sigma_target = [0.0f64; 3];
    for c in 0..3 {
        sigma_target[c] = (var_target[c] / count as f64).sqrt().max(SIGMA_FLOOR);
    }
    Ok(NormStats {
        schema_version: SCHEMA_VERSION,
        mu_global,
        sigma_global,
        mu_target,
        sigma_target,
    })
}

impl NormStats {
    pub fn normalize_global(&self, global: &[f64]) -> Vec<f64> {
        global
            .iter()
            .zip(self.mu_global.iter().zip(self.sigma_global.iter()))
            .map(|(g, (m, s))| (g - m) / s)
            .collect()
    }

    pub fn normalize_target(&self, t: &[f64; 3]) -> [f64; 3] {
        std::array::from_fn(|c| (t[c] - self.mu_target[c]) / self.sigma_target[c])
    }

    pub fn denormalize_target(&self, t: &[f64; 3]) -> [f64; 3] {
        std::array::from_fn(|c| t[c] * self.sigma_target[c] + self.mu_target[c])
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(e.to_string()))?;
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<NormStats> {
        let text = fs::read_to_string(path)?;
        let stats: NormStats =
            serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        if stats.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: stats.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(stats)
    }
}

/// Case-grouped split: every sample of a case lands on the same side.
/// Returns (train, validation) sample indices.
pub fn split_by_case(
    samples: &[Sample],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut cases = Vec::new();
    for s in samples {
        if !cases.contains(&s.case_index) {
            cases.push(s.case_index);
        }
    }
    if cases.len() < 2 {
        return Err(Error::Data(
            "need at least two cases to split train and validation".into(),
        ));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    cases.shuffle(&mut rng);
    let n_train = ((cases.len() as f64 * train_fraction).round() as usize)
        .clamp(1, cases.len() - 1);
    let train_cases: std::collections::HashSet<u32> =
        cases[..n_train].iter().copied().collect();
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        if train_cases.contains(&s.case_index) {
            train.push(i);
        } else {
            val.push(i);
        }
    }
    Ok((train, val))
}

/// One sample per line as JSON.
pub fn save_samples(samples: &[Sample], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for s in samples {
        let line = serde_json::to_string(s).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_samples(path: &Path) -> Result<Vec<Sample>> {
    let r = BufReader::new(fs::File::open(path)?);
    let mut samples = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let s: Sample = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("bad sample on line {}: {e}", i + 1)))?;
        samples.push(s);
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub seed: u64,
    pub vehicle: String,
    pub cases: usize,
    pub sections_per_case: usize,
    pub augmented: bool,
    pub sample_count: usize,
}

impl DatasetManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(e.to_string()))?;
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<DatasetManifest> {
        let text = fs::read_to_string(path)?;
        let m: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: m.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(m)
    }
}
