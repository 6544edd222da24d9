//! Sample-to-tensor packing.
//!
//! Rows are grouped per sample so a batch of n samples from one vehicle is
//! a contiguous (n * k, d) block. Batches never mix vehicles: surface
//! counts and orderings differ between them.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::{fit_norm_stats, NormStats, Sample};
use crate::defaults::{DRY_THRESHOLD, GLOBAL_DIM, SCHEMA_VERSION, SURFACE_DIM};
use crate::error::{Error, Result};
use crate::features::G_LENGTH;
use crate::geometry::SemanticType;

/// Input layout variants studied alongside the full model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Surface block plus full normalized global block.
    Full,
    /// Global block without the reference dimensions.
    StrippedDims,
    /// One row per sample, global block only, net-force target.
    GlobalOnly,
}

impl Variant {
    pub fn surface_dim(&self) -> usize {
        match self {
            Variant::GlobalOnly => 0,
            _ => SURFACE_DIM,
        }
    }

    pub fn global_dim(&self) -> usize {
        match self {
            Variant::StrippedDims => G_LENGTH,
            _ => GLOBAL_DIM,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.surface_dim() + self.global_dim()
    }

    pub fn code(&self) -> u8 {
        match self {
            Variant::Full => 0,
            Variant::StrippedDims => 1,
            Variant::GlobalOnly => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Variant> {
        match code {
            0 => Ok(Variant::Full),
            1 => Ok(Variant::StrippedDims),
            2 => Ok(Variant::GlobalOnly),
            other => Err(Error::Format(format!("unknown model variant code {other}"))),
        }
    }
}

/// Packed tensors for one vehicle's samples.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub vehicle: String,
    /// Rows per sample.
    pub k: usize,
    pub n: usize,
    /// (n * k, d) input rows, sample-major.
    pub x: Array2<f64>,
    /// (n * k, 3) normalized targets.
    pub y_norm: Array2<f64>,
    /// (n * k, 3) raw force-over-density targets.
    pub y_raw: Array2<f64>,
    /// Per row: submerged fraction below the dry threshold.
    pub dry: Vec<bool>,
    /// Per sample: water density, to recover forces in newtons.
    pub density: Vec<f64>,
    /// Row labels, length k.
    pub surfaces: Vec<String>,
    pub semantics: Vec<SemanticType>,
}

/// Fits normalization statistics appropriate for a variant: per-surface
/// targets normally, net-force targets for the global-only model.
pub fn fit_stats_for(samples: &[Sample], variant: Variant) -> Result<NormStats> {
    if variant != Variant::GlobalOnly {
        return fit_norm_stats(samples);
    }
    let collapsed: Vec<Sample> = samples.iter().map(collapse_to_net).collect();
    fit_norm_stats(&collapsed)
}

fn collapse_to_net(s: &Sample) -> Sample {
    let mut net = [0.0f64; 3];
    let mut max_sub = 0.0f64;
    for st in &s.surfaces {
        for c in 0..3 {
            net[c] += st.target[c];
        }
        max_sub = max_sub.max(st.sub_frac);
    }
    let mut out = s.clone();
    out.surfaces = vec![crate::dataset::SurfaceState {
        name: "net".into(),
        sub_frac: max_sub,
        sub_depth_norm: 0.0,
        features: Vec::new(),
        target: net,
    }];
    out
}

/// Packs the selected samples into per-vehicle tensor groups, keyed and
/// ordered by vehicle name.
pub fn build_inputs(
    samples: &[Sample],
    indices: &[usize],
    stats: &NormStats,
    variant: Variant,
) -> Result<Vec<ModelInputs>> {
    let mut by_vehicle: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &i in indices {
        by_vehicle.entry(&samples[i].vehicle).or_default().push(i);
    }
    let mut groups = Vec::new();
    for (vehicle, idxs) in by_vehicle {
        groups.push(pack_group(samples, &idxs, stats, variant, vehicle)?);
    }
    Ok(groups)
}

fn pack_group(
    samples: &[Sample],
    idxs: &[usize],
    stats: &NormStats,
    variant: Variant,
    vehicle: &str,
) -> Result<ModelInputs> {
    let first = &samples[idxs[0]];
    let names: Vec<String> = first.surfaces.iter().map(|s| s.name.clone()).collect();
    for &i in idxs {
        let s = &samples[i];
        if s.surfaces.len() != names.len()
            || s.surfaces.iter().zip(names.iter()).any(|(a, b)| a.name != *b)
        {
            return Err(Error::Data(format!(
                "surface layout differs between samples of vehicle '{vehicle}'"
            )));
        }
        if s.global.len() != GLOBAL_DIM {
            return Err(Error::Shape(format!(
                "global feature length {} != {}",
                s.global.len(),
                GLOBAL_DIM
            )));
        }
    }

    let collapsed: Vec<Sample>;
    let (view, k, surfaces): (&[Sample], usize, Vec<String>) = match variant {
        Variant::GlobalOnly => {
            collapsed = idxs.iter().map(|&i| collapse_to_net(&samples[i])).collect();
            (&collapsed, 1, vec!["net".to_string()])
        }
        _ => {
            collapsed = idxs.iter().map(|&i| samples[i].clone()).collect();
            (&collapsed, names.len(), names)
        }
    };

    let n = view.len();
    let d = variant.input_dim();
    let ds = variant.surface_dim();
    let dg = variant.global_dim();
    let mut x = Array2::zeros((n * k, d));
    let mut y_norm = Array2::zeros((n * k, 3));
    let mut y_raw = Array2::zeros((n * k, 3));
    let mut dry = Vec::with_capacity(n * k);
    let mut density = Vec::with_capacity(n);
    for (b, s) in view.iter().enumerate() {
        density.push(s.density);
        let g_norm = stats.normalize_global(&s.global);
        for (si, st) in s.surfaces.iter().enumerate() {
            let row = b * k + si;
            if variant != Variant::GlobalOnly {
                if st.features.len() != SURFACE_DIM {
                    return Err(Error::Shape(format!(
                        "surface feature length {} != {}",
                        st.features.len(),
                        SURFACE_DIM
                    )));
                }
                for j in 0..ds {
                    x[[row, j]] = st.features[j];
                }
            }
            for j in 0..dg {
                x[[row, ds + j]] = g_norm[j];
            }
            let t_norm = stats.normalize_target(&st.target);
            for c in 0..3 {
                y_norm[[row, c]] = t_norm[c];
                y_raw[[row, c]] = st.target[c];
            }
            dry.push(st.sub_frac < DRY_THRESHOLD);
        }
    }

    let semantics = match variant {
        Variant::GlobalOnly => vec![SemanticType::Bottom],
        _ => first
            .surfaces
            .iter()
            .map(|st| semantic_from_features(&st.features))
            .collect::<Result<Vec<_>>>()?,
    };

    Ok(ModelInputs {
        vehicle: vehicle.to_string(),
        k,
        n,
        x,
        y_norm,
        y_raw,
        dry,
        density,
        surfaces,
        semantics,
    })
}

fn semantic_from_features(features: &[f64]) -> Result<SemanticType> {
    let idx = features[..crate::geometry::SEMANTIC_COUNT]
        .iter()
        .position(|&v| v == 1.0)
        .ok_or_else(|| Error::Data("surface features lack a semantic one-hot".into()))?;
    Ok(match idx {
        0 => SemanticType::Bottom,
        1 => SemanticType::Front,
        2 => SemanticType::Rear,
        3 => SemanticType::Side,
        _ => SemanticType::Wheel,
    })
}

/// Gathers the rows of the given samples into one contiguous batch.
pub fn gather_batch(g: &ModelInputs, sample_ids: &[usize]) -> (Array2<f64>, Array2<f64>, Array2<f64>, Vec<bool>) {
    let rows: Vec<usize> = sample_ids
        .iter()
        .flat_map(|&b| (b * g.k)..((b + 1) * g.k))
        .collect();
    let x = g.x.select(ndarray::Axis(0), &rows);
    let yn = g.y_norm.select(ndarray::Axis(0), &rows);
    let yr = g.y_raw.select(ndarray::Axis(0), &rows);
    let dry = rows.iter().map(|&r| g.dry[r]).collect();
    (x, yn, yr, dry)
}

/// Schema wrapper recorded next to trained weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub schema_version: u32,
    pub vehicle: String,
    pub variant: Variant,
    pub seed: u64,
    pub epochs_run: usize,
    pub best_val_loss: f64,
}

impl ModelManifest {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<ModelManifest> {
        let text = std::fs::read_to_string(path)?;
        let m: ModelManifest =
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
