//! Semantic surface patches: label parsing and patch decomposition.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::Mesh;
use crate::defaults::PATCH_NORMAL_EPS;
use crate::error::{Error, Result};

/// Semantic surface vocabulary shared by all vehicles. The discriminant
/// order fixes the one-hot encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticType {
    Bottom = 0,
    Front = 1,
    Rear = 2,
    Side = 3,
    Wheel = 4,
}

pub const SEMANTIC_COUNT: usize = 5;

impl SemanticType {
    pub fn one_hot_index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SemanticType::Bottom => "bottom",
            SemanticType::Front => "front",
            SemanticType::Rear => "rear",
            SemanticType::Side => "side",
            SemanticType::Wheel => "wheel",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bottom" => Ok(SemanticType::Bottom),
            "front" => Ok(SemanticType::Front),
            "rear" => Ok(SemanticType::Rear),
            "side" => Ok(SemanticType::Side),
            "wheel" => Ok(SemanticType::Wheel),
            other => Err(Error::Labels(format!("unknown semantic type '{other}'"))),
        }
    }
}

/// One labeled patch record from a sidecar file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchLabel {
    pub name: String,
    pub semantic: SemanticType,
    pub faces: Vec<usize>,
}

/// Parses the label sidecar format: one record per line,
/// `name semantic_type face_index...`, `#` starts a comment.
pub fn parse_labels(text: &str) -> Result<Vec<PatchLabel>> {
    let mut labels = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let name = parts
            .next()
            .ok_or_else(|| Error::Labels(format!("line {}: missing patch name", lineno + 1)))?
            .to_string();
        let semantic = SemanticType::parse(
            parts
                .next()
                .ok_or_else(|| Error::Labels(format!("line {}: missing type", lineno + 1)))?,
        )?;
        let mut faces = Vec::new();
        for tok in parts {
            let idx: usize = tok.parse().map_err(|_| {
                Error::Labels(format!("line {}: bad face index '{tok}'", lineno + 1))
            })?;
            faces.push(idx);
        }
        if faces.is_empty() {
            return Err(Error::EmptyPatch {
                patch: name,
                reason: "no face indices in label record".into(),
            });
        }
        labels.push(PatchLabel {
            name,
            semantic,
            faces,
        });
    }
    if labels.is_empty() {
        return Err(Error::Labels("no patch records found".into()));
    }
    Ok(labels)
}

pub fn write_labels(labels: &[PatchLabel], out: &mut dyn std::io::Write) -> Result<()> {
    writeln!(out, "# patch_name semantic_type face_indices...")?;
    for l in labels {
        write!(out, "{} {}", l.name, l.semantic.as_str())?;
        for f in &l.faces {
            write!(out, " {f}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// A decomposed surface patch with aggregate descriptors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfacePatch {
    pub name: String,
    pub semantic: SemanticType,
    /// Face indices in ascending order.
    pub faces: Vec<usize>,
    /// Total patch area (m^2).
    pub area: f64,
    /// Area-weighted mean of face centroids.
    pub centroid: Point3<f64>,
    /// Normalized mean of unit face normals. Falls back to +X for closed
    /// patches such as wheels, where the mean vanishes.
    pub normal: Vector3<f64>,
    /// True when the +X fallback normal was applied.
    pub normal_fallback: bool,
}

/// Splits a mesh into labeled patches and computes their descriptors.
///
/// Every face index must be in range and assigned to at most one patch;
/// faces left unlabeled (a deck top, say) are simply not part of any patch.
/// Face lists are sorted so descriptor sums run in face-index order and
/// repeated runs are bit-identical.
pub fn decompose_patches(mesh: &Mesh, labels: &[PatchLabel]) -> Result<Vec<SurfacePatch>> {
    let mut seen = vec![false; mesh.faces.len()];
    let mut names = std::collections::HashSet::new();
    let mut patches = Vec::with_capacity(labels.len());
    for label in labels {
        if !names.insert(label.name.clone()) {
            return Err(Error::Labels(format!("duplicate patch name '{}'", label.name)));
        }
        let mut faces = label.faces.clone();
        faces.sort_unstable();
        faces.dedup();
        if faces.len() != label.faces.len() {
            return Err(Error::Labels(format!(
                "patch '{}' lists a face more than once",
                label.name
            )));
        }
        for &f in &faces {
            if f >= mesh.faces.len() {
                return Err(Error::Labels(format!(
                    "patch '{}' references face {f} of {}",
                    label.name,
                    mesh.faces.len()
                )));
            }
            if seen[f] {
                return Err(Error::Labels(format!(
                    "face {f} assigned to more than one patch ('{}' overlaps an earlier patch)",
                    label.name
                )));
            }
            seen[f] = true;
        }
        let mut area = 0.0;
        let mut centroid = Vector3::zeros();
        let mut normal_sum = Vector3::zeros();
        for &f in &faces {
            let a = mesh.face_area(f);
            area += a;
            centroid += mesh.face_centroid(f).coords * a;
            normal_sum += mesh.face_normal(f);
        }
        if area <= 0.0 {
            return Err(Error::EmptyPatch {
                patch: label.name.clone(),
                reason: "zero total area".into(),
            });
        }
        let mean_normal = normal_sum / faces.len() as f64;
        let (normal, normal_fallback) = if mean_normal.norm() < PATCH_NORMAL_EPS {
            (Vector3::new(1.0, 0.0, 0.0), true)
        } else {
            (mean_normal.normalize(), false)
        };
        patches.push(SurfacePatch {
            name: label.name.clone(),
            semantic: label.semantic,
            faces,
            area,
            centroid: Point3::from(centroid / area),
            normal,
            normal_fallback,
        });
    }
    Ok(patches)
}

/// Relabels a vehicle with groups of patches merged into single patches.
/// Each group is (new name, new semantic type, member patch names). Patches
/// not named in any group pass through unchanged, keeping their original
/// relative order; merged patches take the position of their first member.
pub fn merge_labels(
    labels: &[PatchLabel],
    groups: &[(&str, SemanticType, Vec<&str>)],
) -> Result<Vec<PatchLabel>> {
    let mut member_of: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for (gi, (_, _, members)) in groups.iter().enumerate() {
        for m in members {
            if member_of.insert(m, gi).is_some() {
                return Err(Error::Labels(format!("patch '{m}' in two merge groups")));
            }
        }
    }
    let mut out: Vec<PatchLabel> = Vec::new();
    let mut emitted = vec![false; groups.len()];
    for label in labels {
        match member_of.get(label.name.as_str()) {
            None => out.push(label.clone()),
            Some(&gi) if !emitted[gi] => {
                emitted[gi] = true;
                let (name, semantic, members) = &groups[gi];
                let mut faces = Vec::new();
                for m in members {
                    let l = labels
                        .iter()
                        .find(|l| l.name == *m)
                        .ok_or_else(|| Error::Labels(format!("merge group names unknown patch '{m}'")))?;
                    faces.extend_from_slice(&l.faces);
                }
                out.push(PatchLabel {
                    name: name.to_string(),
                    semantic: *semantic,
                    faces,
                });
            }
            Some(_) => {}
        }
    }
    Ok(out)
}
