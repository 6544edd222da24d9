//! Vehicle description: reference dimensions and patch symmetry wiring.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

use super::patches::PatchLabel;
use crate::error::{Error, Result};

/// Static description of one vehicle: reference dimensions plus the patch
/// name relations the augmentation operators need.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VehicleSpec {
    pub name: String,
    /// Reference length, width, height (m).
    pub length_ref: f64,
    pub width_ref: f64,
    pub height_ref: f64,
    /// Characteristic submergence height used to normalize mean depths (m).
    pub submergence_ref: f64,
    /// Ground-plane height for depth filtering. `None` means "lowest wheel
    /// vertex", resolved during preparation.
    pub ground_z: Option<f64>,
    /// (left, right) patch pairs exchanged by lateral mirroring.
    pub mirror_pairs: Vec<(String, String)>,
    /// (front, rear) patch pairs exchanged by longitudinal reversal.
    pub swap_pairs: Vec<(String, String)>,
    /// Patches lying on the lateral symmetry plane; they mirror onto
    /// themselves.
    pub symmetry_plane_patches: Vec<String>,
}

impl VehicleSpec {
    /// Validates internal consistency and coverage against a label set:
    /// positive dimensions, every referenced patch exists, and every patch
    /// either has a mirror partner or sits on the symmetry plane.
    pub fn validate(&self, labels: &[PatchLabel]) -> Result<()> {
        for (what, v) in [
            ("length_ref", self.length_ref),
            ("width_ref", self.width_ref),
            ("height_ref", self.height_ref),
            ("submergence_ref", self.submergence_ref),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{what} must be positive, got {v}")));
            }
        }
        let names: HashSet<&str> = labels.iter().map(|l| l.name.as_str()).collect();
        let check = |n: &str| -> Result<()> {
            if names.contains(n) {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "vehicle '{}' references unknown patch '{n}'",
                    self.name
                )))
            }
        };
        let mut mirrored: HashSet<&str> = HashSet::new();
        for (l, r) in &self.mirror_pairs {
            check(l)?;
            check(r)?;
            if l == r {
                return Err(Error::Config(format!("mirror pair ({l}, {r}) is degenerate")));
            }
            mirrored.insert(l);
            mirrored.insert(r);
        }
        for (f, b) in &self.swap_pairs {
            check(f)?;
            check(b)?;
            if f == b {
                return Err(Error::Config(format!("swap pair ({f}, {b}) is degenerate")));
            }
        }
        for p in &self.symmetry_plane_patches {
            check(p)?;
            mirrored.insert(p);
        }
        for l in labels {
            if !mirrored.contains(l.name.as_str()) {
                return Err(Error::Config(format!(
                    "patch '{}' has no mirror partner and is not on the symmetry plane",
                    l.name
                )));
            }
        }
        Ok(())
    }

    pub fn mirror_partner(&self, name: &str) -> Option<&str> {
        for (l, r) in &self.mirror_pairs {
            if l == name {
                return Some(r);
            }
            if r == name {
                return Some(l);
            }
        }
        None
    }

    pub fn swap_partner(&self, name: &str) -> Option<&str> {
        for (f, b) in &self.swap_pairs {
            if f == name {
                return Some(b);
            }
            if b == name {
                return Some(f);
            }
        }
        None
    }

    pub fn is_on_symmetry_plane(&self, name: &str) -> bool {
        self.symmetry_plane_patches.iter().any(|p| p == name)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("vehicle spec serialize: {e}")))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("vehicle spec parse: {e}")))
    }
}
