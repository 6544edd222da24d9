//! Layered run configuration: defaults, then an optional TOML file, then
//! command-line flags. Every stage records its effective configuration and
//! a fingerprint of it next to the outputs it produces.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fording_core::defaults::{
    BATCH_SIZE, BENCH_MIN_ITERS, CAMPAIGN_CASES, DEPTH_SAMPLES_PER_PATCH, EPOCHS, HIDDEN_WIDTH,
    LEARNING_RATE, SECTION_COUNT, TRAIN_FRACTION, TRANSIENT_CUTOFF, VALIDATION_SPEED_COUNT,
};
use fording_core::error::{Error, Result};

/// Optional per-stage settings loaded from a TOML file. Anything absent
/// falls back to the checked-in defaults; flags override both.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub prepare: PrepareFile,
    #[serde(default)]
    pub generate: GenerateFile,
    #[serde(default)]
    pub train: TrainFile,
    #[serde(default)]
    pub validate: ValidateFile,
    #[serde(default)]
    pub bench: BenchFile,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepareFile {
    pub samples_per_patch: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateFile {
    pub cases: Option<usize>,
    pub sections: Option<usize>,
    pub cutoff: Option<f64>,
    pub augment: Option<bool>,
    pub duration: Option<f64>,
    pub dt: Option<f64>,
    pub noise_frac: Option<f64>,
    pub speed: Option<[f64; 2]>,
    pub heading_deg: Option<[f64; 2]>,
    pub density: Option<[f64; 2]>,
    pub depth: Option<[f64; 2]>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub hidden: Option<usize>,
    pub variant: Option<String>,
    pub split: Option<f64>,
    pub early_stop_smape: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateFile {
    pub depths: Option<Vec<f64>>,
    pub speeds: Option<usize>,
    pub speed_span: Option<[f64; 2]>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchFile {
    pub iters: Option<usize>,
    pub sustained_secs: Option<f64>,
}

pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
}

/// Resolves an output directory: explicit flag, else `FORDING_OUT/<leaf>`.
pub fn resolve_out(flag: Option<PathBuf>, leaf: &str) -> Result<PathBuf> {
    if let Some(p) = flag {
        return Ok(p);
    }
    if let Ok(base) = std::env::var("FORDING_OUT") {
        return Ok(PathBuf::from(base).join(leaf));
    }
    Err(Error::Config(format!(
        "no output directory: pass --out or set FORDING_OUT (default leaf '{leaf}')"
    )))
}

/// Short hex digest of a stage's effective configuration.
pub fn fingerprint<T: Serialize>(effective: &T) -> String {
    let json = serde_json::to_string(effective).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance stamp written next to every stage's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub tool: String,
    pub command: String,
    pub seed: u64,
    pub fingerprint: String,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, fingerprint: String) -> Self {
        Provenance {
            schema_version: 1,
            tool: concat!("fording ", env!("CARGO_PKG_VERSION")).to_string(),
            command: command.to_string(),
            seed,
            fingerprint,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("provenance serialize: {e}")))?;
        std::fs::write(dir.join("provenance.json"), json)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join("provenance.json"))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("provenance parse: {e}")))
    }
}

pub const DEFAULT_SEED: u64 = 7;

/// Effective per-stage configurations after layering. These are what gets
/// fingerprinted and stamped into outputs.
#[derive(Debug, Clone, Serialize)]
pub struct EffectivePrepare {
    pub seed: u64,
    pub samples_per_patch: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveGenerate {
    pub seed: u64,
    pub cases: usize,
    pub sections: usize,
    pub cutoff: f64,
    pub augment: bool,
    pub duration: f64,
    pub dt: f64,
    pub noise_frac: f64,
    pub speed: [f64; 2],
    pub heading_deg: [f64; 2],
    pub density: [f64; 2],
    pub depth: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveTrain {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub hidden: usize,
    pub variant: String,
    pub split: f64,
    pub early_stop_smape: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveValidate {
    pub seed: u64,
    pub depths: Vec<f64>,
    pub speeds: usize,
    pub speed_span: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveBench {
    pub seed: u64,
    pub iters: usize,
    pub sustained_secs: f64,
}

impl FileConfig {
    pub fn effective_prepare(&self, seed: u64, samples: Option<usize>) -> EffectivePrepare {
        EffectivePrepare {
            seed,
            samples_per_patch: samples
                .or(self.prepare.samples_per_patch)
                .unwrap_or(DEPTH_SAMPLES_PER_PATCH),
        }
    }

    pub fn effective_generate(
        &self,
        seed: u64,
        cases: Option<usize>,
        augment: bool,
        base: &fording_core::defaults::CampaignRanges,
    ) -> Result<EffectiveGenerate> {
        let g = &self.generate;
        let eff = EffectiveGenerate {
            seed,
            cases: cases.or(g.cases).unwrap_or(CAMPAIGN_CASES),
            sections: g.sections.unwrap_or(SECTION_COUNT),
            cutoff: g.cutoff.unwrap_or(TRANSIENT_CUTOFF),
            augment: g.augment.unwrap_or(augment),
            duration: g.duration.unwrap_or(fording_core::defaults::CASE_DURATION),
            dt: g.dt.unwrap_or(fording_core::defaults::CASE_DT),
            noise_frac: g.noise_frac.unwrap_or(fording_core::defaults::ORACLE_NOISE_FRAC),
            speed: g.speed.unwrap_or([base.speed.0, base.speed.1]),
            heading_deg: g.heading_deg.unwrap_or([base.heading_deg.0, base.heading_deg.1]),
            density: g.density.unwrap_or([base.density.0, base.density.1]),
            depth: g.depth.unwrap_or([base.depth.0, base.depth.1]),
        };
        for (name, r) in [
            ("speed", eff.speed),
            ("heading_deg", eff.heading_deg),
            ("density", eff.density),
            ("depth", eff.depth),
        ] {
            if r[0] > r[1] {
                return Err(Error::Config(format!(
                    "{name} range has min {} above max {}",
                    r[0], r[1]
                )));
            }
        }
        Ok(eff)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn effective_train(
        &self,
        seed: u64,
        epochs: Option<usize>,
        batch_size: Option<usize>,
        lr: Option<f64>,
        hidden: Option<usize>,
        variant: Option<String>,
        split: Option<f64>,
        early_stop_smape: Option<f64>,
    ) -> Result<EffectiveTrain> {
        let t = &self.train;
        let eff = EffectiveTrain {
            seed,
            epochs: epochs.or(t.epochs).unwrap_or(EPOCHS),
            batch_size: batch_size.or(t.batch_size).unwrap_or(BATCH_SIZE),
            lr: lr.or(t.lr).unwrap_or(LEARNING_RATE),
            hidden: hidden.or(t.hidden).unwrap_or(HIDDEN_WIDTH),
            variant: variant.or_else(|| t.variant.clone()).unwrap_or_else(|| "full".into()),
            split: split.or(t.split).unwrap_or(TRAIN_FRACTION),
            early_stop_smape: early_stop_smape.or(t.early_stop_smape),
        };
        if !(0.0 < eff.split && eff.split < 1.0) {
            return Err(Error::Config(format!(
                "train split {} must be strictly between 0 and 1",
                eff.split
            )));
        }
        Ok(eff)
    }

    pub fn effective_validate(
        &self,
        seed: u64,
        depths: Option<Vec<f64>>,
        speeds: Option<usize>,
        fallback: Option<(&[f64], (f64, f64))>,
    ) -> Result<EffectiveValidate> {
        let v = &self.validate;
        let depths = depths
            .or_else(|| v.depths.clone())
            .or_else(|| fallback.map(|(d, _)| d.to_vec()))
            .ok_or_else(|| {
                Error::Config(
                    "no trial depths: pass --depths (unknown vehicle class has no default)"
                        .into(),
                )
            })?;
        if depths.is_empty() {
            return Err(Error::Config("trial depth list is empty".into()));
        }
        let speed_span = v
            .speed_span
            .or_else(|| fallback.map(|(_, s)| [s.0, s.1]))
            .ok_or_else(|| {
                Error::Config(
                    "no trial speed span: set [validate] speed_span (unknown vehicle class)"
                        .into(),
                )
            })?;
        if speed_span[0] > speed_span[1] || speed_span[0] <= 0.0 {
            return Err(Error::Config(format!(
                "bad speed span {speed_span:?}: need 0 < min <= max"
            )));
        }
        Ok(EffectiveValidate {
            seed,
            depths,
            speeds: speeds.or(v.speeds).unwrap_or(VALIDATION_SPEED_COUNT),
            speed_span,
        })
    }

    pub fn effective_bench(
        &self,
        seed: u64,
        iters: Option<usize>,
        sustained_secs: Option<f64>,
    ) -> EffectiveBench {
        EffectiveBench {
            seed,
            iters: iters.or(self.bench.iters).unwrap_or(BENCH_MIN_ITERS),
            sustained_secs: sustained_secs.or(self.bench.sustained_secs).unwrap_or(0.0),
        }
    }
}
