//! Implementations behind the subcommands: each one wires core stages
//! together, stamps provenance, and prints a short summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use fording_core::bench::{
    bench_single, bench_sustained, durations_to_text, BenchInput, InputMode, Precision,
};
use fording_core::dataset::{
    assemble_dataset, generate_campaign, load_samples, save_samples, split_by_case,
    write_case_file, CampaignSpec, NormStats, Sample,
};
use fording_core::defaults::{
    CampaignRanges, GRAVITY, RANGES_MINI_HUSKY, RANGES_MINI_WARTHOG, VALIDATION_DEPTHS_MINI_HUSKY,
    VALIDATION_DEPTHS_MINI_WARTHOG, VALIDATION_SPEEDS_MINI_HUSKY, VALIDATION_SPEEDS_MINI_WARTHOG,
    WATER_DENSITY,
};
use fording_core::error::{Error, Result};
use fording_core::geometry::{self, hash_hex, load_mesh, toys, VehicleSpec};
use fording_core::model::{
    build_inputs, evaluate, fit_stats_for, history_to_csv, load_model, save_model, train,
    ModelManifest, Mlp, TrainConfig, Variant,
};
use fording_core::pipeline::InferencePipeline;
use fording_core::prepare::{prepare_vehicle, PreparedVehicle};
use fording_core::sdf::{build_sdf_grid, load_grid, save_grid};
use fording_core::validation::{
    points_to_csv, read_trace, run_validation_suite, speed_grid, synthetic_traces, TrialTrace,
    ValidationConfig,
};

use crate::config::{fingerprint, EffectiveTrain, FileConfig, Provenance};

const MESH_FILE: &str = "mesh.stl";
const LABELS_FILE: &str = "patches.labels";
const SPEC_FILE: &str = "spec.json";
const GRID_FILE: &str = "grid.sdf";
const PREPARED_FILE: &str = "prepared.json";
const SAMPLES_FILE: &str = "samples.jsonl";
const MODEL_FILE: &str = "model.fmlw";
const STATS_FILE: &str = "stats.json";

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format(format!("serialize {}: {e}", path.display())))?;
    fs::write(path, json)?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn parse_variant(s: &str) -> Result<Variant> {
    match s {
        "full" => Ok(Variant::Full),
        "stripped-dims" => Ok(Variant::StrippedDims),
        "global-only" => Ok(Variant::GlobalOnly),
        other => Err(Error::Config(format!(
            "unknown variant '{other}': expected full, stripped-dims, or global-only"
        ))),
    }
}

fn campaign_ranges_for(name: &str) -> Option<CampaignRanges> {
    match name {
        "mini-husky" => Some(RANGES_MINI_HUSKY),
        "mini-warthog" => Some(RANGES_MINI_WARTHOG),
        _ => None,
    }
}

fn validation_defaults_for(name: &str) -> Option<(&'static [f64], (f64, f64))> {
    match name {
        "mini-husky" => Some((&VALIDATION_DEPTHS_MINI_HUSKY, VALIDATION_SPEEDS_MINI_HUSKY)),
        "mini-warthog" => Some((&VALIDATION_DEPTHS_MINI_WARTHOG, VALIDATION_SPEEDS_MINI_WARTHOG)),
        _ => None,
    }
}

pub fn cmd_vehicle(name: &str, out: PathBuf) -> Result<()> {
    let toy = match name {
        "mini-husky" => toys::mini_husky(),
        "mini-warthog" => toys::mini_warthog(),
        other => {
            return Err(Error::Config(format!(
                "unknown vehicle '{other}': expected mini-husky or mini-warthog"
            )))
        }
    };
    fs::create_dir_all(&out)?;
    let mut stl = Vec::new();
    geometry::stl::write_binary(&toy.mesh, &mut stl)?;
    fs::write(out.join(MESH_FILE), stl)?;
    let mut labels = Vec::new();
    geometry::patches::write_labels(&toy.labels, &mut labels)?;
    fs::write(out.join(LABELS_FILE), labels)?;
    toy.spec.save(&out.join(SPEC_FILE))?;
    println!(
        "wrote {}: {} faces, {} patches, mesh hash {}",
        out.display(),
        toy.mesh.faces.len(),
        toy.labels.len(),
        &hash_hex(&toy.mesh.content_hash())[..12],
    );
    Ok(())
}

fn load_vehicle_dir(dir: &Path) -> Result<(geometry::Mesh, Vec<geometry::PatchLabel>, VehicleSpec)> {
    let mesh = load_mesh(&dir.join(MESH_FILE), None)?;
    let labels_text = fs::read_to_string(dir.join(LABELS_FILE))
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", dir.join(LABELS_FILE).display())))?;
    let labels = geometry::patches::parse_labels(&labels_text)?;
    let spec = VehicleSpec::load(&dir.join(SPEC_FILE))?;
    Ok((mesh, labels, spec))
}

pub fn cmd_prepare(
    cfg: &FileConfig,
    vehicle_dir: PathBuf,
    out: PathBuf,
    seed: u64,
    samples: Option<usize>,
    force: bool,
) -> Result<()> {
    let (mesh, labels, spec) = load_vehicle_dir(&vehicle_dir)?;
    let eff = cfg.effective_prepare(seed, samples);
    let fp = fingerprint(&eff);
    let mesh_hash = mesh.content_hash();

    let grid_path = out.join(GRID_FILE);
    if grid_path.exists() && !force {
        let fresh = load_grid(&grid_path).is_ok_and(|g| g.mesh_hash == mesh_hash)
            && Provenance::read(&out).is_ok_and(|p| p.fingerprint == fp)
            && out.join(PREPARED_FILE).exists();
        if fresh {
            println!("{} is up to date (mesh {})", out.display(), &hash_hex(&mesh_hash)[..12]);
            return Ok(());
        }
        return Err(Error::Data(format!(
            "{} holds outputs for a different mesh or configuration; rerun with --force to regenerate",
            out.display()
        )));
    }

    fs::create_dir_all(&out)?;
    let grid = build_sdf_grid(&mesh)?;
    let prep = prepare_vehicle(&mesh, &labels, &spec, eff.samples_per_patch, eff.seed)?;
    save_grid(&grid, &grid_path)?;
    write_json(&prep, &out.join(PREPARED_FILE))?;
    Provenance::new("prepare", eff.seed, fp).write(&out)?;
    println!(
        "prepared {}: grid {}x{}x{} at {:.5} m, {} patches, {} depth samples each",
        spec.name,
        grid.dims[0],
        grid.dims[1],
        grid.dims[2],
        grid.spacing,
        prep.patches.len(),
        eff.samples_per_patch,
    );
    Ok(())
}

fn load_prep_dir(dir: &Path) -> Result<PreparedVehicle> {
    read_json(&dir.join(PREPARED_FILE))
}

#[derive(Debug, Serialize)]
struct CampaignManifest {
    schema_version: u32,
    vehicle: String,
    cases: usize,
    samples: usize,
    augment: bool,
    seed: u64,
    fingerprint: String,
}

pub fn cmd_generate(
    cfg: &FileConfig,
    prep_dir: PathBuf,
    out: PathBuf,
    seed: u64,
    cases: Option<usize>,
    no_augment: bool,
) -> Result<()> {
    let prep = load_prep_dir(&prep_dir)?;
    let base = match campaign_ranges_for(&prep.spec.name) {
        Some(r) => r,
        None => {
            let g = &cfg.generate;
            if g.speed.is_none() || g.heading_deg.is_none() || g.density.is_none() || g.depth.is_none() {
                return Err(Error::Config(format!(
                    "vehicle '{}' has no built-in campaign ranges; set speed, heading_deg, density, and depth under [generate]",
                    prep.spec.name
                )));
            }
            RANGES_MINI_HUSKY
        }
    };
    let eff = cfg.effective_generate(seed, cases, !no_augment, &base)?;
    let fp = fingerprint(&eff);

    let mut campaign = CampaignSpec::standard(
        CampaignRanges {
            speed: (eff.speed[0], eff.speed[1]),
            heading_deg: (eff.heading_deg[0], eff.heading_deg[1]),
            density: (eff.density[0], eff.density[1]),
            depth: (eff.depth[0], eff.depth[1]),
        },
        eff.seed,
    );
    campaign.cases = eff.cases;
    campaign.duration = eff.duration;
    campaign.dt = eff.dt;
    campaign.noise_frac = eff.noise_frac;

    let records = generate_campaign(&prep, &campaign);
    let case_dir = out.join("cases");
    fs::create_dir_all(&case_dir)?;
    for record in &records {
        let name = format!("case_{:04}.json", record.conditions.case_index);
        write_case_file(record, &case_dir.join(name))?;
    }
    let samples = assemble_dataset(&prep, records, eff.cutoff, eff.sections, eff.augment)?;
    save_samples(&samples, &out.join(SAMPLES_FILE))?;
    write_json(
        &CampaignManifest {
            schema_version: 1,
            vehicle: prep.spec.name.clone(),
            cases: eff.cases,
            samples: samples.len(),
            augment: eff.augment,
            seed: eff.seed,
            fingerprint: fp.clone(),
        },
        &out.join("campaign.json"),
    )?;
    Provenance::new("generate", eff.seed, fp).write(&out)?;
    println!(
        "generated {}: {} cases, {} samples{}",
        out.display(),
        eff.cases,
        samples.len(),
        if eff.augment { " (augmented 4x)" } else { "" },
    );
    Ok(())
}

fn indexed(samples: &[Sample], idx: &[usize]) -> Vec<Sample> {
    idx.iter().map(|&i| samples[i].clone()).collect()
}

pub fn cmd_train(data_dir: PathBuf, out: PathBuf, eff: EffectiveTrain) -> Result<()> {
    let variant = parse_variant(&eff.variant)?;
    let samples = load_samples(&data_dir.join(SAMPLES_FILE))?;
    let (train_idx, val_idx) = split_by_case(&samples, eff.split, eff.seed)?;
    let stats = fit_stats_for(&indexed(&samples, &train_idx), variant)?;
    let train_groups = build_inputs(&samples, &train_idx, &stats, variant)?;
    let val_groups = build_inputs(&samples, &val_idx, &stats, variant)?;

    let mut model = Mlp::init(variant.surface_dim(), variant.global_dim(), eff.hidden, eff.seed);
    let tc = TrainConfig {
        epochs: eff.epochs,
        batch_size: eff.batch_size,
        lr: eff.lr,
        seed: eff.seed,
        early_stop_smape: eff.early_stop_smape,
        ..TrainConfig::default()
    };
    let report = train(&mut model, &train_groups, &val_groups, &stats, &tc)?;

    fs::create_dir_all(&out)?;
    let fp = fingerprint(&eff);
    save_model(&model, variant, eff.seed, &out.join(MODEL_FILE))?;
    write_json(&stats, &out.join(STATS_FILE))?;
    fs::write(out.join("history.csv"), history_to_csv(&report.history))?;
    write_json(&report, &out.join("report.json"))?;
    let vehicles: Vec<&str> = train_groups.iter().map(|g| g.vehicle.as_str()).collect();
    ModelManifest {
        schema_version: 1,
        vehicle: vehicles.join("+"),
        variant,
        seed: eff.seed,
        epochs_run: report.epochs_run,
        best_val_loss: report.best_val_loss,
    }
    .save(&out.join("manifest.json"))?;
    write_json(&eff, &out.join("train_config.json"))?;
    Provenance::new("train", eff.seed, fp).write(&out)?;
    let last = report.history.last();
    println!(
        "trained {}: {} epochs, best val loss {:.6}, final val net Fx sMAPE {:.2}%{}",
        out.display(),
        report.epochs_run,
        report.best_val_loss,
        last.map_or(f64::NAN, |e| e.val_net_fx_smape),
        if report.stopped_early { " (early stop)" } else { "" },
    );
    Ok(())
}

fn load_model_dir(dir: &Path) -> Result<(Mlp, Variant, u64, NormStats)> {
    let saved = load_model(&dir.join(MODEL_FILE))?;
    let stats: NormStats = read_json(&dir.join(STATS_FILE))?;
    Ok((saved.model, saved.variant, saved.seed, stats))
}

pub fn cmd_eval(
    model_dir: PathBuf,
    data_dir: PathBuf,
    split: &str,
    out: Option<PathBuf>,
) -> Result<()> {
    let (model, variant, _, stats) = load_model_dir(&model_dir)?;
    let samples = load_samples(&data_dir.join(SAMPLES_FILE))?;
    let indices: Vec<usize> = match split {
        "all" => (0..samples.len()).collect(),
        "train" | "val" => {
            let tc_path = model_dir.join("train_config.json");
            if !tc_path.exists() {
                return Err(Error::Config(format!(
                    "--split {split} needs {} to reproduce the case split; use --split all",
                    tc_path.display()
                )));
            }
            let tc: EffectiveTrain = read_json(&tc_path)?;
            let (tr, va) = split_by_case(&samples, tc.split, tc.seed)?;
            if split == "train" {
                tr
            } else {
                va
            }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown split '{other}': expected all, train, or val"
            )))
        }
    };
    let groups = build_inputs(&samples, &indices, &stats, variant)?;
    let report = evaluate(&model, &groups, &stats);
    println!(
        "eval on {} ({} samples, split {split}):",
        data_dir.display(),
        report.n_samples,
    );
    for (axis, i) in [("Fx", 0), ("Fy", 1), ("Fz", 2)] {
        println!(
            "  net {axis}: mae {:.4} N  rmse {:.4} N  smape {:.2}%  rel_mae {:.4}",
            report.net.mae[i], report.net.rmse[i], report.net.smape[i], report.net.rel_mae[i],
        );
    }
    if let Some(path) = out {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        write_json(&report, &path)?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn read_trace_dir(dir: &Path) -> Result<Vec<TrialTrace>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Data(format!("no .csv traces in {}", dir.display())));
    }
    paths.iter().map(|p| read_trace(p)).collect()
}

pub fn cmd_validate(
    cfg: &FileConfig,
    model_dir: PathBuf,
    prep_dir: PathBuf,
    out: PathBuf,
    seed: u64,
    traces_dir: Option<PathBuf>,
    depths: Option<Vec<f64>>,
    speeds: Option<usize>,
    strict: bool,
) -> Result<()> {
    let (model, variant, _, stats) = load_model_dir(&model_dir)?;
    let prep = load_prep_dir(&prep_dir)?;
    let spec = prep.spec.clone();
    let pipeline = InferencePipeline::new(prep, model, stats, variant)?;

    let (traces, eff) = match traces_dir {
        Some(dir) => (read_trace_dir(&dir)?, None),
        None => {
            let eff = cfg.effective_validate(
                seed,
                depths,
                speeds,
                validation_defaults_for(&spec.name),
            )?;
            let grid = speed_grid((eff.speed_span[0], eff.speed_span[1]), eff.speeds);
            (synthetic_traces(&grid, &eff.depths), Some(eff))
        }
    };

    let vcfg = ValidationConfig::default();
    let output = run_validation_suite(
        |v, rho, depth, g| pipeline.predict(v, rho, depth, g).net,
        &traces,
        &spec,
        &vcfg,
    )?;

    fs::create_dir_all(&out)?;
    write_json(&output.report, &out.join("report.json"))?;
    fs::write(out.join("points.csv"), points_to_csv(&output.points))?;
    let summary = output.report.summary_text();
    fs::write(out.join("summary.txt"), &summary)?;
    let fp = eff.as_ref().map_or_else(|| fingerprint(&"external-traces"), fingerprint);
    Provenance::new("validate", seed, fp).write(&out)?;
    print!("{summary}");
    if strict && !output.report.passed {
        return Err(Error::Data("validation checks failed".into()));
    }
    Ok(())
}

pub fn cmd_bench(
    cfg: &FileConfig,
    model_dir: PathBuf,
    prep_dir: PathBuf,
    out: Option<PathBuf>,
    seed: u64,
    iters: Option<usize>,
    sustained_secs: Option<f64>,
    mode: &str,
    precision: &str,
) -> Result<()> {
    let (model, variant, _, stats) = load_model_dir(&model_dir)?;
    let prep = load_prep_dir(&prep_dir)?;
    let name = prep.spec.name.clone();
    let pipeline = InferencePipeline::new(prep, model, stats, variant)?;
    let eff = cfg.effective_bench(seed, iters, sustained_secs);

    let (depths, span) = validation_defaults_for(&name)
        .unwrap_or((&VALIDATION_DEPTHS_MINI_HUSKY, VALIDATION_SPEEDS_MINI_HUSKY));
    let mid_depth = depths[depths.len() / 2];
    let base = BenchInput {
        velocity: [0.5 * (span.0 + span.1), 0.0, 0.0],
        density: WATER_DENSITY,
        depth: mid_depth,
        gravity: GRAVITY,
    };
    let inputs = [
        base,
        BenchInput { velocity: [span.0, 0.0, 0.0], depth: depths[0], ..base },
        BenchInput { velocity: [span.1, 0.1, 0.0], depth: depths[depths.len() - 1], ..base },
    ];
    let mode = match mode {
        "constant" => InputMode::Constant,
        "varying" => InputMode::Varying,
        other => {
            return Err(Error::Config(format!(
                "unknown mode '{other}': expected constant or varying"
            )))
        }
    };
    let precisions: Vec<Precision> = match precision {
        "f64" => vec![Precision::F64],
        "f32" => vec![Precision::F32],
        "both" => vec![Precision::F64, Precision::F32],
        other => {
            return Err(Error::Config(format!(
                "unknown precision '{other}': expected f64, f32, or both"
            )))
        }
    };

    if let Some(dir) = &out {
        fs::create_dir_all(dir)?;
    }
    for p in &precisions {
        let single = bench_single(&pipeline, &inputs, eff.iters, *p)?;
        let s = &single.stats;
        println!(
            "single {}: n {}  mean {:.4} ms  median {:.4} ms  p95 {:.4} ms  p99 {:.4} ms  [{}]",
            s.precision, s.n, s.mean_ms, s.median_ms, s.p95_ms, s.p99_ms, s.machine,
        );
        if let Some(dir) = &out {
            write_json(s, &dir.join(format!("latency_{}.json", s.precision)))?;
            fs::write(
                dir.join(format!("durations_{}.txt", s.precision)),
                durations_to_text(&single.raw_ms),
            )?;
        }
    }
    if eff.sustained_secs > 0.0 {
        for p in &precisions {
            let (s, raw) = bench_sustained(&pipeline, &base, eff.sustained_secs, mode, *p)?;
            println!(
                "sustained {}: {:.0} Hz over {:.1} s  p99 {:.4} ms  max {:.4} ms",
                s.precision, s.rate_hz, s.elapsed_s, s.p99_ms, s.max_ms,
            );
            if let Some(dir) = &out {
                write_json(&s, &dir.join(format!("sustained_{}.json", s.precision)))?;
                fs::write(
                    dir.join(format!("sustained_durations_{}.txt", s.precision)),
                    durations_to_text(&raw),
                )?;
            }
        }
    }
    if let Some(dir) = &out {
        Provenance::new("bench", eff.seed, fingerprint(&eff)).write(dir)?;
    }
    Ok(())
}
