//! End-to-end checks of the binary: the full command chain, staleness
//! handling, config layering, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn fording(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fording"));
    cmd.args(args);
    cmd.env_remove("FORDING_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = fording(args, &[]);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}{}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn end_to_end_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (veh, prep, data, model) =
        (dir.join("veh"), dir.join("prep"), dir.join("data"), dir.join("model"));

    let text = ok(&["vehicle", "mini-husky", "--out", s(&veh)]);
    assert!(text.contains("13 patches"), "{text}");
    for f in ["mesh.stl", "patches.labels", "spec.json"] {
        assert!(veh.join(f).exists(), "missing {f}");
    }

    ok(&["prepare", s(&veh), "--out", s(&prep), "--samples", "128"]);
    let again = ok(&["prepare", s(&veh), "--out", s(&prep), "--samples", "128"]);
    assert!(again.contains("up to date"), "{again}");
    assert!(prep.join("grid.sdf").exists() && prep.join("provenance.json").exists());

    let text = ok(&["generate", s(&prep), "--out", s(&data), "--cases", "5"]);
    assert!(text.contains("5 cases") && text.contains("augmented 4x"), "{text}");
    assert!(data.join("samples.jsonl").exists());
    assert!(data.join("cases").join("case_0000.json").exists());

    let text = ok(&["train", s(&data), "--out", s(&model), "--epochs", "2", "--hidden", "32"]);
    assert!(text.contains("2 epochs"), "{text}");
    for f in ["model.fmlw", "stats.json", "history.csv", "report.json", "manifest.json"] {
        assert!(model.join(f).exists(), "missing {f}");
    }

    let report_path = dir.join("eval.json");
    let text = ok(&["eval", s(&model), s(&data), "--split", "val", "--out", s(&report_path)]);
    assert!(text.contains("net Fx: mae"), "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(report["n_samples"].as_u64().unwrap() > 0);

    let val = dir.join("val");
    let text = ok(&[
        "validate", s(&model), s(&prep), "--out", s(&val), "--speeds", "3", "--depths",
        "0.12,0.20",
    ]);
    assert!(text.contains("validation.passed"), "{text}");
    assert!(val.join("report.json").exists() && val.join("points.csv").exists());

    let strict = fording(
        &["validate", s(&model), s(&prep), "--out", s(&val), "--speeds", "3", "--depths",
          "0.12,0.20", "--strict"],
        &[],
    );
    let passed = String::from_utf8_lossy(&strict.stdout).contains("validation.passed true");
    assert_eq!(strict.status.success(), passed, "strict exit must track the verdict");

    let bench = dir.join("bench");
    let text = ok(&[
        "bench", s(&model), s(&prep), "--out", s(&bench), "--iters", "150", "--precision", "f64",
    ]);
    assert!(text.contains("single f64"), "{text}");
    assert!(bench.join("latency_f64.json").exists() && bench.join("durations_f64.txt").exists());
}

#[test]
fn prepare_refuses_drift_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (veh, prep) = (dir.join("veh"), dir.join("prep"));
    ok(&["vehicle", "mini-husky", "--out", s(&veh)]);
    ok(&["prepare", s(&veh), "--out", s(&prep), "--samples", "128"]);

    let drifted = fording(&["prepare", s(&veh), "--out", s(&prep), "--samples", "160"], &[]);
    assert_eq!(code(&drifted), 3, "{}", String::from_utf8_lossy(&drifted.stderr));
    assert!(String::from_utf8_lossy(&drifted.stderr).contains("--force"));

    let text =
        ok(&["prepare", s(&veh), "--out", s(&prep), "--samples", "160", "--force"]);
    assert!(text.contains("prepared mini-husky"), "{text}");
}

#[test]
fn errors_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    let bad_name = fording(&["vehicle", "rover", "--out", s(&dir.join("v"))], &[]);
    assert_eq!(code(&bad_name), 2);

    let missing_data =
        fording(&["train", s(&dir.join("nope")), "--out", s(&dir.join("m"))], &[]);
    assert_eq!(code(&missing_data), 3);

    let toml = dir.join("bad.toml");
    std::fs::write(&toml, "[train]\nbogus = 1\n").unwrap();
    let bad_cfg = fording(
        &["--config", s(&toml), "vehicle", "mini-husky", "--out", s(&dir.join("v2"))],
        &[],
    );
    assert_eq!(code(&bad_cfg), 2);

    let no_out = fording(&["vehicle", "mini-husky"], &[]);
    assert_eq!(code(&no_out), 2, "missing --out without FORDING_OUT is a config error");
}

#[test]
fn out_prefix_env_names_output_dirs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = fording(&["vehicle", "mini-husky"], &[("FORDING_OUT", s(dir))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("mini-husky").join("mesh.stl").exists());
}
