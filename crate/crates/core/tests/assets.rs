//! The checked-in vehicle assets must stay byte-identical to what the
//! built-in generators produce, so `assets/` can never drift from the code.

use std::path::PathBuf;

use fording_core::geometry::{patches::write_labels, stl::write_binary, toys, toys::ToyVehicle};

fn assets_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(name)
}

fn assert_matches_generator(name: &str, toy: ToyVehicle) {
    let dir = assets_dir(name);

    let mut mesh = Vec::new();
    write_binary(&toy.mesh, &mut mesh).unwrap();
    assert_eq!(
        std::fs::read(dir.join("mesh.stl")).unwrap(),
        mesh,
        "{name} mesh.stl drifted from the generator"
    );

    let mut labels = Vec::new();
    write_labels(&toy.labels, &mut labels).unwrap();
    assert_eq!(
        std::fs::read(dir.join("patches.labels")).unwrap(),
        labels,
        "{name} patches.labels drifted from the generator"
    );

    let spec = serde_json::to_string_pretty(&toy.spec).unwrap();
    assert_eq!(
        std::fs::read_to_string(dir.join("spec.json")).unwrap(),
        spec,
        "{name} spec.json drifted from the generator"
    );
}

#[test]
fn mini_husky_assets_match_generator() {
    assert_matches_generator("mini-husky", toys::mini_husky());
}

#[test]
fn mini_warthog_assets_match_generator() {
    assert_matches_generator("mini-warthog", toys::mini_warthog());
}
