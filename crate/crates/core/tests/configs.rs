use std::path::Path;

use qkd_microgrid::sim::SimConfig;

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            SimConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 3);
}

#[test]
fn kps_demo_file_matches_preset() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/kps-demo.toml");
    let file = SimConfig::load(&path).unwrap();
    let preset = SimConfig { seed: 7, ..SimConfig::kps_demo(true) };
    assert_eq!(file, preset);
}
