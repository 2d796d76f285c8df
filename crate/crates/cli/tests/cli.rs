use std::path::{Path, PathBuf};
use std::process::Command;

use heraldlab_cli::config::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heraldlab"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn single_photon_text() -> String {
    std::fs::read_to_string(configs().join("single_photon.toml")).unwrap()
}

fn run(args: &[&str], config: &Path, out: &Path) -> std::process::Output {
    bin().args(args).arg("--config").arg(config).arg("--out").arg(out).output().unwrap()
}

#[test]
fn bundled_configs_validate_and_round_trip() {
    for name in ["single_photon.toml", "two_photon_time_bin.toml", "cat.toml"] {
        let (cfg, _) = ExperimentConfig::load(&configs().join(name)).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again, "{name}");
    }
}

#[test]
fn transmissivity_out_of_range_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, single_photon_text().replace("transmissivity = 0.5", "transmissivity = 1.2")).unwrap();
    let out = run(&["plan"], &cfg, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("transmissivity"));
}

#[test]
fn zero_gamma_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, single_photon_text().replace("gamma_hz = 2.9e6", "gamma_hz = 0.0")).unwrap();
    let out = run(&["waveform"], &cfg, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, single_photon_text().replace("n_rep = 1200", "n_rep = 1200\nnrep = 3")).unwrap();
    assert_eq!(run(&["plan"], &cfg, &tmp.path().join("out")).status.code(), Some(2));
}

#[test]
fn report_without_manifest_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin().arg("report").arg("--out").arg(tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_subcommand_exits_2() {
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
}

#[test]
fn stage_commands_write_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("single_photon.toml");
    let out = tmp.path().join("out");
    for (cmd, file) in [("waveform", "waveform.json"), ("plan", "plan.json"), ("herald", "herald.json")] {
        let o = run(&[cmd], &cfg, &out);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join(file).exists(), "{cmd}");
    }
    let o = run(&["synth", "--frames", "200"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bin().args(["pca", "--frames", "200"]).arg("--config").arg(&cfg).arg("--out").arg(&out).arg("--input").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("quadratures.csv").exists());
    let o = bin().arg("tomo").arg("--out").arg(&out).arg("--input").arg(out.join("quadratures.csv")).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let tomo: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("tomography.json")).unwrap()).unwrap();
    assert_eq!(tomo["rho_real"].as_array().unwrap().len(), 11);
}

#[test]
fn report_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("single_photon.toml");
    let out = tmp.path().join("run");
    let o = run(&["pipeline", "--frames", "400", "--seed", "5"], &cfg, &out);
    assert!(matches!(o.status.code(), Some(0) | Some(1)), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("manifest.json").exists());

    let first = bin().arg("report").arg("--out").arg(&out).output().unwrap();
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let grid = std::fs::read(out.join("wigner_grid.csv")).unwrap();
    let second = bin().arg("report").arg("--out").arg(&out).output().unwrap();
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(grid, std::fs::read(out.join("wigner_grid.csv")).unwrap());
}

#[test]
fn report_rejects_tampered_tomography() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("single_photon.toml");
    let out = tmp.path().join("run");
    run(&["pipeline", "--frames", "300"], &cfg, &out);
    let path = out.join("tomography.json");
    let mut tomo: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    tomo["rho_real"][0][0] = serde_json::json!(0.9);
    tomo["rho_real"][1][1] = serde_json::json!(0.1);
    std::fs::write(&path, serde_json::to_string(&tomo).unwrap()).unwrap();
    let o = bin().arg("report").arg("--out").arg(&out).output().unwrap();
    assert_ne!(o.status.code(), Some(0));
}

// Unconstrained MLE leaves negative ripples of order 1e-3 in the far tails
// even for directly sampled vacuum, so the minimum is held to that noise floor.
#[test]
fn total_loss_reconstructs_vacuum() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("vac.toml");
    let text = single_photon_text().replace("eta = 0.67", "eta = 0.0");
    let text = text.split("[thresholds]").next().unwrap().to_owned();
    std::fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("run");
    let o = run(&["pipeline"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let p0 = report["photon_dist"][0].as_f64().unwrap();
    let origin = report["wigner_origin"].as_f64().unwrap();
    let wmin = report["wigner_min"].as_f64().unwrap();
    assert!(p0 > 0.98, "P(0) = {p0}");
    assert!(origin > 0.3, "W(0) = {origin}");
    assert!(wmin > -0.005, "W_min = {wmin}");
}

#[test]
fn failed_threshold_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("strict.toml");
    std::fs::write(&cfg, single_photon_text().replace("min_mode_matching = 0.99", "min_mode_matching = 0.99999999")).unwrap();
    let o = run(&["pipeline", "--frames", "300"], &cfg, &tmp.path().join("run"));
    assert_eq!(o.status.code(), Some(1));
}
