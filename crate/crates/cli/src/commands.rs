use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use heraldlab_core::fock::{CMatrix, DensityMatrix};
use heraldlab_core::measurement::{read_frames, wigner_report, write_frames, TomographyResult};
use heraldlab_core::waveform::{read_columns_csv, write_columns_csv};
use num_complex::Complex64 as C64;

use crate::config::ExperimentConfig;
use crate::output::{read_json, write_json, RunManifest, Stopwatch};
use crate::pipeline::{
    build_report, frame_sources, herald_stage, pca_stage, plan_stage, tomo_stage, waveform_stage, HeraldSummary,
    PlanStage, Report, WaveformStage,
};
use crate::{CliError, Command, Options};

pub const FRAMES_FILE: &str = "frames.hlfr";
pub const VACUUM_FILE: &str = "vacuum.hlfr";
pub const QUADS_FILE: &str = "quadratures.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";

struct Loaded {
    cfg: ExperimentConfig,
    text: String,
    seed: u64,
}

fn load(opts: &Options) -> Result<Loaded, CliError> {
    let path = opts.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let (mut cfg, text) = ExperimentConfig::load(path)?;
    if let Some(s) = opts.seed {
        cfg.measurement.seed = s;
    }
    if let Some(f) = opts.frames {
        cfg.measurement.frames_per_phase = f;
    }
    cfg.validate()?;
    Ok(Loaded { seed: cfg.measurement.seed, cfg, text })
}

fn out_dir(opts: &Options) -> Result<&Path, CliError> {
    std::fs::create_dir_all(&opts.out)?;
    Ok(&opts.out)
}

pub fn dispatch(cmd: Command, opts: &Options) -> Result<(), CliError> {
    match cmd {
        Command::Plan => cmd_plan(opts),
        Command::Waveform => cmd_waveform(opts),
        Command::Herald => cmd_herald(opts),
        Command::Synth => cmd_synth(opts),
        Command::Pca => cmd_pca(opts),
        Command::Tomo => cmd_tomo(opts),
        Command::Pipeline => cmd_pipeline(opts).map(|_| ()),
        Command::Report => cmd_report(opts).map(|_| ()),
    }
}

fn write_waveform(dir: &Path, w: &WaveformStage) -> Result<(), CliError> {
    let grid = w.target.grid;
    let t = grid.times();
    let k2 = grid.index_of(w.summary.success_window.t_start);
    let len = (w.summary.success_window.tau_suc / grid.dt).round() as usize;
    let window: Vec<f64> = (0..grid.n).map(|k| if k >= k2 && k < k2 + len { 1.0 } else { 0.0 }).collect();
    write_columns_csv(
        &dir.join("waveform.csv"),
        &[
            ("t_s", &t),
            ("target", &w.target.samples),
            ("f1", &w.achieved.samples),
            ("sin_m", &w.program.sin_m),
            ("v_awg", &w.v_awg),
            ("detection_rate", &w.rate),
            ("window", &window),
        ],
    )
    .map_err(|e| CliError::Numeric(e.to_string()))?;
    write_json(&dir.join("waveform.json"), &w.summary)
}

fn cmd_waveform(opts: &Options) -> Result<(), CliError> {
    let l = load(opts)?;
    let w = waveform_stage(&l.cfg)?;
    write_waveform(out_dir(opts)?, &w)?;
    println!(
        "c' = {:.6e}, round-trip matching {:.12}, tau_suc = {:.1} ns, repetition residual {:.3e} ({})",
        w.summary.cnorm,
        w.summary.roundtrip_mode_matching,
        w.summary.success_window.tau_suc * 1e9,
        w.summary.repetition.residual,
        if w.summary.repetition.pass { "ok" } else { "too large" }
    );
    Ok(())
}

fn cmd_plan(opts: &Options) -> Result<(), CliError> {
    let l = load(opts)?;
    let w = waveform_stage(&l.cfg)?;
    let p = plan_stage(&l.cfg, w.summary.cnorm)?;
    write_json(&out_dir(opts)?.join("plan.json"), &p)?;
    print_plan(&p);
    Ok(())
}

fn print_plan(p: &PlanStage) {
    let r = &p.plan.params;
    println!(
        "r0 = {:.4}, r1 = {:.4}, T = {:.4}, r_out = {:.4}, N = {}, weight = {:.4e}, fidelity = {:.8}",
        r.r0, r.r1, r.t, p.plan.r_out, p.plan.n_detect, p.plan.predicted_prob, p.verify.fidelity
    );
    for w in &p.plan.warnings {
        println!("warning: {w}");
    }
}

#[derive(Serialize)]
struct HeraldFile<'a> {
    plan: &'a PlanStage,
    herald: &'a HeraldSummary,
}

fn cmd_herald(opts: &Options) -> Result<(), CliError> {
    let l = load(opts)?;
    let w = waveform_stage(&l.cfg)?;
    let p = plan_stage(&l.cfg, w.summary.cnorm)?;
    let h = herald_stage(&l.cfg, &p.plan)?;
    write_json(&out_dir(opts)?.join("herald.json"), &HeraldFile { plan: &p, herald: &h.summary })?;
    println!(
        "heralded state: fidelity {:.8}, W(0) = {:.6}",
        h.summary.fidelity_to_target, h.summary.wigner_origin
    );
    Ok(())
}

fn cmd_synth(opts: &Options) -> Result<(), CliError> {
    let l = load(opts)?;
    let w = waveform_stage(&l.cfg)?;
    let p = plan_stage(&l.cfg, w.summary.cnorm)?;
    let h = herald_stage(&l.cfg, &p.plan)?;
    let (src, vac) = frame_sources(&l.cfg, &h.state.to_density(), &w.achieved, l.seed)?;
    let dir = out_dir(opts)?;
    let num = |e: heraldlab_core::measurement::MeasurementError| CliError::Numeric(e.to_string());
    write_frames(&dir.join(FRAMES_FILE), &src, l.seed).map_err(num)?;
    write_frames(&dir.join(VACUUM_FILE), &vac, l.seed).map_err(num)?;
    println!("wrote {} signal and {} vacuum frames", src_len(&src), src_len(&vac));
    Ok(())
}

fn src_len(s: &dyn heraldlab_core::measurement::FrameSource) -> usize {
    s.len()
}

#[derive(Serialize)]
struct PcaFile {
    variances: Vec<f64>,
    normalization: f64,
    mode_matching: f64,
    frames: usize,
}

fn write_pca(dir: &Path, reference: &heraldlab_core::waveform::TemporalWaveform, s: &crate::pipeline::PcaStage) -> Result<(), CliError> {
    let num = |e: heraldlab_core::waveform::WaveformError| CliError::Numeric(e.to_string());
    let comps = &s.pca.result.components;
    let t = reference.grid.times();
    let mm = vec![s.mode_matching; t.len()];
    let mut cols: Vec<(&str, &[f64])> = vec![("t_s", &t), ("target", &reference.samples), ("mode_matching", &mm)];
    let names = ["pc1", "pc2", "pc3"];
    for (name, c) in names.iter().zip(comps) {
        cols.push((name, &c.samples));
    }
    write_columns_csv(&dir.join("pca_modes.csv"), &cols).map_err(num)?;
    let (ph, x): (Vec<f64>, Vec<f64>) = s.quads.iter().copied().unzip();
    write_columns_csv(&dir.join(QUADS_FILE), &[("phase_rad", &ph), ("x", &x)]).map_err(num)?;
    write_json(
        &dir.join("pca.json"),
        &PcaFile {
            variances: s.pca.result.variances.clone(),
            normalization: s.pca.result.normalization,
            mode_matching: s.mode_matching,
            frames: s.quads.len(),
        },
    )
}

fn cmd_pca(opts: &Options) -> Result<(), CliError> {
    let l = load(opts)?;
    let w = waveform_stage(&l.cfg)?;
    let input = opts.input.clone().unwrap_or_else(|| opts.out.clone());
    let read = |name: &str| {
        let path = input.join(name);
        read_frames(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    };
    let (_, frames) = read(FRAMES_FILE)?;
    let (_, vacuum) = read(VACUUM_FILE)?;
    if frames.is_empty() || vacuum.is_empty() {
        return Err(CliError::Config("empty frame container".into()));
    }
    let s = pca_stage(&l.cfg, &frames, &vacuum, &w.achieved)?;
    write_pca(out_dir(opts)?, &w.achieved, &s)?;
    println!("PC-1 variance {:.4}, mode matching {:.5}", s.pca.result.variances[0], s.mode_matching);
    Ok(())
}

fn read_quads(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let cols = read_columns_csv(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let get = |name: &str| {
        cols.iter()
            .find(|(h, _)| h == name)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| CliError::Config(format!("{} lacks column {name}", path.display())))
    };
    let (ph, x) = (get("phase_rad")?, get("x")?);
    Ok(ph.into_iter().zip(x).collect())
}

fn print_tomo(t: &TomographyResult) {
    let p: Vec<String> = t.photon_dist.iter().take(4).map(|p| format!("{p:.4}")).collect();
    println!(
        "MLE: {} iterations{}, P(n) = [{}, ...], W_min = {:.5}",
        t.iterations,
        if t.converged { "" } else { " (not converged)" },
        p.join(", "),
        t.wigner_min
    );
}

fn cmd_tomo(opts: &Options) -> Result<(), CliError> {
    let cfg = match &opts.config {
        Some(_) => load(opts)?.cfg,
        None => default_config(),
    };
    let path = opts.input.clone().unwrap_or_else(|| opts.out.join(QUADS_FILE));
    let quads = read_quads(&path)?;
    let t = tomo_stage(&cfg, &quads)?;
    write_json(&out_dir(opts)?.join("tomography.json"), &t.to_json())?;
    print_tomo(&t);
    Ok(())
}

fn default_config() -> ExperimentConfig {
    ExperimentConfig::from_toml("[state]\nkind = \"single_photon\"\n[waveform]\nname = \"exp_rising\"\n").expect("valid defaults")
}

/// Every stage in sequence; returns the report (also written to disk).
pub fn cmd_pipeline(opts: &Options) -> Result<Report, CliError> {
    let l = load(opts)?;
    let dir = out_dir(opts)?.to_path_buf();
    let mut manifest = RunManifest::new("pipeline", &l.text, l.seed, l.cfg.measurement.frames_per_phase);
    let mut clock = Stopwatch::start();
    let record = |m: &mut RunManifest, stage: &str, file: &str| {
        m.outputs.insert(stage.to_owned(), file.to_owned());
    };

    let w = waveform_stage(&l.cfg)?;
    write_waveform(&dir, &w)?;
    record(&mut manifest, "waveform", "waveform.json");
    clock.lap(&mut manifest, "waveform");

    let p = plan_stage(&l.cfg, w.summary.cnorm)?;
    write_json(&dir.join("plan.json"), &p)?;
    record(&mut manifest, "plan", "plan.json");
    clock.lap(&mut manifest, "plan");

    let h = herald_stage(&l.cfg, &p.plan)?;
    write_json(&dir.join("herald.json"), &HeraldFile { plan: &p, herald: &h.summary })?;
    record(&mut manifest, "herald", "herald.json");
    clock.lap(&mut manifest, "herald");

    let (src, vac) = frame_sources(&l.cfg, &h.state.to_density(), &w.achieved, l.seed)?;
    let s = pca_stage(&l.cfg, &src, &vac, &w.achieved)?;
    write_pca(&dir, &w.achieved, &s)?;
    record(&mut manifest, "pca", "pca.json");
    clock.lap(&mut manifest, "synth_pca");

    let t = tomo_stage(&l.cfg, &s.quads)?;
    write_json(&dir.join("tomography.json"), &t.to_json())?;
    record(&mut manifest, "tomo", "tomography.json");
    clock.lap(&mut manifest, "tomo");

    let report = build_report(&l.cfg, l.seed, &p, &h, &s, &t)?;
    write_json(&dir.join(REPORT_FILE), &report)?;
    record(&mut manifest, "report", REPORT_FILE);
    clock.lap(&mut manifest, "report");
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;

    print_plan(&p);
    print_tomo(&t);
    println!("mode matching {:.5}, fidelity to target {:.5}", report.mode_matching, report.fidelity_to_target);
    if !report.pass {
        let failed: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} = {:.5} (limit {})", c.name, c.value, c.limit))
            .collect();
        return Err(CliError::Thresholds(failed.join(", ")));
    }
    Ok(report)
}

fn rho_from_json(v: &serde_json::Value) -> Result<DensityMatrix, CliError> {
    let bad = || CliError::Config("tomography.json lacks rho_real/rho_imag".into());
    let grid = |key: &str| -> Result<Vec<Vec<f64>>, CliError> {
        serde_json::from_value(v.get(key).cloned().ok_or_else(bad)?).map_err(|_| bad())
    };
    let (re, im) = (grid("rho_real")?, grid("rho_imag")?);
    let d = re.len();
    if d == 0 || im.len() != d || re.iter().chain(&im).any(|r| r.len() != d) {
        return Err(bad());
    }
    DensityMatrix::from_normalized(CMatrix::from_fn(d, d, |i, j| C64::new(re[i][j], im[i][j])))
        .map_err(|e| CliError::Numeric(e.to_string()))
}

/// Rebuilds plot tables from a finished run and checks them against the
/// stored report.
pub fn cmd_report(opts: &Options) -> Result<String, CliError> {
    let path: PathBuf = opts.input.clone().unwrap_or_else(|| opts.out.join(MANIFEST_FILE));
    let manifest: RunManifest = read_json(&path)?;
    let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let file = |stage: &str| -> Result<PathBuf, CliError> {
        manifest
            .outputs
            .get(stage)
            .map(|f| dir.join(f))
            .ok_or_else(|| CliError::Config(format!("manifest has no {stage} output")))
    };
    let report: serde_json::Value = read_json(&file("report")?)?;
    let tomo: serde_json::Value = read_json(&file("tomo")?)?;
    let rho = rho_from_json(&tomo)?;
    let w = wigner_report(&rho);
    let stored = report.get("wigner_min").and_then(|x| x.as_f64());
    if stored != Some(w.w_min) {
        return Err(CliError::Numeric(format!("stored wigner_min {stored:?} differs from recomputed {}", w.w_min)));
    }

    let num = |e: heraldlab_core::waveform::WaveformError| CliError::Numeric(e.to_string());
    let (mut xs, mut ps, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    for (ip, p) in w.ps.iter().enumerate() {
        for (ix, x) in w.xs.iter().enumerate() {
            xs.push(*x);
            ps.push(*p);
            vals.push(w.w[(ix, ip)]);
        }
    }
    write_columns_csv(&dir.join("wigner_grid.csv"), &[("x", &xs), ("p", &ps), ("w", &vals)]).map_err(num)?;
    let n: Vec<f64> = (0..w.photon_dist.len()).map(|i| i as f64).collect();
    write_columns_csv(&dir.join("photon_dist.csv"), &[("n", &n), ("p", &w.photon_dist)]).map_err(num)?;
    let modes = read_columns_csv(&dir.join("pca_modes.csv")).map_err(|e| CliError::Config(e.to_string()))?;
    let col = |name: &str| {
        modes
            .iter()
            .find(|(h, _)| h == name)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| CliError::Config(format!("pca_modes.csv lacks {name}")))
    };
    let (t, target, achieved, mm) = (col("t_s")?, col("target")?, col("pc1")?, col("mode_matching")?);
    write_columns_csv(
        &dir.join("overlay.csv"),
        &[("t_s", &t), ("target", &target), ("achieved", &achieved), ("mode_matching", &mm)],
    )
    .map_err(num)?;

    let mut text = String::new();
    let g = |k: &str| report.get(k).and_then(|x| x.as_f64()).unwrap_or(f64::NAN);
    let _ = writeln!(text, "config sha256     {}", manifest.config_sha256);
    let _ = writeln!(text, "seed              {}", manifest.seed);
    let _ = writeln!(text, "frames per phase  {}", manifest.frames_per_phase);
    let _ = writeln!(text, "herald fidelity   {:.6}", g("herald_fidelity"));
    let _ = writeln!(text, "mode matching     {:.6}", g("mode_matching"));
    let _ = writeln!(text, "fidelity (target) {:.6}", g("fidelity_to_target"));
    let _ = writeln!(text, "wigner minimum    {:.6}", w.w_min);
    let _ = writeln!(text, "wigner origin     {:.6}", w.w_origin);
    for (k, p) in w.photon_dist.iter().enumerate().take(6) {
        let _ = writeln!(text, "P({k})              {p:.6}");
    }
    let pass = report.get("pass").and_then(|x| x.as_bool()).unwrap_or(false);
    let _ = writeln!(text, "thresholds        {}", if pass { "pass" } else { "FAIL" });
    std::fs::write(dir.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(text)
}
