use num_complex::Complex64 as C64;
use serde::Serialize;

use heraldlab_core::fock::{loss_channel, wigner_origin, DensityMatrix, FockVector};
use heraldlab_core::herald::{build_resource, oracle_from_resource, r_out, GaussianResourceParams};
use heraldlab_core::measurement::{
    mle_tomography, pca_subspace, wigner_report, FrameSource, Filtered, MleOptions, PhaseSet, Subspace,
    SubspacePca, SyntheticFrames, TomographyResult,
};
use heraldlab_core::planner::{plan, plan_with_params, verify_plan, HeraldingPlan, Strategy, TargetState, VerifyReport};
use heraldlab_core::waveform::{
    awg_voltage, builtin_waveform, detection_rate, gamma_from_hz, mode_matching, modulation_to_waveform,
    read_columns_csv, repetition_check, rescale_for_awg, success_window, target_to_modulation, Builtin,
    ModulationProgram, RepetitionReport, SuccessWindow, TemporalWaveform, TimeGrid, WaveformError,
};

use crate::config::{ExperimentConfig, StateKind, StrategyKind, WaveformName};
use crate::CliError;

pub fn target_state(cfg: &ExperimentConfig) -> Result<(TargetState, Option<GaussianResourceParams>), CliError> {
    let params = match &cfg.resource {
        Some(r) => Some(
            GaussianResourceParams::from_db(r.r0_db, r.r1_db, r.transmissivity)
                .map_err(|e| CliError::Config(e.to_string()))?,
        ),
        None => None,
    };
    let r = match (params, cfg.state.r_out) {
        (Some(p), Some(want)) => {
            let got = r_out(&p);
            if (got - want).abs() > 1e-6 {
                return Err(CliError::Config(format!("state.r_out = {want} but the resource gives {got}")));
            }
            got
        }
        (Some(p), None) => r_out(&p),
        (None, Some(want)) => want,
        (None, None) => 0.0,
    };
    let target = match cfg.state.kind {
        StateKind::SinglePhoton | StateKind::Cat => TargetState::fock(1, r),
        StateKind::TwoPhoton => TargetState::fock(2, r),
        StateKind::Custom => {
            let re = cfg.state.coefficients_re.clone().unwrap_or_default();
            let im = cfg.state.coefficients_im.clone().unwrap_or_else(|| vec![0.0; re.len()]);
            TargetState::normalized(r, re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)).collect())
        }
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    Ok((target, params))
}

#[derive(Clone, Debug, Serialize)]
pub struct WaveformSummary {
    pub cnorm: f64,
    pub roundtrip_mode_matching: f64,
    pub awg_rescale: f64,
    pub max_awg_v: f64,
    pub time_integral: f64,
    pub t_m1_s: f64,
    pub t_m2_s: f64,
    pub success_window: SuccessWindow,
    pub repetition: RepetitionReport,
}

pub struct WaveformStage {
    pub target: TemporalWaveform,
    pub achieved: TemporalWaveform,
    pub program: ModulationProgram,
    pub v_awg: Vec<f64>,
    pub rate: Vec<f64>,
    pub summary: WaveformSummary,
}

fn wf_err(e: WaveformError) -> CliError {
    match e {
        WaveformError::InvalidParam(_) | WaveformError::UnreachableWaveform { .. } | WaveformError::GridMismatch(_) => {
            CliError::Config(e.to_string())
        }
        other => CliError::Numeric(other.to_string()),
    }
}

pub fn waveform_stage(cfg: &ExperimentConfig) -> Result<WaveformStage, CliError> {
    let w = &cfg.waveform;
    let grid = TimeGrid::new(0.0, w.dt_s, w.samples).map_err(wf_err)?;
    let gamma = gamma_from_hz(w.gamma_hz);
    let builtin = match w.name {
        WaveformName::ExpRising => Some(Builtin::ExpRising),
        WaveformName::Square => Some(Builtin::Square { width_s: w.width_s.unwrap_or_default() }),
        WaveformName::SquarePulseModulated => Some(Builtin::SquarePulseModulated { width_s: w.width_s.unwrap_or_default() }),
        WaveformName::BalancedTimeBin => {
            Some(Builtin::BalancedTimeBin { bin_s: w.bin_s.unwrap_or_default(), gap_s: w.gap_s.unwrap_or_default() })
        }
        WaveformName::Custom => None,
    };
    let target = match builtin {
        Some(b) => builtin_waveform(&b, &grid, gamma, w.t_m2_s).map_err(wf_err)?,
        None => {
            let path = w.samples_file.as_ref().expect("validated");
            let cols = read_columns_csv(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let f = cols
                .into_iter()
                .find(|(h, _)| h == "f")
                .ok_or_else(|| CliError::Config("samples_file has no column `f`".into()))?
                .1;
            TemporalWaveform::new(grid, f).and_then(|t| t.normalized()).map_err(wf_err)?
        }
    };
    let program = target_to_modulation(&target, gamma, w.t_m2_s).map_err(wf_err)?;
    let before = program.sin_m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let program = rescale_for_awg(&program, w.awg_v0_v);
    let after = program.sin_m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let v_awg = awg_voltage(&program, w.awg_v0_v).map_err(wf_err)?;
    let (achieved, cnorm) = modulation_to_waveform(&program).map_err(wf_err)?;
    let rate = detection_rate(&program);
    let q = &cfg.sequence;
    let window = success_window(&rate, &grid, w.t_m2_s, q.trigger_rate_hz, q.dark_rate_hz, q.snr_min).map_err(wf_err)?;
    let repetition = repetition_check(&program, q.tau_rep_s).map_err(wf_err)?;
    let summary = WaveformSummary {
        cnorm,
        roundtrip_mode_matching: mode_matching(&target, &achieved).map_err(wf_err)?,
        awg_rescale: if before > 0.0 { after / before } else { 1.0 },
        max_awg_v: v_awg.iter().fold(0.0f64, |a, x| a.max(x.abs())),
        time_integral: achieved.integral(),
        t_m1_s: program.t_m1,
        t_m2_s: program.t_m2,
        success_window: window,
        repetition,
    };
    Ok(WaveformStage { target, achieved, program, v_awg, rate, summary })
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanStage {
    pub plan: HeraldingPlan,
    pub verify: VerifyReport,
}

pub fn plan_stage(cfg: &ExperimentConfig, cnorm: f64) -> Result<PlanStage, CliError> {
    let (target, params) = target_state(cfg)?;
    let cutoff = cfg.measurement.cutoff_sim;
    let num = |e: heraldlab_core::planner::PlanError| CliError::Numeric(e.to_string());
    let plan = match params {
        Some(p) => plan_with_params(&target, p, cnorm, cutoff).map_err(num)?,
        None => {
            let strategy = match cfg.planner.strategy {
                StrategyKind::Symmetric => Strategy::Symmetric,
                StrategyKind::MaxProb => Strategy::MaxProb { n: target.n(), p_min: cfg.planner.p_min },
            };
            plan(&target, cnorm, &strategy, cutoff).map_err(num)?
        }
    };
    let verify = verify_plan(&plan, cutoff).map_err(num)?;
    Ok(PlanStage { plan, verify })
}

#[derive(Clone, Debug, Serialize)]
pub struct HeraldSummary {
    pub amps_re: Vec<f64>,
    pub amps_im: Vec<f64>,
    pub weight: f64,
    pub fidelity_to_target: f64,
    pub photon_dist: Vec<f64>,
    pub wigner_origin: f64,
}

pub struct HeraldStage {
    pub state: FockVector,
    pub summary: HeraldSummary,
}

pub fn herald_stage(cfg: &ExperimentConfig, plan: &HeraldingPlan) -> Result<HeraldStage, CliError> {
    let cutoff = cfg.measurement.cutoff_sim;
    let num = |e: String| CliError::Numeric(e);
    let resource = build_resource(&plan.params, cutoff).map_err(|e| num(e.to_string()))?.value;
    let out = oracle_from_resource(&resource, &plan.alphas, plan.cnorm).map_err(|e| num(e.to_string()))?;
    let target = plan.target.state(cutoff).map_err(|e| num(e.to_string()))?;
    let state = out.state;
    let summary = HeraldSummary {
        amps_re: state.amps().iter().map(|z| z.re).collect(),
        amps_im: state.amps().iter().map(|z| z.im).collect(),
        weight: out.weight,
        fidelity_to_target: state.fidelity(&target).map_err(|e| num(e.to_string()))?,
        photon_dist: state.photon_distribution(),
        wigner_origin: wigner_origin(&state.to_density()),
    };
    Ok(HeraldStage { state, summary })
}

pub fn frame_sources(
    cfg: &ExperimentConfig,
    rho: &DensityMatrix,
    f1: &TemporalWaveform,
    seed: u64,
) -> Result<(SyntheticFrames, SyntheticFrames), CliError> {
    let m = &cfg.measurement;
    let phases = PhaseSet::uniform(m.phases).map_err(|e| CliError::Config(e.to_string()))?;
    let src = SyntheticFrames::new(rho, f1, m.eta, &phases, m.frames_per_phase, seed)
        .map_err(|e| CliError::Numeric(e.to_string()))?
        .with_electronic_noise(m.electronic_noise);
    let vac = src.vacuum_reference(m.vacuum_frames);
    Ok((src, vac))
}

pub struct PcaStage {
    pub pca: SubspacePca,
    pub pc1: TemporalWaveform,
    pub mode_matching: f64,
    /// `(phase, x)` per frame along PC-1.
    pub quads: Vec<(f64, f64)>,
}

pub fn pca_stage(
    cfg: &ExperimentConfig,
    src: &dyn FrameSource,
    vacuum: &dyn FrameSource,
    reference: &TemporalWaveform,
) -> Result<PcaStage, CliError> {
    let m = &cfg.measurement;
    let num = |e: heraldlab_core::measurement::MeasurementError| CliError::Numeric(e.to_string());
    let grid = src.grid();
    let conv = builtin_waveform(&Builtin::ExpRising, &grid, gamma_from_hz(cfg.waveform.gamma_hz), cfg.waveform.t_m2_s)
        .map_err(wf_err)?;
    let sub = Subspace::new(grid, &[reference.clone(), conv], m.buffer_modes).map_err(num)?;
    let filtered;
    let vfiltered;
    let (s, v): (&dyn FrameSource, &dyn FrameSource) = match m.lowpass_hz {
        Some(f) => {
            filtered = Filtered::new(src, f).map_err(num)?;
            vfiltered = Filtered::new(vacuum, f).map_err(num)?;
            (&filtered, &vfiltered)
        }
        None => (src, vacuum),
    };
    let mut pca = pca_subspace(s, Some(v), &sub).map_err(num)?;
    pca.align(0, reference).map_err(num)?;
    let pc1 = pca.result.components[0].clone();
    let mm = mode_matching(&pc1, reference).map_err(wf_err)?;
    let scores = pca.scores(0);
    let quads = (0..s.len()).map(|i| s.lo_phase(i)).zip(scores).collect();
    Ok(PcaStage { pca, pc1, mode_matching: mm, quads })
}

pub fn mle_options(cfg: &ExperimentConfig) -> MleOptions {
    let m = &cfg.measurement;
    MleOptions {
        cutoff: m.cutoff_tomo,
        max_iter: m.mle_max_iter,
        tol: m.mle_tol,
        bins: if m.mle_bins == 0 { None } else { Some(m.mle_bins) },
    }
}

pub fn tomo_stage(cfg: &ExperimentConfig, quads: &[(f64, f64)]) -> Result<TomographyResult, CliError> {
    mle_tomography(quads, &mle_options(cfg)).map_err(|e| CliError::Numeric(e.to_string()))
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdCheck {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub state_kind: StateKind,
    pub seed: u64,
    pub frames_per_phase: usize,
    pub herald_fidelity: f64,
    pub herald_weight: f64,
    pub fidelity_to_target: f64,
    pub fidelity_to_expected: f64,
    pub mode_matching: f64,
    pub pc_variances: Vec<f64>,
    pub photon_dist: Vec<f64>,
    pub wigner_min: f64,
    pub wigner_min_at: (f64, f64),
    pub wigner_origin: f64,
    pub expected_wigner_origin: f64,
    pub mle_iterations: usize,
    pub mle_converged: bool,
    pub mle_monotone: bool,
    pub checks: Vec<ThresholdCheck>,
    pub pass: bool,
}

pub fn build_report(
    cfg: &ExperimentConfig,
    seed: u64,
    plan: &PlanStage,
    herald: &HeraldStage,
    pca: &PcaStage,
    tomo: &TomographyResult,
) -> Result<Report, CliError> {
    let m = &cfg.measurement;
    let num = |e: heraldlab_core::fock::FockError| CliError::Numeric(e.to_string());
    let target = plan.plan.target.state(m.cutoff_sim).map_err(|e| CliError::Numeric(e.to_string()))?;
    let target_rho = target.to_density().resized(m.cutoff_tomo);
    let expected = loss_channel(&herald.state.to_density(), m.eta).map_err(num)?;
    let w = wigner_report(&tomo.rho);
    let fidelity_to_target = tomo.rho.fidelity(&target_rho).map_err(num)?;
    let mut checks = Vec::new();
    let t = &cfg.thresholds;
    let mut add = |name: &str, value: f64, limit: Option<f64>, upper: bool| {
        if let Some(limit) = limit {
            let pass = if upper { value <= limit } else { value >= limit };
            checks.push(ThresholdCheck { name: name.into(), value, limit, pass });
        }
    };
    add("min_fidelity", fidelity_to_target, t.min_fidelity, false);
    add("max_wigner_min", w.w_min, t.max_wigner_min, true);
    add("min_mode_matching", pca.mode_matching, t.min_mode_matching, false);
    add("min_herald_fidelity", plan.verify.fidelity, t.min_herald_fidelity, false);
    let pass = checks.iter().all(|c| c.pass);
    Ok(Report {
        state_kind: cfg.state.kind,
        seed,
        frames_per_phase: m.frames_per_phase,
        herald_fidelity: plan.verify.fidelity,
        herald_weight: herald.summary.weight,
        fidelity_to_target,
        fidelity_to_expected: tomo.rho.fidelity(&expected.resized(m.cutoff_tomo)).map_err(num)?,
        mode_matching: pca.mode_matching,
        pc_variances: pca.pca.result.variances.iter().take(5).copied().collect(),
        photon_dist: tomo.photon_dist.clone(),
        wigner_min: w.w_min,
        wigner_min_at: w.w_min_at,
        wigner_origin: w.w_origin,
        expected_wigner_origin: wigner_origin(&expected),
        mle_iterations: tomo.iterations,
        mle_converged: tomo.converged,
        mle_monotone: tomo.likelihood_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12),
        checks,
        pass,
    })
}
