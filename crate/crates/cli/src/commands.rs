//! The six subcommands. Each loads one config, warns about sections it
//! ignores, writes its artifacts, and finishes with the run manifest.

use std::path::PathBuf;

use num_complex::Complex;
use serde::Serialize;

use phasegate_core::entangler::{
    calibrate_rabi, entangling_phase, entangling_phase_quadrature, EntanglerError,
};
use phasegate_core::fockoracle::{extract_entangling_phase, propagate};
use phasegate_core::model::{
    load_config, load_config_file, optional_sections_present, serialize_config, CalibrateOptions,
    ClosureEntry, FilterGrid, GateConfig, GateReport, ModeSpec, ModeTable, NoiseModel,
    OracleOptions, PhaseSequence, QubitPairState, Spectrum,
};
use phasegate_core::noisekit::{
    dk_weights, filter_function, generate_noise, purity_loss_mc, purity_loss_spectral, NoiseError,
};
use phasegate_core::phasespace::{
    closure_residual, normalized_closure, trajectory, weighted_residual, weighted_residual_scale,
};
use phasegate_core::quad::{gauss_legendre, gl_fixed};
use phasegate_core::seqsynth::{
    apply_r, default_commensurate_tol, reduce_commensurate, resolve_sequence, synth_full,
};

use crate::artifacts::{csv_document, ensure_dir, write_json, write_manifest, write_text};
use crate::{CliError, RunArgs};

const TRACE_SAMPLES_PER_SEGMENT: usize = 200;

/// Modes whose normalized residual stays below this count as closed in
/// reports and in the oracle guards.
const CLOSED_REPORT_LIMIT: f64 = 1e-6;

struct Ctx {
    config: GateConfig<f64>,
    seq: PhaseSequence<f64>,
    out: PathBuf,
}

fn prepare(name: &str, args: &RunArgs, used_sections: &[&str]) -> Result<Ctx, CliError> {
    let config: GateConfig<f64> =
        load_config_file(&args.config).map_err(|e| CliError::Config(e.to_string()))?;
    for section in optional_sections_present(&config) {
        if !used_sections.contains(&section) {
            eprintln!("warning: section [{section}] is ignored by `{name}`");
        }
    }
    let seq = resolve_sequence(&config.sequence, &config.modes)
        .map_err(|e| CliError::Config(e.to_string()))?;
    ensure_dir(&args.out)?;
    Ok(Ctx {
        config,
        seq,
        out: args.out.clone(),
    })
}

fn threads(args: &RunArgs) -> Result<Option<usize>, CliError> {
    if args.threads.is_some() {
        if args.threads == Some(0) {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        return Ok(args.threads);
    }
    match std::env::var("PHASEGATE_THREADS") {
        Ok(text) => match text.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "PHASEGATE_THREADS must be a positive integer, got {text:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn state_or_default(config: &GateConfig<f64>) -> QubitPairState<f64> {
    config.state.clone().unwrap_or_else(|| {
        eprintln!("warning: no [state] section; assuming the z-basis \"11\" state");
        QubitPairState::from_z_label("11").expect("builtin label")
    })
}

fn noise_err(e: NoiseError) -> CliError {
    match e {
        NoiseError::Model(_) | NoiseError::NotTwoQubits(_) => CliError::Config(e.to_string()),
        _ => CliError::Precondition(e.to_string()),
    }
}

fn entangler_err(e: EntanglerError) -> CliError {
    match e {
        EntanglerError::SignMismatch { .. } => CliError::Precondition(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

fn closure_entries(seq: &PhaseSequence<f64>, modes: &ModeTable<f64>) -> Vec<ClosureEntry> {
    modes
        .iter()
        .map(|m| ClosureEntry {
            mode_index: m.index,
            detuning_rad_s: m.detuning,
            residual_abs_s: closure_residual(seq, m.detuning).norm(),
            residual_normalized: normalized_closure(seq, m.detuning),
        })
        .collect()
}

fn qubit_pair(config: &GateConfig<f64>) -> Result<CalibrateOptions<f64>, CliError> {
    if let Some(c) = &config.options.calibrate {
        return Ok(c.clone());
    }
    let driven = &config.drive.driven_qubits;
    if driven.len() < 2 {
        return Err(CliError::Config(
            "no [calibrate] section and fewer than two driven qubits to default to".into(),
        ));
    }
    eprintln!(
        "warning: no [calibrate] section; defaulting to target pi/8 on qubits ({}, {})",
        driven[0], driven[1]
    );
    Ok(CalibrateOptions {
        target_phase: std::f64::consts::PI / 8.0,
        qubit_pair: (driven[0], driven[1]),
    })
}

fn spectrum_of(config: &GateConfig<f64>, command: &str) -> Result<Spectrum<f64>, CliError> {
    match &config.noise {
        Some(NoiseModel::Spectrum(s)) => Ok(s.clone()),
        Some(NoiseModel::Polynomial { .. }) => Err(CliError::Config(format!(
            "`{command}` needs a spectral noise model; [noise] is polynomial"
        ))),
        None => Err(CliError::Config(format!(
            "`{command}` needs a [noise] section with a spectrum"
        ))),
    }
}

// ---------------------------------------------------------------- synth

#[derive(Serialize)]
struct SynthReport {
    step_duration_s: f64,
    segment_count: usize,
    total_duration_s: f64,
    phases_rad: Vec<f64>,
    phases_pi: Vec<f64>,
    /// Modes closed by every single segment on its own.
    commensurate_mode_indices: Vec<usize>,
    /// Recipe entries, in application order (absent for explicit tables).
    recipe_mode_indices: Option<Vec<usize>>,
    /// Modes the sequence leaves open (normalized residual above 1e-6).
    open_mode_indices: Vec<usize>,
    closure: Vec<ClosureEntry>,
}

pub fn synth(name: &str, args: &RunArgs) -> Result<(), CliError> {
    let ctx = prepare(name, args, &[])?;
    let seq = &ctx.seq;
    let modes = &ctx.config.modes;

    let split = reduce_commensurate(modes, seq.step_duration(), default_commensurate_tol());
    let closure = closure_entries(seq, modes);
    let report = SynthReport {
        step_duration_s: seq.step_duration(),
        segment_count: seq.segment_count(),
        total_duration_s: seq.total_duration(),
        phases_rad: seq.phases().to_vec(),
        phases_pi: seq
            .phases()
            .iter()
            .map(|p| p / std::f64::consts::PI)
            .collect(),
        commensurate_mode_indices: split.commensurate.iter().map(|m| m.index).collect(),
        recipe_mode_indices: match &ctx.config.sequence {
            phasegate_core::model::SequenceSpec::Recipe(r) => Some(r.mode_indices.clone()),
            phasegate_core::model::SequenceSpec::Explicit(_) => None,
        },
        open_mode_indices: closure
            .iter()
            .filter(|c| c.residual_normalized > CLOSED_REPORT_LIMIT)
            .map(|c| c.mode_index)
            .collect(),
        closure,
    };

    let rows: Vec<Vec<f64>> = seq
        .phases()
        .iter()
        .enumerate()
        .map(|(i, &p)| vec![i as f64, p, p / std::f64::consts::PI])
        .collect();
    write_text(
        &ctx.out.join("phases.csv"),
        &csv_document(&["segment", "phase_rad", "phase_pi"], &rows),
    )?;
    write_json(&ctx.out.join("phases.json"), &report)?;
    write_manifest(&ctx.out, name, &args.config, args.seed)
}

// ---------------------------------------------------------------- trace

#[derive(Serialize)]
struct DriftEntry {
    mode_index: usize,
    /// |integral of w(t) e^{i delta t} r(t) dt|, weight-dependent units.
    weighted_residual_abs: f64,
    /// Worst-case magnitude of the same integral over any modulation.
    weight_scale: f64,
    normalized: f64,
}

#[derive(Serialize)]
struct TraceReport {
    samples_per_segment: usize,
    closure: Vec<ClosureEntry>,
    /// Sensitivity to polynomial-in-time drive drift, when the config
    /// carries polynomial noise coefficients.
    drift: Option<Vec<DriftEntry>>,
}

pub fn trace(name: &str, args: &RunArgs) -> Result<(), CliError> {
    let polynomial_noise = {
        // Peek: trace uses [noise] only in polynomial form.
        let cfg: GateConfig<f64> =
            load_config_file(&args.config).map_err(|e| CliError::Config(e.to_string()))?;
        matches!(cfg.noise, Some(NoiseModel::Polynomial { .. }))
    };
    let used: &[&str] = if polynomial_noise { &["noise"] } else { &[] };
    let ctx = prepare(name, args, used)?;
    let seq = &ctx.seq;
    let modes = &ctx.config.modes;

    for mode in modes.iter() {
        let tr = trajectory(seq, mode.detuning, TRACE_SAMPLES_PER_SEGMENT);
        let rows: Vec<Vec<f64>> = tr
            .times
            .iter()
            .zip(&tr.values)
            .map(|(&t, v)| vec![t, v.re, v.im, v.norm()])
            .collect();
        write_text(
            &ctx.out.join(format!("trace_mode_{}.csv", mode.index)),
            &csv_document(&["time_s", "real_s", "imag_s", "abs_s"], &rows),
        )?;
    }

    let drift = match &ctx.config.noise {
        Some(NoiseModel::Polynomial { coefficients }) => Some(
            modes
                .iter()
                .map(|m| {
                    let res = weighted_residual(seq, m.detuning, coefficients).norm();
                    let scale = weighted_residual_scale(seq, coefficients);
                    DriftEntry {
                        mode_index: m.index,
                        weighted_residual_abs: res,
                        weight_scale: scale,
                        normalized: if scale > 0.0 { res / scale } else { 0.0 },
                    }
                })
                .collect(),
        ),
        _ => None,
    };
    let report = TraceReport {
        samples_per_segment: TRACE_SAMPLES_PER_SEGMENT,
        closure: closure_entries(seq, modes),
        drift,
    };
    write_json(&ctx.out.join("closure.json"), &report)?;
    write_manifest(&ctx.out, name, &args.config, args.seed)
}

// ---------------------------------------------------------------- filter

#[derive(Serialize)]
struct DkEntry {
    mode_index: usize,
    weight: f64,
}

#[derive(Serialize)]
struct FilterReport {
    omega_min_rad_s: f64,
    omega_max_rad_s: f64,
    points: usize,
    d_weights: Vec<DkEntry>,
}

fn default_filter_grid(seq: &PhaseSequence<f64>) -> FilterGrid<f64> {
    let step = seq.step_duration();
    FilterGrid {
        omega_min: 1e-5 / step,
        omega_max: 10.0 / step,
        points_per_decade: 48,
    }
}

pub fn filter(name: &str, args: &RunArgs) -> Result<(), CliError> {
    let ctx = prepare(name, args, &["state", "filter"])?;
    let seq = &ctx.seq;
    let modes = &ctx.config.modes;
    let state = state_or_default(&ctx.config);
    let weights = dk_weights(modes, &ctx.config.drive, &state).map_err(noise_err)?;
    let grid = ctx
        .config
        .options
        .filter
        .clone()
        .unwrap_or_else(|| default_filter_grid(seq));
    let omegas = grid.omegas();

    let mut header: Vec<String> = vec!["omega_rad_s".into()];
    for mode in modes.iter() {
        header.push(format!("f_mode_{}_s2", mode.index));
    }
    header.push("f_weighted_s2".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();

    let rows: Vec<Vec<f64>> = omegas
        .iter()
        .map(|&omega| {
            let mut row = Vec::with_capacity(modes.len() + 2);
            row.push(omega);
            let mut weighted = 0.0;
            for (mode, &d) in modes.iter().zip(&weights) {
                let f = filter_function(seq, mode.detuning, omega);
                weighted += d * f;
                row.push(f);
            }
            row.push(weighted);
            row
        })
        .collect();

    write_text(&ctx.out.join("filter.csv"), &csv_document(&header_refs, &rows))?;
    write_json(
        &ctx.out.join("filter.json"),
        &FilterReport {
            omega_min_rad_s: grid.omega_min,
            omega_max_rad_s: grid.omega_max,
            points: omegas.len(),
            d_weights: modes
                .iter()
                .zip(&weights)
                .map(|(m, &w)| DkEntry {
                    mode_index: m.index,
                    weight: w,
                })
                .collect(),
        },
    )?;
    write_manifest(&ctx.out, name, &args.config, args.seed)
}

// ---------------------------------------------------------------- purity

#[derive(Serialize)]
struct SpectralSection {
    purity_loss: f64,
    quad_error: f64,
}

#[derive(Serialize)]
struct McSection {
    mean: f64,
    std_error: f64,
    realizations: usize,
}

#[derive(Serialize)]
struct PurityReport {
    seed: u64,
    d_weights: Vec<DkEntry>,
    spectral: SpectralSection,
    monte_carlo: Option<McSection>,
}

pub fn purity(name: &str, args: &RunArgs) -> Result<(), CliError> {
    let ctx = prepare(name, args, &["state", "noise", "monte_carlo"])?;
    let seq = &ctx.seq;
    let modes = &ctx.config.modes;
    let drive = &ctx.config.drive;
    let state = state_or_default(&ctx.config);
    let spectrum = spectrum_of(&ctx.config, name)?;
    let threads = threads(args)?;

    let weights = dk_weights(modes, drive, &state).map_err(noise_err)?;
    let spectral =
        purity_loss_spectral(seq, modes, drive, &state, &spectrum).map_err(noise_err)?;
    let monte_carlo = match &ctx.config.options.monte_carlo {
        Some(mc) => {
            let est = purity_loss_mc(
                seq,
                modes,
                drive,
                &state,
                &spectrum,
                mc.realizations,
                args.seed,
                threads,
            )
            .map_err(noise_err)?;
            Some(McSection {
                mean: est.mean,
                std_error: est.std_error,
                realizations: est.realizations,
            })
        }
        None => None,
    };

    write_json(
        &ctx.out.join("purity.json"),
        &PurityReport {
            seed: args.seed,
            d_weights: modes
                .iter()
                .zip(&weights)
                .map(|(m, &w)| DkEntry {
                    mode_index: m.index,
                    weight: w,
                })
                .collect(),
            spectral: SpectralSection {
                purity_loss: spectral.loss,
                quad_error: spectral.quad_error,
            },
            monte_carlo,
        },
    )?;
    write_manifest(&ctx.out, name, &args.config, args.seed)
}

// ------------------------------------------------------------- calibrate

pub fn calibrate(name: &str, args: &RunArgs) -> Result<(), CliError> {
    let ctx = prepare(name, args, &["state", "noise", "calibrate"])?;
    let seq = &ctx.seq;
    let modes = &ctx.config.modes;
    let drive = &ctx.config.drive;
    let options = qubit_pair(&ctx.config)?;

    let phase = entangling_phase(seq, modes, drive, options.qubit_pair).map_err(entangler_err)?;
    let calibrated = calibrate_rabi(seq, modes, drive, options.qubit_pair, options.target_phase)
        .map_err(entangler_err)?;

    let predicted_purity_loss = match &ctx.config.noise {
        Some(NoiseModel::Spectrum(spectrum)) => {
            let state = state_or_default(&ctx.config);
            match purity_loss_spectral(seq, modes, drive, &state, spectrum) {
                Ok(s) => Some(s.loss),
                Err(e) => {
                    eprintln!("warning: skipping purity prediction: {e}");
                    None
                }
            }
        }
        _ => None,
    };

    let report = GateReport {
        segments: seq.segment_count(),
        step_duration_s: seq.step_duration(),
        total_duration_s: seq.total_duration(),
        closure: closure_entries(seq, modes),
        entangling_phase_rad: phase.total,
        doubled_phase_rad: 2.0 * phase.total,
        rabi_rate_rad_s: drive.rabi_rate,
        calibrated_rabi_rad_s: Some(calibrated),
        predicted_purity_loss,
    };
    let rows: Vec<Vec<f64>> = report
        .closure
        .iter()
        .zip(&phase.per_mode)
        .map(|(c, p)| {
            vec![
                c.mode_index as f64,
                c.detuning_rad_s,
                c.residual_abs_s,
                c.residual_normalized,
                p.contribution,
            ]
        })
        .collect();
    write_text(
        &ctx.out.join("calibration.csv"),
        &csv_document(
            &[
                "mode_index",
                "detuning_rad_s",
                "residual_abs_s",
                "residual_normalized",
                "phase_contribution_rad",
            ],
            &rows,
        ),
    )?;
    write_json(&ctx.out.join("calibration.json"), &report)?;
    write_manifest(&ctx.out, name, &args.config, args.seed)
}

// -------------------------------------------------------------- validate

#[derive(Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct ValidationReport {
    passed: bool,
    checks: Vec<Check>,
}

fn wrap_to_pi(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = x % two_pi;
    if r > std::f64::consts::PI {
        r -= two_pi;
    } else if r < -std::f64::consts::PI {
        r += two_pi;
    }
    r
}

fn check_config_round_trip(config: &GateConfig<f64>) -> Check {
    let text = serialize_config(config);
    let (passed, detail) = match load_config::<f64>(&text) {
        Ok(reloaded) => {
            if serialize_config(&reloaded) == text {
                (true, "canonical form is a fixed point".to_string())
            } else {
                (false, "reloaded config renders differently".to_string())
            }
        }
        Err(e) => (false, format!("canonical form does not load: {e}")),
    };
    Check {
        name: "config_round_trip",
        passed,
        detail,
    }
}

fn check_fold_equivalence(config: &GateConfig<f64>, seq: &PhaseSequence<f64>) -> Check {
    let name = "closed_form_matches_fold";
    let step = seq.step_duration();
    let full = match synth_full(&config.modes, step) {
        Ok(s) => s,
        Err(e) => {
            return Check {
                name,
                passed: true,
                detail: format!("not applicable: {e}"),
            }
        }
    };
    let mut folded = PhaseSequence::seed(step).expect("positive step");
    for mode in config.modes.iter() {
        folded = apply_r(&folded, mode.detuning);
    }
    let mut worst: f64 = 0.0;
    for (a, b) in full.phases().iter().zip(folded.phases()) {
        worst = worst.max(wrap_to_pi(a - b).abs());
    }
    Check {
        name,
        passed: worst <= 1e-9,
        detail: format!("max phase discrepancy {worst:.3e} rad over the table synthesis"),
    }
}

fn check_closure_quadrature(config: &GateConfig<f64>, seq: &PhaseSequence<f64>) -> Check {
    let rule = gauss_legendre::<f64>(24);
    let step = seq.step_duration();
    let mut worst: f64 = 0.0;
    for mode in config.modes.iter() {
        let mut brute = Complex::new(0.0, 0.0);
        for l in 0..seq.segment_count() {
            let a = l as f64 * step;
            brute += gl_fixed(
                &rule,
                |t: f64| Complex::from_polar(1.0, mode.detuning * t) * seq.modulation(t),
                a,
                a + step,
            );
        }
        let diff = (closure_residual(seq, mode.detuning) - brute).norm();
        worst = worst.max(diff / seq.total_duration());
    }
    Check {
        name: "closure_matches_quadrature",
        passed: worst <= 1e-12,
        detail: format!("max |analytic - quadrature| = {worst:.3e} of the duration"),
    }
}

fn check_entangler_quadrature(config: &GateConfig<f64>, seq: &PhaseSequence<f64>) -> Check {
    let name = "entangling_phase_matches_quadrature";
    let driven = &config.drive.driven_qubits;
    if driven.len() != 2 {
        return Check {
            name,
            passed: true,
            detail: "not applicable: needs exactly two driven qubits".into(),
        };
    }
    let pair = config
        .options
        .calibrate
        .as_ref()
        .map(|c| c.qubit_pair)
        .unwrap_or((driven[0], driven[1]));
    let closed = entangling_phase(seq, &config.modes, &config.drive, pair);
    let quad = entangling_phase_quadrature(seq, &config.modes, &config.drive, pair);
    match (closed, quad) {
        (Ok(c), Ok(q)) => {
            let scale = c.total.abs().max(1e-9);
            let rel = (c.total - q).abs() / scale;
            Check {
                name,
                passed: rel <= 1e-8,
                detail: format!(
                    "closed {c:.9e} vs quadrature {q:.9e} rad (rel {rel:.3e})",
                    c = c.total
                ),
            }
        }
        (Err(e), _) | (_, Err(e)) => Check {
            name,
            passed: false,
            detail: format!("evaluation failed: {e}"),
        },
    }
}

/// Oracle guard: everything the Fock checks need, or the reason they
/// do not apply.
fn fock_setup<'a>(
    config: &'a GateConfig<f64>,
    seq: &PhaseSequence<f64>,
) -> Result<(OracleOptions, ModeTable<f64>), String> {
    if config.drive.driven_qubits.len() != 2 {
        return Err("needs exactly two driven qubits".into());
    }
    let options = config.options.oracle.clone().unwrap_or(OracleOptions {
        cutoff: 12,
        steps_per_segment: 200,
        mode_indices: None,
        thermal: false,
    });
    let selected: Vec<ModeSpec<f64>> = match &options.mode_indices {
        Some(indices) => indices
            .iter()
            .map(|&i| {
                config
                    .modes
                    .get(i)
                    .map(|m| m.clone())
                    .map_err(|e| e.to_string())
            })
            .collect::<Result<_, _>>()?,
        None => config.modes.iter().cloned().collect(),
    };
    for mode in &selected {
        let normalized = normalized_closure(seq, mode.detuning);
        if normalized > CLOSED_REPORT_LIMIT {
            return Err(format!(
                "mode {} is open (normalized residual {normalized:.3e})",
                mode.index
            ));
        }
    }
    let table = ModeTable::new(selected).map_err(|e| e.to_string())?;
    Ok((options, table))
}

fn check_fock_phase(config: &GateConfig<f64>, seq: &PhaseSequence<f64>) -> Check {
    let name = "fock_phase_crosscheck";
    let (options, table) = match fock_setup(config, seq) {
        Ok(v) => v,
        Err(reason) => {
            return Check {
                name,
                passed: true,
                detail: format!("not applicable: {reason}"),
            }
        }
    };
    let state = config
        .state
        .clone()
        .unwrap_or_else(|| QubitPairState::from_z_label("11").expect("builtin label"));
    let driven = &config.drive.driven_qubits;
    let run = propagate(seq, &table, &config.drive, &state, &options, None)
        .and_then(|out| extract_entangling_phase(&out, &state).map(|p| (out, p)));
    match run {
        Ok((out, got)) => {
            if out.flagged_unreliable {
                return Check {
                    name,
                    passed: false,
                    detail: format!(
                        "oracle diagnostics unreliable: top population {:.3e}, \
                         truncated weight {:.3e}",
                        out.top_level_population, out.thermal_weight_truncated
                    ),
                };
            }
            match entangling_phase(seq, &table, &config.drive, (driven[0], driven[1])) {
                Ok(expected) => {
                    // The coherence argument pins the phase modulo pi/2 only.
                    let diff = wrap_to_pi(4.0 * (got - expected.total)).abs() / 4.0;
                    Check {
                        name,
                        passed: diff <= 1e-4,
                        detail: format!(
                            "oracle {got:.9e} vs formula {:.9e} rad (diff {diff:.3e} mod pi/2)",
                            expected.total
                        ),
                    }
                }
                Err(e) => Check {
                    name,
                    passed: false,
                    detail: format!("formula failed: {e}"),
                },
            }
        }
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("oracle failed: {e}"),
        },
    }
}

fn check_fock_purity(config: &GateConfig<f64>, seq: &PhaseSequence<f64>) -> Check {
    let name = "fock_purity_closed";
    let (options, table) = match fock_setup(config, seq) {
        Ok(v) => v,
        Err(reason) => {
            return Check {
                name,
                passed: true,
                detail: format!("not applicable: {reason}"),
            }
        }
    };
    let state = config
        .state
        .clone()
        .unwrap_or_else(|| QubitPairState::from_z_label("11").expect("builtin label"));
    match propagate(seq, &table, &config.drive, &state, &options, None) {
        Ok(out) => {
            let loss = out.purity_loss();
            Check {
                name,
                passed: !out.flagged_unreliable && loss.abs() <= 1e-6,
                detail: format!("closed-trajectory purity loss {loss:.3e}"),
            }
        }
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("oracle failed: {e}"),
        },
    }
}

fn check_noise_variance(config: &GateConfig<f64>, seq: &PhaseSequence<f64>, seed: u64) -> Check {
    let name = "noise_variance_matches_spectrum";
    let spectrum = match &config.noise {
        Some(NoiseModel::Spectrum(s)) => s,
        _ => {
            return Check {
                name,
                passed: true,
                detail: "not applicable: no spectral noise model".into(),
            }
        }
    };
    // Var = Int S / 2 pi, by panel-split quadrature over the support.
    let mut points: Vec<f64> = vec![0.0, spectrum.max_frequency()];
    points.extend(spectrum.breakpoints());
    points.retain(|&w| w >= 0.0 && w <= spectrum.max_frequency());
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    let integral = phasegate_core::quad::adaptive_real(
        |w: f64| spectrum.psd(w),
        &points,
        1e-10,
        0.0,
        2000,
    );
    let expected = integral.value.re / std::f64::consts::PI;
    let dt = std::f64::consts::PI / spectrum.max_frequency() / 4.0;
    let mut acc = 0.0;
    let mut count = 0usize;
    for i in 0..64u64 {
        match generate_noise(spectrum, seq.total_duration(), dt, seed ^ (0x9e3779b9 + i)) {
            Ok(tr) => {
                for &x in &tr.samples {
                    acc += x * x;
                    count += 1;
                }
            }
            Err(e) => {
                return Check {
                    name,
                    passed: false,
                    detail: format!("synthesis failed: {e}"),
                }
            }
        }
    }
    let var = acc / count as f64;
    let rel = (var - expected).abs() / expected;
    Check {
        name,
        passed: rel <= 0.3,
        detail: format!(
            "ensemble variance {var:.4e} vs integral {expected:.4e} (rel {rel:.2})"
        ),
    }
}

fn check_mc_vs_spectral(
    config: &GateConfig<f64>,
    seq: &PhaseSequence<f64>,
    seed: u64,
    threads: Option<usize>,
) -> Check {
    let name = "monte_carlo_matches_spectral";
    let spectrum = match &config.noise {
        Some(NoiseModel::Spectrum(s)) => s,
        _ => {
            return Check {
                name,
                passed: true,
                detail: "not applicable: no spectral noise model".into(),
            }
        }
    };
    if config.drive.driven_qubits.len() != 2 {
        return Check {
            name,
            passed: true,
            detail: "not applicable: needs exactly two driven qubits".into(),
        };
    }
    let state = config
        .state
        .clone()
        .unwrap_or_else(|| QubitPairState::from_z_label("11").expect("builtin label"));
    let spectral =
        match purity_loss_spectral(seq, &config.modes, &config.drive, &state, spectrum) {
            Ok(s) => s.loss,
            Err(e) => {
                return Check {
                    name,
                    passed: true,
                    detail: format!("not applicable: {e}"),
                }
            }
        };
    if spectral <= 0.0 || spectral > 0.02 {
        return Check {
            name,
            passed: true,
            detail: format!(
                "not applicable: spectral loss {spectral:.3e} outside the linear window"
            ),
        };
    }
    match purity_loss_mc(
        seq,
        &config.modes,
        &config.drive,
        &state,
        spectrum,
        200,
        seed,
        threads,
    ) {
        Ok(mc) => {
            let diff = (mc.mean - spectral).abs();
            let allowed = (6.0 * mc.std_error).max(0.25 * spectral);
            Check {
                name,
                passed: diff <= allowed,
                detail: format!(
                    "mc {:.4e} (se {:.1e}) vs spectral {spectral:.4e}",
                    mc.mean, mc.std_error
                ),
            }
        }
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("estimator failed: {e}"),
        },
    }
}

pub fn validate(name: &str, args: &RunArgs) -> Result<(), CliError> {
    let ctx = prepare(
        name,
        args,
        &["state", "noise", "filter", "calibrate", "monte_carlo", "oracle"],
    )?;
    let threads = threads(args)?;
    let checks = vec![
        check_config_round_trip(&ctx.config),
        check_fold_equivalence(&ctx.config, &ctx.seq),
        check_closure_quadrature(&ctx.config, &ctx.seq),
        check_entangler_quadrature(&ctx.config, &ctx.seq),
        check_fock_phase(&ctx.config, &ctx.seq),
        check_fock_purity(&ctx.config, &ctx.seq),
        check_noise_variance(&ctx.config, &ctx.seq, args.seed),
        check_mc_vs_spectral(&ctx.config, &ctx.seq, args.seed, threads),
    ];
    for check in &checks {
        println!(
            "check {:<36} {}  {}",
            check.name,
            if check.passed { "ok  " } else { "FAIL" },
            check.detail
        );
    }
    let passed = checks.iter().all(|c| c.passed);
    let report = ValidationReport { passed, checks };
    write_json(&ctx.out.join("validation_report.json"), &report)?;
    write_manifest(&ctx.out, name, &args.config, args.seed)?;
    if passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        Err(CliError::Validation(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}
