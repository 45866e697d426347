//! TOML config documents.
//!
//! One format serves every command; commands ignore sections they do not
//! use. Quantities carry their unit in the key name and exactly one unit
//! variant must be present per quantity:
//!
//! ```toml
//! [drive]
//! rabi_rate_khz = 100.0            # or rabi_rate_rad_s
//! qubits = [1, 2]
//! spin_axis = "x"                  # optional, default "x"
//!
//! [[modes]]
//! index = 1
//! detuning_khz = 59.77             # or detuning_rad_s; signed
//! frequency_mhz = 2.4              # or frequency_khz / frequency_rad_s
//! nbar = 0.0                       # optional, default 0
//! couplings = [0.1, 0.1]           # eta per driven qubit, drive order
//!
//! [recipe]                         # exactly one of [recipe] | [sequence]
//! tau_s_us = 16.73                 # or tau_s_s
//! modes = [1, 2, 3]
//!
//! [sequence]
//! tau_s_us = 16.73
//! phases_pi = [0.0, 1.0]           # or phases_rad
//! ```
//!
//! Frequencies written in hertz-family units are linear frequencies: a
//! value of `f` kHz means `2 pi f 1e3` rad/s. Optional sections `[state]`,
//! `[noise]`, `[filter]`, `[calibrate]`, `[monte_carlo]`, `[oracle]`
//! configure the analysis commands; see the field structs below.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    CalibrateOptions, ConcatRecipe, DriveSpec, FilterGrid, GateConfig, McOptions, ModeSpec,
    ModeTable, ModelError, NoiseModel, OracleOptions, PhaseSequence, QubitPairState, RunOptions,
    SequenceSpec, SpectrumShape, Spectrum, SpinAxis,
};
use crate::scalar::{real, Real};
use num_complex::Complex;

const TWO_PI: f64 = std::f64::consts::TAU;

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Malformed TOML or a key the schema does not know (including
    /// misspelled unit suffixes).
    #[error("config schema error: {0}")]
    Schema(String),
    /// A structurally valid document with an invalid value.
    #[error("config field {path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

fn model_err(path: &str, err: ModelError) -> ConfigError {
    invalid(path, err.to_string())
}

/// Picks the single present unit variant and converts it to base units.
/// `variants` pairs each key name with its value and scale factor.
fn one_of(path: &str, field: &str, variants: &[(&str, Option<f64>, f64)]) -> Result<f64, ConfigError> {
    let present: Vec<&(&str, Option<f64>, f64)> =
        variants.iter().filter(|(_, v, _)| v.is_some()).collect();
    match present.as_slice() {
        [(_, Some(v), scale)] => Ok(v * scale),
        [] => {
            let names: Vec<&str> = variants.iter().map(|(n, _, _)| *n).collect();
            Err(invalid(
                format!("{path}.{field}"),
                format!("missing; provide exactly one of {}", names.join(", ")),
            ))
        }
        many => {
            let names: Vec<&str> = many.iter().map(|(n, _, _)| *n).collect();
            Err(invalid(
                format!("{path}.{field}"),
                format!("ambiguous units; {} all present", names.join(", ")),
            ))
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    drive: RawDrive,
    #[serde(default)]
    modes: Vec<RawMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sequence: Option<RawSequence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    recipe: Option<RawRecipe>,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<RawState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<RawNoise>,
    #[serde(skip_serializing_if = "Option::is_none")]
    filter: Option<RawFilter>,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibrate: Option<RawCalibrate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<RawMc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<RawOracle>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    #[serde(skip_serializing_if = "Option::is_none")]
    rabi_rate_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rabi_rate_rad_s: Option<f64>,
    qubits: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spin_axis: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    detuning_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detuning_rad_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frequency_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frequency_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frequency_rad_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nbar: Option<f64>,
    couplings: Vec<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSequence {
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_s_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_s_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phases_pi: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phases_rad: Option<Vec<f64>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecipe {
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_s_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_s_s: Option<f64>,
    modes: Vec<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    #[serde(skip_serializing_if = "Option::is_none")]
    z_label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_amplitudes: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cutoff_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cutoff_rad_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    low_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    low_rad_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    high_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    high_rad_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frequencies_khz: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frequencies_rad_s: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficients: Option<Vec<f64>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_min_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_min_rad_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_max_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_max_rad_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    points_per_decade: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCalibrate {
    #[serde(skip_serializing_if = "Option::is_none")]
    target_phase_pi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_phase_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    qubit_pair: Option<[usize; 2]>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    realizations: usize,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    #[serde(skip_serializing_if = "Option::is_none")]
    cutoff: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps_per_segment: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    modes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial: Option<String>,
}

/// Parses and validates a config document.
pub fn load_config<T: Real>(text: &str) -> Result<GateConfig<T>, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Schema(e.to_string()))?;
    resolve(raw)
}

/// [`load_config`] for a file on disk.
pub fn load_config_file<T: Real>(path: &std::path::Path) -> Result<GateConfig<T>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_config(&text)
}

fn resolve<T: Real>(raw: RawConfig) -> Result<GateConfig<T>, ConfigError> {
    let drive = resolve_drive(&raw.drive)?;

    if raw.modes.is_empty() {
        return Err(invalid("modes", "empty mode table"));
    }
    let mut modes = Vec::with_capacity(raw.modes.len());
    for (pos, m) in raw.modes.iter().enumerate() {
        modes.push(resolve_mode::<T>(pos, m, drive.driven_qubits.len())?);
    }
    let modes = ModeTable::new(modes).map_err(|e| model_err("modes", e))?;

    let sequence = match (&raw.sequence, &raw.recipe) {
        (Some(_), Some(_)) => {
            return Err(invalid(
                "sequence",
                "both [sequence] and [recipe] given; provide exactly one",
            ));
        }
        (None, None) => {
            return Err(invalid(
                "sequence",
                "missing; provide exactly one of [sequence] or [recipe]",
            ));
        }
        (Some(seq), None) => SequenceSpec::Explicit(resolve_sequence_table::<T>(seq)?),
        (None, Some(recipe)) => {
            let r = resolve_recipe::<T>(recipe)?;
            r.validate(&modes).map_err(|e| model_err("recipe.modes", e))?;
            SequenceSpec::Recipe(r)
        }
    };

    let state = raw.state.as_ref().map(resolve_state::<T>).transpose()?;
    let noise = raw.noise.as_ref().map(resolve_noise::<T>).transpose()?;

    let options = RunOptions {
        filter: raw.filter.as_ref().map(resolve_filter::<T>).transpose()?,
        calibrate: raw
            .calibrate
            .as_ref()
            .map(|c| resolve_calibrate::<T>(c, &drive))
            .transpose()?,
        monte_carlo: raw.monte_carlo.as_ref().map(|m| McOptions {
            realizations: m.realizations,
        }),
        oracle: raw.oracle.as_ref().map(resolve_oracle).transpose()?,
    };

    Ok(GateConfig {
        modes,
        drive,
        sequence,
        noise,
        state,
        options,
    })
}

fn resolve_drive<T: Real>(raw: &RawDrive) -> Result<DriveSpec<T>, ConfigError> {
    let rabi = one_of(
        "drive",
        "rabi_rate",
        &[
            ("rabi_rate_khz", raw.rabi_rate_khz, TWO_PI * 1e3),
            ("rabi_rate_rad_s", raw.rabi_rate_rad_s, 1.0),
        ],
    )?;
    let spin_axis = match raw.spin_axis.as_deref() {
        None | Some("x") => SpinAxis::X,
        Some("y") => SpinAxis::Y,
        Some("z") => SpinAxis::Z,
        Some(other) => {
            return Err(invalid(
                "drive.spin_axis",
                format!("unknown axis {other:?}; expected \"x\", \"y\" or \"z\""),
            ))
        }
    };
    let drive = DriveSpec {
        rabi_rate: real::<T>(rabi),
        driven_qubits: raw.qubits.clone(),
        spin_axis,
    };
    drive.validate().map_err(|e| model_err("drive", e))?;
    Ok(drive)
}

fn resolve_mode<T: Real>(
    pos: usize,
    raw: &RawMode,
    qubit_count: usize,
) -> Result<ModeSpec<T>, ConfigError> {
    let path = format!("modes[{pos}]");
    let detuning = one_of(
        &path,
        "detuning",
        &[
            ("detuning_khz", raw.detuning_khz, TWO_PI * 1e3),
            ("detuning_rad_s", raw.detuning_rad_s, 1.0),
        ],
    )?;
    let frequency = one_of(
        &path,
        "frequency",
        &[
            ("frequency_khz", raw.frequency_khz, TWO_PI * 1e3),
            ("frequency_mhz", raw.frequency_mhz, TWO_PI * 1e6),
            ("frequency_rad_s", raw.frequency_rad_s, 1.0),
        ],
    )?;
    if raw.couplings.len() != qubit_count {
        return Err(invalid(
            format!("{path}.couplings"),
            format!(
                "{} couplings for {} driven qubits",
                raw.couplings.len(),
                qubit_count
            ),
        ));
    }
    let mode = ModeSpec {
        index: raw.index,
        detuning: real::<T>(detuning),
        mode_frequency: real::<T>(frequency),
        mean_occupation: real::<T>(raw.nbar.unwrap_or(0.0)),
        couplings: raw.couplings.iter().map(|&x| real::<T>(x)).collect(),
    };
    mode.validate().map_err(|e| model_err(&path, e))?;
    Ok(mode)
}

fn resolve_step<T: Real>(path: &str, us: Option<f64>, s: Option<f64>) -> Result<T, ConfigError> {
    let step = one_of(path, "tau_s", &[("tau_s_us", us, 1e-6), ("tau_s_s", s, 1.0)])?;
    Ok(real::<T>(step))
}

fn resolve_sequence_table<T: Real>(raw: &RawSequence) -> Result<PhaseSequence<T>, ConfigError> {
    let step = resolve_step::<T>("sequence", raw.tau_s_us, raw.tau_s_s)?;
    let phases: Vec<T> = match (&raw.phases_pi, &raw.phases_rad) {
        (Some(pi), None) => pi
            .iter()
            .map(|&x| real::<T>(x) * T::PI())
            .collect(),
        (None, Some(rad)) => rad.iter().map(|&x| real::<T>(x)).collect(),
        (Some(_), Some(_)) => {
            return Err(invalid(
                "sequence.phases",
                "ambiguous units; phases_pi and phases_rad both present",
            ))
        }
        (None, None) => {
            return Err(invalid(
                "sequence.phases",
                "missing; provide exactly one of phases_pi, phases_rad",
            ))
        }
    };
    PhaseSequence::new(step, phases).map_err(|e| model_err("sequence", e))
}

fn resolve_recipe<T: Real>(raw: &RawRecipe) -> Result<ConcatRecipe<T>, ConfigError> {
    Ok(ConcatRecipe {
        step_duration: resolve_step::<T>("recipe", raw.tau_s_us, raw.tau_s_s)?,
        mode_indices: raw.modes.clone(),
    })
}

fn resolve_state<T: Real>(raw: &RawState) -> Result<QubitPairState<T>, ConfigError> {
    match (&raw.z_label, &raw.x_amplitudes) {
        (Some(label), None) => {
            QubitPairState::from_z_label(label).map_err(|e| model_err("state.z_label", e))
        }
        (None, Some(amps)) => {
            if amps.len() != 4 {
                return Err(invalid(
                    "state.x_amplitudes",
                    format!("{} amplitudes, expected 4", amps.len()),
                ));
            }
            let mut c = [Complex::new(T::zero(), T::zero()); 4];
            for (slot, pair) in c.iter_mut().zip(amps) {
                *slot = Complex::new(real::<T>(pair[0]), real::<T>(pair[1]));
            }
            QubitPairState::from_x_amplitudes(c).map_err(|e| model_err("state.x_amplitudes", e))
        }
        (Some(_), Some(_)) => Err(invalid(
            "state",
            "ambiguous; z_label and x_amplitudes both present",
        )),
        (None, None) => Err(invalid(
            "state",
            "missing; provide z_label or x_amplitudes",
        )),
    }
}

fn resolve_noise<T: Real>(raw: &RawNoise) -> Result<NoiseModel<T>, ConfigError> {
    let scale = real::<T>(raw.scale.unwrap_or(1.0));
    let spectrum = |shape| {
        let s = Spectrum { scale, shape };
        s.validate().map(|_| NoiseModel::Spectrum(s))
    };
    let result = match raw.kind.as_str() {
        "polynomial" => {
            let coeffs = raw.coefficients.as_ref().ok_or_else(|| {
                invalid("noise.coefficients", "required for kind = \"polynomial\"")
            })?;
            return Ok(NoiseModel::Polynomial {
                coefficients: coeffs.iter().map(|&x| real::<T>(x)).collect(),
            });
        }
        "white" => {
            let cutoff = one_of(
                "noise",
                "cutoff",
                &[
                    ("cutoff_khz", raw.cutoff_khz, TWO_PI * 1e3),
                    ("cutoff_rad_s", raw.cutoff_rad_s, 1.0),
                ],
            )?;
            spectrum(SpectrumShape::White {
                cutoff: real::<T>(cutoff),
            })
        }
        "one_over_f" | "power_law" => {
            let low = one_of(
                "noise",
                "low",
                &[
                    ("low_khz", raw.low_khz, TWO_PI * 1e3),
                    ("low_rad_s", raw.low_rad_s, 1.0),
                ],
            )?;
            let high = one_of(
                "noise",
                "high",
                &[
                    ("high_khz", raw.high_khz, TWO_PI * 1e3),
                    ("high_rad_s", raw.high_rad_s, 1.0),
                ],
            )?;
            if raw.kind == "one_over_f" {
                spectrum(SpectrumShape::OneOverF {
                    low: real::<T>(low),
                    high: real::<T>(high),
                })
            } else {
                let exponent = raw
                    .exponent
                    .ok_or_else(|| invalid("noise.exponent", "required for kind = \"power_law\""))?;
                spectrum(SpectrumShape::PowerLaw {
                    exponent: real::<T>(exponent),
                    low: real::<T>(low),
                    high: real::<T>(high),
                })
            }
        }
        "tabulated" => {
            let omegas: Vec<f64> = match (&raw.frequencies_khz, &raw.frequencies_rad_s) {
                (Some(f), None) => f.iter().map(|x| x * TWO_PI * 1e3).collect(),
                (None, Some(f)) => f.clone(),
                (Some(_), Some(_)) => {
                    return Err(invalid(
                        "noise.frequencies",
                        "ambiguous units; frequencies_khz and frequencies_rad_s both present",
                    ))
                }
                (None, None) => {
                    return Err(invalid(
                        "noise.frequencies",
                        "missing; provide frequencies_khz or frequencies_rad_s",
                    ))
                }
            };
            let values = raw
                .values
                .as_ref()
                .ok_or_else(|| invalid("noise.values", "required for kind = \"tabulated\""))?;
            spectrum(SpectrumShape::Tabulated {
                omegas: omegas.iter().map(|&x| real::<T>(x)).collect(),
                values: values.iter().map(|&x| real::<T>(x)).collect(),
            })
        }
        other => {
            return Err(invalid(
                "noise.kind",
                format!(
                    "unknown kind {other:?}; expected white, one_over_f, power_law, tabulated or polynomial"
                ),
            ))
        }
    };
    result.map_err(|e| model_err("noise", e))
}

fn resolve_filter<T: Real>(raw: &RawFilter) -> Result<FilterGrid<T>, ConfigError> {
    let omega_min = one_of(
        "filter",
        "omega_min",
        &[
            ("omega_min_khz", raw.omega_min_khz, TWO_PI * 1e3),
            ("omega_min_rad_s", raw.omega_min_rad_s, 1.0),
        ],
    )?;
    let omega_max = one_of(
        "filter",
        "omega_max",
        &[
            ("omega_max_khz", raw.omega_max_khz, TWO_PI * 1e3),
            ("omega_max_rad_s", raw.omega_max_rad_s, 1.0),
        ],
    )?;
    if !(omega_min > 0.0 && omega_max > omega_min) {
        return Err(invalid(
            "filter",
            "requires 0 < omega_min < omega_max".to_string(),
        ));
    }
    Ok(FilterGrid {
        omega_min: real::<T>(omega_min),
        omega_max: real::<T>(omega_max),
        points_per_decade: raw.points_per_decade.unwrap_or(40),
    })
}

fn resolve_calibrate<T: Real>(
    raw: &RawCalibrate,
    drive: &DriveSpec<T>,
) -> Result<CalibrateOptions<T>, ConfigError> {
    let target = match (raw.target_phase_pi, raw.target_phase_rad) {
        (Some(pi), None) => real::<T>(pi) * T::PI(),
        (None, Some(rad)) => real::<T>(rad),
        (None, None) => real::<T>(0.125) * T::PI(),
        (Some(_), Some(_)) => {
            return Err(invalid(
                "calibrate.target_phase",
                "ambiguous units; target_phase_pi and target_phase_rad both present",
            ))
        }
    };
    let pair = match raw.qubit_pair {
        Some([a, b]) => (a, b),
        None => {
            if drive.driven_qubits.len() < 2 {
                return Err(invalid(
                    "calibrate.qubit_pair",
                    "missing and fewer than two driven qubits to default to",
                ));
            }
            (drive.driven_qubits[0], drive.driven_qubits[1])
        }
    };
    if pair.0 == pair.1 {
        return Err(invalid("calibrate.qubit_pair", "the two qubits must differ"));
    }
    for q in [pair.0, pair.1] {
        drive
            .position_of(q)
            .map_err(|e| model_err("calibrate.qubit_pair", e))?;
    }
    Ok(CalibrateOptions {
        target_phase: target,
        qubit_pair: pair,
    })
}

fn resolve_oracle(raw: &RawOracle) -> Result<OracleOptions, ConfigError> {
    let thermal = match raw.initial.as_deref() {
        None | Some("vacuum") => false,
        Some("thermal") => true,
        Some(other) => {
            return Err(invalid(
                "oracle.initial",
                format!("unknown initial state {other:?}; expected \"vacuum\" or \"thermal\""),
            ))
        }
    };
    Ok(OracleOptions {
        cutoff: raw.cutoff.unwrap_or(12),
        steps_per_segment: raw.steps_per_segment.unwrap_or(200),
        mode_indices: raw.modes.clone(),
        thermal,
    })
}

/// Renders a config back to canonical TOML (base units only: rad/s,
/// seconds, radians). `load_config(serialize_config(cfg))` reproduces
/// every numeric field exactly.
pub fn serialize_config<T: Real>(cfg: &GateConfig<T>) -> String {
    let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
    let raw = RawConfig {
        drive: RawDrive {
            rabi_rate_rad_s: Some(f(cfg.drive.rabi_rate)),
            qubits: cfg.drive.driven_qubits.clone(),
            spin_axis: Some(
                match cfg.drive.spin_axis {
                    SpinAxis::X => "x",
                    SpinAxis::Y => "y",
                    SpinAxis::Z => "z",
                }
                .to_string(),
            ),
            ..Default::default()
        },
        modes: cfg
            .modes
            .iter()
            .map(|m| RawMode {
                index: m.index,
                detuning_rad_s: Some(f(m.detuning)),
                frequency_rad_s: Some(f(m.mode_frequency)),
                nbar: Some(f(m.mean_occupation)),
                couplings: m.couplings.iter().map(|&x| f(x)).collect(),
                ..Default::default()
            })
            .collect(),
        sequence: match &cfg.sequence {
            SequenceSpec::Explicit(seq) => Some(RawSequence {
                tau_s_s: Some(f(seq.step_duration())),
                phases_rad: Some(seq.phases().iter().map(|&x| f(x)).collect()),
                ..Default::default()
            }),
            SequenceSpec::Recipe(_) => None,
        },
        recipe: match &cfg.sequence {
            SequenceSpec::Recipe(r) => Some(RawRecipe {
                tau_s_s: Some(f(r.step_duration)),
                modes: r.mode_indices.clone(),
                ..Default::default()
            }),
            SequenceSpec::Explicit(_) => None,
        },
        state: cfg.state.as_ref().map(|s| RawState {
            x_amplitudes: Some(
                s.amplitudes()
                    .iter()
                    .map(|c| [f(c.re), f(c.im)])
                    .collect(),
            ),
            ..Default::default()
        }),
        noise: cfg.noise.as_ref().map(|n| match n {
            NoiseModel::Polynomial { coefficients } => RawNoise {
                kind: "polynomial".into(),
                coefficients: Some(coefficients.iter().map(|&x| f(x)).collect()),
                ..Default::default()
            },
            NoiseModel::Spectrum(sp) => {
                let mut raw = RawNoise {
                    scale: Some(f(sp.scale)),
                    ..Default::default()
                };
                match &sp.shape {
                    SpectrumShape::White { cutoff } => {
                        raw.kind = "white".into();
                        raw.cutoff_rad_s = Some(f(*cutoff));
                    }
                    SpectrumShape::OneOverF { low, high } => {
                        raw.kind = "one_over_f".into();
                        raw.low_rad_s = Some(f(*low));
                        raw.high_rad_s = Some(f(*high));
                    }
                    SpectrumShape::PowerLaw {
                        exponent,
                        low,
                        high,
                    } => {
                        raw.kind = "power_law".into();
                        raw.exponent = Some(f(*exponent));
                        raw.low_rad_s = Some(f(*low));
                        raw.high_rad_s = Some(f(*high));
                    }
                    SpectrumShape::Tabulated { omegas, values } => {
                        raw.kind = "tabulated".into();
                        raw.frequencies_rad_s = Some(omegas.iter().map(|&x| f(x)).collect());
                        raw.values = Some(values.iter().map(|&x| f(x)).collect());
                    }
                }
                raw
            }
        }),
        filter: cfg.options.filter.as_ref().map(|g| RawFilter {
            omega_min_rad_s: Some(f(g.omega_min)),
            omega_max_rad_s: Some(f(g.omega_max)),
            points_per_decade: Some(g.points_per_decade),
            ..Default::default()
        }),
        calibrate: cfg.options.calibrate.as_ref().map(|c| RawCalibrate {
            target_phase_rad: Some(f(c.target_phase)),
            qubit_pair: Some([c.qubit_pair.0, c.qubit_pair.1]),
            ..Default::default()
        }),
        monte_carlo: cfg.options.monte_carlo.as_ref().map(|m| RawMc {
            realizations: m.realizations,
        }),
        oracle: cfg.options.oracle.as_ref().map(|o| RawOracle {
            cutoff: Some(o.cutoff),
            steps_per_segment: Some(o.steps_per_segment),
            modes: o.mode_indices.clone(),
            initial: Some(if o.thermal { "thermal" } else { "vacuum" }.to_string()),
        }),
    };
    toml::to_string(&raw).expect("canonical config must serialize")
}

/// Names of the optional sections present in a config, for command-level
/// "section unused" warnings.
pub fn optional_sections_present<T: Real>(cfg: &GateConfig<T>) -> Vec<&'static str> {
    let mut present = Vec::new();
    if cfg.state.is_some() {
        present.push("state");
    }
    if cfg.noise.is_some() {
        present.push("noise");
    }
    if cfg.options.filter.is_some() {
        present.push("filter");
    }
    if cfg.options.calibrate.is_some() {
        present.push("calibrate");
    }
    if cfg.options.monte_carlo.is_some() {
        present.push("monte_carlo");
    }
    if cfg.options.oracle.is_some() {
        present.push("oracle");
    }
    present
}
