//! Domain types shared by every other module: oscillator modes, the drive,
//! phase sequences, concatenation recipes, two-qubit states, and noise
//! models.
//!
//! Conventions, fixed here once:
//!
//! * angular quantities are rad/s, durations are seconds;
//! * mode detunings `delta_k` are signed;
//! * segment phases are stored unreduced (no mod 2 pi);
//! * two-qubit amplitudes are given in the drive eigenbasis, ordered
//!   `c[2*i + j]` for qubit labels `(i, j)` with eigenvalue sign
//!   `s = (-1)^i`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{real, Real};

pub mod config;
pub use config::{
    load_config, load_config_file, optional_sections_present, serialize_config, ConfigError,
};

/// Errors from constructing or cross-validating domain values.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("empty mode table")]
    EmptyModeTable,
    #[error("duplicate mode index {0}")]
    DuplicateModeIndex(usize),
    #[error("mode index {0} not present in mode table")]
    UnknownMode(usize),
    #[error("qubit {0} is not driven")]
    UnknownQubit(usize),
    #[error("{field}: expected {requirement}, got {value}")]
    OutOfRange {
        field: String,
        requirement: &'static str,
        value: String,
    },
    #[error("mode {index}: {got} couplings, expected one per driven qubit ({expected})")]
    CouplingArity {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("state amplitudes have norm {0}, expected 1")]
    NotNormalized(String),
    #[error("state label {0:?} is not a two-bit string like \"01\"")]
    BadStateLabel(String),
    #[error("phase sequence must have at least one segment")]
    EmptySequence,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

fn ensure_finite<T: Real>(value: T, what: &'static str) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFinite(what))
    }
}

fn ensure_positive<T: Real>(value: T, field: &str) -> Result<(), ModelError> {
    if value > T::zero() && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::OutOfRange {
            field: field.to_string(),
            requirement: "a finite positive value",
            value: format!("{value}"),
        })
    }
}

/// One bosonic oscillator mode as seen by the driven qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec<T> {
    /// 1-based identifier used by recipes and reports.
    pub index: usize,
    /// Signed drive detuning `delta_k` from this mode, rad/s.
    pub detuning: T,
    /// Mode frequency `omega_k`, rad/s. Positive. Carried for reporting;
    /// temperature enters the formulas only through `mean_occupation`.
    pub mode_frequency: T,
    /// Thermal occupation `nbar_k`, dimensionless, >= 0.
    pub mean_occupation: T,
    /// Coupling `eta_{mu,k}` per driven qubit, in drive order. Signed.
    pub couplings: Vec<T>,
}

impl<T: Real> ModeSpec<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        ensure_finite(self.detuning, "mode detuning")?;
        ensure_positive(self.mode_frequency, &format!("mode {} frequency", self.index))?;
        if self.mean_occupation < T::zero() || !self.mean_occupation.is_finite() {
            return Err(ModelError::OutOfRange {
                field: format!("mode {} mean occupation", self.index),
                requirement: "a finite value >= 0",
                value: format!("{}", self.mean_occupation),
            });
        }
        for eta in &self.couplings {
            ensure_finite(*eta, "mode coupling")?;
        }
        Ok(())
    }

    /// `2 nbar + 1`, the thermal weight multiplying every second-moment
    /// quantity of this mode.
    pub fn thermal_weight(&self) -> T {
        real::<T>(2.0) * self.mean_occupation + T::one()
    }
}

/// The set of modes a sequence is synthesized or analyzed against.
///
/// Indices are unique and every entry carries the same number of couplings;
/// table order is the synthesis order used by `synth_full`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ModeSpec<T>>", into = "Vec<ModeSpec<T>>")]
#[serde(bound(
    serialize = "T: Real + Serialize + Clone",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct ModeTable<T: Real> {
    modes: Vec<ModeSpec<T>>,
}

impl<T: Real> ModeTable<T> {
    pub fn new(modes: Vec<ModeSpec<T>>) -> Result<Self, ModelError> {
        if modes.is_empty() {
            return Err(ModelError::EmptyModeTable);
        }
        let arity = modes[0].couplings.len();
        for (pos, mode) in modes.iter().enumerate() {
            mode.validate()?;
            if mode.couplings.len() != arity {
                return Err(ModelError::CouplingArity {
                    index: mode.index,
                    got: mode.couplings.len(),
                    expected: arity,
                });
            }
            if modes[..pos].iter().any(|m| m.index == mode.index) {
                return Err(ModelError::DuplicateModeIndex(mode.index));
            }
        }
        Ok(Self { modes })
    }

    pub fn get(&self, index: usize) -> Result<&ModeSpec<T>, ModelError> {
        self.modes
            .iter()
            .find(|m| m.index == index)
            .ok_or(ModelError::UnknownMode(index))
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ModeSpec<T>> {
        self.modes.iter()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn as_slice(&self) -> &[ModeSpec<T>] {
        &self.modes
    }
}

impl<T: Real> TryFrom<Vec<ModeSpec<T>>> for ModeTable<T> {
    type Error = ModelError;
    fn try_from(modes: Vec<ModeSpec<T>>) -> Result<Self, ModelError> {
        Self::new(modes)
    }
}

impl<T: Real> From<ModeTable<T>> for Vec<ModeSpec<T>> {
    fn from(table: ModeTable<T>) -> Self {
        table.modes
    }
}

/// Which spin quadrature the drive couples to. Metadata for reports; the
/// formulas work in the drive eigenbasis regardless of the axis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinAxis {
    X,
    Y,
    Z,
}

/// The shared bichromatic drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec<T> {
    /// Carrier Rabi rate `Omega`, rad/s, common to all driven qubits.
    pub rabi_rate: T,
    /// Identifiers of the driven qubits; order matches mode couplings.
    pub driven_qubits: Vec<usize>,
    /// Spin quadrature the drive couples to.
    pub spin_axis: SpinAxis,
}

impl<T: Real> DriveSpec<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        ensure_positive(self.rabi_rate, "drive rabi_rate")?;
        if self.driven_qubits.is_empty() {
            return Err(ModelError::OutOfRange {
                field: "drive qubits".into(),
                requirement: "at least one driven qubit",
                value: "[]".into(),
            });
        }
        for (pos, q) in self.driven_qubits.iter().enumerate() {
            if self.driven_qubits[..pos].contains(q) {
                return Err(ModelError::OutOfRange {
                    field: "drive qubits".into(),
                    requirement: "unique identifiers",
                    value: format!("{q} repeated"),
                });
            }
        }
        Ok(())
    }

    /// Position of `qubit` in the driven list, i.e. its coupling column.
    pub fn position_of(&self, qubit: usize) -> Result<usize, ModelError> {
        self.driven_qubits
            .iter()
            .position(|&q| q == qubit)
            .ok_or(ModelError::UnknownQubit(qubit))
    }

    /// A copy with the Rabi rate replaced, for calibration sweeps.
    pub fn with_rabi_rate(&self, rabi_rate: T) -> Self {
        Self {
            rabi_rate,
            driven_qubits: self.driven_qubits.clone(),
            spin_axis: self.spin_axis,
        }
    }
}

/// Sideband coupling `f_k^mu = -i Omega eta_{mu,k} / 2` of `qubit` to
/// `mode`, the prefactor multiplying `e^{i delta_k t} r(t)` in that
/// qubit's displacement drive.
pub fn ms_coupling<T: Real>(
    drive: &DriveSpec<T>,
    mode: &ModeSpec<T>,
    qubit: usize,
) -> Result<Complex<T>, ModelError> {
    let pos = drive.position_of(qubit)?;
    let eta = *mode.couplings.get(pos).ok_or(ModelError::CouplingArity {
        index: mode.index,
        got: mode.couplings.len(),
        expected: drive.driven_qubits.len(),
    })?;
    let half = real::<T>(0.5);
    Ok(Complex::new(T::zero(), -(drive.rabi_rate * eta * half)))
}

/// A piecewise-constant phase pattern: segment `l` of duration `tau_s`
/// carries modulation `e^{-i phi_l}`.
///
/// Phases are kept exactly as constructed, without reduction mod 2 pi;
/// synthesized tables rely on that to stay bit-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPhaseSequence<T>", into = "RawPhaseSequence<T>")]
#[serde(bound(
    serialize = "T: Real + Serialize + Clone",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct PhaseSequence<T: Real> {
    step_duration: T,
    phases: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct RawPhaseSequence<T> {
    step_duration: T,
    phases: Vec<T>,
}

impl<T: Real> TryFrom<RawPhaseSequence<T>> for PhaseSequence<T> {
    type Error = ModelError;
    fn try_from(raw: RawPhaseSequence<T>) -> Result<Self, ModelError> {
        Self::new(raw.step_duration, raw.phases)
    }
}

impl<T: Real> From<PhaseSequence<T>> for RawPhaseSequence<T> {
    fn from(seq: PhaseSequence<T>) -> Self {
        Self {
            step_duration: seq.step_duration,
            phases: seq.phases,
        }
    }
}

impl<T: Real> PhaseSequence<T> {
    pub fn new(step_duration: T, phases: Vec<T>) -> Result<Self, ModelError> {
        ensure_positive(step_duration, "sequence step duration")?;
        if phases.is_empty() {
            return Err(ModelError::EmptySequence);
        }
        for p in &phases {
            ensure_finite(*p, "segment phase")?;
        }
        Ok(Self {
            step_duration,
            phases,
        })
    }

    /// The single-segment seed `r_0` with phase zero.
    pub fn seed(step_duration: T) -> Result<Self, ModelError> {
        Self::new(step_duration, vec![T::zero()])
    }

    pub fn step_duration(&self) -> T {
        self.step_duration
    }

    pub fn phases(&self) -> &[T] {
        &self.phases
    }

    pub fn segment_count(&self) -> usize {
        self.phases.len()
    }

    pub fn total_duration(&self) -> T {
        self.step_duration * real::<T>(self.phases.len() as f64)
    }

    /// Pointwise modulation `r(t)`: `e^{-i phi_l}` inside segment `l`,
    /// zero outside the sequence window.
    pub fn modulation(&self, t: T) -> Complex<T> {
        if t < T::zero() || t >= self.total_duration() {
            return Complex::new(T::zero(), T::zero());
        }
        let ell = (t / self.step_duration).to_usize().unwrap_or(0);
        let ell = ell.min(self.phases.len() - 1);
        crate::scalar::cis(-self.phases[ell])
    }
}

/// Ordered list of mode indices to close by repeated doubling, first
/// entry applied first (innermost, shortest correlation length).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcatRecipe<T> {
    /// Base segment duration `tau_s`, seconds.
    pub step_duration: T,
    /// Mode indices in application order; repeats raise that mode's
    /// closure order. Empty is allowed and yields the seed sequence.
    pub mode_indices: Vec<usize>,
}

impl<T: Real> ConcatRecipe<T> {
    pub fn validate<U: Real>(&self, modes: &ModeTable<U>) -> Result<(), ModelError> {
        ensure_positive(self.step_duration, "recipe step duration")?;
        for &k in &self.mode_indices {
            modes.get(k).map(|_| ())?;
        }
        Ok(())
    }
}

/// Either an explicit phase table or a recipe to synthesize one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize + Clone",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub enum SequenceSpec<T: Real> {
    Explicit(PhaseSequence<T>),
    Recipe(ConcatRecipe<T>),
}

/// Pure two-qubit state in the drive eigenbasis, `c[2*i + j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitPairState<T> {
    amplitudes: [Complex<T>; 4],
}

impl<T: Real> QubitPairState<T> {
    /// Normalization tolerance: 1e-12 for f64, scaled up for coarser
    /// scalars.
    fn norm_tolerance() -> T {
        real::<T>(1e-12).max(T::epsilon() * real::<T>(100.0))
    }

    pub fn from_x_amplitudes(amplitudes: [Complex<T>; 4]) -> Result<Self, ModelError> {
        let norm_sq: T = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        for c in &amplitudes {
            ensure_finite(c.re, "state amplitude")?;
            ensure_finite(c.im, "state amplitude")?;
        }
        if (norm_sq - T::one()).abs() > Self::norm_tolerance() {
            return Err(ModelError::NotNormalized(format!("{}", norm_sq.sqrt())));
        }
        Ok(Self { amplitudes })
    }

    /// Builds the drive-basis amplitudes of a computational (z-basis)
    /// product state such as `"00"` or `"11"`.
    ///
    /// Each z eigenstate is an equal-weight superposition of the drive
    /// eigenstates, so the four amplitudes are exactly `+-1/2` and real.
    pub fn from_z_label(label: &str) -> Result<Self, ModelError> {
        let bits: Vec<u8> = label
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                _ => Err(ModelError::BadStateLabel(label.to_string())),
            })
            .collect::<Result<_, _>>()?;
        if bits.len() != 2 {
            return Err(ModelError::BadStateLabel(label.to_string()));
        }
        let half = real::<T>(0.5);
        let mut amplitudes = [Complex::new(T::zero(), T::zero()); 4];
        for i in 0..2usize {
            for j in 0..2usize {
                let neg = (bits[0] as usize * i + bits[1] as usize * j) % 2 == 1;
                let re = if neg { -half } else { half };
                amplitudes[2 * i + j] = Complex::new(re, T::zero());
            }
        }
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex<T>; 4] {
        &self.amplitudes
    }

    /// Eigenvalue signs `(s_i, s_j) = ((-1)^i, (-1)^j)` of basis index
    /// `2*i + j`.
    pub fn sector_signs(index: usize) -> (T, T) {
        let i = (index >> 1) & 1;
        let j = index & 1;
        let sign = |b: usize| if b == 0 { T::one() } else { -T::one() };
        (sign(i), sign(j))
    }
}

/// Initial-state helper named for what it does: z-basis label in, drive
/// basis amplitudes out.
pub fn initial_state_from_z_label<T: Real>(label: &str) -> Result<QubitPairState<T>, ModelError> {
    QubitPairState::from_z_label(label)
}

/// Amplitude-noise model for the drive: either polynomial weights for
/// moment tests or a stationary spectrum for purity predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel<T> {
    /// Weights `beta_j` of `sum_j beta_j t^j` against which weighted
    /// residuals are taken.
    Polynomial { coefficients: Vec<T> },
    /// Two-sided stationary power spectral density of the Rabi-rate
    /// error `Omega_e(t)`.
    Spectrum(Spectrum<T>),
}

/// Two-sided PSD `S(omega)` of the Rabi-rate error, under the convention
/// `E[Omega_e(t) Omega_e(t')] = (1/2 pi) Int S(omega) e^{i omega (t - t')}
/// d omega`, so the variance is `Int S d omega / 2 pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum<T> {
    /// Overall scale factor; units make `S` a PSD of rad/s amplitudes.
    pub scale: T,
    pub shape: SpectrumShape<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpectrumShape<T> {
    /// Flat up to a hard cutoff (rad/s).
    White { cutoff: T },
    /// `1/|omega|` between the two band edges (rad/s).
    OneOverF { low: T, high: T },
    /// `|omega|^exponent` between the two band edges (rad/s).
    PowerLaw { exponent: T, low: T, high: T },
    /// Linear interpolation of `(omega, S)` samples, `omega >= 0`
    /// ascending; zero outside the sampled band.
    Tabulated { omegas: Vec<T>, values: Vec<T> },
}

impl<T: Real> Spectrum<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.scale >= T::zero() && self.scale.is_finite()) {
            return Err(ModelError::OutOfRange {
                field: "noise scale".into(),
                requirement: "a finite value >= 0",
                value: format!("{}", self.scale),
            });
        }
        match &self.shape {
            SpectrumShape::White { cutoff } => ensure_positive(*cutoff, "noise cutoff"),
            SpectrumShape::OneOverF { low, high } | SpectrumShape::PowerLaw { low, high, .. } => {
                ensure_positive(*low, "noise band low edge")?;
                ensure_positive(*high, "noise band high edge")?;
                if low >= high {
                    return Err(ModelError::OutOfRange {
                        field: "noise band".into(),
                        requirement: "low < high",
                        value: format!("[{low}, {high}]"),
                    });
                }
                Ok(())
            }
            SpectrumShape::Tabulated { omegas, values } => {
                if omegas.len() != values.len() || omegas.len() < 2 {
                    return Err(ModelError::OutOfRange {
                        field: "tabulated noise".into(),
                        requirement: "two or more (omega, value) pairs",
                        value: format!("{} omegas, {} values", omegas.len(), values.len()),
                    });
                }
                for w in omegas.windows(2) {
                    if !(w[1] > w[0]) {
                        return Err(ModelError::OutOfRange {
                            field: "tabulated noise omegas".into(),
                            requirement: "strictly ascending",
                            value: format!("{} then {}", w[0], w[1]),
                        });
                    }
                }
                if omegas[0] < T::zero() {
                    return Err(ModelError::OutOfRange {
                        field: "tabulated noise omegas".into(),
                        requirement: "non-negative",
                        value: format!("{}", omegas[0]),
                    });
                }
                for v in values {
                    if *v < T::zero() || !v.is_finite() {
                        return Err(ModelError::OutOfRange {
                            field: "tabulated noise values".into(),
                            requirement: "finite and >= 0",
                            value: format!("{v}"),
                        });
                    }
                }
                Ok(())
            }
        }
    }

    /// `S(omega)`; even in `omega`.
    pub fn psd(&self, omega: T) -> T {
        let w = omega.abs();
        let s = match &self.shape {
            SpectrumShape::White { cutoff } => {
                if w <= *cutoff {
                    T::one()
                } else {
                    T::zero()
                }
            }
            SpectrumShape::OneOverF { low, high } => {
                if w >= *low && w <= *high {
                    w.recip()
                } else {
                    T::zero()
                }
            }
            SpectrumShape::PowerLaw {
                exponent,
                low,
                high,
            } => {
                if w >= *low && w <= *high {
                    w.powf(*exponent)
                } else {
                    T::zero()
                }
            }
            SpectrumShape::Tabulated { omegas, values } => {
                if w < omegas[0] || w > *omegas.last().unwrap() {
                    T::zero()
                } else {
                    let pos = omegas.partition_point(|&x| x <= w).min(omegas.len() - 1);
                    let (lo, hi) = (pos - 1, pos);
                    let span = omegas[hi] - omegas[lo];
                    let frac = if span > T::zero() {
                        (w - omegas[lo]) / span
                    } else {
                        T::zero()
                    };
                    values[lo] + (values[hi] - values[lo]) * frac
                }
            }
        };
        self.scale * s
    }

    /// Largest angular frequency with any support.
    pub fn max_frequency(&self) -> T {
        match &self.shape {
            SpectrumShape::White { cutoff } => *cutoff,
            SpectrumShape::OneOverF { high, .. } => *high,
            SpectrumShape::PowerLaw { high, .. } => *high,
            SpectrumShape::Tabulated { omegas, .. } => omegas.last().copied().unwrap(),
        }
    }

    /// Positive frequencies where `S` has kinks or jumps; quadratures
    /// split panels here.
    pub fn breakpoints(&self) -> Vec<T> {
        match &self.shape {
            SpectrumShape::White { cutoff } => vec![*cutoff],
            SpectrumShape::OneOverF { low, high } => vec![*low, *high],
            SpectrumShape::PowerLaw { low, high, .. } => vec![*low, *high],
            SpectrumShape::Tabulated { omegas, .. } => omegas.clone(),
        }
    }
}

/// Everything a run needs, as loaded from one config document.
#[derive(Debug, Clone)]
pub struct GateConfig<T: Real> {
    pub modes: ModeTable<T>,
    pub drive: DriveSpec<T>,
    pub sequence: SequenceSpec<T>,
    pub noise: Option<NoiseModel<T>>,
    pub state: Option<QubitPairState<T>>,
    pub options: RunOptions<T>,
}

/// Command-level knobs that ride along in the config document.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions<T> {
    pub filter: Option<FilterGrid<T>>,
    pub calibrate: Option<CalibrateOptions<T>>,
    pub monte_carlo: Option<McOptions>,
    pub oracle: Option<OracleOptions>,
}

impl<T> Default for RunOptions<T> {
    fn default() -> Self {
        Self {
            filter: None,
            calibrate: None,
            monte_carlo: None,
            oracle: None,
        }
    }
}

/// Logarithmic frequency grid for filter-function sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterGrid<T> {
    pub omega_min: T,
    pub omega_max: T,
    pub points_per_decade: usize,
}

impl<T: Real> FilterGrid<T> {
    pub fn omegas(&self) -> Vec<T> {
        let lo = self.omega_min.log10();
        let hi = self.omega_max.log10();
        let decades = (hi - lo).max(T::zero());
        let n = (decades * real::<T>(self.points_per_decade as f64))
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        (0..=n)
            .map(|i| {
                let frac = real::<T>(i as f64) / real::<T>(n as f64);
                let exp = lo + (hi - lo) * frac;
                real::<T>(10.0).powf(exp)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrateOptions<T> {
    /// Target entangling phase, rad.
    pub target_phase: T,
    /// Qubit pair to calibrate, by driven-qubit identifier.
    pub qubit_pair: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct McOptions {
    pub realizations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    /// Fock-space truncation per mode.
    pub cutoff: usize,
    /// Time steps per sequence segment.
    pub steps_per_segment: usize,
    /// Restrict the oracle to these table modes; `None` means all.
    pub mode_indices: Option<Vec<usize>>,
    /// Start modes in their thermal state instead of vacuum.
    pub thermal: bool,
}

/// Summary of gate predictions, the payload of `calibrate` and friends.
#[derive(Debug, Clone, Serialize)]
pub struct GateReport {
    /// Segment count of the analyzed sequence.
    pub segments: usize,
    /// Base step, seconds.
    pub step_duration_s: f64,
    /// Total duration, seconds.
    pub total_duration_s: f64,
    /// Per-mode closure residuals.
    pub closure: Vec<ClosureEntry>,
    /// Entangling phase at the reported Rabi rate, rad.
    pub entangling_phase_rad: f64,
    /// The same phase in the doubled convention `2 phi`, rad.
    pub doubled_phase_rad: f64,
    /// Rabi rate the phases were evaluated at, rad/s.
    pub rabi_rate_rad_s: f64,
    /// Calibrated Rabi rate if a calibration target was given, rad/s.
    pub calibrated_rabi_rad_s: Option<f64>,
    /// Spectral purity-loss prediction if a noise spectrum was given.
    pub predicted_purity_loss: Option<f64>,
}

/// Closure residual of one mode, raw and normalized.
#[derive(Debug, Clone, Serialize)]
pub struct ClosureEntry {
    pub mode_index: usize,
    pub detuning_rad_s: f64,
    /// `|alpha~_k|`, seconds.
    pub residual_abs_s: f64,
    /// `|delta_k| * |alpha~_k|`, dimensionless.
    pub residual_normalized: f64,
}
