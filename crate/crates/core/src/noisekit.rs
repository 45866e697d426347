//! Sensitivity of a sequence to Rabi-rate noise: filter functions, the
//! spectral purity-loss prediction, and a Monte Carlo estimator over
//! synthesized noise realizations.
//!
//! Conventions. The Rabi-rate error `Omega_e(t)` is a real stationary
//! process with two-sided PSD `S(omega)`:
//!
//! ```text
//! E[Omega_e(t) Omega_e(t')] = (1/2 pi) Int S(omega) e^{i omega (t-t')} d omega,
//! ```
//!
//! so `Var[Omega_e] = Int S d omega / 2 pi`. Mode `k` filters the noise
//! through `F_k(omega) = |alpha~(delta_k + omega)|^2`, the squared
//! spectral weight of the modulation displaced to the mode's frame; the
//! same expression the closure residual uses, which is what ties the
//! zeros of `F_k` to closure. For a sequence that closes every mode, the
//! ensemble purity loss of a two-qubit state is, to leading order,
//!
//! ```text
//! E[1 - P] = (1/8 pi) Int S(omega) sum_k D_k F_k(omega) d omega,
//! ```
//!
//! with state weights `D_k` defined below.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::model::{DriveSpec, ModeTable, ModelError, PhaseSequence, QubitPairState, Spectrum};
use crate::phasespace::closure_residual;
use crate::quad::adaptive_split;
use crate::scalar::{cis, czero, real, Real};

/// Closure precondition for the spectral formula: residuals must be
/// below this fraction of the sequence duration.
const CLOSURE_LIMIT_FRACTION: f64 = 1e-8;

/// Oversampling of the synthesis frequency grid relative to the
/// trajectory's spectral feature width.
const FREQ_OVERSAMPLE: f64 = 16.0;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(
        "mode {mode_index} trajectory is open: |residual| = {residual:.3e} s \
         exceeds {limit:.3e} s; the spectral purity formula assumes closure"
    )]
    OpenTrajectory {
        mode_index: usize,
        residual: f64,
        limit: f64,
    },
    #[error(
        "time step {dt:.3e} s cannot resolve the spectrum: support up to \
         {omega_max:.3e} rad/s requires dt <= {required:.3e} s"
    )]
    UnresolvedSpectrum {
        dt: f64,
        omega_max: f64,
        required: f64,
    },
    #[error("purity estimation requires exactly two driven qubits, got {0}")]
    NotTwoQubits(usize),
    #[error("spectrum has no support (zero max frequency or zero scale)")]
    EmptySpectrum,
    #[error("spectral integral stalled: error {error:.3e} against value {value:.3e}")]
    QuadratureStalled { value: f64, error: f64 },
}

/// Noise filter function of one mode:
/// `F_k(omega) = |alpha~(delta_k + omega)|^2`, units s^2.
///
/// This is literally the squared closure residual evaluated off-center,
/// so `F_k(0) = 0` exactly when the sequence closes mode `k`, and a
/// single segment gives `F_k(-delta_k) = tau_s^2`.
pub fn filter_function<T: Real>(seq: &PhaseSequence<T>, delta_k: T, omega: T) -> T {
    closure_residual(seq, delta_k + omega).norm_sqr()
}

/// State weights `D_k` of the purity formula:
///
/// ```text
/// D_k = sum_{ij,lm} |c_ij|^2 |c_lm|^2
///       |(s_i - s_l) eta_k^1 + (s_j - s_m) eta_k^2|^2 (2 nbar_k + 1).
/// ```
///
/// Evaluated through second moments of the eigenvalue signs: with
/// `p = E[s_i]`, `q = E[s_j]`, `r = E[s_i s_j]` over the state weights,
///
/// ```text
/// D_k = 2 (2 nbar_k + 1) [eta1^2 (1 - p^2) + 2 eta1 eta2 (r - p q)
///                         + eta2^2 (1 - q^2)].
/// ```
///
/// Returned in mode-table order.
pub fn dk_weights<T: Real>(
    modes: &ModeTable<T>,
    drive: &DriveSpec<T>,
    state: &QubitPairState<T>,
) -> Result<Vec<T>, NoiseError> {
    if drive.driven_qubits.len() != 2 {
        return Err(NoiseError::NotTwoQubits(drive.driven_qubits.len()));
    }
    let mut p = T::zero();
    let mut q = T::zero();
    let mut r = T::zero();
    for (idx, c) in state.amplitudes().iter().enumerate() {
        let w = c.norm_sqr();
        let (s1, s2) = QubitPairState::<T>::sector_signs(idx);
        p = p + w * s1;
        q = q + w * s2;
        r = r + w * s1 * s2;
    }
    let two = real::<T>(2.0);
    Ok(modes
        .iter()
        .map(|mode| {
            let eta1 = mode.couplings[0];
            let eta2 = mode.couplings[1];
            two * mode.thermal_weight()
                * (eta1 * eta1 * (T::one() - p * p)
                    + two * eta1 * eta2 * (r - p * q)
                    + eta2 * eta2 * (T::one() - q * q))
        })
        .collect())
}

fn require_closed<T: Real>(seq: &PhaseSequence<T>, modes: &ModeTable<T>) -> Result<(), NoiseError> {
    let limit = seq.total_duration() * real::<T>(CLOSURE_LIMIT_FRACTION);
    for mode in modes.iter() {
        let residual = closure_residual(seq, mode.detuning).norm();
        if residual > limit {
            return Err(NoiseError::OpenTrajectory {
                mode_index: mode.index,
                residual: residual.to_f64().unwrap_or(f64::NAN),
                limit: limit.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(())
}

/// Spectral purity-loss prediction with its quadrature error estimate.
#[derive(Debug, Clone, Copy)]
pub struct SpectralPurity<T> {
    /// `E[1 - P]` to leading order in the noise power.
    pub loss: T,
    /// Propagated quadrature error estimate on `loss`.
    pub quad_error: T,
}

/// Leading-order ensemble purity loss under spectrum `s`:
/// `(1/8 pi) Int S(omega) sum_k D_k F_k(omega) d omega`, by adaptive
/// quadrature split at the band edges and at each `omega = -delta_k`
/// where a filter function peaks.
///
/// Preconditions: the sequence closes every table mode and the drive
/// addresses exactly two qubits.
pub fn purity_loss_spectral<T: Real>(
    seq: &PhaseSequence<T>,
    modes: &ModeTable<T>,
    drive: &DriveSpec<T>,
    state: &QubitPairState<T>,
    spectrum: &Spectrum<T>,
) -> Result<SpectralPurity<T>, NoiseError> {
    require_closed(seq, modes)?;
    let weights = dk_weights(modes, drive, state)?;
    let omega_max = spectrum.max_frequency();
    if !(omega_max > T::zero()) || spectrum.scale == T::zero() {
        return Err(NoiseError::EmptySpectrum);
    }

    let mut points: Vec<T> = vec![-omega_max, T::zero(), omega_max];
    for b in spectrum.breakpoints() {
        points.push(b);
        points.push(-b);
    }
    for mode in modes.iter() {
        points.push(-mode.detuning);
    }
    points.retain(|&w| w >= -omega_max && w <= omega_max);
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup_by(|a, b| *a == *b);

    let detunings: Vec<T> = modes.iter().map(|m| m.detuning).collect();
    let mut integrand = |omega: T| {
        let s = spectrum.psd(omega);
        if s == T::zero() {
            return czero::<T>();
        }
        let mut f_total = T::zero();
        for (&delta, &d) in detunings.iter().zip(&weights) {
            f_total = f_total + d * filter_function(seq, delta, omega);
        }
        Complex::new(s * f_total, T::zero())
    };
    let result = adaptive_split(
        &mut integrand,
        &points,
        real::<T>(1e-8),
        T::min_positive_value(),
        4000,
    );
    let prefactor = (real::<T>(8.0) * T::PI()).recip();
    let loss = result.value.re * prefactor;
    let quad_error = result.error * prefactor;
    if !result.converged && quad_error > loss.abs() * real::<T>(1e-6) {
        return Err(NoiseError::QuadratureStalled {
            value: loss.to_f64().unwrap_or(f64::NAN),
            error: quad_error.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(SpectralPurity { loss, quad_error })
}

/// One synthesized noise trace on a uniform grid starting at t = 0.
#[derive(Debug, Clone)]
pub struct NoiseRealization<T> {
    pub dt: T,
    pub samples: Vec<T>,
}

impl<T: Real> NoiseRealization<T> {
    /// Linear interpolation between samples; clamped at the ends.
    pub fn value_at(&self, t: T) -> T {
        let n = self.samples.len();
        let pos = (t / self.dt).max(T::zero());
        let idx = pos.floor().to_usize().unwrap_or(0);
        if idx + 1 >= n {
            return self.samples[n - 1];
        }
        let frac = pos - real::<T>(idx as f64);
        self.samples[idx] + (self.samples[idx + 1] - self.samples[idx]) * frac
    }

    pub fn duration(&self) -> T {
        self.dt * real::<T>((self.samples.len().saturating_sub(1)) as f64)
    }
}

/// Synthesizes a stationary Gaussian realization of `spectrum` on a grid
/// of step `dt` covering `[0, duration]`, by a sum over a half-integer
/// frequency comb:
///
/// ```text
/// Omega_e(t) = sum_m sigma_m (g_m cos omega_m t + h_m sin omega_m t),
/// omega_m = (m - 1/2) d omega,  sigma_m^2 = S(omega_m) d omega / pi,
/// ```
///
/// with independent standard normal `g_m, h_m`. The comb spacing is
/// `2 pi / (16 span)`, sixteen lines per spectral feature of the window.
/// Identical seeds give identical traces regardless of how many are
/// generated in parallel elsewhere.
pub fn generate_noise<T>(
    spectrum: &Spectrum<T>,
    duration: T,
    dt: T,
    seed: u64,
) -> Result<NoiseRealization<T>, NoiseError>
where
    T: Real,
    StandardNormal: Distribution<T>,
{
    let omega_max = spectrum.max_frequency();
    if !(omega_max > T::zero()) {
        return Err(NoiseError::EmptySpectrum);
    }
    let required = T::PI() / omega_max;
    if dt > required || !(dt > T::zero()) {
        return Err(NoiseError::UnresolvedSpectrum {
            dt: dt.to_f64().unwrap_or(f64::NAN),
            omega_max: omega_max.to_f64().unwrap_or(f64::NAN),
            required: required.to_f64().unwrap_or(f64::NAN),
        });
    }
    let steps = (duration / dt).ceil().to_usize().unwrap_or(1).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(synthesize_on_grid(spectrum, steps + 1, dt, &mut rng))
}

fn synthesize_on_grid<T>(
    spectrum: &Spectrum<T>,
    n_samples: usize,
    dt: T,
    rng: &mut ChaCha8Rng,
) -> NoiseRealization<T>
where
    T: Real,
    StandardNormal: Distribution<T>,
{
    let span = dt * real::<T>((n_samples - 1) as f64);
    let d_omega = (T::PI() + T::PI()) / (real::<T>(FREQ_OVERSAMPLE) * span);
    let omega_max = spectrum.max_frequency();
    let half = real::<T>(0.5);
    let bins = ((omega_max / d_omega) + half)
        .floor()
        .to_usize()
        .unwrap_or(0)
        .max(1);
    let mut samples = vec![T::zero(); n_samples];
    let normal = StandardNormal;
    for m in 1..=bins {
        let omega = (real::<T>(m as f64) - half) * d_omega;
        // Draw in fixed order even for zero-power bins so the stream
        // position depends only on the bin index.
        let g: T = normal.sample(rng);
        let h: T = normal.sample(rng);
        let sigma = (spectrum.psd(omega) * d_omega / T::PI()).sqrt();
        if sigma == T::zero() {
            continue;
        }
        let step = cis(omega * dt);
        let mut z = Complex::new(T::one(), T::zero());
        for s in samples.iter_mut() {
            *s = *s + sigma * (g * z.re + h * z.im);
            z = z * step;
        }
    }
    NoiseRealization { dt, samples }
}

/// `Int Omega_e(t) e^{i delta t} r(t) dt` over the sequence window, by
/// composite trapezoid on the noise grid (with partial end intervals
/// where segment boundaries fall between samples).
pub fn modulated_overlap<T: Real>(
    seq: &PhaseSequence<T>,
    delta: T,
    noise: &NoiseRealization<T>,
) -> Complex<T> {
    let step = seq.step_duration();
    let dt = noise.dt;
    let half = real::<T>(0.5);
    let fuzz = real::<T>(1e-9);
    let mut acc = czero::<T>();
    for (ell, &phase) in seq.phases().iter().enumerate() {
        let a = step * real::<T>(ell as f64);
        let b = a + step;
        let phase_factor = cis(-phase);
        // Whole sample intervals inside [a, b].
        let i0f = (a / dt - fuzz).ceil().max(T::zero());
        let i1f = (b / dt + fuzz).floor();
        let i0 = i0f.to_usize().unwrap_or(0);
        let i1 = i1f
            .to_usize()
            .unwrap_or(0)
            .min(noise.samples.len().saturating_sub(1));
        let mut seg = czero::<T>();
        if i1 > i0 {
            let mut prev = cis(delta * (dt * real::<T>(i0 as f64))) * noise.samples[i0];
            for i in i0..i1 {
                let t_next = dt * real::<T>((i + 1) as f64);
                let next = cis(delta * t_next) * noise.samples[i + 1];
                seg = seg + (prev + next) * half * dt;
                prev = next;
            }
        }
        // Partial pieces at the ends, when boundaries are off-grid.
        let t_i0 = dt * real::<T>(i0 as f64);
        if t_i0 > a + dt * fuzz {
            let g_a = cis(delta * a) * noise.value_at(a);
            let g_b = cis(delta * t_i0) * noise.samples[i0];
            seg = seg + (g_a + g_b) * half * (t_i0 - a);
        }
        let t_i1 = dt * real::<T>(i1 as f64);
        if b > t_i1 + dt * fuzz {
            let g_a = cis(delta * t_i1) * noise.samples[i1];
            let g_b = cis(delta * b) * noise.value_at(b);
            seg = seg + (g_a + g_b) * half * (b - t_i1);
        }
        acc = acc + seg * phase_factor;
    }
    acc
}

/// Exact purity loss of one noise realization, given closure of the
/// noiseless trajectories: the only displacements left are the
/// noise-driven `alpha_k^mu = (-i eta_mu / 2) Int Omega_e e^{i delta_k t} r dt`,
/// and dephasing exponents follow from their sector differences.
pub fn per_realization_purity<T: Real>(
    seq: &PhaseSequence<T>,
    modes: &ModeTable<T>,
    drive: &DriveSpec<T>,
    state: &QubitPairState<T>,
    noise: &NoiseRealization<T>,
) -> Result<T, NoiseError> {
    if drive.driven_qubits.len() != 2 {
        return Err(NoiseError::NotTwoQubits(drive.driven_qubits.len()));
    }
    // Per-mode |overlap|^2 and thermal weight; the -i/2 prefactor joins
    // as eta^2/4 inside the sector difference.
    let per_mode: Vec<(T, T)> = modes
        .iter()
        .map(|mode| {
            let overlap_sq = modulated_overlap(seq, mode.detuning, noise).norm_sqr();
            (overlap_sq, mode.thermal_weight())
        })
        .collect();
    let weights: Vec<T> = state.amplitudes().iter().map(|c| c.norm_sqr()).collect();
    let quarter = real::<T>(0.25);
    let half = real::<T>(0.5);
    let mut purity = T::zero();
    for (a, &wa) in weights.iter().enumerate() {
        let (s1a, s2a) = QubitPairState::<T>::sector_signs(a);
        for (b, &wb) in weights.iter().enumerate() {
            let (s1b, s2b) = QubitPairState::<T>::sector_signs(b);
            let mut chi = T::zero();
            for (mode, &(overlap_sq, thermal)) in modes.iter().zip(&per_mode) {
                let k = (s1a - s1b) * mode.couplings[0] + (s2a - s2b) * mode.couplings[1];
                chi = chi + half * thermal * k * k * quarter * overlap_sq;
            }
            purity = purity + wa * wb * (-(chi + chi)).exp();
        }
    }
    Ok(T::one() - purity)
}

/// Monte Carlo purity-loss estimate.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate<T> {
    pub mean: T,
    pub std_error: T,
    pub realizations: usize,
}

/// Ensemble purity loss over `realizations` synthesized noise traces.
///
/// Realization `i` always uses stream `i` of the seeded counter RNG, so
/// results are identical for any `threads` value (including `None`, the
/// global pool); the parallelism degree only changes wall time.
pub fn purity_loss_mc<T>(
    seq: &PhaseSequence<T>,
    modes: &ModeTable<T>,
    drive: &DriveSpec<T>,
    state: &QubitPairState<T>,
    spectrum: &Spectrum<T>,
    realizations: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<McEstimate<T>, NoiseError>
where
    T: Real,
    StandardNormal: Distribution<T>,
{
    use rayon::prelude::*;

    require_closed(seq, modes)?;
    if drive.driven_qubits.len() != 2 {
        return Err(NoiseError::NotTwoQubits(drive.driven_qubits.len()));
    }
    let omega_max = spectrum.max_frequency();
    if !(omega_max > T::zero()) {
        return Err(NoiseError::EmptySpectrum);
    }
    let realizations = realizations.max(1);

    // Grid fine enough for both the spectrum and the fastest detuning,
    // aligned with segment boundaries.
    let step = seq.step_duration();
    let fastest = modes
        .iter()
        .map(|m| m.detuning.abs())
        .fold(omega_max, |a, b| a.max(b));
    let oversample = real::<T>(8.0);
    let n_sub = ((step * fastest * oversample / T::PI())
        .ceil()
        .to_usize()
        .unwrap_or(64))
    .max(64);
    let dt = step / real::<T>(n_sub as f64);
    let n_samples = seq.segment_count() * n_sub + 1;

    let run_one = |i: usize| -> Result<T, NoiseError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let noise = synthesize_on_grid(spectrum, n_samples, dt, &mut rng);
        per_realization_purity(seq, modes, drive, state, &noise)
    };

    let losses: Vec<Result<T, NoiseError>> = match threads {
        Some(1) => (0..realizations).map(run_one).collect(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("thread pool");
            pool.install(|| (0..realizations).into_par_iter().map(run_one).collect())
        }
        None => (0..realizations).into_par_iter().map(run_one).collect(),
    };

    let mut values = Vec::with_capacity(realizations);
    for r in losses {
        values.push(r?);
    }
    let n = real::<T>(realizations as f64);
    let mean = values.iter().copied().sum::<T>() / n;
    let variance = if realizations > 1 {
        values
            .iter()
            .map(|&x| {
                let d = x - mean;
                d * d
            })
            .sum::<T>()
            / (n - T::one())
    } else {
        T::zero()
    };
    let std_error = (variance / n).sqrt();
    Ok(McEstimate {
        mean,
        std_error,
        realizations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModeSpec, SpectrumShape, SpinAxis};
    use crate::model::ConcatRecipe;
    use crate::seqsynth::synth_recipe;
    use std::f64::consts::PI;

    fn drive2() -> DriveSpec<f64> {
        DriveSpec {
            rabi_rate: 2.0 * PI * 50.0e3,
            driven_qubits: vec![1, 2],
            spin_axis: SpinAxis::X,
        }
    }

    fn modes2() -> ModeTable<f64> {
        ModeTable::new(vec![
            ModeSpec {
                index: 1,
                detuning: 2.0 * PI * 47.0e3,
                mode_frequency: 1.4e7,
                mean_occupation: 0.0,
                couplings: vec![0.1, 0.1],
            },
            ModeSpec {
                index: 2,
                detuning: -2.0 * PI * 23.0e3,
                mode_frequency: 1.3e7,
                mean_occupation: 0.5,
                couplings: vec![0.08, -0.06],
            },
        ])
        .unwrap()
    }

    fn closed_seq() -> PhaseSequence<f64> {
        let recipe = ConcatRecipe {
            step_duration: 1.1e-5,
            mode_indices: vec![1, 2],
        };
        synth_recipe(&recipe, &modes2()).unwrap()
    }

    #[test]
    fn filter_function_special_values() {
        let step = 1.3e-5;
        let delta = 2.0 * PI * 37.0e3;
        let single = PhaseSequence::new(step, vec![0.0]).unwrap();
        // At omega = -delta the integrand is constant: F = tau_s^2.
        let at_peak = filter_function(&single, delta, -delta);
        assert!((at_peak - step * step).abs() < 1e-14 * step * step);

        // A closing sequence has F_k(0) = 0 to rounding.
        let seq = closed_seq();
        for mode in modes2().iter() {
            let f0 = filter_function(&seq, mode.detuning, 0.0);
            assert!(f0 < 1e-26, "F({}) = {f0}", mode.index);
        }
    }

    #[test]
    fn dk_weights_match_brute_enumeration() {
        let modes = modes2();
        let d = drive2();
        for state in [
            QubitPairState::from_z_label("11").unwrap(),
            QubitPairState::from_z_label("01").unwrap(),
            QubitPairState::from_x_amplitudes([
                Complex::new(0.9, 0.0),
                Complex::new(0.0, 0.1),
                Complex::new(0.3, 0.0),
                Complex::new(0.0, (1.0f64 - 0.81 - 0.01 - 0.09).sqrt()),
            ])
            .unwrap(),
        ] {
            let fast = dk_weights(&modes, &d, &state).unwrap();
            // Brute force: all 16 sector pairs, straight from the
            // definition.
            for (mode, &got) in modes.iter().zip(&fast) {
                let mut brute = 0.0;
                for a in 0..4usize {
                    for b in 0..4usize {
                        let wa = state.amplitudes()[a].norm_sqr();
                        let wb = state.amplitudes()[b].norm_sqr();
                        let (s1a, s2a) = QubitPairState::<f64>::sector_signs(a);
                        let (s1b, s2b) = QubitPairState::<f64>::sector_signs(b);
                        let k = (s1a - s1b) * mode.couplings[0] + (s2a - s2b) * mode.couplings[1];
                        brute += wa * wb * k * k * (2.0 * mode.mean_occupation + 1.0);
                    }
                }
                assert!(
                    (got - brute).abs() < 1e-13 * brute.abs().max(1e-12),
                    "mode {}: {got} vs {brute}",
                    mode.index
                );
            }
        }
    }

    #[test]
    fn dk_weights_known_values() {
        let modes = modes2();
        let d = drive2();
        // z-basis |11>: p = q = r = 0 in the drive basis, so
        // D_k = 2 (eta1^2 + eta2^2) (2 nbar + 1).
        let dk = dk_weights(&modes, &d, &QubitPairState::from_z_label("11").unwrap()).unwrap();
        for (mode, &got) in modes.iter().zip(&dk) {
            let expected = 2.0
                * (mode.couplings[0].powi(2) + mode.couplings[1].powi(2))
                * (2.0 * mode.mean_occupation + 1.0);
            assert!((got - expected).abs() < 1e-14 * expected);
        }
        // A drive-basis product state is insensitive: D_k = 0.
        let product = QubitPairState::from_x_amplitudes([
            Complex::new(1.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
        ])
        .unwrap();
        let dk = dk_weights(&modes, &d, &product).unwrap();
        for &v in &dk {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn spectral_purity_requires_closure() {
        let open = PhaseSequence::new(1.1e-5, vec![0.0, 0.3]).unwrap();
        let spectrum = Spectrum {
            scale: 1.0e4,
            shape: SpectrumShape::White {
                cutoff: 2.0 * PI * 5.0e3,
            },
        };
        let state = QubitPairState::from_z_label("11").unwrap();
        let err = purity_loss_spectral(&open, &modes2(), &drive2(), &state, &spectrum).unwrap_err();
        assert!(matches!(err, NoiseError::OpenTrajectory { .. }));
    }

    #[test]
    fn generate_noise_is_deterministic_and_respects_nyquist() {
        let spectrum = Spectrum {
            scale: 1.0e4,
            shape: SpectrumShape::White {
                cutoff: 2.0 * PI * 30.0e3,
            },
        };
        let dt = PI / (2.0 * PI * 30.0e3) / 4.0;
        let a = generate_noise(&spectrum, 1.0e-4, dt, 7).unwrap();
        let b = generate_noise(&spectrum, 1.0e-4, dt, 7).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = generate_noise(&spectrum, 1.0e-4, dt, 8).unwrap();
        assert!(a.samples != c.samples);

        let too_coarse = generate_noise(&spectrum, 1.0e-4, 1.0, 7);
        assert!(matches!(
            too_coarse,
            Err(NoiseError::UnresolvedSpectrum { .. })
        ));
    }

    #[test]
    fn noise_variance_matches_spectrum_integral() {
        // Var = Int S / 2 pi; white spectrum: scale * cutoff / pi.
        let cutoff = 2.0 * PI * 40.0e3;
        let scale = 3.0e6;
        let spectrum = Spectrum {
            scale,
            shape: SpectrumShape::White { cutoff },
        };
        let expected = scale * cutoff / PI;
        let dt = PI / cutoff / 2.0;
        let mut acc = 0.0;
        let mut count = 0usize;
        for seed in 0..200u64 {
            let tr = generate_noise(&spectrum, 2.0e-4, dt, seed).unwrap();
            for &x in &tr.samples {
                acc += x * x;
                count += 1;
            }
        }
        let var = acc / count as f64;
        // Samples within one trace are correlated; 200 traces give a few
        // percent of scatter.
        assert!(
            (var - expected).abs() < 0.1 * expected,
            "var {var:.4e} vs {expected:.4e}"
        );
    }

    #[test]
    fn modulated_overlap_matches_quadrature_on_smooth_trace() {
        // A deterministic "noise" trace: one sinusoid sampled densely.
        let seq = PhaseSequence::new(1.0e-5, vec![0.0, 0.4 * PI]).unwrap();
        let delta = 2.0 * PI * 31.0e3;
        let w0 = 2.0 * PI * 17.0e3;
        let n = 4096usize;
        let dt = seq.total_duration() / n as f64;
        let samples: Vec<f64> = (0..=n).map(|i| (w0 * dt * i as f64).cos()).collect();
        let noise = NoiseRealization { dt, samples };
        let got = modulated_overlap(&seq, delta, &noise);
        let brute = crate::quad::adaptive_split(
            &mut |t: f64| {
                cis(delta * t) * seq.modulation(t.min(seq.total_duration() - 1e-16)) * (w0 * t).cos()
            },
            &[0.0, 1.0e-5, 2.0e-5],
            1e-13,
            1e-22,
            400,
        );
        assert!(
            (got - brute.value).norm() < 2e-7 * brute.value.norm(),
            "{got} vs {}",
            brute.value
        );
    }

    #[test]
    fn mc_estimate_is_thread_count_invariant() {
        let seq = closed_seq();
        let modes = modes2();
        let d = drive2();
        let state = QubitPairState::from_z_label("11").unwrap();
        let spectrum = Spectrum {
            scale: 1.0e5,
            shape: SpectrumShape::White {
                cutoff: 2.0 * PI * 20.0e3,
            },
        };
        let a = purity_loss_mc(&seq, &modes, &d, &state, &spectrum, 24, 42, Some(1)).unwrap();
        let b = purity_loss_mc(&seq, &modes, &d, &state, &spectrum, 24, 42, Some(4)).unwrap();
        let c = purity_loss_mc(&seq, &modes, &d, &state, &spectrum, 24, 42, None).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.mean, c.mean);
        assert_eq!(a.std_error, b.std_error);
    }

    #[test]
    fn per_realization_loss_is_bounded_by_linear_exponent() {
        // 1 - prod w e^{-2 chi} <= sum w 2 chi pointwise.
        let seq = closed_seq();
        let modes = modes2();
        let d = drive2();
        let state = QubitPairState::from_z_label("11").unwrap();
        let spectrum = Spectrum {
            scale: 1.0e8,
            shape: SpectrumShape::White {
                cutoff: 2.0 * PI * 20.0e3,
            },
        };
        let dt = seq.step_duration() / 256.0;
        for seed in 0..8u64 {
            let noise = generate_noise(&spectrum, seq.total_duration(), dt, seed).unwrap();
            let loss = per_realization_purity(&seq, &modes, &d, &state, &noise).unwrap();
            assert!((0.0..=1.0).contains(&loss), "loss {loss}");
        }
    }
}
