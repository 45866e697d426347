//! Entangling phase accumulated by a qubit pair over one sequence.
//!
//! The two-qubit phase is the imaginary part of the time-ordered double
//! integral of the displacement drives,
//!
//! ```text
//! phi_{mu nu} = sum_k Im Int_0^tau dt1 Int_0^t1 dt2
//!               gamma_k^mu(t1) gamma_k^nu(t2)*,
//! gamma_k^mu(t) = f_k^mu e^{i delta_k t} r(t).
//! ```
//!
//! Piecewise-constant `r` collapses it to a closed form per mode: full
//! segment pairs (`l > l'`) contribute through
//!
//! ```text
//! A_k = sum_{l > l'} Im{ f^mu f^nu* e^{i [(l - l') x - phi_l + phi_l']} },
//! ```
//!
//! the `L` same-segment triangles through
//!
//! ```text
//! B_k = L Im{ f^mu f^nu* (i x - e^{i x} + 1) },
//! ```
//!
//! and the mode's total is `[2 (1 - cos x) A_k + B_k] / delta_k^2` with
//! `x = delta_k tau_s`. Sideband couplings are pure imaginaries
//! `f = -i Omega eta / 2`, so `f^mu f^nu*` is real and both terms reduce
//! to sine series; the code asserts that reduction instead of offering a
//! complex branch. The phase scales as `Omega^2`, which is what makes
//! square-root calibration exact.

use num_complex::Complex;
use thiserror::Error;

use crate::model::{ms_coupling, DriveSpec, ModeTable, ModelError, PhaseSequence};
use crate::phasespace::partial_closure;
use crate::quad::{gauss_legendre, gl_fixed};
use crate::scalar::{cis, real, Real};

#[derive(Debug, Error)]
pub enum EntanglerError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("qubit pair must name two distinct driven qubits, got ({0}, {1})")]
    DegeneratePair(usize, usize),
    #[error("unit-rate entangling phase is zero; no coupling to calibrate against")]
    ZeroCoupling,
    #[error(
        "target phase {target} and unit-rate phase {unit_phase} have opposite signs; \
         no real Rabi rate reaches the target"
    )]
    SignMismatch { target: f64, unit_phase: f64 },
}

/// One mode's share of the entangling phase.
#[derive(Debug, Clone)]
pub struct ModePhaseTerm<T> {
    pub mode_index: usize,
    /// Cross-segment term `A_k`, rad^2/s^2 scale.
    pub a_term: T,
    /// Same-segment term `B_k`.
    pub b_term: T,
    /// `[2 (1 - cos x) A_k + B_k] / delta_k^2`, rad.
    pub contribution: T,
}

/// Entangling phase report for one qubit pair.
#[derive(Debug, Clone)]
pub struct EntanglingPhaseReport<T> {
    pub pair: (usize, usize),
    pub per_mode: Vec<ModePhaseTerm<T>>,
    /// Total phase `phi_{mu nu}`, rad.
    pub total: T,
}

/// `2 (1 - cos x) / x^2`, stable at small `x`.
fn pair_envelope<T: Real>(x: T) -> T {
    if x.abs() >= real::<T>(1e-3) {
        real::<T>(2.0) * (T::one() - x.cos()) / (x * x)
    } else {
        let x2 = x * x;
        T::one() - x2 / real::<T>(12.0) + x2 * x2 / real::<T>(360.0)
    }
}

/// `(x - sin x) / x^2`, stable at small `x`.
fn triangle_envelope<T: Real>(x: T) -> T {
    if x.abs() >= real::<T>(1e-3) {
        (x - x.sin()) / (x * x)
    } else {
        let x2 = x * x;
        x * (T::one() / real::<T>(6.0) - x2 / real::<T>(120.0)
            + x2 * x2 / real::<T>(5040.0))
    }
}

fn pair_couplings<T: Real>(
    modes: &ModeTable<T>,
    drive: &DriveSpec<T>,
    pair: (usize, usize),
) -> Result<Vec<(usize, T, T)>, EntanglerError> {
    if pair.0 == pair.1 {
        return Err(EntanglerError::DegeneratePair(pair.0, pair.1));
    }
    let mut out = Vec::with_capacity(modes.len());
    for mode in modes.iter() {
        let f_mu = ms_coupling(drive, mode, pair.0)?;
        let f_nu = ms_coupling(drive, mode, pair.1)?;
        let ff = f_mu * f_nu.conj();
        // -i Omega eta / 2 couplings multiply to an exactly real product;
        // anything else means the sine-form reduction below is invalid.
        debug_assert!(
            ff.im.abs() <= ff.norm() * T::epsilon() * real::<T>(8.0) + T::min_positive_value(),
            "coupling product must be real"
        );
        out.push((mode.index, mode.detuning, ff.re));
    }
    Ok(out)
}

/// Closed-form entangling phase of `pair` under `seq`, with per-mode
/// breakdown.
pub fn entangling_phase<T: Real>(
    seq: &PhaseSequence<T>,
    modes: &ModeTable<T>,
    drive: &DriveSpec<T>,
    pair: (usize, usize),
) -> Result<EntanglingPhaseReport<T>, EntanglerError> {
    let step = seq.step_duration();
    let phases = seq.phases();
    let segments = phases.len();
    let mut per_mode = Vec::with_capacity(modes.len());
    let mut total = T::zero();
    for (mode_index, delta, ff) in pair_couplings(modes, drive, pair)? {
        let x = delta * step;
        // A_k: every ordered pair l > l', sine form.
        let mut pair_sum = T::zero();
        for ell in 1..segments {
            for ellp in 0..ell {
                let theta =
                    real::<T>((ell - ellp) as f64) * x - phases[ell] + phases[ellp];
                pair_sum = pair_sum + theta.sin();
            }
        }
        let a_term = ff * pair_sum;
        let b_term = ff * real::<T>(segments as f64) * (x - x.sin());
        // tau_s^2 [a(x) A + L b(x) ff] == [2 (1 - cos x) A + B] / delta^2
        let contribution = step
            * step
            * (pair_envelope(x) * a_term
                + ff * real::<T>(segments as f64) * triangle_envelope(x));
        total = total + contribution;
        per_mode.push(ModePhaseTerm {
            mode_index,
            a_term,
            b_term,
            contribution,
        });
    }
    Ok(EntanglingPhaseReport {
        pair,
        per_mode,
        total,
    })
}

/// Entangling phase by quadrature: the inner time integral is the exact
/// running spectral weight, the outer integral is Gauss-Legendre per
/// segment. Shares no pair algebra with [`entangling_phase`]; this is
/// the oracle the closed form is checked against.
pub fn entangling_phase_quadrature<T: Real>(
    seq: &PhaseSequence<T>,
    modes: &ModeTable<T>,
    drive: &DriveSpec<T>,
    pair: (usize, usize),
) -> Result<T, EntanglerError> {
    let rule = gauss_legendre::<T>(24);
    let step = seq.step_duration();
    let mut total = T::zero();
    for (.., delta, ff) in pair_couplings(modes, drive, pair)? {
        let mut mode_sum = Complex::new(T::zero(), T::zero());
        for (ell, &phase) in seq.phases().iter().enumerate() {
            let a = step * real::<T>(ell as f64);
            let b = a + step;
            let segment = gl_fixed(
                &rule,
                &mut |t: T| cis(delta * t - phase) * partial_closure(seq, delta, t).conj(),
                a,
                b,
            );
            mode_sum = mode_sum + segment;
        }
        total = total + ff * mode_sum.im;
    }
    Ok(total)
}

/// Rabi rate that makes the pair's entangling phase hit `target`, by the
/// exact `Omega^2` scaling. Fails when the unit-rate phase is zero or of
/// the opposite sign.
pub fn calibrate_rabi<T: Real>(
    seq: &PhaseSequence<T>,
    modes: &ModeTable<T>,
    drive: &DriveSpec<T>,
    pair: (usize, usize),
    target: T,
) -> Result<T, EntanglerError> {
    let unit_drive = drive.with_rabi_rate(T::one());
    let unit_phase = entangling_phase(seq, modes, &unit_drive, pair)?.total;
    if unit_phase == T::zero() {
        return Err(EntanglerError::ZeroCoupling);
    }
    let ratio = target / unit_phase;
    if ratio < T::zero() {
        return Err(EntanglerError::SignMismatch {
            target: target.to_f64().unwrap_or(f64::NAN),
            unit_phase: unit_phase.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(ratio.sqrt())
}
