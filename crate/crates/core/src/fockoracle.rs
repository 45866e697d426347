//! Direct Fock-space reference propagator.
//!
//! In the drive eigenbasis the interaction is diagonal in the two spin
//! eigenvalues `s = (s1, s2)`, and each mode evolves as an independently
//! forced oscillator:
//!
//! ```text
//! psi_{s,k} <- exp(beta a_k^dag - beta^* a_k) psi_{s,k},
//! beta = g_{s,k}(t_mid) dt,
//! g_{s,k}(t) = -(i/2) Omega(t) (s1 eta_k^1 + s2 eta_k^2) e^{i delta_k t} e^{-i phi(t)}.
//! ```
//!
//! Nothing here reuses the analytic sequence formulas: trajectories,
//! entangling phase and purity all emerge from midpoint-stepped
//! displacement products on truncated number-state vectors, which is
//! what makes this module a useful cross-check. Step error is O(dt^2)
//! overall; the displacement exponential itself is summed to machine
//! precision, so the truncation cutoff and dt are the only knobs.

use num_complex::Complex;
use thiserror::Error;

use crate::model::{
    DriveSpec, ModeSpec, ModeTable, ModelError, OracleOptions, PhaseSequence, QubitPairState,
};
use crate::noisekit::NoiseRealization;
use crate::scalar::{cis, czero, real, Real};

/// Thermal initial states keep Boltzmann lines until the tail weight
/// drops below this.
const THERMAL_TAIL: f64 = 1e-9;

/// Top-of-ladder population beyond which results are flagged.
const LEAKAGE_LIMIT: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FockError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("Fock cutoff {0} is too small; need at least 2 levels")]
    CutoffTooSmall(usize),
    #[error("steps_per_segment must be positive")]
    NoSteps,
    #[error("oracle propagation requires exactly two driven qubits, got {0}")]
    NotTwoQubits(usize),
    #[error(
        "noise trace covers {covered:.3e} s but the sequence runs {needed:.3e} s"
    )]
    NoiseTooShort { covered: f64, needed: f64 },
    #[error(
        "cannot read an entangling phase: off-diagonal weight {magnitude:.3e} is too small"
    )]
    AmbiguousPhase { magnitude: f64 },
}

/// Reduced two-qubit state after tracing out every propagated mode,
/// with the diagnostics needed to trust (or reject) it.
#[derive(Debug, Clone)]
pub struct ReducedQubitState<T> {
    /// Density matrix in the drive eigenbasis, row-major over the four
    /// sign sectors.
    pub rho: [[Complex<T>; 4]; 4],
    /// Tr rho^2.
    pub purity: T,
    /// |Tr rho - 1|.
    pub trace_error: T,
    /// Largest top-Fock-level population seen in any sector/mode/line.
    pub top_level_population: T,
    /// Largest |norm^2 - 1| drift of any propagated wave.
    pub norm_drift: T,
    /// Boltzmann weight dropped by truncating thermal lines.
    pub thermal_weight_truncated: T,
    /// True when any diagnostic exceeds its trust threshold.
    pub flagged_unreliable: bool,
}

impl<T: Real> ReducedQubitState<T> {
    pub fn purity_loss(&self) -> T {
        T::one() - self.purity
    }
}

/// One forced-oscillator evolution on a truncated number ladder.
struct SectorRun<T> {
    wave: Vec<Complex<T>>,
    top_population: T,
    norm_drift: T,
}

/// exp(beta a^dag - beta^* a) applied in place, by Taylor summation of
/// the matrix-free ladder action. Converges to working precision in a
/// handful of terms for the |beta| << 1 steps used here.
fn displace_step<T: Real>(
    wave: &mut [Complex<T>],
    beta: Complex<T>,
    term: &mut [Complex<T>],
    next: &mut [Complex<T>],
    roots: &[T],
) {
    let n = wave.len();
    term.copy_from_slice(wave);
    let tol = T::epsilon() * T::epsilon();
    for k in 1..100usize {
        let inv_k = real::<T>(1.0 / k as f64);
        // next = (beta a^dag - beta^* a) term / k
        for m in 0..n {
            let raise = if m > 0 {
                beta * term[m - 1] * roots[m]
            } else {
                czero()
            };
            let lower = if m + 1 < n {
                beta.conj() * term[m + 1] * roots[m + 1]
            } else {
                czero()
            };
            next[m] = (raise - lower) * inv_k;
        }
        let mut term_sq = T::zero();
        for m in 0..n {
            wave[m] = wave[m] + next[m];
            term_sq = term_sq + next[m].norm_sqr();
            term[m] = next[m];
        }
        if term_sq < tol {
            break;
        }
    }
}

/// Evolves one (sector, mode, initial line) wave through the sequence.
#[allow(clippy::too_many_arguments)]
fn run_sector<T: Real>(
    seq: &PhaseSequence<T>,
    mode: &ModeSpec<T>,
    coupling_sum: T,
    rabi: T,
    noise: Option<&NoiseRealization<T>>,
    steps_per_segment: usize,
    cutoff: usize,
    initial_line: usize,
) -> SectorRun<T> {
    let mut wave = vec![czero::<T>(); cutoff];
    wave[initial_line] = Complex::new(T::one(), T::zero());
    let mut term = vec![czero::<T>(); cutoff];
    let mut next = vec![czero::<T>(); cutoff];
    let roots: Vec<T> = (0..cutoff).map(|m| real::<T>(m as f64).sqrt()).collect();

    let step = seq.step_duration();
    let dt = step / real::<T>(steps_per_segment as f64);
    let half = real::<T>(0.5);
    let neg_half_i = Complex::new(T::zero(), -half);
    let mut top_population = T::zero();
    let delta = mode.detuning;

    for (ell, &phase) in seq.phases().iter().enumerate() {
        let t0 = step * real::<T>(ell as f64);
        let sector_phase = cis(-phase);
        for j in 0..steps_per_segment {
            let t_mid = t0 + dt * (real::<T>(j as f64) + half);
            let omega = match noise {
                Some(tr) => rabi + tr.value_at(t_mid),
                None => rabi,
            };
            let g = neg_half_i * (omega * coupling_sum) * cis(delta * t_mid) * sector_phase;
            displace_step(&mut wave, g * dt, &mut term, &mut next, &roots);
            // Track every step: closed trajectories revisit the origin
            // at segment boundaries, hiding mid-segment excursions.
            let top = wave[cutoff - 1].norm_sqr();
            if top > top_population {
                top_population = top;
            }
        }
    }
    let norm_sq: T = wave.iter().map(|c| c.norm_sqr()).sum();
    SectorRun {
        wave,
        top_population,
        norm_drift: (norm_sq - T::one()).abs(),
    }
}

/// Boltzmann line weights for `nbar`, truncated once the tail is below
/// `THERMAL_TAIL` (and never beyond the ladder), then renormalized.
/// Returns the weights and the truncated tail weight.
fn thermal_lines<T: Real>(nbar: T, cutoff: usize) -> (Vec<T>, T) {
    if nbar <= T::zero() {
        return (vec![T::one()], T::zero());
    }
    let x = nbar / (nbar + T::one());
    let tail_limit = real::<T>(THERMAL_TAIL);
    let mut weights = Vec::new();
    let mut w = T::one() - x; // (1 - x) x^n
    let mut tail = T::one(); // x^n, the weight above line n
    for _ in 0..cutoff.max(1) {
        weights.push(w);
        w = w * x;
        tail = tail * x;
        if tail < tail_limit {
            break;
        }
    }
    let kept: T = weights.iter().copied().sum();
    for w in weights.iter_mut() {
        *w = *w / kept;
    }
    (weights, T::one() - kept)
}

/// Propagates the full (qubits + selected modes) model and traces out
/// the oscillators.
///
/// `noise`, when given, must cover the sequence window; `Omega(t)` is
/// the configured Rabi rate plus the linearly interpolated trace.
pub fn propagate<T: Real>(
    seq: &PhaseSequence<T>,
    modes: &ModeTable<T>,
    drive: &DriveSpec<T>,
    state: &QubitPairState<T>,
    options: &OracleOptions,
    noise: Option<&NoiseRealization<T>>,
) -> Result<ReducedQubitState<T>, FockError> {
    if options.cutoff < 2 {
        return Err(FockError::CutoffTooSmall(options.cutoff));
    }
    if options.steps_per_segment == 0 {
        return Err(FockError::NoSteps);
    }
    if drive.driven_qubits.len() != 2 {
        return Err(FockError::NotTwoQubits(drive.driven_qubits.len()));
    }
    if let Some(tr) = noise {
        let covered = tr.duration();
        let needed = seq.total_duration();
        if covered < needed * (T::one() - real::<T>(1e-9)) {
            return Err(FockError::NoiseTooShort {
                covered: covered.to_f64().unwrap_or(f64::NAN),
                needed: needed.to_f64().unwrap_or(f64::NAN),
            });
        }
    }

    let selected: Vec<&ModeSpec<T>> = match &options.mode_indices {
        Some(indices) => indices
            .iter()
            .map(|&i| modes.get(i).map_err(FockError::from))
            .collect::<Result<_, _>>()?,
        None => modes.iter().collect(),
    };

    let mut top_level_population = T::zero();
    let mut norm_drift = T::zero();
    let mut thermal_weight_truncated = T::zero();

    // Per-mode sector overlap matrices O[a][b] = <psi_b | psi_a>,
    // Boltzmann-averaged over initial lines.
    let mut overlaps: Vec<[[Complex<T>; 4]; 4]> = Vec::with_capacity(selected.len());
    for mode in &selected {
        let (lines, truncated) = if options.thermal {
            thermal_lines(mode.mean_occupation, options.cutoff)
        } else {
            (vec![T::one()], T::zero())
        };
        if truncated > thermal_weight_truncated {
            thermal_weight_truncated = truncated;
        }
        let mut overlap = [[czero::<T>(); 4]; 4];
        for (line, &weight) in lines.iter().enumerate() {
            let runs: Vec<SectorRun<T>> = (0..4)
                .map(|sector| {
                    let (s1, s2) = QubitPairState::<T>::sector_signs(sector);
                    let coupling_sum = s1 * mode.couplings[0] + s2 * mode.couplings[1];
                    run_sector(
                        seq,
                        mode,
                        coupling_sum,
                        drive.rabi_rate,
                        noise,
                        options.steps_per_segment,
                        options.cutoff,
                        line,
                    )
                })
                .collect();
            for run in &runs {
                if run.top_population > top_level_population {
                    top_level_population = run.top_population;
                }
                if run.norm_drift > norm_drift {
                    norm_drift = run.norm_drift;
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    let mut ip = czero::<T>();
                    for m in 0..options.cutoff {
                        ip = ip + runs[b].wave[m].conj() * runs[a].wave[m];
                    }
                    overlap[a][b] = overlap[a][b] + ip * weight;
                }
            }
        }
        overlaps.push(overlap);
    }

    let amps = state.amplitudes();
    let mut rho = [[czero::<T>(); 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let mut elem = amps[a] * amps[b].conj();
            for overlap in &overlaps {
                elem = elem * overlap[a][b];
            }
            rho[a][b] = elem;
        }
    }

    let trace: Complex<T> = (0..4).map(|a| rho[a][a]).fold(czero(), |acc, x| acc + x);
    let mut purity = T::zero();
    for row in &rho {
        for elem in row {
            purity = purity + elem.norm_sqr();
        }
    }
    let trace_error = (trace - Complex::new(T::one(), T::zero())).norm();
    let flagged_unreliable = top_level_population > real::<T>(LEAKAGE_LIMIT)
        || thermal_weight_truncated > real::<T>(LEAKAGE_LIMIT)
        || trace_error > real::<T>(1e-6);
    Ok(ReducedQubitState {
        rho,
        purity,
        trace_error,
        top_level_population,
        norm_drift,
        thermal_weight_truncated,
        flagged_unreliable,
    })
}

/// Purity loss straight from the propagated density matrix.
pub fn purity_loss_oracle<T: Real>(
    seq: &PhaseSequence<T>,
    modes: &ModeTable<T>,
    drive: &DriveSpec<T>,
    state: &QubitPairState<T>,
    options: &OracleOptions,
    noise: Option<&NoiseRealization<T>>,
) -> Result<T, FockError> {
    Ok(propagate(seq, modes, drive, state, options, noise)?.purity_loss())
}

/// Reads the entangling phase off the (+,+)/(+,-) coherence.
///
/// Sector `s` accumulates `(s1 eta1 + s2 eta2)^2` times a common
/// geometric factor, so `arg(rho[0][1] / (c0 c1^*)) = 4 phi` with `phi`
/// the coefficient of the two-spin term. Only meaningful when the
/// trajectories close (otherwise residual displacement pollutes the
/// argument) and when the state populates both sectors.
pub fn extract_entangling_phase<T: Real>(
    reduced: &ReducedQubitState<T>,
    state: &QubitPairState<T>,
) -> Result<T, FockError> {
    let c0 = state.amplitudes()[0];
    let c1 = state.amplitudes()[1];
    let weight = (c0 * c1.conj()).norm();
    let coherence = reduced.rho[0][1];
    if weight < real::<T>(1e-6) || coherence.norm() < weight * real::<T>(1e-3) {
        return Err(FockError::AmbiguousPhase {
            magnitude: coherence.norm().to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((coherence / (c0 * c1.conj())).arg() / real::<T>(4.0))
}

/// True when `rho + tol I` admits a Cholesky factorization, i.e. all
/// eigenvalues exceed `-tol`.
pub fn psd_within<T: Real>(rho: &[[Complex<T>; 4]; 4], tol: T) -> bool {
    let mut m = *rho;
    for d in 0..4 {
        m[d][d] = m[d][d] + Complex::new(tol, T::zero());
    }
    let mut l = [[czero::<T>(); 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum = sum - l[i][k] * l[j][k].conj();
            }
            if i == j {
                if sum.re <= T::zero() {
                    return false;
                }
                l[i][j] = Complex::new(sum.re.sqrt(), T::zero());
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    true
}
