//! Phase-space weight of a sequence against each oscillator mode.
//!
//! Everything here is analytic partial-sum algebra over the piecewise
//! constant modulation; no differential equation is ever stepped. The
//! central object is the spectral weight
//!
//! ```text
//! alpha~(delta) = Int_0^tau e^{i delta t} r(t) dt
//!               = sum_l e^{-i phi_l} e^{i delta l tau_s} J_0(tau_s)
//! ```
//!
//! with `J_0(u) = (e^{i delta u} - 1) / (i delta)`. A mode's trajectory
//! closes exactly when its spectral weight vanishes.

use num_complex::Complex;

use crate::model::PhaseSequence;
use crate::scalar::{cis, czero, real, Real};

/// Below this `|delta * u|` the phase-ramp kernel switches to its series
/// form; the closed form loses digits to cancellation as `x -> 0`.
const SMALL_X: f64 = 0.125;

/// `(e^{i x} - 1) / (i x)`, stable for all `x`.
fn phi0<T: Real>(x: T) -> Complex<T> {
    if x.abs() >= real::<T>(SMALL_X) {
        let num = cis(x) - Complex::new(T::one(), T::zero());
        num / Complex::new(T::zero(), x)
    } else {
        // sum_{n>=0} (i x)^n / (n + 1)!
        let ix = Complex::new(T::zero(), x);
        let mut term = Complex::new(T::one(), T::zero());
        let mut acc = term;
        for n in 1..30 {
            term = term * ix / real::<T>((n + 1) as f64);
            acc = acc + term;
            if term.norm() <= acc.norm() * T::epsilon() {
                break;
            }
        }
        acc
    }
}

/// `Int_0^u e^{i delta t} dt`.
fn ramp<T: Real>(delta: T, u: T) -> Complex<T> {
    phi0(delta * u) * u
}

/// Spectral weight of segment `ell` alone:
/// `e^{-i phi} Int e^{i delta t} dt` over `[ell tau_s, (ell+1) tau_s]`.
pub fn segment_integral<T: Real>(delta: T, step: T, phase: T, ell: usize) -> Complex<T> {
    partial_segment_integral(delta, step, phase, ell, step)
}

/// Like [`segment_integral`] but only up to local time `u <= tau_s`
/// inside the segment.
pub fn partial_segment_integral<T: Real>(
    delta: T,
    step: T,
    phase: T,
    ell: usize,
    u: T,
) -> Complex<T> {
    let start = step * real::<T>(ell as f64);
    cis(delta * start - phase) * ramp(delta, u)
}

/// Spectral weight `alpha~(delta)` of the whole sequence; zero for modes
/// the sequence closes.
pub fn closure_residual<T: Real>(seq: &PhaseSequence<T>, delta: T) -> Complex<T> {
    let step = seq.step_duration();
    let base = ramp(delta, step);
    let mut acc = czero::<T>();
    for (ell, &phase) in seq.phases().iter().enumerate() {
        let start = step * real::<T>(ell as f64);
        acc = acc + cis(delta * start - phase);
    }
    // All segments share the same ramp integral; the sum over phasors
    // factors out.
    acc * base
}

/// `|delta| * |alpha~(delta)|`, the dimensionless closure magnitude.
/// Degenerates to zero at `delta = 0`, where the raw residual is the
/// meaningful quantity.
pub fn normalized_closure<T: Real>(seq: &PhaseSequence<T>, delta: T) -> T {
    delta.abs() * closure_residual(seq, delta).norm()
}

/// Partial spectral weight `Int_0^t e^{i delta s} r(s) ds` for any
/// `t >= 0`; constant after the sequence ends.
pub fn partial_closure<T: Real>(seq: &PhaseSequence<T>, delta: T, t: T) -> Complex<T> {
    let step = seq.step_duration();
    let total = seq.total_duration();
    let t = t.min(total).max(T::zero());
    let full_segments = (t / step).floor();
    let ell = full_segments
        .to_usize()
        .unwrap_or(0)
        .min(seq.segment_count());
    let mut acc = czero::<T>();
    for (m, &phase) in seq.phases()[..ell].iter().enumerate() {
        acc = acc + segment_integral(delta, step, phase, m);
    }
    if ell < seq.segment_count() {
        let u = t - step * real::<T>(ell as f64);
        if u > T::zero() {
            acc = acc + partial_segment_integral(delta, step, seq.phases()[ell], ell, u);
        }
    }
    acc
}

/// Sampled phase-space trajectory of one mode.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    /// Sample times, seconds; starts at 0 and ends at the sequence end.
    pub times: Vec<T>,
    /// `alpha(t)` without coupling prefactor, seconds.
    pub values: Vec<Complex<T>>,
}

impl<T: Real> Trajectory<T> {
    /// The same trajectory scaled by a coupling `f`, e.g. one qubit's
    /// `f_k^mu` to express the physical displacement.
    pub fn scaled(&self, f: Complex<T>) -> Vec<Complex<T>> {
        self.values.iter().map(|&a| a * f).collect()
    }
}

/// Samples `alpha(t)` on a uniform grid of `samples_per_segment` points
/// per segment (plus the starting point), by running partial sums, not
/// by stepping an ODE.
pub fn trajectory<T: Real>(
    seq: &PhaseSequence<T>,
    delta: T,
    samples_per_segment: usize,
) -> Trajectory<T> {
    let spp = samples_per_segment.max(1);
    let step = seq.step_duration();
    let mut times = Vec::with_capacity(seq.segment_count() * spp + 1);
    let mut values = Vec::with_capacity(seq.segment_count() * spp + 1);
    times.push(T::zero());
    values.push(czero::<T>());
    let mut prefix = czero::<T>();
    for (ell, &phase) in seq.phases().iter().enumerate() {
        let start = step * real::<T>(ell as f64);
        for j in 1..=spp {
            let u = step * real::<T>(j as f64) / real::<T>(spp as f64);
            times.push(start + u);
            values.push(prefix + partial_segment_integral(delta, step, phase, ell, u));
        }
        prefix = prefix + segment_integral(delta, step, phase, ell);
    }
    Trajectory { times, values }
}

/// Power moments `J_m = Int_0^tau_s u^m e^{i delta u} du` for
/// `m = 0 .. max_degree`, by upward recurrence, with a series fallback
/// when `|delta tau_s|` is too small for the recurrence to be stable.
pub fn power_moments<T: Real>(delta: T, step: T, max_degree: usize) -> Vec<Complex<T>> {
    let x = delta * step;
    let mut out = Vec::with_capacity(max_degree + 1);
    if x.abs() < real::<T>(0.5) {
        // J_m = tau^{m+1} sum_r (i x)^r / (r! (m + r + 1))
        let ix = Complex::new(T::zero(), x);
        for m in 0..=max_degree {
            let mut term = Complex::new(T::one(), T::zero()); // (i x)^r / r!
            let mut acc = term / real::<T>((m + 1) as f64);
            for r in 1..60 {
                term = term * ix / real::<T>(r as f64);
                let contrib = term / real::<T>((m + r + 1) as f64);
                acc = acc + contrib;
                if contrib.norm() <= acc.norm() * T::epsilon() {
                    break;
                }
            }
            out.push(acc * step.powi(m as i32 + 1));
        }
    } else {
        let idelta = Complex::new(T::zero(), delta);
        let eix = cis(x);
        let mut jm = (eix - Complex::new(T::one(), T::zero())) / idelta;
        out.push(jm);
        for m in 1..=max_degree {
            jm = (eix * step.powi(m as i32) - jm * real::<T>(m as f64)) / idelta;
            out.push(jm);
        }
    }
    out
}

/// Residual of the sequence against the polynomial weight
/// `w(t) = sum_j beta_j t^j`:
///
/// ```text
/// Int_0^tau w(t) e^{i delta t} r(t) dt
/// ```
///
/// An order-`p+1` sequence built by `p+1` doublings at one detuning
/// nulls this for every polynomial of degree `<= p` at that detuning.
pub fn weighted_residual<T: Real>(
    seq: &PhaseSequence<T>,
    delta: T,
    coefficients: &[T],
) -> Complex<T> {
    if coefficients.is_empty() {
        return czero::<T>();
    }
    let degree = coefficients.len() - 1;
    let step = seq.step_duration();
    let moments = power_moments(delta, step, degree);
    let binom = pascal(degree);
    let mut acc = czero::<T>();
    for (ell, &phase) in seq.phases().iter().enumerate() {
        let a = step * real::<T>(ell as f64);
        // Int over segment of t^j e^{i delta t} dt
        //   = e^{i delta a} sum_m C(j, m) a^{j-m} J_m.
        let front = cis(delta * a - phase);
        for (j, &beta) in coefficients.iter().enumerate() {
            if beta == T::zero() {
                continue;
            }
            let mut inner = czero::<T>();
            let mut a_pow = T::one(); // a^{j-m} built from the top down
            for m in (0..=j).rev() {
                inner = inner + moments[m] * real::<T>(binom[j][m]) * a_pow;
                a_pow = a_pow * a;
            }
            acc = acc + front * inner * beta;
        }
    }
    acc
}

/// Scale for calling a weighted residual "relatively" small: the
/// integral of `|w|` over the window assuming no cancellation,
/// `sum_j |beta_j| tau^{j+1} / (j + 1)`.
pub fn weighted_residual_scale<T: Real>(seq: &PhaseSequence<T>, coefficients: &[T]) -> T {
    let tau = seq.total_duration();
    let mut acc = T::zero();
    let mut tau_pow = tau;
    for (j, &beta) in coefficients.iter().enumerate() {
        acc = acc + beta.abs() * tau_pow / real::<T>((j + 1) as f64);
        tau_pow = tau_pow * tau;
    }
    acc
}

fn pascal(degree: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(degree + 1);
    for j in 0..=degree {
        let mut row = vec![1.0; j + 1];
        for m in 1..j {
            row[m] = rows[j - 1][m - 1] + rows[j - 1][m];
        }
        rows.push(row);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhaseSequence;
    use crate::quad;
    use num_complex::Complex;
    use std::f64::consts::PI;

    fn seq(step: f64, phases_pi: &[f64]) -> PhaseSequence<f64> {
        PhaseSequence::new(step, phases_pi.iter().map(|p| p * PI).collect()).unwrap()
    }

    #[test]
    fn segment_integral_matches_quadrature() {
        let delta = 2.0 * PI * 43.21e3;
        let step = 1.3e-5;
        let phase = 0.37 * PI;
        for ell in [0usize, 1, 5] {
            let closed = segment_integral(delta, step, phase, ell);
            let a = step * ell as f64;
            let brute = quad::adaptive(
                |t: f64| cis(delta * t - phase),
                a,
                a + step,
                1e-13,
                1e-20,
                200,
            );
            assert!(
                (closed - brute.value).norm() < 1e-12 * step,
                "ell = {ell}: {closed} vs {}",
                brute.value
            );
        }
    }

    #[test]
    fn small_x_kernel_is_smooth_across_threshold() {
        // phi0 must agree on both sides of the switch point.
        for &x in &[0.1249f64, 0.1251, 1e-7, 1e-12, -0.1249, -0.1251] {
            let series = phi0(x);
            let closed = (cis(x) - Complex::new(1.0, 0.0)) / Complex::new(0.0, x);
            assert!(
                (series - closed).norm() < 1e-9,
                "x = {x}: {series} vs {closed}"
            );
        }
        // Exactly zero: the kernel is 1.
        assert_eq!(phi0(0.0f64), Complex::new(1.0, 0.0));
    }

    #[test]
    fn zero_detuning_residual_is_signed_time() {
        // r(t) = +-1 pattern integrates to (count_+ - count_-) tau_s.
        let s = seq(2.0e-6, &[0.0, 1.0, 1.0, 0.0]);
        let res = closure_residual(&s, 0.0);
        assert!((res - Complex::new(0.0, 0.0)).norm() < 1e-18);
        let s2 = seq(2.0e-6, &[0.0, 1.0, 1.0]);
        let res2 = closure_residual(&s2, 0.0);
        assert!((res2.re + 2.0e-6).abs() < 1e-18);
        assert!(res2.im.abs() < 1e-18);
    }

    #[test]
    fn closure_residual_matches_quadrature() {
        let s = seq(1.1e-5, &[0.0, 0.3, 1.2, 0.7]);
        for &delta in &[2.0 * PI * 33.0e3, -2.0 * PI * 12.5e3, 97.0] {
            let closed = closure_residual(&s, delta);
            let brute = quad::adaptive_split(
                &mut |t: f64| cis(delta * t) * s.modulation(t.min(s.total_duration() - 1e-16)),
                &[0.0, 1.1e-5, 2.2e-5, 3.3e-5, 4.4e-5],
                1e-13,
                1e-22,
                400,
            );
            assert!(
                (closed - brute.value).norm() < 1e-11 * s.total_duration(),
                "delta = {delta}"
            );
        }
    }

    #[test]
    fn trajectory_endpoint_is_residual_and_single_segment_arc() {
        let delta = 2.0 * PI * 50.0e3;
        let step = 1.0 / 50.0e3; // delta tau_s = 2 pi: a full circle back to 0
        let s = seq(step, &[0.0]);
        let tr = trajectory(&s, delta, 64);
        assert_eq!(tr.times.len(), 65);
        let end = tr.values.last().unwrap();
        assert!(end.norm() < 1e-18 * 1e5, "open endpoint {end}");
        // Halfway around, the arc reaches its maximum |(e^{i pi} - 1)/delta|.
        let mid = tr.values[32];
        assert!((mid.norm() - 2.0 / delta).abs() < 1e-12);
        let full = closure_residual(&s, delta);
        assert!((end - full).norm() < 1e-20);
    }

    #[test]
    fn trajectory_matches_partial_closure_pointwise() {
        let s = seq(7.0e-6, &[0.0, 0.25, 1.5]);
        let delta = 2.0 * PI * 21.0e3;
        let tr = trajectory(&s, delta, 7);
        for (&t, &v) in tr.times.iter().zip(&tr.values) {
            let p = partial_closure(&s, delta, t);
            assert!((p - v).norm() < 1e-17);
        }
    }

    #[test]
    fn power_moments_match_quadrature_across_regimes() {
        for &(delta, step) in &[
            (2.0 * PI * 47.0e3, 1.0e-5f64), // x ~ 3
            (2.0e3, 1.0e-5),                // x = 0.02: series branch
            (0.0, 1.0e-5),                  // exact polynomial moments
        ] {
            let moments = power_moments(delta, step, 5);
            for (m, &jm) in moments.iter().enumerate() {
                let brute = quad::adaptive(
                    |u: f64| cis(delta * u) * u.powi(m as i32),
                    0.0,
                    step,
                    1e-13,
                    1e-25,
                    200,
                );
                let scale = step.powi(m as i32 + 1) / (m as f64 + 1.0);
                assert!(
                    (jm - brute.value).norm() < 1e-12 * scale,
                    "delta = {delta}, m = {m}: {jm} vs {}",
                    brute.value
                );
            }
        }
    }

    #[test]
    fn weighted_residual_matches_quadrature() {
        let s = seq(9.0e-6, &[0.0, 0.8, 1.1, 0.4]);
        let delta = 2.0 * PI * 17.0e3;
        let beta = [0.7, -1.3e5, 4.0e9, 0.0, 2.2e18];
        let closed = weighted_residual(&s, delta, &beta);
        let poly = |t: f64| {
            let mut acc = 0.0;
            let mut tp = 1.0;
            for &b in &beta {
                acc += b * tp;
                tp *= t;
            }
            acc
        };
        let edges: Vec<f64> = (0..=4).map(|i| 9.0e-6 * i as f64).collect();
        let brute = quad::adaptive_split(
            &mut |t: f64| {
                cis(delta * t) * s.modulation(t.min(s.total_duration() - 1e-16)) * poly(t)
            },
            &edges,
            1e-13,
            1e-24,
            600,
        );
        let scale = weighted_residual_scale(&s, &beta);
        assert!(
            (closed - brute.value).norm() < 1e-11 * scale,
            "{closed} vs {}",
            brute.value
        );
    }

    #[test]
    fn weighted_residual_of_constant_is_closure() {
        let s = seq(3.0e-6, &[0.0, 0.5, 1.25]);
        let delta = 1.0e5;
        let a = weighted_residual(&s, delta, &[1.0]);
        let b = closure_residual(&s, delta);
        assert!((a - b).norm() < 1e-18);
    }
}
