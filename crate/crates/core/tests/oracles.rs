//! Cross-checks between independent computational routes: the analytic
//! entangling phase against a pointwise double quadrature, and the
//! coherent-state purity arithmetic against the Fock propagator.

use num_complex::Complex;
use phasegate_core::entangler::{entangling_phase, entangling_phase_quadrature};
use phasegate_core::fockoracle::{extract_entangling_phase, propagate};
use phasegate_core::model::{
    ConcatRecipe, DriveSpec, ModeSpec, ModeTable, OracleOptions, PhaseSequence, QubitPairState,
    Spectrum, SpectrumShape, SpinAxis,
};
use phasegate_core::noisekit::{generate_noise, per_realization_purity};
use phasegate_core::quad::{gauss_legendre, gl_fixed};
use phasegate_core::seqsynth::synth_recipe;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Entangling phase by brute nested quadrature. Uses only the pointwise
/// modulation r(t): the inner integral is re-evaluated from scratch for
/// every outer node, so nothing is shared with the analytic route.
fn brute_phase(
    seq: &PhaseSequence<f64>,
    modes: &ModeTable<f64>,
    drive: &DriveSpec<f64>,
) -> f64 {
    let rule = gauss_legendre::<f64>(24);
    let step = seq.step_duration();
    let segments = seq.segment_count();
    let mut total = 0.0;
    for mode in modes.iter() {
        let delta = mode.detuning;
        let ff = drive.rabi_rate * drive.rabi_rate * mode.couplings[0] * mode.couplings[1] / 4.0;
        let inner = |t: f64| -> Complex<f64> {
            // integral of e^{-i delta t'} r^*(t') from 0 to t
            let full_segments = (t / step).floor() as usize;
            let mut acc = Complex::new(0.0, 0.0);
            for l in 0..full_segments.min(segments) {
                let a = l as f64 * step;
                acc += gl_fixed(&rule, |u: f64| {
                    Complex::from_polar(1.0, -delta * u) * seq.modulation(u).conj()
                }, a, a + step);
            }
            let a = full_segments as f64 * step;
            if t > a {
                acc += gl_fixed(&rule, |u: f64| {
                    Complex::from_polar(1.0, -delta * u) * seq.modulation(u).conj()
                }, a, t);
            }
            acc
        };
        let mut mode_sum = Complex::new(0.0, 0.0);
        for l in 0..segments {
            let a = l as f64 * step;
            mode_sum += gl_fixed(&rule, |t: f64| {
                Complex::from_polar(1.0, delta * t) * seq.modulation(t) * inner(t)
            }, a, a + step);
        }
        total += ff * mode_sum.im;
    }
    total
}

#[test]
fn entangling_phase_survives_double_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..10 {
        let n_modes = rng.gen_range(1..=3usize);
        let modes = ModeTable::new(
            (0..n_modes)
                .map(|i| ModeSpec {
                    index: i + 1,
                    detuning: {
                        let mag: f64 = rng.gen_range(3.0e4..4.0e5);
                        if rng.gen() { mag } else { -mag }
                    },
                    mode_frequency: 2.0 * PI * 2.0e6,
                    mean_occupation: 0.0,
                    couplings: vec![rng.gen_range(0.02..0.2), rng.gen_range(0.02..0.2)],
                })
                .collect(),
        )
        .unwrap();
        let drive = DriveSpec {
            rabi_rate: 2.0 * PI * rng.gen_range(10.0e3..80.0e3),
            driven_qubits: vec![1, 2],
            spin_axis: SpinAxis::X,
        };
        let n_seg = rng.gen_range(1..=6usize);
        let phases: Vec<f64> = (0..n_seg).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let seq = PhaseSequence::new(rng.gen_range(4.0e-6..2.0e-5), phases).unwrap();

        let closed = entangling_phase(&seq, &modes, &drive, (1, 2)).unwrap().total;
        let semi = entangling_phase_quadrature(&seq, &modes, &drive, (1, 2)).unwrap();
        let brute = brute_phase(&seq, &modes, &drive);
        let scale = closed.abs().max(1e-6);
        assert!(
            (closed - semi).abs() <= 1e-9 * scale,
            "case {case}: closed {closed:.12e} vs semi {semi:.12e}"
        );
        assert!(
            (closed - brute).abs() <= 1e-8 * scale,
            "case {case}: closed {closed:.12e} vs brute {brute:.12e}"
        );
    }
}

fn paper_like_setup() -> (ModeTable<f64>, DriveSpec<f64>, PhaseSequence<f64>) {
    let modes = ModeTable::new(vec![
        ModeSpec {
            index: 1,
            detuning: 2.0 * PI * 52.0e3,
            mode_frequency: 2.0 * PI * 2.1e6,
            mean_occupation: 0.4,
            couplings: vec![0.08, 0.1],
        },
        ModeSpec {
            index: 2,
            detuning: -2.0 * PI * 31.0e3,
            mode_frequency: 2.0 * PI * 1.9e6,
            mean_occupation: 0.2,
            couplings: vec![0.07, -0.09],
        },
    ])
    .unwrap();
    let drive = DriveSpec {
        rabi_rate: 2.0 * PI * 35.0e3,
        driven_qubits: vec![1, 2],
        spin_axis: SpinAxis::X,
    };
    let recipe = ConcatRecipe {
        step_duration: 1.15e-5,
        mode_indices: vec![1, 2],
    };
    let seq = synth_recipe(&recipe, &modes).unwrap();
    (modes, drive, seq)
}

#[test]
fn fock_and_coherent_state_purity_agree_per_realization() {
    let (modes, drive, seq) = paper_like_setup();
    let spectrum = Spectrum {
        scale: 1.5e6,
        shape: SpectrumShape::White {
            cutoff: 2.0 * PI * 22.0e3,
        },
    };
    let n_sub = 512usize;
    let dt = seq.step_duration() / n_sub as f64;
    let states = [
        QubitPairState::from_z_label("11").unwrap(),
        QubitPairState::from_z_label("01").unwrap(),
        QubitPairState::from_x_amplitudes([
            Complex::new(0.5, 0.0),
            Complex::new(0.0, 0.5),
            Complex::new(-0.5, 0.0),
            Complex::new(0.0, -0.5),
        ])
        .unwrap(),
    ];
    for (i, state) in states.iter().enumerate() {
        let noise = generate_noise(&spectrum, seq.total_duration(), dt, 30 + i as u64).unwrap();
        let analytic = per_realization_purity(&seq, &modes, &drive, state, &noise).unwrap();
        let options = OracleOptions {
            cutoff: 40,
            steps_per_segment: n_sub,
            mode_indices: None,
            thermal: true,
        };
        let out = propagate(&seq, &modes, &drive, state, &options, Some(&noise)).unwrap();
        assert!(!out.flagged_unreliable, "state {i}: {out:?}");
        let fock = out.purity_loss();
        assert!(
            (fock - analytic).abs() <= 1e-6,
            "state {i}: fock {fock:.6e} vs analytic {analytic:.6e}"
        );
    }
}

#[test]
fn fock_phase_agrees_on_multimode_sequences() {
    let (modes, drive, seq) = paper_like_setup();
    let state = QubitPairState::from_z_label("11").unwrap();
    let options = OracleOptions {
        cutoff: 24,
        steps_per_segment: 800,
        mode_indices: None,
        thermal: false,
    };
    let out = propagate(&seq, &modes, &drive, &state, &options, None).unwrap();
    assert!(!out.flagged_unreliable);
    let got = extract_entangling_phase(&out, &state).unwrap();
    let expected = entangling_phase(&seq, &modes, &drive, (1, 2)).unwrap().total;
    assert!(
        (got - expected).abs() < 1e-6,
        "oracle {got:.9} vs formula {expected:.9}"
    );
}
