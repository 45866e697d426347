//! Sequence synthesis by recursive doubling.
//!
//! One doubling step turns a sequence `r` of duration `tau'` into
//!
//! ```text
//! (R_delta r)(t) = r(t) + e^{-i (delta tau' - pi)} r(t - tau')
//! ```
//!
//! whose spectral weight at frequency `x` is the old weight times
//! `1 - e^{i (x - delta) tau'}`: the new sequence inherits every zero of
//! the old one and gains a zero at `x = delta`. Folding over a list of
//! detunings therefore closes every listed mode, and repeats of the same
//! detuning raise the order of its zero.
//!
//! The fold has a closed form. After folding modes `delta_1 .. delta_M`
//! (first applied first), segment `l` with binary digits `eps_j` and
//! Hamming weight `s` carries
//!
//! ```text
//! phi_l = sum_j eps_j(l) 2^j delta_{j+1} tau_s  -  s(l) pi
//! ```
//!
//! All detunings zero reduces this to the Thue-Morse sign pattern
//! `e^{-i phi_l} = (-1)^{s(l)}`.

use crate::model::{ConcatRecipe, ModeSpec, ModeTable, ModelError, PhaseSequence};
use crate::scalar::{real, Real};

/// Largest mode count `synth_full` accepts; `2^M` segments must stay
/// allocatable.
const MAX_FULL_MODES: usize = 24;

/// Segment index with binary-digit access, as used by the closed-form
/// phase rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryIndex(pub usize);

impl BinaryIndex {
    /// Digit `eps_j` of the index, LSB first.
    #[inline]
    pub fn digit(self, j: usize) -> usize {
        (self.0 >> j) & 1
    }

    /// Hamming weight `s(l)`, the number of ones.
    #[inline]
    pub fn hamming_weight(self) -> usize {
        self.0.count_ones() as usize
    }
}

/// One doubling step: the returned sequence is `seq` followed by a copy
/// with every phase incremented by `delta * duration(seq) - pi`.
pub fn apply_r<T: Real>(seq: &PhaseSequence<T>, detuning: T) -> PhaseSequence<T> {
    let shift = detuning * seq.total_duration() - T::PI();
    let mut phases = Vec::with_capacity(2 * seq.segment_count());
    phases.extend_from_slice(seq.phases());
    phases.extend(seq.phases().iter().map(|&p| p + shift));
    PhaseSequence::new(seq.step_duration(), phases)
        .expect("doubling a valid sequence stays valid")
}

/// Closed-form phase of segment `ell` after folding `detunings` in order.
pub fn binary_phase<T: Real>(ell: BinaryIndex, detunings: &[T], step: T) -> T {
    let mut phi = -real::<T>(ell.hamming_weight() as f64) * T::PI();
    for (j, &delta) in detunings.iter().enumerate() {
        if ell.digit(j) == 1 {
            phi = phi + real::<T>((1usize << j) as f64) * delta * step;
        }
    }
    phi
}

/// Synthesizes the `2^M`-segment sequence closing every mode of the
/// table, by the closed-form phase rule; identical to folding `apply_r`
/// over the table in order.
pub fn synth_full<T: Real>(modes: &ModeTable<T>, step: T) -> Result<PhaseSequence<T>, ModelError> {
    let detunings: Vec<T> = modes.iter().map(|m| m.detuning).collect();
    synth_over_detunings(&detunings, step)
}

fn synth_over_detunings<T: Real>(detunings: &[T], step: T) -> Result<PhaseSequence<T>, ModelError> {
    if detunings.len() > MAX_FULL_MODES {
        return Err(ModelError::OutOfRange {
            field: "mode count".into(),
            requirement: "at most 24 modes per synthesized sequence",
            value: detunings.len().to_string(),
        });
    }
    let count = 1usize << detunings.len();
    let phases = (0..count)
        .map(|ell| binary_phase(BinaryIndex(ell), detunings, step))
        .collect();
    PhaseSequence::new(step, phases)
}

/// Synthesizes the sequence of a recipe: fold `apply_r` over the listed
/// modes, first index applied first (innermost doubling). Repeats raise
/// that mode's closure order. An empty recipe yields the one-segment
/// seed.
pub fn synth_recipe<T: Real>(
    recipe: &ConcatRecipe<T>,
    modes: &ModeTable<T>,
) -> Result<PhaseSequence<T>, ModelError> {
    recipe.validate(modes)?;
    if recipe.mode_indices.len() > MAX_FULL_MODES {
        return Err(ModelError::OutOfRange {
            field: "recipe length".into(),
            requirement: "at most 24 doublings",
            value: recipe.mode_indices.len().to_string(),
        });
    }
    let mut seq = PhaseSequence::seed(recipe.step_duration)?;
    for &k in &recipe.mode_indices {
        seq = apply_r(&seq, modes.get(k)?.detuning);
    }
    Ok(seq)
}

/// Resolves a sequence spec to a concrete phase table.
pub fn resolve_sequence<T: Real>(
    spec: &crate::model::SequenceSpec<T>,
    modes: &ModeTable<T>,
) -> Result<PhaseSequence<T>, ModelError> {
    match spec {
        crate::model::SequenceSpec::Explicit(seq) => Ok(seq.clone()),
        crate::model::SequenceSpec::Recipe(recipe) => synth_recipe(recipe, modes),
    }
}

/// Modes split by whether a single step already closes them.
#[derive(Debug, Clone)]
pub struct CommensurateSplit<'a, T> {
    /// `delta_k tau_s` is a nonzero integer multiple of `2 pi` within
    /// tolerance: every segment closes these on its own and doubling
    /// against them is unnecessary.
    pub commensurate: Vec<&'a ModeSpec<T>>,
    /// Everything else; these need synthesis.
    pub requiring_synthesis: Vec<&'a ModeSpec<T>>,
}

/// Default tolerance on `delta tau_s / 2 pi` distance to an integer.
pub fn default_commensurate_tol<T: Real>() -> T {
    real::<T>(1e-9)
}

/// Partitions the table by single-step closure at base step `step`.
///
/// A zero-detuning mode is never commensurate: its one-segment spectral
/// weight is `tau_s`, not zero.
pub fn reduce_commensurate<'a, T: Real>(
    modes: &'a ModeTable<T>,
    step: T,
    tol: T,
) -> CommensurateSplit<'a, T> {
    let two_pi = T::PI() + T::PI();
    let mut commensurate = Vec::new();
    let mut requiring_synthesis = Vec::new();
    for mode in modes.iter() {
        let turns = mode.detuning * step / two_pi;
        let nearest = turns.round();
        if nearest != T::zero() && (turns - nearest).abs() <= tol {
            commensurate.push(mode);
        } else {
            requiring_synthesis.push(mode);
        }
    }
    CommensurateSplit {
        commensurate,
        requiring_synthesis,
    }
}
