//! Discrete phase-shift sequences that decouple driven qubits from a
//! set of oscillator modes, and the machinery to predict what the
//! resulting gate does.
//!
//! The model: a pair of qubits shares a bichromatic drive whose phase
//! jumps between `L` equal segments of length `tau_s`. Each oscillator
//! mode `k` sees the modulation `r(t) = e^{-i phi_l}` through its
//! detuning `delta_k`; its phase-space trajectory is the running
//! integral of `e^{i delta_k t} r(t)`. Sequences built here drive that
//! integral back to zero for every listed mode (closure), while the
//! enclosed area produces the entangling phase.
//!
//! Module map:
//!
//! - [`model`]: mode tables, drives, sequences, states, spectra, config
//!   parsing.
//! - [`seqsynth`]: closure-preserving sequence doubling and its closed
//!   form.
//! - [`phasespace`]: trajectories, closure residuals, polynomial-weight
//!   residual moments.
//! - [`entangler`]: entangling phase and Rabi-rate calibration.
//! - [`noisekit`]: filter functions, spectral purity loss, noise
//!   synthesis, Monte Carlo.
//! - [`fockoracle`]: truncated number-state propagator used as an
//!   independent reference.
//! - [`quad`]: adaptive Gauss-Kronrod and fixed Gauss-Legendre rules.
//!
//! Everything numeric is generic over the scalar (see [`scalar::Real`]);
//! the aliases below fix `f64` for ordinary use.

pub mod entangler;
pub mod fockoracle;
pub mod model;
pub mod noisekit;
pub mod phasespace;
pub mod quad;
pub mod scalar;
pub mod seqsynth;

pub use scalar::Real;

/// `f64` aliases for the common working types.
pub type ModeSpec64 = model::ModeSpec<f64>;
pub type ModeTable64 = model::ModeTable<f64>;
pub type DriveSpec64 = model::DriveSpec<f64>;
pub type PhaseSequence64 = model::PhaseSequence<f64>;
pub type ConcatRecipe64 = model::ConcatRecipe<f64>;
pub type SequenceSpec64 = model::SequenceSpec<f64>;
pub type QubitPairState64 = model::QubitPairState<f64>;
pub type Spectrum64 = model::Spectrum<f64>;
pub type GateConfig64 = model::GateConfig<f64>;
pub type NoiseRealization64 = noisekit::NoiseRealization<f64>;
pub type McEstimate64 = noisekit::McEstimate<f64>;
pub type SpectralPurity64 = noisekit::SpectralPurity<f64>;
pub type ReducedQubitState64 = fockoracle::ReducedQubitState<f64>;
