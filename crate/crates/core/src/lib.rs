//! Time-correlated process tomography for noisy spin-qubit gates.
//!
//! The crate covers the whole chain from a microscopic noise model to circuit
//! level benchmarks:
//!
//! * [`noise`] synthesizes 1/f charge-noise trajectories and quasistatic
//!   nuclear shifts and maps coherence times to coupling strengths.
//! * [`dynamics`] integrates the rotating-frame two-spin Hamiltonian under
//!   noisy square pulses and runs Ramsey, Rabi, echo and CPMG experiments.
//! * [`channels`] handles Pauli transfer matrices, error generators and their
//!   Hamiltonian/stochastic decomposition.
//! * [`tcqpt`] estimates windowed error generators over long noisy gate
//!   sequences, their spectra, static/fluctuating splits and fidelity
//!   benchmarks, and fits a compressed quasistatic gate model.
//! * [`rb`] runs two-qubit (interleaved) randomized benchmarking on the
//!   compressed model.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod dynamics;
pub mod noise;
pub mod numerics;
pub mod rb;
pub mod tcqpt;
