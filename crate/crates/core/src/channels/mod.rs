//! Channel algebra in the normalized Pauli transfer matrix representation.
//!
//! Basis order is lexicographic over {I,X,Y,Z}^n with qubit 1 leftmost, and
//! `M_{μν} = Tr[P_μ Φ(P_ν)]/d`. Hamiltonian rates are normalized so that
//! `exp(h·H_P)` is conjugation by `exp(−ihP)`.

mod generators;
pub mod pauli;
mod ptm;

use thiserror::Error;

use crate::numerics::LinalgError;

pub use generators::{
    decompose, generator_basis, generator_from_rates, GeneratorBasis, GeneratorDecomposition, GeneratorKind,
};
pub use pauli::{pauli_index, pauli_label, pauli_labels, pauli_matrix};
pub use ptm::{
    average_gate_fidelity, channel_from_ensemble, error_channel, error_generator, ptm_from_unitary,
    superop_from_map, uniform_mixture, ErrorGenerator, PauliTransferMatrix, CP_TOLERANCE, TP_TOLERANCE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("input is not unitary (‖U†U − I‖ = {0:.2e})")]
    NotUnitary(f64),
    #[error("weights do not match the ensemble: {0}")]
    WeightMismatch(String),
    #[error("unsupported qubit count or dimension {0}")]
    UnsupportedQubits(usize),
    #[error("channel dimensions differ")]
    DimensionMismatch,
    #[error("ideal channel is singular")]
    Singular,
    #[error(transparent)]
    Log(#[from] LinalgError),
    #[error("channel logarithm is not real (imaginary norm {0:.2e})")]
    ComplexLog(f64),
    #[error("malformed channel data: {0}")]
    Malformed(String),
}
