//! Time-correlated process tomography: windowed channel estimates over long
//! noise realizations, spectra of the resulting error generators, the
//! static/fluctuating split, fidelity benchmarks and the compressed model.

mod analysis;
mod compressed;
mod qpt;

use thiserror::Error;

use crate::channels::ChannelError;
use crate::dynamics::DynamicsError;
use crate::noise::NoiseError;
use crate::numerics::{FitError, LinalgError, SpectrumError};

pub use analysis::{
    extract_static_split, fidelity_benchmarks, generator_psd, ElementSelector, FidelityBenchmarks, StaticNoiseSplit,
};
pub use compressed::{
    fit_compressed_model, model_labels, sample_compressed_generator, sample_compressed_unitary, split_coefficients,
    stochastic_ratio, sweep_t2_star, CoefficientModel, CoefficientPoint, CompressedFit, CompressedGateModel,
    RSharing, SweepPoint, CZ_LABELS, SINGLE_QUBIT_LABELS,
};
pub use qpt::{run_windowed_qpt, sample_ptm_shots, GeneratorSeries, QptRunConfig, RealizationSeries};

#[derive(Debug, Error)]
pub enum QptError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("realization {realization}, window {window}: {source}")]
    Window { realization: usize, window: usize, source: ChannelError },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("bad selector: {0}")]
    Selector(String),
    #[error("gate `{0}` not in model")]
    UnknownGate(String),
}
