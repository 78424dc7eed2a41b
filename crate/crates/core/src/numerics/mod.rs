//! Shared numerical kernels.

pub mod fit;
pub mod linalg;
pub mod rng;
pub mod spectrum;

pub use fit::{least_squares_fit, least_squares_fit_with, polyfit, polyval, FitError, FitOptions, FitResult};
pub use linalg::{
    complexify, hermitian_eigenvalues, matrix_exp, matrix_exp_real, matrix_log_principal, norm2, CMatrix,
    LinalgError, RMatrix, C64,
};
pub use rng::{seeded_rng, standard_normal, stream_id, uniform, RngStream};
pub use spectrum::{periodogram_psd, RealSeries, SpectrumError, SpectrumEstimate};
