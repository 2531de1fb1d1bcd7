//! Adaptive density deconvolution.
//!
//! Observations `Z_i = X_i + eps_i` are given, where the `X_i` form a
//! stationary (possibly dependent) sequence with unknown density `g` and the
//! noise `eps_i` has a known law. The crate estimates `g` by projection on the
//! Shannon (sinc) spaces `S_m` and selects the resolution `m` by penalized
//! contrast minimization.
//!
//! Module map:
//!
//! * [`shannon_basis`]: the sinc system `phi_{m,j}` and its Fourier side.
//! * [`noise_models`]: known error laws, `Delta(m)`, `Gamma(m)` and friends.
//! * [`target_densities`]: simulation ground truths with exact Fourier transforms.
//! * [`processes`]: stationary generators with dependence coefficient bounds.
//! * [`estimator`]: coefficients, contrast, penalties and model selection.
//! * [`harness`]: Monte Carlo risk experiments.
//! * [`config`] and [`io`]: configuration files, datasets and reports.

pub mod config;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod io;
pub mod noise_models;
pub mod processes;
pub mod quadrature;
pub mod rng;
pub mod shannon_basis;
pub mod special;
pub mod stats;
pub mod target_densities;

pub use error::{DeconvError, Result};
pub use estimator::{
    contrast_value, evaluate, fit_coefficients, fit_coefficients_direct, mise_against_truth,
    select_model, u_star_kernel, KnPolicy, PenaltyConfig, PenaltyVariant, ProjectionEstimate,
    SelectionResult,
};
pub use noise_models::{NoiseModel, NoiseSmoothness};
pub use processes::DependentProcess;
pub use quadrature::QuadratureSpec;
pub use target_densities::{SmoothnessClass, TargetDensity};

/// Library version recorded in reports and manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
