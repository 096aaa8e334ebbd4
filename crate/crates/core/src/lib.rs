//! Grid-based Bayesian filtering with a quantum diffusion step.
//!
//! The prediction step of a grid-based filter convolves the advected density
//! with the process-noise density. Here that convolution is carried out by
//! encoding both densities as amplitudes of two quantum registers and adding
//! the noise register into the state register with a QFT adder, simulated on
//! a dense statevector. A classical circular-convolution oracle, a coin-flip
//! quantum random walk baseline and resource accounting sit alongside.

pub mod cases;
pub mod circuit;
pub mod diffusion;
pub mod error;
pub mod filter;
pub mod grid;
pub mod prep;
pub mod statevector;

pub use cases::{compare_methods, evaluate_case, run_case, CaseSpec, RunOptions};
pub use circuit::{resource_report, Circuit, Gate, QftOptions, ResourceReport};
pub use diffusion::{
    binomial_kernel_density, diffuse_qft, diffuse_qrw, draper_adder, qrw_step, wraparound_mass, DiffusionOptions,
    DiffusionResult, ItemizedResources, Method,
};
pub use error::{Error, Result};
pub use grid::{delta_density, discretize_gaussian, tabulated_density, tv_distance, GridAxis, PointMassDensity};
pub use statevector::{load_product_state, RegisterLayout, RegisterRole, ShotHistogram, Statevector};
