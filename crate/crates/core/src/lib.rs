//! Lossy SU(1,1) interferometers in the single-photon-pair regime.
//!
//! Three engines describe the same interferometer and check one another:
//!
//! - [`analytic`]: closed-form low-gain click probabilities, visibilities and
//!   click-detection Fisher information.
//! - [`bogoliubov`]: the exact 6×6 Bogoliubov transfer matrix and the exact
//!   moments `⟨n_a⟩`, `⟨n_b⟩`, `⟨n_a n_b⟩` for vacuum input at any gain.
//! - [`fock`]: a truncated two-mode density-matrix simulation with loss
//!   channels and click-detector POVMs, including multiphoton effects.
//!
//! [`comparison`] holds the classical SU(2) reference and the advantage
//! logic, [`calibration`] the characterisation workflow, and [`cli`] the
//! command-line surface built on top of everything else.

pub mod analytic;
pub mod bogoliubov;
pub mod calibration;
pub mod cli;
pub mod comparison;
pub mod fock;
pub mod model;
pub mod optimize;
pub mod validation;

pub use model::{
    validate, ClickProbabilities, Engine, FisherReport, InterferometerConfig, ModelError,
    Observable, ValidatedConfig, VisibilityTriple,
};
