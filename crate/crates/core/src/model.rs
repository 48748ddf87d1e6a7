//! Domain types shared by every engine.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Parameter names of [`InterferometerConfig`] in declaration order, followed
/// by the extra SU(2) parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    G1,
    G2,
    TA,
    TB,
    EtaA,
    EtaB,
    Phi,
    Theta,
    AlphaSq,
    R,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Field::G1 => "g1",
            Field::G2 => "g2",
            Field::TA => "t_a",
            Field::TB => "t_b",
            Field::EtaA => "eta_a",
            Field::EtaB => "eta_b",
            Field::Phi => "phi",
            Field::Theta => "theta",
            Field::AlphaSq => "alpha_sq",
            Field::R => "r",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter `{field}` out of range: {value}")]
    OutOfRange { field: Field, value: f64 },
}

/// Full parameter set of a lossy SU(1,1) interferometer.
///
/// Stage 1 generates pairs in modes A and B with gain `g1`. Mode A picks up
/// the phase `phi`, both modes are attenuated by the internal transmissions
/// `t_a`, `t_b`, stage 2 (pump phase `theta`) adds pairs with gain `g2`, and
/// the detectors see the outputs through efficiencies `eta_a`, `eta_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerConfig {
    pub g1: f64,
    pub g2: f64,
    pub t_a: f64,
    pub t_b: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub theta: f64,
}

impl InterferometerConfig {
    /// Lossless interferometer with perfect detectors.
    pub fn lossless(g1: f64, g2: f64) -> Self {
        Self {
            g1,
            g2,
            t_a: 1.0,
            t_b: 1.0,
            eta_a: 1.0,
            eta_b: 1.0,
            phi: 0.0,
            theta: 0.0,
        }
    }

    pub fn with_gains(mut self, g1: f64, g2: f64) -> Self {
        self.g1 = g1;
        self.g2 = g2;
        self
    }

    pub fn with_transmissions(mut self, t_a: f64, t_b: f64) -> Self {
        self.t_a = t_a;
        self.t_b = t_b;
        self
    }

    pub fn with_efficiencies(mut self, eta_a: f64, eta_b: f64) -> Self {
        self.eta_a = eta_a;
        self.eta_b = eta_b;
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    /// Largest detection efficiency of the two arms.
    pub fn eta_max(&self) -> f64 {
        self.eta_a.max(self.eta_b)
    }
}

/// A configuration that passed [`validate`]. Phases are reduced to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidatedConfig(InterferometerConfig);

impl ValidatedConfig {
    pub fn get(&self) -> &InterferometerConfig {
        &self.0
    }

    pub fn into_inner(self) -> InterferometerConfig {
        self.0
    }

    /// Same configuration at another phase, without revalidating the rest.
    pub fn at_phase(&self, phi: f64) -> Result<Self, ModelError> {
        validate(self.0.with_phi(phi))
    }

    /// Same configuration with another second-stage gain.
    pub fn with_g2(&self, g2: f64) -> Result<Self, ModelError> {
        let mut cfg = self.0;
        cfg.g2 = g2;
        validate(cfg)
    }
}

impl Deref for ValidatedConfig {
    type Target = InterferometerConfig;

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

/// Reduce an angle to `[0, 2π)`.
pub fn reduce_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

pub(crate) fn check_gain(field: Field, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::OutOfRange { field, value })
    }
}

pub(crate) fn check_unit(field: Field, value: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::OutOfRange { field, value })
    }
}

pub(crate) fn check_phase(field: Field, value: f64) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::OutOfRange { field, value })
    }
}

/// Check every bound, reporting the first offending field in declaration
/// order.
pub fn validate(config: InterferometerConfig) -> Result<ValidatedConfig, ModelError> {
    check_gain(Field::G1, config.g1)?;
    check_gain(Field::G2, config.g2)?;
    check_unit(Field::TA, config.t_a)?;
    check_unit(Field::TB, config.t_b)?;
    check_unit(Field::EtaA, config.eta_a)?;
    check_unit(Field::EtaB, config.eta_b)?;
    check_phase(Field::Phi, config.phi)?;
    check_phase(Field::Theta, config.theta)?;
    Ok(ValidatedConfig(InterferometerConfig {
        phi: reduce_phase(config.phi),
        theta: reduce_phase(config.theta),
        ..config
    }))
}

/// Which engine produced a set of click probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Analytic,
    BogoliubovLowgain,
    Fock,
}

/// Detection event whose click statistics carry the phase information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    SinglesA,
    SinglesB,
    Coincidences,
}

impl Observable {
    pub const ALL: [Observable; 3] = [
        Observable::SinglesA,
        Observable::SinglesB,
        Observable::Coincidences,
    ];

    /// Short label used in CSV headers.
    pub fn label(&self) -> &'static str {
        match self {
            Observable::SinglesA => "A",
            Observable::SinglesB => "B",
            Observable::Coincidences => "CC",
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Observable::SinglesA => "singles_A",
            Observable::SinglesB => "singles_B",
            Observable::Coincidences => "coincidences",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickProbabilities {
    pub p_a: f64,
    pub p_b: f64,
    pub p_cc: f64,
    pub engine: Engine,
}

impl ClickProbabilities {
    pub fn get(&self, observable: Observable) -> f64 {
        match observable {
            Observable::SinglesA => self.p_a,
            Observable::SinglesB => self.p_b,
            Observable::Coincidences => self.p_cc,
        }
    }
}

/// Fringe visibilities. A visibility whose denominator vanishes is reported
/// as 0 with its flag cleared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityTriple {
    pub v_a: f64,
    pub v_b: f64,
    pub v_cc: f64,
    pub defined_a: bool,
    pub defined_b: bool,
    pub defined_cc: bool,
}

impl VisibilityTriple {
    pub fn get(&self, observable: Observable) -> (f64, bool) {
        match observable {
            Observable::SinglesA => (self.v_a, self.defined_a),
            Observable::SinglesB => (self.v_b, self.defined_b),
            Observable::Coincidences => (self.v_cc, self.defined_cc),
        }
    }
}

/// Fisher information of one binary click observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    pub observable: Observable,
    /// FI at the configuration's phase.
    pub fi_at_phi: f64,
    /// Maximum over the phase.
    pub fi_max: f64,
    /// Phase attaining `fi_max`.
    pub phi_star: f64,
    /// False when the FI vanishes identically (no interference term).
    pub defined: bool,
}
