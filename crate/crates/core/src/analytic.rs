//! Closed-form low-gain model.
//!
//! With `g1, g2 ≪ 1` every click probability is a fringe
//! `p(φ) = η (a + b cos φ)` where `a` collects the incoherent pair
//! contributions of the two stages and `b = 2√(T_A T_B) g1 g2` is the
//! interference term. Visibilities, Fisher information and its maximum over
//! the phase all follow from `(η, a, b)`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::model::{
    ClickProbabilities, Engine, FisherReport, Observable, ValidatedConfig, VisibilityTriple,
};
use crate::optimize::grid_then_golden_max;

/// Probabilities above this value mean the single-pair approximation is
/// being used outside its regime.
pub const REGIME_LIMIT: f64 = 0.1;

/// Negative probabilities down to this value are treated as rounding.
pub const ROUNDING_SLACK: f64 = 1e-15;

/// Grid nodes on `[0, π]` used to bracket the optimal phase.
pub const PHASE_GRID_POINTS: usize = 1001;

/// Bracket width at which the golden-section refinement of the optimal
/// phase stops.
pub const PHASE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("low-gain model out of regime: p_{observable} = {value:e}")]
    ModelOutOfRegime { observable: Observable, value: f64 },
    #[error("closed-form model requires theta = 0, got {theta}")]
    NonZeroPumpPhase { theta: f64 },
}

/// Low-gain fringe `p(φ) = efficiency · (incoherent + coherent · cos φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fringe {
    pub efficiency: f64,
    pub incoherent: f64,
    pub coherent: f64,
}

impl Fringe {
    pub fn of(config: &ValidatedConfig, observable: Observable) -> Self {
        let g1_sq = config.g1 * config.g1;
        let g2_sq = config.g2 * config.g2;
        let coherent = 2.0 * (config.t_a * config.t_b).sqrt() * config.g1 * config.g2;
        let (efficiency, first_stage) = match observable {
            Observable::SinglesA => (config.eta_a, config.t_a * g1_sq),
            Observable::SinglesB => (config.eta_b, config.t_b * g1_sq),
            Observable::Coincidences => (config.eta_a * config.eta_b, config.t_a * config.t_b * g1_sq),
        };
        Self {
            efficiency,
            incoherent: first_stage + g2_sq,
            coherent,
        }
    }

    pub fn probability(&self, phi: f64) -> f64 {
        self.efficiency * (self.incoherent + self.coherent * phi.cos())
    }

    /// `(∂_φ p)² / p`, the small-`p` binary-outcome Fisher information.
    pub fn fisher(&self, phi: f64) -> f64 {
        let denom = self.incoherent + self.coherent * phi.cos();
        if denom <= 0.0 {
            return 0.0;
        }
        let s = phi.sin();
        self.efficiency * self.coherent * self.coherent * s * s / denom
    }

    /// Maximum of [`Fringe::fisher`] over the phase,
    /// `2η [a − √(a² − b²)]`, evaluated as `2η b² / (a + √(a² − b²))` to
    /// avoid cancellation when `b ≪ a`.
    pub fn fisher_max(&self) -> f64 {
        let a = self.incoherent;
        let b = self.coherent;
        if a <= 0.0 || b == 0.0 {
            return 0.0;
        }
        let root = (a * a - b * b).max(0.0).sqrt();
        2.0 * self.efficiency * b * b / (a + root)
    }

    /// Argmax of [`Fringe::fisher`] on `[0, π]`, or `None` for a flat fringe.
    pub fn optimal_phase(&self) -> Option<f64> {
        if self.incoherent <= 0.0 || self.coherent == 0.0 {
            return None;
        }
        let (phi, _) = grid_then_golden_max(
            |phi| self.fisher(phi),
            0.0,
            PI,
            PHASE_GRID_POINTS,
            PHASE_TOLERANCE,
        );
        Some(phi)
    }

    pub fn report(&self, observable: Observable, phi: f64) -> FisherReport {
        let phi_star = self.optimal_phase();
        FisherReport {
            observable,
            fi_at_phi: self.fisher(phi),
            fi_max: self.fisher_max(),
            phi_star: phi_star.unwrap_or(0.0),
            defined: phi_star.is_some(),
        }
    }

    pub fn visibility(&self) -> (f64, bool) {
        if self.incoherent > 0.0 {
            (self.coherent / self.incoherent, true)
        } else {
            (0.0, false)
        }
    }
}

fn require_zero_theta(config: &ValidatedConfig) -> Result<(), AnalyticError> {
    if config.theta == 0.0 {
        Ok(())
    } else {
        Err(AnalyticError::NonZeroPumpPhase {
            theta: config.theta,
        })
    }
}

fn checked_probability(observable: Observable, p: f64) -> Result<f64, AnalyticError> {
    if !(-ROUNDING_SLACK..=REGIME_LIMIT).contains(&p) {
        Err(AnalyticError::ModelOutOfRegime {
            observable,
            value: p,
        })
    } else {
        Ok(p.max(0.0))
    }
}

/// Singles and coincidence click probabilities at the configured phase.
pub fn click_probabilities(config: &ValidatedConfig) -> Result<ClickProbabilities, AnalyticError> {
    require_zero_theta(config)?;
    let mut p = [0.0; 3];
    for (slot, obs) in p.iter_mut().zip(Observable::ALL) {
        *slot = checked_probability(obs, Fringe::of(config, obs).probability(config.phi))?;
    }
    Ok(ClickProbabilities {
        p_a: p[0],
        p_b: p[1],
        p_cc: p[2],
        engine: Engine::Analytic,
    })
}

pub fn visibilities(config: &ValidatedConfig) -> VisibilityTriple {
    let (v_a, defined_a) = Fringe::of(config, Observable::SinglesA).visibility();
    let (v_b, defined_b) = Fringe::of(config, Observable::SinglesB).visibility();
    let (v_cc, defined_cc) = Fringe::of(config, Observable::Coincidences).visibility();
    VisibilityTriple {
        v_a,
        v_b,
        v_cc,
        defined_a,
        defined_b,
        defined_cc,
    }
}

/// Phase-independent maximum Fisher information of one observable.
///
/// The coincidence branch uses the piecewise form
/// `4 η_A η_B min(T_A T_B g1², g2²)`, which is exactly flat above the
/// loss-balanced gain.
pub fn fisher_max_value(config: &ValidatedConfig, observable: Observable) -> f64 {
    let fringe = Fringe::of(config, observable);
    match observable {
        Observable::Coincidences => {
            let first = config.t_a * config.t_b * config.g1 * config.g1;
            let second = config.g2 * config.g2;
            4.0 * fringe.efficiency * first.min(second)
        }
        _ => fringe.fisher_max(),
    }
}

/// Fisher information at the configured phase.
pub fn fisher_at_phase(config: &ValidatedConfig, observable: Observable) -> Result<f64, AnalyticError> {
    require_zero_theta(config)?;
    Ok(Fringe::of(config, observable).fisher(config.phi))
}

/// Phase in `[0, π]` maximising the Fisher information, located on a grid
/// and refined by golden-section search.
pub fn optimal_phase(config: &ValidatedConfig, observable: Observable) -> Option<f64> {
    Fringe::of(config, observable).optimal_phase()
}

/// Full report: FI at the configured phase, closed-form maximum and the
/// optimal phase.
pub fn fisher_report(config: &ValidatedConfig, observable: Observable) -> Result<FisherReport, AnalyticError> {
    let fi_at_phi = fisher_at_phase(config, observable)?;
    let fi_max = fisher_max_value(config, observable);
    let phi_star = optimal_phase(config, observable);
    Ok(FisherReport {
        observable,
        fi_at_phi,
        fi_max,
        phi_star: phi_star.unwrap_or(0.0),
        defined: phi_star.is_some(),
    })
}

/// Alias of [`fisher_report`] matching the maximisation entry point.
pub fn fisher_max(config: &ValidatedConfig, observable: Observable) -> Result<FisherReport, AnalyticError> {
    fisher_report(config, observable)
}

/// Second-stage gain `g1 √(T_A T_B)` at which the coincidence fringe reaches
/// unit visibility.
pub fn loss_balanced_g2(g1: f64, t_a: f64, t_b: f64) -> f64 {
    g1 * (t_a * t_b).sqrt()
}

/// Upper bound `4 η_max g1² T_A T_B` on every observable's Fisher
/// information.
pub fn fisher_upper_bound(config: &ValidatedConfig) -> f64 {
    4.0 * config.eta_max() * config.g1 * config.g1 * config.t_a * config.t_b
}
