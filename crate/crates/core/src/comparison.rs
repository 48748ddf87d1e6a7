//! Classical Mach–Zehnder reference and the SU(1,1)-versus-SU(2) advantage
//! logic.
//!
//! The SU(2) interferometer is a 50:50 input splitter fed with a weak
//! coherent state `|α, 0⟩`, the same internal transmissions as the SU(1,1)
//! device and an output splitter of reflectivity `R`. Resources are counted
//! as photons through the sample, so `|α|² = 2 g1²`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{fisher_max_value, fisher_upper_bound, Fringe};
use crate::model::{
    check_gain, check_phase, check_unit, reduce_phase, ClickProbabilities, Engine, Field,
    FisherReport, InterferometerConfig, ModelError, Observable, ValidatedConfig,
};

/// Above this mean photon number the weak-field SU(2) model is no longer
/// trustworthy.
pub const WEAK_FIELD_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComparisonError {
    #[error("both internal transmissions are zero")]
    DegenerateTransmissions,
    #[error("eta of the other mode is 1; limiting region is {limit:?}")]
    EfficiencyOne { limit: RegionVerdict },
    #[error("{0} is not a singles observable")]
    NotSingles(Observable),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Weak-coherent-state Mach–Zehnder interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Su2Config {
    pub alpha_sq: f64,
    pub r: f64,
    pub t_a: f64,
    pub t_b: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    #[serde(default)]
    pub phi: f64,
}

impl Su2Config {
    /// SU(2) counterpart of an SU(1,1) configuration under the equal
    /// resources convention, sharing its losses and detectors.
    pub fn equal_resources(su11: &InterferometerConfig, r: f64) -> Self {
        Self {
            alpha_sq: 2.0 * su11.g1 * su11.g1,
            r,
            t_a: su11.t_a,
            t_b: su11.t_b,
            eta_a: su11.eta_a,
            eta_b: su11.eta_b,
            phi: su11.phi,
        }
    }

    pub fn eta_max(&self) -> f64 {
        self.eta_a.max(self.eta_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedSu2(Su2Config);

impl ValidatedSu2 {
    pub fn get(&self) -> &Su2Config {
        &self.0
    }

    /// False once `|α|²` leaves the single-photon regime.
    pub fn weak_field(&self) -> bool {
        self.0.alpha_sq <= WEAK_FIELD_LIMIT
    }

    pub fn with_r(&self, r: f64) -> Result<Self, ModelError> {
        validate_su2(Su2Config { r, ..self.0 })
    }

    pub fn at_phase(&self, phi: f64) -> Result<Self, ModelError> {
        validate_su2(Su2Config { phi, ..self.0 })
    }
}

impl std::ops::Deref for ValidatedSu2 {
    type Target = Su2Config;

    fn deref(&self) -> &Su2Config {
        &self.0
    }
}

pub fn validate_su2(config: Su2Config) -> Result<ValidatedSu2, ModelError> {
    check_gain(Field::AlphaSq, config.alpha_sq)?;
    check_unit(Field::R, config.r)?;
    check_unit(Field::TA, config.t_a)?;
    check_unit(Field::TB, config.t_b)?;
    check_unit(Field::EtaA, config.eta_a)?;
    check_unit(Field::EtaB, config.eta_b)?;
    check_phase(Field::Phi, config.phi)?;
    Ok(ValidatedSu2(Su2Config {
        phi: reduce_phase(config.phi),
        ..config
    }))
}

/// Singles fringe of one output port.
pub fn su2_fringe(config: &ValidatedSu2, observable: Observable) -> Result<Fringe, ComparisonError> {
    let r = config.r;
    let cross = 2.0 * ((1.0 - r) * r * config.t_a * config.t_b).sqrt();
    let (eta, own, other, coherent) = match observable {
        Observable::SinglesA => (config.eta_a, config.t_a, config.t_b, -cross),
        // port B sits on the constructive side of the fringe
        Observable::SinglesB => (config.eta_b, config.t_b, config.t_a, cross),
        Observable::Coincidences => return Err(ComparisonError::NotSingles(observable)),
    };
    Ok(Fringe {
        efficiency: eta * config.alpha_sq / 2.0,
        incoherent: (1.0 - r) * own + r * other,
        coherent,
    })
}

/// Weak-field click probabilities; coincidences vanish at this order.
pub fn su2_click_probabilities(config: &ValidatedSu2) -> ClickProbabilities {
    let p = |obs| {
        su2_fringe(config, obs)
            .map(|f| f.probability(config.phi).max(0.0))
            .unwrap_or(0.0)
    };
    ClickProbabilities {
        p_a: p(Observable::SinglesA),
        p_b: p(Observable::SinglesB),
        p_cc: 0.0,
        engine: Engine::Analytic,
    }
}

/// Output reflectivity that balances the internal losses for the given
/// singles port: `T_A/(T_A+T_B)` for A and `T_B/(T_A+T_B)` for B.
pub fn su2_optimal_reflectivity(t_a: f64, t_b: f64, observable: Observable) -> Result<f64, ComparisonError> {
    let total = t_a + t_b;
    if total <= 0.0 {
        return Err(ComparisonError::DegenerateTransmissions);
    }
    match observable {
        Observable::SinglesA => Ok(t_a / total),
        Observable::SinglesB => Ok(t_b / total),
        Observable::Coincidences => Err(ComparisonError::NotSingles(observable)),
    }
}

/// Fisher information of one port at the configured reflectivity.
pub fn su2_fisher_report(config: &ValidatedSu2, observable: Observable) -> Result<FisherReport, ComparisonError> {
    Ok(su2_fringe(config, observable)?.report(observable, config.phi))
}

/// Best port with its optimal reflectivity,
/// `2 η_max |α|² T_A T_B / (T_A + T_B)`.
///
/// The better-detected port is used; on a tie port A wins.
pub fn su2_fisher_max(config: &ValidatedSu2) -> Result<FisherReport, ComparisonError> {
    let observable = if config.eta_b > config.eta_a {
        Observable::SinglesB
    } else {
        Observable::SinglesA
    };
    let r = su2_optimal_reflectivity(config.t_a, config.t_b, observable)?;
    su2_fisher_report(&config.with_r(r)?, observable)
}

/// Closed-form SU(2) maximum under the equal-resources convention,
/// `4 η g1² T_A T_B / (T_A + T_B)`.
pub fn su2_fisher_max_equal_resources(g1: f64, t_a: f64, t_b: f64, eta_max: f64) -> f64 {
    let total = t_a + t_b;
    if total <= 0.0 {
        return 0.0;
    }
    4.0 * eta_max * g1 * g1 * t_a * t_b / total
}

/// Extra photons an SU(2) with the same losses and detectors needs to match
/// the SU(1,1) bound, i.e. `T_A + T_B`.
pub fn resource_ratio(config: &ValidatedConfig) -> Option<f64> {
    let su2 = su2_fisher_max_equal_resources(config.g1, config.t_a, config.t_b, config.eta_max());
    (su2 > 0.0).then(|| fisher_upper_bound(config) / su2)
}

/// Shape of the set of gain ratios `g2²/g1²` where singles beat
/// coincidences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// Singles win for `g2²/g1² ≥ β`.
    BetaOnly,
    /// Singles win for `g2²/g1² ≤ α` or `≥ β`.
    AlphaOrBeta,
    Always,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub observable: Observable,
    pub region: Region,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

impl RegionVerdict {
    /// Whether the singles FI is at least the coincidence FI at this gain
    /// ratio.
    pub fn singles_win(&self, gain_ratio: f64) -> bool {
        let above_beta = self.beta.is_some_and(|b| gain_ratio >= b);
        match self.region {
            Region::Always => true,
            Region::Never => false,
            Region::BetaOnly => above_beta,
            Region::AlphaOrBeta => self.alpha.is_some_and(|a| gain_ratio <= a) || above_beta,
        }
    }
}

/// Where measuring singles in one mode beats coincidences. Only the
/// transmission and efficiency of the other mode enter the region; the own
/// transmission scales `α` and `β`.
pub fn singles_vs_coincidence_region(
    config: &ValidatedConfig,
    singles: Observable,
) -> Result<RegionVerdict, ComparisonError> {
    let (t_own, t_other, eta_other) = match singles {
        Observable::SinglesA => (config.t_a, config.t_b, config.eta_b),
        Observable::SinglesB => (config.t_b, config.t_a, config.eta_a),
        Observable::Coincidences => return Err(ComparisonError::NotSingles(singles)),
    };
    let verdict = |region, alpha, beta| RegionVerdict {
        observable: singles,
        region,
        alpha,
        beta,
    };
    if eta_other == 0.0 {
        return Ok(verdict(Region::Always, None, None));
    }
    if eta_other == 1.0 {
        // β diverges; with a lossy other arm the coincidences always win,
        // with a lossless one both observables coincide
        let region = if t_other < 1.0 { Region::Never } else { Region::Always };
        return Err(ComparisonError::EfficiencyOne {
            limit: verdict(region, None, None),
        });
    }
    let alpha = t_own * (t_other - eta_other) / (eta_other * (1.0 - eta_other));
    let beta = eta_other * t_own * (1.0 - eta_other * t_other) / (1.0 - eta_other);
    let upper = eta_other / (1.0 - eta_other + eta_other * eta_other);
    Ok(if t_other < eta_other {
        verdict(Region::BetaOnly, None, Some(beta))
    } else if t_other <= upper {
        verdict(Region::AlphaOrBeta, Some(alpha), Some(beta))
    } else {
        verdict(Region::Always, None, None)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvantageKind {
    /// Against an SU(2) with the same internal losses.
    Conditional,
    /// Against a lossless SU(2).
    Unconditional,
}

impl AdvantageKind {
    pub const ALL: [AdvantageKind; 2] = [AdvantageKind::Conditional, AdvantageKind::Unconditional];
}

/// Cell of the threshold table that produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableCell {
    ConditionalSingles,
    ConditionalCoincidences,
    UnconditionalSingles,
    UnconditionalCoincidences,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageVerdict {
    pub kind: AdvantageKind,
    pub observable: Observable,
    /// Advantage at the configuration's own `g2²/g1²`.
    pub holds: bool,
    /// Minimum `g2²/g1²`; present iff the cell's validity condition holds.
    pub threshold_gain_ratio: Option<f64>,
    pub binding_condition: TableCell,
    /// Left- and right-hand side of the cell's validity condition.
    pub condition_value: f64,
    pub condition_bound: f64,
    pub asymptotic_conditional: bool,
    pub asymptotic_unconditional: bool,
}

/// `T_A + T_B > 1`: the SU(1,1) bound beats an equally lossy SU(2).
pub fn asymptotic_conditional(t_a: f64, t_b: f64) -> bool {
    t_a + t_b > 1.0
}

/// `2 η_max T_A T_B > 1`: the SU(1,1) bound beats a lossless SU(2).
pub fn asymptotic_unconditional(t_a: f64, t_b: f64, eta_max: f64) -> bool {
    2.0 * eta_max * t_a * t_b > 1.0
}

/// SU(2) Fisher information the SU(1,1) device must match. The conditional
/// reference shares the internal losses; the unconditional one is lossless.
/// Both detect with efficiency `su2_eta_max`.
pub fn su2_reference_fisher(config: &ValidatedConfig, su2_eta_max: f64, kind: AdvantageKind) -> f64 {
    match kind {
        AdvantageKind::Conditional => {
            su2_fisher_max_equal_resources(config.g1, config.t_a, config.t_b, su2_eta_max)
        }
        AdvantageKind::Unconditional => su2_fisher_max_equal_resources(config.g1, 1.0, 1.0, su2_eta_max),
    }
}

/// Direct comparison of the two maxima, ties counting as advantage.
pub fn advantage_by_direct_comparison(
    config: &ValidatedConfig,
    su2_eta_max: f64,
    observable: Observable,
    kind: AdvantageKind,
) -> bool {
    config.g1 > 0.0 && fisher_max_value(config, observable) >= su2_reference_fisher(config, su2_eta_max, kind)
}

/// Minimum gain ratio for an advantage, with its validity condition.
///
/// `su2_eta_max` is the best detection efficiency of the SU(2) device; pass
/// `config.eta_max()` when both devices share their detectors. Thresholds
/// are clamped at 0. With `g1 = 0` neither device has any information and
/// no advantage is reported.
pub fn advantage_threshold(
    config: &ValidatedConfig,
    su2_eta_max: f64,
    observable: Observable,
    kind: AdvantageKind,
) -> AdvantageVerdict {
    let em = su2_eta_max;
    let (t_a, t_b, eta_a, eta_b) = match observable {
        Observable::SinglesB => (config.t_b, config.t_a, config.eta_b, config.eta_a),
        _ => (config.t_a, config.t_b, config.eta_a, config.eta_b),
    };
    let sum = t_a + t_b;
    let prod = t_a * t_b;
    let singles = observable != Observable::Coincidences;
    // each cell reads `value > bound ⇒ ratio ≥ threshold`, written so that no
    // division happens before the validity condition is known to hold
    let (cell, value, bound, threshold): (TableCell, f64, f64, Box<dyn Fn() -> f64>) = match (kind, singles) {
        (AdvantageKind::Conditional, true) => (
            TableCell::ConditionalSingles,
            eta_a * sum,
            em,
            Box::new(move || t_a * em * (eta_a * sum - em * t_b) / (eta_a * sum * (eta_a * sum - em))),
        ),
        (AdvantageKind::Conditional, false) => (
            TableCell::ConditionalCoincidences,
            eta_a * eta_b * sum,
            em,
            Box::new(move || em * prod / (eta_a * eta_b * sum)),
        ),
        (AdvantageKind::Unconditional, true) => (
            TableCell::UnconditionalSingles,
            2.0 * eta_a * prod,
            em,
            Box::new(move || em * (2.0 * t_a * eta_a - em) / (2.0 * eta_a * (2.0 * prod * eta_a - em))),
        ),
        (AdvantageKind::Unconditional, false) => (
            TableCell::UnconditionalCoincidences,
            2.0 * eta_a * eta_b * prod,
            em,
            Box::new(move || em / (2.0 * eta_a * eta_b)),
        ),
    };
    let threshold_gain_ratio = (value > bound).then(|| threshold().max(0.0));
    let holds = config.g1 > 0.0
        && threshold_gain_ratio.is_some_and(|th| (config.g2 * config.g2) / (config.g1 * config.g1) >= th);
    AdvantageVerdict {
        kind,
        observable,
        holds,
        threshold_gain_ratio,
        binding_condition: cell,
        condition_value: value,
        condition_bound: bound,
        asymptotic_conditional: asymptotic_conditional(config.t_a, config.t_b),
        asymptotic_unconditional: asymptotic_unconditional(config.t_a, config.t_b, config.eta_max()),
    }
}

/// Verdicts for every observable and both kinds, observables outermost.
pub fn all_verdicts(config: &ValidatedConfig, su2_eta_max: f64) -> Vec<AdvantageVerdict> {
    Observable::ALL
        .iter()
        .flat_map(|&obs| {
            AdvantageKind::ALL
                .iter()
                .map(move |&kind| advantage_threshold(config, su2_eta_max, obs, kind))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn su2(alpha_sq: f64, r: f64, t: (f64, f64), eta: (f64, f64), phi: f64) -> ValidatedSu2 {
        validate_su2(Su2Config {
            alpha_sq,
            r,
            t_a: t.0,
            t_b: t.1,
            eta_a: eta.0,
            eta_b: eta.1,
            phi,
        })
        .unwrap()
    }

    fn su11(g1: f64, g2: f64, t: (f64, f64), eta: (f64, f64)) -> ValidatedConfig {
        validate(
            InterferometerConfig::lossless(g1, g2)
                .with_transmissions(t.0, t.1)
                .with_efficiencies(eta.0, eta.1),
        )
        .unwrap()
    }

    /// Single-photon amplitudes through the MZI written mode by mode: 50:50
    /// input splitter, phase on arm A, losses, then the output splitter.
    fn mzi_oracle(c: &Su2Config) -> (f64, f64) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let arm_a = Complex64::from_polar(s * c.t_a.sqrt(), c.phi);
        let arm_b = Complex64::new(s * c.t_b.sqrt(), 0.0);
        let (rt, tt) = (c.r.sqrt(), (1.0 - c.r).sqrt());
        let out_a = -(arm_a * tt) + arm_b * rt;
        let out_b = arm_a * rt + arm_b * tt;
        (
            c.eta_a * c.alpha_sq * out_a.norm_sqr(),
            c.eta_b * c.alpha_sq * out_b.norm_sqr(),
        )
    }

    #[test]
    fn balanced_port_is_dark() {
        let p = su2_click_probabilities(&su2(0.01, 0.5, (1.0, 1.0), (1.0, 1.0), 0.0));
        assert!(p.p_a.abs() < 1e-18);
        assert_relative_eq!(p.p_b, 0.01, max_relative = 1e-12);
        assert_eq!(p.p_cc, 0.0);
    }

    #[test]
    fn zero_reflectivity_removes_interference() {
        let c0 = su2(0.01, 0.0, (0.8, 0.7), (0.9, 0.6), 0.0);
        let c1 = c0.at_phase(1.3).unwrap();
        let expected = 0.9 * 0.01 * 0.8 / 2.0;
        assert_relative_eq!(su2_click_probabilities(&c0).p_a, expected, max_relative = 1e-12);
        assert_relative_eq!(su2_click_probabilities(&c1).p_a, expected, max_relative = 1e-12);
    }

    #[test]
    fn probabilities_match_mode_by_mode_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut cases = vec![su2(0.005, 0.5, (0.8, 0.7), (0.9, 0.9), FRAC_PI_2)];
        for _ in 0..200 {
            cases.push(su2(
                rng.gen_range(0.0..0.1),
                rng.gen(),
                (rng.gen(), rng.gen()),
                (rng.gen(), rng.gen()),
                rng.gen_range(0.0..2.0 * PI),
            ));
        }
        for c in cases {
            let p = su2_click_probabilities(&c);
            let (a, b) = mzi_oracle(c.get());
            assert!((p.p_a - a).abs() < 1e-15, "{c:?}");
            assert!((p.p_b - b).abs() < 1e-15, "{c:?}");
        }
    }

    #[test]
    fn optimal_reflectivity_values() {
        assert_eq!(su2_optimal_reflectivity(1.0, 1.0, Observable::SinglesA).unwrap(), 0.5);
        assert_relative_eq!(
            su2_optimal_reflectivity(0.8, 0.7, Observable::SinglesA).unwrap(),
            0.8 / 1.5,
            max_relative = 1e-15
        );
        assert_eq!(su2_optimal_reflectivity(0.6, 0.0, Observable::SinglesA).unwrap(), 1.0);
        assert_eq!(su2_optimal_reflectivity(0.6, 0.0, Observable::SinglesB).unwrap(), 0.0);
        assert_eq!(
            su2_optimal_reflectivity(0.0, 0.0, Observable::SinglesA),
            Err(ComparisonError::DegenerateTransmissions)
        );
    }

    #[test]
    fn reflectivity_grid_peaks_at_optimum() {
        let base = su2(0.005, 0.5, (0.8, 0.7), (0.9, 0.9), 0.0);
        let fi = |r: f64| su2_fringe(&base.with_r(r).unwrap(), Observable::SinglesA).unwrap().fisher_max();
        let n = 1000;
        let best = (0..=n)
            .map(|i| i as f64 / n as f64)
            .max_by(|a, b| fi(*a).total_cmp(&fi(*b)))
            .unwrap();
        assert!((best - 0.8 / 1.5).abs() <= 1.0 / n as f64);
    }

    #[test]
    fn lossless_su2_is_half_the_su11_bound() {
        let c = su2(2.0 * 0.05f64.powi(2), 0.5, (1.0, 1.0), (1.0, 1.0), 0.0);
        let report = su2_fisher_max(&c).unwrap();
        assert_relative_eq!(report.fi_max, 0.005, max_relative = 1e-12);
        assert_relative_eq!(su2_fisher_max_equal_resources(0.05, 1.0, 1.0, 1.0), 0.005, max_relative = 1e-12);
    }

    #[test]
    fn fisher_max_matches_brute_force() {
        let g1: f64 = 0.05;
        let c = su2(2.0 * g1 * g1, 0.5, (0.8, 0.7), (0.9, 0.9), 0.0);
        let closed = su2_fisher_max_equal_resources(g1, 0.8, 0.7, 0.9);
        assert_relative_eq!(su2_fisher_max(&c).unwrap().fi_max, closed, max_relative = 1e-12);
        // grid over R and φ with the exact binary denominator
        let mut best: f64 = 0.0;
        for i in 0..=400 {
            let cr = c.with_r(i as f64 / 400.0).unwrap();
            let f = su2_fringe(&cr, Observable::SinglesA).unwrap();
            for j in 1..2000 {
                let phi = j as f64 * PI / 2000.0;
                let p = f.probability(phi);
                let dp = -f.efficiency * f.coherent * phi.sin();
                if p > 0.0 {
                    best = best.max(dp * dp / (p * (1.0 - p)));
                }
            }
        }
        assert!((best - closed).abs() / closed < 2e-2, "{best} vs {closed}");
    }

    #[test]
    fn resource_ratio_at_sixty_percent() {
        let c = su11(0.05, 0.5, (0.6, 0.6), (1.0, 1.0));
        assert_relative_eq!(resource_ratio(&c).unwrap(), 1.2, max_relative = 1e-12);
    }

    #[test]
    fn region_cases() {
        // T_B above η_B/(1−η_B+η_B²)
        let c = su11(0.05, 0.05, (0.8, 0.9), (0.5, 0.5));
        assert_eq!(singles_vs_coincidence_region(&c, Observable::SinglesA).unwrap().region, Region::Always);
        let c = su11(0.05, 0.05, (0.8, 0.3), (0.5, 0.5));
        let v = singles_vs_coincidence_region(&c, Observable::SinglesA).unwrap();
        assert_eq!(v.region, Region::BetaOnly);
        assert_relative_eq!(v.beta.unwrap(), 0.5 * 0.8 * (1.0 - 0.15) / 0.5, max_relative = 1e-14);
        let c = su11(0.05, 0.05, (0.8, 0.6), (0.5, 0.5));
        assert_eq!(
            singles_vs_coincidence_region(&c, Observable::SinglesA).unwrap().region,
            Region::AlphaOrBeta
        );
    }

    #[test]
    fn low_efficiency_case_three_favours_singles() {
        let g1: f64 = 0.05;
        let c = su11(g1, 0.01, (0.2, 0.22), (0.1, 0.1));
        let v = singles_vs_coincidence_region(&c, Observable::SinglesA).unwrap();
        for i in 0..200 {
            let g2 = 1e-3 * 1e3f64.powf(i as f64 / 199.0);
            let ci = c.with_g2(g2).unwrap();
            assert!(v.singles_win(g2 * g2 / (g1 * g1)));
            assert!(
                fisher_max_value(&ci, Observable::SinglesA) >= fisher_max_value(&ci, Observable::Coincidences)
            );
        }
    }

    #[test]
    fn efficiency_one_reports_limit() {
        let c = su11(0.05, 0.05, (0.8, 0.7), (1.0, 1.0));
        match singles_vs_coincidence_region(&c, Observable::SinglesA) {
            Err(ComparisonError::EfficiencyOne { limit }) => assert_eq!(limit.region, Region::Never),
            other => panic!("{other:?}"),
        }
        let c = su11(0.05, 0.05, (0.8, 1.0), (1.0, 1.0));
        match singles_vs_coincidence_region(&c, Observable::SinglesA) {
            Err(ComparisonError::EfficiencyOne { limit }) => assert_eq!(limit.region, Region::Always),
            other => panic!("{other:?}"),
        }
        let c = su11(0.05, 0.05, (0.8, 0.7), (0.4, 0.0));
        assert_eq!(singles_vs_coincidence_region(&c, Observable::SinglesA).unwrap().region, Region::Always);
    }

    #[test]
    fn region_agrees_with_direct_comparison() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g1: f64 = 0.05;
        for _ in 0..500 {
            let t_a: f64 = rng.gen();
            let t_b: f64 = rng.gen();
            let eta_b: f64 = rng.gen_range(0.01..0.99);
            let eta_a: f64 = rng.gen_range(0.01..1.0);
            let base = su11(g1, 0.0, (t_a, t_b), (eta_a, eta_b));
            let v = singles_vs_coincidence_region(&base, Observable::SinglesA).unwrap();
            for i in 0..50 {
                let x = 1e-3 * 1e5f64.powf(i as f64 / 49.0);
                if [v.alpha, v.beta].iter().flatten().any(|b| (x - b).abs() < 1e-9 * b.max(1.0)) {
                    continue;
                }
                let c = base.with_g2(g1 * x.sqrt()).unwrap();
                let fa = fisher_max_value(&c, Observable::SinglesA);
                let fcc = fisher_max_value(&c, Observable::Coincidences);
                let scale = fa.max(fcc);
                if (fa - fcc).abs() <= 1e-12 * scale {
                    continue;
                }
                assert_eq!(v.singles_win(x), fa > fcc, "T=({t_a},{t_b}) η=({eta_a},{eta_b}) x={x}");
            }
        }
    }

    #[test]
    fn mode_b_region_is_label_swap() {
        let c = su11(0.05, 0.05, (0.3, 0.8), (0.6, 0.4));
        let swapped = su11(0.05, 0.05, (0.8, 0.3), (0.4, 0.6));
        let b = singles_vs_coincidence_region(&c, Observable::SinglesB).unwrap();
        let a = singles_vs_coincidence_region(&swapped, Observable::SinglesA).unwrap();
        assert_eq!((a.region, a.alpha, a.beta), (b.region, b.alpha, b.beta));
    }

    #[test]
    fn equal_transmission_landmarks() {
        for (t, cond, uncond) in [(0.49, false, false), (0.51, true, false), (0.7, true, false), (0.72, true, true)] {
            assert_eq!(asymptotic_conditional(t, t), cond);
            assert_eq!(asymptotic_unconditional(t, t, 1.0), uncond);
        }
        let edge = std::f64::consts::FRAC_1_SQRT_2;
        assert!(!asymptotic_unconditional(edge - 1e-9, edge - 1e-9, 1.0));
        assert!(asymptotic_unconditional(edge + 1e-9, edge + 1e-9, 1.0));
        assert!(!asymptotic_conditional(0.5, 0.5));
    }

    #[test]
    fn coincidence_conditional_threshold() {
        let c = su11(0.05, 0.05, (0.8, 0.7), (0.9, 0.95));
        let v = advantage_threshold(&c, 0.95, Observable::Coincidences, AdvantageKind::Conditional);
        let expected = 0.95 * 0.56 / (0.9 * 0.95 * 1.5);
        assert_relative_eq!(v.threshold_gain_ratio.unwrap(), expected, max_relative = 1e-14);
        assert_eq!(v.binding_condition, TableCell::ConditionalCoincidences);
        // validity fails when T_A + T_B ≤ η_max/(η_A η_B)
        let c = su11(0.05, 0.05, (0.5, 0.4), (0.9, 0.9));
        let v = advantage_threshold(&c, 0.9, Observable::Coincidences, AdvantageKind::Conditional);
        assert!(v.threshold_gain_ratio.is_none() && !v.holds);
    }

    /// Smallest grid ratio at which the direct comparison holds.
    fn brute_crossover(c: &ValidatedConfig, em: f64, obs: Observable, kind: AdvantageKind, grid: &[f64]) -> Option<usize> {
        grid.iter().position(|&x| {
            let ci = c.with_g2(c.g1 * x.sqrt()).unwrap();
            advantage_by_direct_comparison(&ci, em, obs, kind)
        })
    }

    #[test]
    fn thresholds_match_brute_force_crossover() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let grid: Vec<f64> = (0..400).map(|i| 1e-3 * 1e6f64.powf(i as f64 / 399.0)).collect();
        for obs in Observable::ALL {
            for kind in AdvantageKind::ALL {
                for _ in 0..100 {
                    let c = su11(
                        0.05,
                        0.0,
                        (rng.gen_range(0.3..1.0), rng.gen_range(0.3..1.0)),
                        (rng.gen_range(0.3..1.0), rng.gen_range(0.3..1.0)),
                    );
                    let em = c.eta_max();
                    let v = advantage_threshold(&c, em, obs, kind);
                    let cross = brute_crossover(&c, em, obs, kind, &grid);
                    match v.threshold_gain_ratio {
                        Some(th) if th <= grid[grid.len() - 1] && th > grid[0] => {
                            let k = cross.expect("crossover on grid");
                            assert!(grid[k] >= th * (1.0 - 1e-9), "{obs:?} {kind:?} {c:?}");
                            assert!(grid[k - 1] < th * (1.0 + 1e-9), "{obs:?} {kind:?} {c:?}");
                        }
                        Some(_) => {}
                        None => assert!(cross.is_none(), "{obs:?} {kind:?} {c:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn verdict_holds_at_threshold() {
        let g1: f64 = 0.05;
        let c = su11(g1, 0.0, (0.9, 0.9), (1.0, 1.0));
        let th = advantage_threshold(&c, 1.0, Observable::Coincidences, AdvantageKind::Unconditional)
            .threshold_gain_ratio
            .unwrap();
        assert_relative_eq!(th, 0.5, max_relative = 1e-15);
        let at = c.with_g2(g1 * th.sqrt()).unwrap();
        // g2 = g1·√th may round below th; nudge up by an ulp-scale step
        let at = if (at.g2 * at.g2) / (g1 * g1) < th { c.with_g2(g1 * th.sqrt() * (1.0 + 1e-15)).unwrap() } else { at };
        assert!(advantage_threshold(&at, 1.0, Observable::Coincidences, AdvantageKind::Unconditional).holds);
    }

    #[test]
    fn zero_first_gain_has_no_advantage() {
        let c = su11(0.0, 0.5, (0.9, 0.9), (1.0, 1.0));
        for v in all_verdicts(&c, 1.0) {
            assert!(!v.holds);
        }
    }

    #[test]
    fn fringe_rejects_coincidences() {
        let c = su2(0.01, 0.5, (1.0, 1.0), (1.0, 1.0), 0.0);
        assert!(matches!(
            su2_fringe(&c, Observable::Coincidences),
            Err(ComparisonError::NotSingles(_))
        ));
    }
}
