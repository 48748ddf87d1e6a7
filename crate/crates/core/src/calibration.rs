//! Experimental calibration: detection efficiencies from Klyshko ratios,
//! internal transmissions from visibilities, and the choice of observable
//! and second-stage gain.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::fisher_max_value;
use crate::model::{ModelError, Observable, ValidatedConfig};

/// Default RMS visibility residual above which a fit is rejected.
pub const DEFAULT_RESIDUAL_CEILING: f64 = 0.05;
/// Visibilities below this are indistinguishable from no interference.
pub const SIGNAL_FLOOR: f64 = 1e-12;
/// Seed grid nodes per transmission axis.
pub const SEED_GRID_POINTS: usize = 41;
/// Nodes on `[0, g2_max]` searched by [`recommend_strategy`].
pub const RECOMMEND_GRID_POINTS: usize = 1001;
/// `g2/g1` used when the second-stage gain is unconstrained.
pub const ASYMPTOTIC_GAIN_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("invalid count record: {0}")]
    InvalidCounts(String),
    #[error("zero singles count in a Klyshko denominator")]
    ZeroCounts,
    #[error("visibility fit needs at least 3 grid points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid visibility sample: {0}")]
    InvalidSample(String),
    #[error("visibility fit diverged: RMS residual {residual:e} (ceiling {ceiling:e})")]
    FitDiverged { residual: f64, ceiling: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Singles and coincidence counts of one integration window. Expected
/// values and raw counts are accepted alike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCounts")]
pub struct CountRecord {
    singles_a: f64,
    singles_b: f64,
    coincidences: f64,
    label: String,
}

#[derive(Deserialize)]
struct RawCounts {
    singles_a: f64,
    singles_b: f64,
    coincidences: f64,
    #[serde(default)]
    label: String,
}

impl TryFrom<RawCounts> for CountRecord {
    type Error = CalibrationError;

    fn try_from(raw: RawCounts) -> Result<Self, Self::Error> {
        CountRecord::new(raw.singles_a, raw.singles_b, raw.coincidences, raw.label)
    }
}

impl CountRecord {
    pub fn new(singles_a: f64, singles_b: f64, coincidences: f64, label: impl Into<String>) -> Result<Self, CalibrationError> {
        for (name, v) in [("singles_a", singles_a), ("singles_b", singles_b), ("coincidences", coincidences)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CalibrationError::InvalidCounts(format!("{name} = {v}")));
            }
        }
        if coincidences > singles_a.min(singles_b) {
            return Err(CalibrationError::InvalidCounts(format!(
                "coincidences {coincidences} exceed singles ({singles_a}, {singles_b})"
            )));
        }
        Ok(Self {
            singles_a,
            singles_b,
            coincidences,
            label: label.into(),
        })
    }

    pub fn singles_a(&self) -> f64 {
        self.singles_a
    }

    pub fn singles_b(&self) -> f64 {
        self.singles_b
    }

    pub fn coincidences(&self) -> f64 {
        self.coincidences
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationMethod {
    Klyshko,
    VisibilityFit,
    LossBalancedInversion,
}

/// Estimated parameters. Quantities a method does not determine are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub eta_a: Option<f64>,
    pub eta_b: Option<f64>,
    pub t_a: Option<f64>,
    pub t_b: Option<f64>,
    pub residual: f64,
    pub method: CalibrationMethod,
}

/// Efficiencies from a run with only the second stage pumped:
/// `η_A = N_CC/N_B`, `η_B = N_CC/N_A`.
pub fn klyshko_efficiencies(counts: &CountRecord) -> Result<(f64, f64), CalibrationError> {
    if counts.singles_a == 0.0 || counts.singles_b == 0.0 {
        return Err(CalibrationError::ZeroCounts);
    }
    Ok((counts.coincidences / counts.singles_b, counts.coincidences / counts.singles_a))
}

pub fn klyshko_calibration(counts: &CountRecord) -> Result<CalibrationResult, CalibrationError> {
    let (eta_a, eta_b) = klyshko_efficiencies(counts)?;
    Ok(CalibrationResult {
        eta_a: Some(eta_a),
        eta_b: Some(eta_b),
        t_a: None,
        t_b: None,
        residual: 0.0,
        method: CalibrationMethod::Klyshko,
    })
}

/// Internal transmissions from the singles visibilities measured at the
/// loss-balanced gain: `T_A = V_B/(2 − V_B)`, `T_B = V_A/(2 − V_A)`.
pub fn transmissions_at_loss_balance(v_a: f64, v_b: f64) -> (f64, f64) {
    (v_b / (2.0 - v_b), v_a / (2.0 - v_a))
}

/// Measured visibilities at one second-stage gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilitySample {
    pub g2: f64,
    pub v_a: f64,
    pub v_b: f64,
    pub v_cc: f64,
}

fn model_visibilities(g1: f64, g2: f64, t_a: f64, t_b: f64) -> [f64; 3] {
    let coherent = 2.0 * (t_a * t_b).sqrt() * g1 * g2;
    let (g1_sq, g2_sq) = (g1 * g1, g2 * g2);
    [t_a * g1_sq, t_b * g1_sq, t_a * t_b * g1_sq].map(|first| {
        let incoherent = first + g2_sq;
        if incoherent > 0.0 {
            coherent / incoherent
        } else {
            0.0
        }
    })
}

struct VisibilityObjective<'a> {
    g1: f64,
    samples: &'a [VisibilitySample],
}

impl VisibilityObjective<'_> {
    fn sum_of_squares(&self, t_a: f64, t_b: f64) -> f64 {
        self.samples
            .iter()
            .map(|s| {
                let m = model_visibilities(self.g1, s.g2, t_a, t_b);
                (m[0] - s.v_a).powi(2) + (m[1] - s.v_b).powi(2) + (m[2] - s.v_cc).powi(2)
            })
            .sum()
    }
}

impl CostFunction for VisibilityObjective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> Result<f64, ArgminError> {
        // evaluate on the box and penalise the excursion so the simplex
        // stays in [0, 1]²
        let clamp = |x: f64| x.clamp(0.0, 1.0);
        let excursion = (p[0] - clamp(p[0])).powi(2) + (p[1] - clamp(p[1])).powi(2);
        Ok(self.sum_of_squares(clamp(p[0]), clamp(p[1])) + excursion)
    }
}

/// Least-squares fit of `(T_A, T_B)` to all three visibilities, unweighted.
///
/// A grid over `[0, 1]²` seeds a Nelder–Mead refinement. The reported
/// residual is the RMS over all `3 N` visibilities; fits above
/// `residual_ceiling`, or data without any interference signal, fail with
/// [`CalibrationError::FitDiverged`]. The efficiencies do not enter the
/// visibilities and are passed through unchanged.
pub fn fit_transmissions_from_visibility_sweep(
    g1: f64,
    samples: &[VisibilitySample],
    eta: (f64, f64),
    residual_ceiling: f64,
) -> Result<CalibrationResult, CalibrationError> {
    if samples.len() < 3 {
        return Err(CalibrationError::TooFewPoints(samples.len()));
    }
    if !(g1.is_finite() && g1 > 0.0) {
        return Err(CalibrationError::InvalidSample(format!("g1 = {g1}")));
    }
    for s in samples {
        let ok = s.g2.is_finite() && s.g2 >= 0.0 && [s.v_a, s.v_b, s.v_cc].iter().all(|v| (0.0..=1.0).contains(v));
        if !ok {
            return Err(CalibrationError::InvalidSample(format!("{s:?}")));
        }
    }
    let n_values = 3.0 * samples.len() as f64;
    let signal = samples.iter().flat_map(|s| [s.v_a, s.v_b, s.v_cc]).fold(0.0, f64::max);
    if signal < SIGNAL_FLOOR {
        return Err(CalibrationError::FitDiverged {
            residual: f64::NAN,
            ceiling: residual_ceiling,
        });
    }

    let objective = VisibilityObjective { g1, samples };
    let step = 1.0 / (SEED_GRID_POINTS - 1) as f64;
    let mut seed = (0.0, 0.0, f64::INFINITY);
    for i in 0..SEED_GRID_POINTS {
        for j in 0..SEED_GRID_POINTS {
            let (t_a, t_b) = (i as f64 * step, j as f64 * step);
            let c = objective.sum_of_squares(t_a, t_b);
            if c < seed.2 {
                seed = (t_a, t_b, c);
            }
        }
    }

    let (t_a, t_b) = (seed.0, seed.1);
    let offset = |x: f64| if x + step <= 1.0 { x + step } else { x - step };
    let simplex = vec![vec![t_a, t_b], vec![offset(t_a), t_b], vec![t_a, offset(t_b)]];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-30)
        .expect("positive tolerance");
    let result = Executor::new(objective, solver)
        .configure(|s| s.max_iters(5000))
        .run()
        .map_err(|e| CalibrationError::InvalidSample(e.to_string()))?;
    let best = result.state().get_best_param().cloned().unwrap_or_else(|| vec![t_a, t_b]);
    let (fit_a, fit_b) = (best[0].clamp(0.0, 1.0), best[1].clamp(0.0, 1.0));

    let objective = VisibilityObjective { g1, samples };
    let residual = (objective.sum_of_squares(fit_a, fit_b) / n_values).sqrt();
    if residual.is_nan() || residual > residual_ceiling {
        return Err(CalibrationError::FitDiverged {
            residual,
            ceiling: residual_ceiling,
        });
    }
    Ok(CalibrationResult {
        eta_a: Some(eta.0),
        eta_b: Some(eta.1),
        t_a: Some(fit_a),
        t_b: Some(fit_b),
        residual,
        method: CalibrationMethod::VisibilityFit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rationale {
    /// Unconstrained gain: singles of the better-detected mode with
    /// `g2 ≫ g1`.
    AsymptoticSingles,
    /// Best observable and gain on a grid over `[0, g2_max]`.
    GridMaximum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub observable: Observable,
    pub g2_setting: f64,
    /// Maximum FI of the recommended observable at `g2_setting`.
    pub fisher: f64,
    pub rationale: Rationale,
}

/// Which observable to measure and at which second-stage gain.
///
/// With `g2_max` every observable is evaluated on [`RECOMMEND_GRID_POINTS`]
/// nodes of `[0, g2_max]`; the smallest gain attaining the largest FI wins,
/// and on exact ties the observable listed first in [`Observable::ALL`].
pub fn recommend_strategy(config: &ValidatedConfig, g2_max: Option<f64>) -> Result<Recommendation, CalibrationError> {
    let Some(g2_max) = g2_max else {
        let observable = if config.eta_b > config.eta_a {
            Observable::SinglesB
        } else {
            Observable::SinglesA
        };
        let g2 = ASYMPTOTIC_GAIN_FACTOR * config.g1;
        return Ok(Recommendation {
            observable,
            g2_setting: g2,
            fisher: fisher_max_value(&config.with_g2(g2)?, observable),
            rationale: Rationale::AsymptoticSingles,
        });
    };
    let grid = recommendation_grid(g2_max)?;
    let mut best: Option<Recommendation> = None;
    for &g2 in &grid {
        let c = config.with_g2(g2)?;
        for observable in Observable::ALL {
            let fisher = fisher_max_value(&c, observable);
            if best.is_none_or(|b| fisher > b.fisher) {
                best = Some(Recommendation {
                    observable,
                    g2_setting: g2,
                    fisher,
                    rationale: Rationale::GridMaximum,
                });
            }
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// Evaluation nodes used by [`recommend_strategy`].
pub fn recommendation_grid(g2_max: f64) -> Result<Vec<f64>, CalibrationError> {
    if !(g2_max.is_finite() && g2_max >= 0.0) {
        return Err(CalibrationError::InvalidSample(format!("g2_max = {g2_max}")));
    }
    let n = RECOMMEND_GRID_POINTS - 1;
    Ok((0..=n).map(|i| g2_max * i as f64 / n as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{click_probabilities, loss_balanced_g2, visibilities};
    use crate::model::{validate, InterferometerConfig};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn cfg(g1: f64, g2: f64, t: (f64, f64), eta: (f64, f64)) -> ValidatedConfig {
        validate(
            InterferometerConfig::lossless(g1, g2)
                .with_transmissions(t.0, t.1)
                .with_efficiencies(eta.0, eta.1),
        )
        .unwrap()
    }

    fn synthetic_sweep(g1: f64, t: (f64, f64)) -> Vec<VisibilitySample> {
        (1..=12)
            .map(|i| {
                let g2 = 0.01 * i as f64;
                let v = visibilities(&cfg(g1, g2, t, (1.0, 1.0)));
                VisibilitySample {
                    g2,
                    v_a: v.v_a,
                    v_b: v.v_b,
                    v_cc: v.v_cc,
                }
            })
            .collect()
    }

    #[test]
    fn klyshko_examples() {
        let perfect = CountRecord::new(100.0, 100.0, 100.0, "").unwrap();
        assert_eq!(klyshko_efficiencies(&perfect).unwrap(), (1.0, 1.0));
        let r = CountRecord::new(1000.0, 800.0, 400.0, "run").unwrap();
        assert_eq!(klyshko_efficiencies(&r).unwrap(), (0.5, 0.4));
        assert!(matches!(
            CountRecord::new(100.0, 50.0, 60.0, ""),
            Err(CalibrationError::InvalidCounts(_))
        ));
        let zero = CountRecord::new(0.0, 10.0, 0.0, "").unwrap();
        assert_eq!(klyshko_efficiencies(&zero), Err(CalibrationError::ZeroCounts));
    }

    #[test]
    fn klyshko_inverts_simulated_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let (eta_a, eta_b): (f64, f64) = (rng.gen_range(0.01..1.0), rng.gen_range(0.01..1.0));
            let g2 = rng.gen_range(0.001..0.1);
            let p = click_probabilities(&cfg(0.0, g2, (rng.gen(), rng.gen()), (eta_a, eta_b))).unwrap();
            let n = 1e9;
            let r = CountRecord::new(n * p.p_a, n * p.p_b, n * p.p_cc, "").unwrap();
            let (ea, eb) = klyshko_efficiencies(&r).unwrap();
            assert_relative_eq!(ea, eta_a, max_relative = 1e-13);
            assert_relative_eq!(eb, eta_b, max_relative = 1e-13);
        }
    }

    #[test]
    fn count_record_rejects_negative_and_nan() {
        assert!(CountRecord::new(-1.0, 1.0, 0.0, "").is_err());
        assert!(CountRecord::new(f64::NAN, 1.0, 0.0, "").is_err());
        let parsed: Result<CountRecord, _> =
            serde_json::from_str(r#"{"singles_a": 100, "singles_b": 50, "coincidences": 60}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn loss_balance_inversion_roundtrip() {
        assert_eq!(transmissions_at_loss_balance(1.0, 1.0), (1.0, 1.0));
        assert_eq!(transmissions_at_loss_balance(0.0, 0.0), (0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut cases = vec![(0.8, 0.7)];
        cases.extend((0..1000).map(|_| (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0))));
        for (t_a, t_b) in cases {
            let g1 = 0.05;
            let v = visibilities(&cfg(g1, loss_balanced_g2(g1, t_a, t_b), (t_a, t_b), (1.0, 1.0)));
            let (ea, eb) = transmissions_at_loss_balance(v.v_a, v.v_b);
            assert!((ea - t_a).abs() <= 1e-12 && (eb - t_b).abs() <= 1e-12, "({t_a}, {t_b})");
        }
    }

    #[test]
    fn noiseless_fit_recovers_transmissions() {
        for t in [(0.8, 0.7), (0.2, 0.22), (0.95, 0.4), (1.0, 0.6)] {
            let data = synthetic_sweep(0.05, t);
            let fit = fit_transmissions_from_visibility_sweep(0.05, &data, (0.9, 0.8), DEFAULT_RESIDUAL_CEILING).unwrap();
            assert!((fit.t_a.unwrap() - t.0).abs() < 1e-9, "{t:?} {fit:?}");
            assert!((fit.t_b.unwrap() - t.1).abs() < 1e-9, "{t:?} {fit:?}");
            assert_eq!(fit.method, CalibrationMethod::VisibilityFit);
            assert_eq!((fit.eta_a, fit.eta_b), (Some(0.9), Some(0.8)));
        }
    }

    #[test]
    fn noisy_fit_stays_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let clean = synthetic_sweep(0.05, (0.8, 0.7));
        for _ in 0..100 {
            let data: Vec<_> = clean
                .iter()
                .map(|s| {
                    let mut jitter = |v: f64| (v * (1.0 + noise.sample(&mut rng))).clamp(0.0, 1.0);
                    VisibilitySample {
                        g2: s.g2,
                        v_a: jitter(s.v_a),
                        v_b: jitter(s.v_b),
                        v_cc: jitter(s.v_cc),
                    }
                })
                .collect();
            let fit = fit_transmissions_from_visibility_sweep(0.05, &data, (1.0, 1.0), DEFAULT_RESIDUAL_CEILING).unwrap();
            assert!((fit.t_a.unwrap() - 0.8).abs() < 0.05 && (fit.t_b.unwrap() - 0.7).abs() < 0.05);
        }
    }

    #[test]
    fn zero_visibilities_diverge() {
        let data: Vec<_> = (1..=5)
            .map(|i| VisibilitySample {
                g2: 0.01 * i as f64,
                v_a: 0.0,
                v_b: 0.0,
                v_cc: 0.0,
            })
            .collect();
        assert!(matches!(
            fit_transmissions_from_visibility_sweep(0.05, &data, (1.0, 1.0), DEFAULT_RESIDUAL_CEILING),
            Err(CalibrationError::FitDiverged { .. })
        ));
        assert_eq!(
            fit_transmissions_from_visibility_sweep(0.05, &data[..2], (1.0, 1.0), 0.05),
            Err(CalibrationError::TooFewPoints(2))
        );
    }

    #[test]
    fn inconsistent_data_exceeds_ceiling() {
        let data: Vec<_> = (1..=5)
            .map(|i| VisibilitySample {
                g2: 0.01 * i as f64,
                v_a: if i % 2 == 0 { 1.0 } else { 0.0 },
                v_b: 0.0,
                v_cc: 1.0,
            })
            .collect();
        assert!(matches!(
            fit_transmissions_from_visibility_sweep(0.05, &data, (1.0, 1.0), 0.05),
            Err(CalibrationError::FitDiverged { .. })
        ));
    }

    #[test]
    fn unconstrained_recommends_singles() {
        let r = recommend_strategy(&cfg(0.05, 0.0, (0.9, 0.9), (0.5, 0.5)), None).unwrap();
        assert_eq!(r.observable, Observable::SinglesA);
        assert!(r.g2_setting >= 10.0 * 0.05);
        assert_eq!(r.rationale, Rationale::AsymptoticSingles);
    }

    #[test]
    fn constrained_low_gain_prefers_coincidences() {
        let r = recommend_strategy(&cfg(0.05, 0.0, (0.2, 0.22), (0.9, 0.9)), Some(0.05)).unwrap();
        assert_eq!(r.observable, Observable::Coincidences);
    }

    #[test]
    fn recommendation_is_grid_maximum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let c = cfg(0.05, 0.0, (rng.gen(), rng.gen()), (rng.gen(), rng.gen()));
            let g2_max = rng.gen_range(0.0..0.5);
            let r = recommend_strategy(&c, Some(g2_max)).unwrap();
            for g2 in recommendation_grid(g2_max).unwrap() {
                let ci = c.with_g2(g2).unwrap();
                for obs in Observable::ALL {
                    assert!(fisher_max_value(&ci, obs) <= r.fisher);
                }
            }
            assert_eq!(r.fisher, fisher_max_value(&c.with_g2(r.g2_setting).unwrap(), r.observable));
        }
    }
}
