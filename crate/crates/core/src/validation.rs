//! Cross-engine property suite behind `su11 validate`.
//!
//! Each property draws its cases from a fixed-seed generator, so a run is
//! reproducible; the first failing case is kept as a JSON counterexample.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analytic::{self, fisher_max_value, fisher_upper_bound, loss_balanced_g2, visibilities, Fringe};
use crate::bogoliubov::{self, closed_form_mean_photon_numbers, closed_form_transfer, compose, pseudo_unitarity_defect};
use crate::calibration::{
    klyshko_efficiencies, recommend_strategy, recommendation_grid, transmissions_at_loss_balance, CountRecord,
};
use crate::comparison::{
    advantage_by_direct_comparison, advantage_threshold, asymptotic_conditional, singles_vs_coincidence_region,
    su2_fisher_max_equal_resources, su2_fringe, su2_optimal_reflectivity, validate_su2, AdvantageKind, Su2Config,
};
use crate::fock::{
    self, fisher_numeric_all, loss_channel, loss_kraus, phase_shift, run_interferometer, two_mode_squeezer,
    ClickOutcome, ClickPovm, Mode, PhaseResponse, TwoModeDensityMatrix, DEFAULT_CUTOFF, DEFAULT_PHI_STEP,
};
use crate::model::{validate, Field, InterferometerConfig, ModelError, Observable, ValidatedConfig};
use crate::optimize::golden_section_max;

const SEED: u64 = 0x5111_2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Fast,
    Full,
}

impl Level {
    fn pick(self, fast: usize, full: usize) -> usize {
        match self {
            Level::Fast => fast,
            Level::Full => full,
        }
    }
}

/// Deliberate defects used to check that the suite catches them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Faults {
    /// Subtract instead of add the photon-loss Kraus terms with `k ≥ 1`.
    pub loss_sign: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub module: &'static str,
    pub name: &'static str,
    pub samples: usize,
    pub passed: bool,
    /// Largest value of the property's error metric over the cases run.
    pub worst: f64,
    pub tolerance: f64,
    pub counterexample: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub level: Level,
    pub outcomes: Vec<PropertyOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn first_failure(&self) -> Option<&PropertyOutcome> {
        self.outcomes.iter().find(|o| !o.passed)
    }
}

struct Tracker {
    outcome: PropertyOutcome,
}

impl Tracker {
    fn new(module: &'static str, name: &'static str, tolerance: f64) -> Self {
        Self {
            outcome: PropertyOutcome {
                module,
                name,
                samples: 0,
                passed: true,
                worst: 0.0,
                tolerance,
                counterexample: None,
            },
        }
    }

    /// Record a case with error metric `err`; it fails when `err` exceeds the
    /// tolerance. Returns false once a counterexample is held.
    fn metric(&mut self, err: f64, case: impl FnOnce() -> Value) -> bool {
        let ok = err <= self.outcome.tolerance;
        self.check(ok, err, case)
    }

    fn check(&mut self, ok: bool, err: f64, case: impl FnOnce() -> Value) -> bool {
        self.outcome.samples += 1;
        if err.is_nan() || err > self.outcome.worst {
            self.outcome.worst = err;
        }
        if !ok && self.outcome.passed {
            self.outcome.passed = false;
            self.outcome.counterexample = Some(case());
        }
        self.outcome.passed
    }

    fn finish(self) -> PropertyOutcome {
        self.outcome
    }
}

fn random_config(rng: &mut ChaCha8Rng, g_max: f64) -> ValidatedConfig {
    validate(InterferometerConfig {
        g1: rng.gen_range(0.0..g_max),
        g2: rng.gen_range(0.0..g_max),
        t_a: rng.gen(),
        t_b: rng.gen(),
        eta_a: rng.gen(),
        eta_b: rng.gen(),
        phi: rng.gen_range(0.0..TAU),
        theta: 0.0,
    })
    .expect("sampled inside bounds")
}

fn config_json(c: &ValidatedConfig) -> Value {
    serde_json::to_value(c.get()).expect("plain struct")
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Run every property at the given level.
pub fn run_suite(level: Level) -> ValidationReport {
    run_suite_with(level, Faults::default())
}

pub fn run_suite_with(level: Level, faults: Faults) -> ValidationReport {
    let properties: Vec<fn(Level, Faults) -> PropertyOutcome> = vec![
        validation_totality,
        visibility_bounds,
        fisher_bounds,
        coincidence_dominance,
        coincidence_saturation,
        blocked_mode_kills_interference,
        pseudo_unitarity,
        closed_form_moments,
        low_gain_limit,
        trace_preservation,
        pipeline_state_validity,
        povm_completeness,
        exact_moment_agreement,
        engine_agreement,
        breakdown_monotonic,
        multiphoton_fraction,
        region_consistency,
        threshold_consistency,
        reflectivity_optimality,
        asymptotic_consistency,
        klyshko_roundtrip,
        loss_balance_inversion,
        recommendation_optimality,
    ];
    let outcomes = properties.into_iter().map(|p| p(level, faults)).collect();
    ValidationReport { level, outcomes }
}

// ---------------------------------------------------------------- model

fn validation_totality(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("model", "validation-totality", 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let fields = [Field::G1, Field::G2, Field::TA, Field::TB, Field::EtaA, Field::EtaB];
    for _ in 0..level.pick(10_000, 100_000) {
        let v: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.2..1.3)).collect();
        let config = InterferometerConfig {
            g1: v[0],
            g2: v[1],
            t_a: v[2],
            t_b: v[3],
            eta_a: v[4],
            eta_b: v[5],
            phi: rng.gen_range(-10.0..10.0),
            theta: rng.gen_range(-10.0..10.0),
        };
        let expected = fields.iter().zip(&v).enumerate().find_map(|(i, (f, &x))| {
            let bad = if i < 2 { x < 0.0 } else { !(0.0..=1.0).contains(&x) };
            bad.then_some(*f)
        });
        let ok = match (validate(config), expected) {
            (Ok(c), None) => (0.0..TAU).contains(&c.phi) && (0.0..TAU).contains(&c.theta),
            (Err(ModelError::OutOfRange { field, .. }), Some(f)) => field == f,
            _ => false,
        };
        if !t.check(ok, if ok { 0.0 } else { 1.0 }, || json!(config)) {
            break;
        }
    }
    t.finish()
}

// ---------------------------------------------------------------- analytic

fn visibility_bounds(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("analytic", "visibility-bounds", 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    for _ in 0..level.pick(10_000, 100_000) {
        let c = random_config(&mut rng, 0.3);
        let v = visibilities(&c);
        let err = [
            v.v_a - c.t_b.sqrt(),
            v.v_b - c.t_a.sqrt(),
            v.v_cc - 1.0,
            -v.v_a,
            -v.v_b,
            -v.v_cc,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if !t.metric(err, || config_json(&c)) {
            break;
        }
    }
    t.finish()
}

fn fisher_bounds(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("analytic", "fisher-bounds", 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    for _ in 0..level.pick(2_000, 20_000) {
        let c = random_config(&mut rng, 0.1);
        let bound = fisher_upper_bound(&c);
        for obs in Observable::ALL {
            let r = match analytic::fisher_report(&c, obs) {
                Ok(r) => r,
                Err(_) => continue,
            };
            let scale = bound.max(f64::MIN_POSITIVE);
            let err = [
                -r.fi_at_phi / scale,
                (r.fi_at_phi - r.fi_max) / scale,
                (r.fi_max - bound) / scale,
            ]
            .into_iter()
            .fold(0.0, f64::max);
            if !t.metric(err, || json!({ "config": config_json(&c), "observable": obs })) {
                return t.finish();
            }
        }
    }
    t.finish()
}

fn coincidence_dominance(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("analytic", "coincidence-dominance", 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    for _ in 0..level.pick(10_000, 100_000) {
        let c = validate(
            InterferometerConfig::lossless(rng.gen_range(0.0..0.3), rng.gen_range(0.0..0.3))
                .with_transmissions(rng.gen(), rng.gen()),
        )
        .expect("in range");
        let cc = fisher_max_value(&c, Observable::Coincidences);
        let singles = fisher_max_value(&c, Observable::SinglesA).max(fisher_max_value(&c, Observable::SinglesB));
        if !t.metric(singles - cc, || config_json(&c)) {
            break;
        }
    }
    t.finish()
}

fn coincidence_saturation(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("analytic", "coincidence-saturation", 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    for _ in 0..level.pick(1_000, 10_000) {
        let c = random_config(&mut rng, 0.1);
        let plateau = 4.0 * c.eta_a * c.eta_b * c.t_a * c.t_b * c.g1 * c.g1;
        let g2 = loss_balanced_g2(c.g1, c.t_a, c.t_b) * rng.gen_range(1.0..100.0);
        let ci = c.with_g2(g2).expect("finite gain");
        let err = rel(fisher_max_value(&ci, Observable::Coincidences), plateau);
        if !t.metric(err, || config_json(&ci)) {
            break;
        }
    }
    t.finish()
}

fn blocked_mode_kills_interference(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("analytic", "blocked-mode-kills-interference", 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    for _ in 0..level.pick(1_000, 10_000) {
        let c = random_config(&mut rng, 0.1);
        let blocked = validate(InterferometerConfig { t_b: 0.0, ..*c.get() }).expect("in range");
        let err = Observable::ALL
            .iter()
            .map(|&obs| {
                let f = Fringe::of(&blocked, obs);
                (f.probability(0.0) - f.probability(PI)).abs()
            })
            .fold(0.0, f64::max);
        if !t.metric(err, || config_json(&blocked)) {
            break;
        }
    }
    t.finish()
}

// ---------------------------------------------------------------- bogoliubov

fn pseudo_unitarity(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("bogoliubov", "pseudo-unitarity", 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    for _ in 0..level.pick(10_000, 100_000) {
        let mut c = *random_config(&mut rng, 1.0).get();
        c.theta = rng.gen_range(0.0..TAU);
        let c = validate(c).expect("in range");
        if !t.metric(pseudo_unitarity_defect(&compose(&c)), || config_json(&c)) {
            break;
        }
    }
    t.finish()
}

fn closed_form_moments(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("bogoliubov", "closed-form-moments", 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    for _ in 0..level.pick(10_000, 100_000) {
        let mut c = *random_config(&mut rng, 1.0).get();
        c.theta = rng.gen_range(0.0..TAU);
        let c = validate(c).expect("in range");
        let m = bogoliubov::moments(&c);
        let (n_a, n_b) = closed_form_mean_photon_numbers(&c);
        let matrix_gap = (closed_form_transfer(&c) - compose(&c))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let err = matrix_gap.max(rel(m.n_a, n_a)).max(rel(m.n_b, n_b));
        if !t.metric(err, || config_json(&c)) {
            break;
        }
    }
    t.finish()
}

fn low_gain_limit(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("bogoliubov", "low-gain-limit", 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    for _ in 0..level.pick(10_000, 100_000) {
        let c = random_config(&mut rng, 0.02);
        let g_max = c.g1.max(c.g2);
        let exact = bogoliubov::lowgain_click_probabilities(&c);
        let approx = analytic::click_probabilities(&c).expect("low gain, theta 0");
        // metric in units of the allowed remainder: 10 g⁴ for singles and
        // 40 g⁴ for coincidences, where the accidental ⟨n_a⟩⟨n_b⟩ alone
        // reaches 16 g⁴ (lossless, T = 1, φ = 0; total ≈ 37 g⁴ there)
        let err = Observable::ALL
            .iter()
            .map(|&o| {
                let gap = (exact.get(o) - approx.get(o)).abs();
                let scale = if o == Observable::Coincidences { 40.0 } else { 10.0 };
                if g_max == 0.0 { gap } else { gap / (scale * g_max.powi(4)) }
            })
            .fold(0.0, f64::max);
        if !t.metric(err, || config_json(&c)) {
            break;
        }
    }
    t.finish()
}

// ---------------------------------------------------------------- fock

fn random_state(rng: &mut ChaCha8Rng, d: usize) -> TwoModeDensityMatrix {
    let dim = d * d;
    let g = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    TwoModeDensityMatrix::from_matrix(rho / tr, d, 0.0).expect("valid cutoff")
}

/// The photon-loss channel, or a sign-corrupted variant of it.
type Stage<'a> = Box<dyn Fn(&TwoModeDensityMatrix) -> TwoModeDensityMatrix + 'a>;

fn lossy(rho: &TwoModeDensityMatrix, mode: Mode, t: f64, faults: Faults) -> TwoModeDensityMatrix {
    if !faults.loss_sign {
        return loss_channel(rho, mode, t).expect("transmission in range");
    }
    let d = rho.cutoff();
    let id = DMatrix::<f64>::identity(d, d);
    let mut out = DMatrix::<Complex64>::zeros(d * d, d * d);
    for (k, kraus) in loss_kraus(t, d).iter().enumerate() {
        let full = match mode {
            Mode::A => kraus.kronecker(&id),
            Mode::B => id.kronecker(kraus),
        }
        .map(|x| Complex64::new(x, 0.0));
        let term = &full * rho.matrix() * full.adjoint();
        if k == 0 {
            out += term;
        } else {
            out -= term;
        }
    }
    TwoModeDensityMatrix::from_matrix(out, d, rho.leakage()).expect("valid cutoff")
}

fn trace_preservation(level: Level, faults: Faults) -> PropertyOutcome {
    let d = 6;
    let mut t = Tracker::new("fock", "trace-preservation", d as f64 * 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    for _ in 0..level.pick(20, 200) {
        let rho = random_state(&mut rng, d);
        let (ta, tb) = (rng.gen(), rng.gen());
        let out = lossy(&lossy(&rho, Mode::A, ta, faults), Mode::B, tb, faults);
        let err = (out.trace() - Complex64::new(1.0, 0.0)).norm() - out.leakage();
        if !t.metric(err, || json!({ "cutoff": d, "t_a": ta, "t_b": tb })) {
            break;
        }
    }
    t.finish()
}

fn pipeline_state_validity(level: Level, faults: Faults) -> PropertyOutcome {
    // metric: worst of hermiticity / 1e-12, −λ_min / 1e-10 and trace excess / 1e-10
    let mut t = Tracker::new("fock", "hermiticity-positivity-trace", 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 10);
    let d = DEFAULT_CUTOFF;
    for _ in 0..level.pick(3, 20) {
        let c = random_config(&mut rng, 0.3);
        let s1 = two_mode_squeezer(c.g1, 0.0, d).expect("cutoff");
        let s2 = two_mode_squeezer(c.g2, c.theta, d).expect("cutoff");
        let leakage = fock::pipeline_leakage(&c, d);
        let mut rho = s1.apply(&TwoModeDensityMatrix::vacuum(d).expect("cutoff"));
        let stages: Vec<Stage> = vec![
            Box::new(|r| phase_shift(r, Mode::A, c.phi)),
            Box::new(|r| lossy(r, Mode::A, c.t_a, faults)),
            Box::new(|r| lossy(r, Mode::B, c.t_b, faults)),
            Box::new(|r| s2.apply(r)),
            Box::new(|r| lossy(r, Mode::A, c.eta_a, faults)),
            Box::new(|r| lossy(r, Mode::B, c.eta_b, faults)),
        ];
        let mut worst: f64 = 0.0;
        for stage in std::iter::once(None).chain(stages.iter().map(Some)) {
            if let Some(f) = stage {
                rho = f(&rho);
            }
            let tr = rho.trace().re;
            let trace_excess = (tr - 1.0 - 1e-10).max(1.0 - leakage - 1e-10 - tr).max(0.0);
            worst = worst
                .max(rho.hermiticity_defect() / 1e-12)
                .max(-rho.min_eigenvalue() / 1e-10)
                .max(if trace_excess > 0.0 { 1.0 + trace_excess / 1e-10 } else { 0.0 });
        }
        if !t.metric(worst, || config_json(&c)) {
            break;
        }
    }
    t.finish()
}

fn povm_completeness(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("fock", "povm-completeness", 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 11);
    for d in 2..=12 {
        let povm = ClickPovm::new(d).expect("cutoff");
        if !t.metric(povm.completeness_defect(), || json!({ "cutoff": d })) {
            return t.finish();
        }
    }
    for _ in 0..level.pick(20, 200) {
        let d = rng.gen_range(2..=8);
        let rho = random_state(&mut rng, d);
        let povm = ClickPovm::new(d).expect("cutoff");
        let total: f64 = ClickOutcome::ALL.iter().map(|&o| povm.probability(&rho, o)).sum();
        if !t.metric((total - 1.0).abs(), || json!({ "cutoff": d })) {
            break;
        }
    }
    t.finish()
}

/// Fock-space ⟨n⟩ against the exact moments. The allowance adds the
/// truncation leakage estimate, which matters only when both gains approach
/// 0.3 on a constructive fringe.
fn exact_moment_agreement(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("fock", "exact-moment-agreement", 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 12);
    let d = DEFAULT_CUTOFF;
    for _ in 0..level.pick(10, 100) {
        let c = random_config(&mut rng, 0.3);
        let rho = run_interferometer(&c, d).expect("valid config");
        let (n_a, n_b, _) = rho.photon_moments();
        let m = bogoliubov::moments(&c);
        let gap = (n_a - m.n_a).abs().max((n_b - m.n_b).abs());
        let allowed = 1e-6 + d as f64 * rho.leakage();
        if !t.metric(gap / allowed, || config_json(&c)) {
            break;
        }
    }
    t.finish()
}

fn engine_agreement(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("fock", "engine-agreement", 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 13);
    for _ in 0..level.pick(8, 60) {
        let c = validate(InterferometerConfig {
            g1: 0.05,
            g2: rng.gen_range(0.005..0.1),
            t_a: rng.gen_range(0.1..1.0),
            t_b: rng.gen_range(0.1..1.0),
            eta_a: rng.gen_range(0.1..1.0),
            eta_b: rng.gen_range(0.1..1.0),
            phi: rng.gen_range(0.0..TAU),
            theta: 0.0,
        })
        .expect("in range");
        let response = PhaseResponse::new(&c, DEFAULT_CUTOFF).expect("valid config");
        let numeric = fisher_numeric_all(&c, DEFAULT_CUTOFF, DEFAULT_PHI_STEP);
        let mut worst: f64 = 0.0;
        for (k, obs) in Observable::ALL.iter().enumerate() {
            let f = Fringe::of(&c, *obs);
            // probabilities are compared on the scale of the fringe mean so
            // that interference nulls do not blow up the ratio
            let p_gap = (response.probability(*obs, c.phi) - f.probability(c.phi)).abs() / (f.efficiency * f.incoherent);
            worst = worst.max(p_gap);
            match &numeric {
                Ok(r) => worst = worst.max(rel(r[k].fi_max, fisher_max_value(&c, *obs))),
                Err(_) => worst = f64::INFINITY,
            }
        }
        if !t.metric(worst, || config_json(&c)) {
            break;
        }
    }
    t.finish()
}

fn breakdown_monotonic(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("fock", "breakdown-monotonic", 1e-9);
    let points = level.pick(12, 40);
    let base = validate(InterferometerConfig::lossless(0.05, 0.15).with_transmissions(0.95, 0.90)).expect("in range");
    for obs in Observable::ALL {
        let mut previous = f64::NEG_INFINITY;
        for i in 0..points {
            let g2 = 0.15 + 0.45 * i as f64 / (points - 1) as f64;
            let c = base.with_g2(g2).expect("in range");
            let numeric = match fisher_numeric_all(&c, DEFAULT_CUTOFF, DEFAULT_PHI_STEP) {
                Ok(r) => r,
                Err(e) => {
                    t.check(false, f64::INFINITY, || json!({ "g2": g2, "error": e.to_string() }));
                    return t.finish();
                }
            };
            let idx = Observable::ALL.iter().position(|o| *o == obs).expect("listed");
            let analytic = fisher_max_value(&c, obs);
            let deviation = (analytic - numeric[idx].fi_max) / analytic;
            if !t.metric(previous - deviation, || json!({ "g2": g2, "observable": obs, "deviation": deviation })) {
                return t.finish();
            }
            previous = deviation;
        }
    }
    t.finish()
}

fn multiphoton_fraction(_: Level, _: Faults) -> PropertyOutcome {
    // metric: |log2(ratio / 5%)|, passing within a factor of 2
    let mut t = Tracker::new("fock", "multiphoton-fraction", 1.0);
    let c = validate(
        InterferometerConfig::lossless(0.05, 0.2)
            .with_transmissions(0.95, 0.90)
            .with_phi(PI / 2.0),
    )
    .expect("in range");
    let rho = run_interferometer(&c, DEFAULT_CUTOFF).expect("valid config");
    for mode in [Mode::A, Mode::B] {
        let reduced = rho.reduced(mode);
        let one = reduced[(1, 1)].re;
        let many: f64 = (2..DEFAULT_CUTOFF).map(|n| reduced[(n, n)].re).sum();
        let ratio = many / one;
        t.metric((ratio / 0.05).log2().abs(), || json!({ "mode": format!("{mode:?}"), "ratio": ratio }));
    }
    t.finish()
}

// ---------------------------------------------------------------- comparison

fn region_consistency(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("comparison", "region-consistency", 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 14);
    let g1: f64 = 0.05;
    let grid: Vec<f64> = (0..200).map(|i| 1e-3 * 1e3f64.powf(i as f64 / 199.0)).collect();
    for _ in 0..level.pick(2_000, 10_000) {
        let base = validate(
            InterferometerConfig::lossless(g1, 0.0)
                .with_transmissions(rng.gen(), rng.gen())
                .with_efficiencies(rng.gen_range(0.01..1.0), rng.gen_range(0.0..1.0)),
        )
        .expect("in range");
        let verdict = match singles_vs_coincidence_region(&base, Observable::SinglesA) {
            Ok(v) => v,
            Err(_) => continue,
        };
        for &g2 in &grid {
            let x = g2 * g2 / (g1 * g1);
            let near_boundary = [verdict.alpha, verdict.beta]
                .iter()
                .flatten()
                .any(|b| (x - b).abs() <= 1e-9 * b.abs().max(1.0));
            let c = base.with_g2(g2).expect("in range");
            let fa = fisher_max_value(&c, Observable::SinglesA);
            let fcc = fisher_max_value(&c, Observable::Coincidences);
            // equal maxima up to rounding are boundary points as well
            if near_boundary || (fa - fcc).abs() <= 1e-12 * fa.max(fcc) {
                continue;
            }
            let ok = verdict.singles_win(x) == (fa > fcc);
            if !t.check(ok, if ok { 0.0 } else { 1.0 }, || json!({ "config": config_json(&c), "region": verdict })) {
                return t.finish();
            }
        }
    }
    t.finish()
}

fn threshold_consistency(level: Level, _: Faults) -> PropertyOutcome {
    // metric: grid steps between the closed-form threshold and the crossover
    let mut t = Tracker::new("comparison", "threshold-consistency", 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 15);
    let grid: Vec<f64> = (0..400).map(|i| 1e-3 * 1e6f64.powf(i as f64 / 399.0)).collect();
    for obs in Observable::ALL {
        for kind in AdvantageKind::ALL {
            for _ in 0..level.pick(100, 1_000) {
                let c = validate(
                    InterferometerConfig::lossless(0.05, 0.0)
                        .with_transmissions(rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0))
                        .with_efficiencies(rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0)),
                )
                .expect("in range");
                let em = c.eta_max();
                let verdict = advantage_threshold(&c, em, obs, kind);
                let crossing = grid.iter().position(|&x| {
                    let ci = c.with_g2(c.g1 * x.sqrt()).expect("in range");
                    advantage_by_direct_comparison(&ci, em, obs, kind)
                });
                let steps = match (verdict.threshold_gain_ratio, crossing) {
                    (Some(th), Some(k)) if th > grid[0] => {
                        // position of the threshold in grid steps
                        let pos = (th / grid[0]).ln() / (grid[1] / grid[0]).ln();
                        (k as f64 - pos).abs()
                    }
                    (Some(th), Some(k)) if th <= grid[0] => k as f64,
                    (Some(th), None) if th > grid[grid.len() - 1] => 0.0,
                    (None, None) => 0.0,
                    _ => f64::INFINITY,
                };
                if !t.metric(steps, || json!({ "config": config_json(&c), "verdict": verdict })) {
                    return t.finish();
                }
            }
        }
    }
    t.finish()
}

fn reflectivity_optimality(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("comparison", "reflectivity-optimality", 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 16);
    for _ in 0..level.pick(200, 2_000) {
        let base = Su2Config {
            alpha_sq: 0.005,
            r: 0.5,
            t_a: rng.gen_range(0.01..1.0),
            t_b: rng.gen_range(0.01..1.0),
            eta_a: rng.gen_range(0.01..1.0),
            eta_b: rng.gen_range(0.01..1.0),
            phi: 0.0,
        };
        let c = validate_su2(base).expect("in range");
        for obs in [Observable::SinglesA, Observable::SinglesB] {
            let fi = |r: f64| su2_fringe(&c.with_r(r).expect("in range"), obs).expect("singles").fisher_max();
            let (r_best, _) = golden_section_max(fi, 0.0, 1.0, 1e-12);
            let r_star = su2_optimal_reflectivity(c.t_a, c.t_b, obs).expect("non-degenerate");
            if !t.metric((r_best - r_star).abs(), || json!({ "config": base, "observable": obs })) {
                return t.finish();
            }
        }
    }
    t.finish()
}

/// Margin in `T_A + T_B` around 1 excluded from the asymptotic check: at
/// `g2²/g1² = 10³` the singles maximum still sits a relative `O(T_A/10³)`
/// below its limit.
pub const ASYMPTOTIC_MARGIN: f64 = 2e-3;

fn asymptotic_consistency(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("comparison", "asymptotic-consistency", 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 17);
    let g1: f64 = 0.05;
    for _ in 0..level.pick(10_000, 100_000) {
        let (ta, tb): (f64, f64) = (rng.gen(), rng.gen());
        if (ta + tb - 1.0).abs() <= ASYMPTOTIC_MARGIN {
            continue;
        }
        let eta: f64 = rng.gen_range(0.01..1.0);
        let c = validate(
            InterferometerConfig::lossless(g1, g1 * 1e3f64.sqrt())
                .with_transmissions(ta, tb)
                .with_efficiencies(eta, eta),
        )
        .expect("in range");
        let su11 = fisher_max_value(&c, Observable::SinglesA);
        let su2 = su2_fisher_max_equal_resources(g1, ta, tb, eta);
        let ok = (su11 > su2) == asymptotic_conditional(ta, tb);
        if !t.check(ok, if ok { 0.0 } else { 1.0 }, || config_json(&c)) {
            break;
        }
    }
    t.finish()
}

// ---------------------------------------------------------------- calibration

fn klyshko_roundtrip(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("calibration", "klyshko-roundtrip", 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 18);
    for _ in 0..level.pick(10_000, 100_000) {
        let (eta_a, eta_b): (f64, f64) = (rng.gen_range(0.001..1.0), rng.gen_range(0.001..1.0));
        let g2: f64 = rng.gen_range(0.001..0.3);
        let pairs = 1e6 * g2 * g2;
        let counts = CountRecord::new(pairs * eta_a, pairs * eta_b, pairs * eta_a * eta_b, "").expect("consistent");
        let (ea, eb) = klyshko_efficiencies(&counts).expect("non-zero");
        if !t.metric(rel(ea, eta_a).max(rel(eb, eta_b)), || json!({ "eta_a": eta_a, "eta_b": eta_b, "g2": g2 })) {
            break;
        }
    }
    t.finish()
}

fn loss_balance_inversion(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("calibration", "loss-balance-inversion", 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 19);
    for _ in 0..level.pick(10_000, 100_000) {
        let (ta, tb): (f64, f64) = (rng.gen(), rng.gen());
        let g1 = rng.gen_range(0.001..0.1);
        let c = validate(InterferometerConfig::lossless(g1, loss_balanced_g2(g1, ta, tb)).with_transmissions(ta, tb))
            .expect("in range");
        let v = visibilities(&c);
        let (fa, fb) = transmissions_at_loss_balance(v.v_a, v.v_b);
        if !t.metric((fa - ta).abs().max((fb - tb).abs()), || config_json(&c)) {
            break;
        }
    }
    t.finish()
}

fn recommendation_optimality(level: Level, _: Faults) -> PropertyOutcome {
    let mut t = Tracker::new("calibration", "recommendation-optimality", 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 20);
    for _ in 0..level.pick(20, 200) {
        let c = random_config(&mut rng, 0.1);
        let g2_max = rng.gen_range(0.0..0.3);
        let r = recommend_strategy(&c, Some(g2_max)).expect("valid grid");
        let best = recommendation_grid(g2_max)
            .expect("valid grid")
            .into_iter()
            .flat_map(|g2| {
                let ci = c.with_g2(g2).expect("in range");
                Observable::ALL.map(|o| fisher_max_value(&ci, o))
            })
            .fold(0.0, f64::max);
        if !t.metric(best - r.fisher, || json!({ "config": config_json(&c), "g2_max": g2_max })) {
            break;
        }
    }
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suite_passes() {
        let report = run_suite(Level::Fast);
        let failures: Vec<_> = report.outcomes.iter().filter(|o| !o.passed).collect();
        assert!(failures.is_empty(), "{}", serde_json::to_string_pretty(&failures).unwrap());
    }

    #[test]
    fn corrupted_loss_sign_is_caught() {
        let o = trace_preservation(Level::Fast, Faults { loss_sign: true });
        assert!(!o.passed);
        assert!(o.counterexample.is_some());
        assert!(trace_preservation(Level::Fast, Faults::default()).passed);
    }
}
