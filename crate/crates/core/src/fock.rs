//! Truncated two-mode Fock-space simulation.
//!
//! Each mode keeps the number states `|0⟩ … |d−1⟩`; a two-mode operator is a
//! `d² × d²` matrix indexed by `n_a · d + n_b`. Squeezers are exponentials of
//! the truncated generator, losses are binomial Kraus channels, and detectors
//! are ideal click/no-click projectors behind a loss channel.
//!
//! Only the phase shifter depends on `φ`. [`PhaseResponse`] exploits this by
//! pulling the click projectors back through everything after the phase
//! shifter once, which turns every click probability into a short Fourier
//! series in `φ`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ClickProbabilities, Engine, FisherReport, ModelError, Observable, ValidatedConfig};
use crate::optimize::grid_then_golden_max;

/// Per-mode cutoff used unless configured otherwise.
pub const DEFAULT_CUTOFF: usize = 10;
/// Central-difference step for `∂_φ p`, in radians.
pub const DEFAULT_PHI_STEP: f64 = 1e-4;
/// Truncation leakage above which a [`TruncationWarning`] is raised.
pub const LEAKAGE_WARNING_THRESHOLD: f64 = 1e-6;
/// Phase grid used to bracket the maximum of the numeric FI.
pub const PHASE_GRID_POINTS: usize = 721;
/// Probabilities below this are treated as zero when forming `1/p`.
pub const PROBABILITY_FLOOR: f64 = 1e-15;
/// Largest tolerated relative error of the finite-difference derivative.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("cutoff must be at least 2, got {0}")]
    InvalidCutoff(usize),
    #[error("transmission {0} outside [0, 1]")]
    InvalidTransmission(f64),
    #[error("phase step {0} outside (0, 1e-2]")]
    InvalidPhiStep(f64),
    #[error("finite-difference derivative unstable at phi = {phi}: relative error {relative_error:e}")]
    DerivativeUnstable { phi: f64, relative_error: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Probability weight that the truncation may have dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationWarning {
    pub leakage: f64,
    pub cutoff: usize,
}

impl TruncationWarning {
    fn check(leakage: f64, cutoff: usize) -> Option<Self> {
        (leakage > LEAKAGE_WARNING_THRESHOLD).then_some(Self { leakage, cutoff })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

fn check_cutoff(d: usize) -> Result<(), FockError> {
    if d < 2 {
        Err(FockError::InvalidCutoff(d))
    } else {
        Ok(())
    }
}

#[inline]
fn index(d: usize, n_a: usize, n_b: usize) -> usize {
    n_a * d + n_b
}

/// Basis indices grouped by `n_a − n_b`, each group ordered by `n_a`. The
/// squeezers, the phase shift and the click POVM all preserve this
/// difference, so their matrices are block diagonal in these groups.
fn difference_blocks(d: usize) -> Vec<Vec<(usize, usize)>> {
    (-(d as isize - 1)..d as isize)
        .map(|shift| {
            (0..d)
                .filter_map(|n_a| {
                    let n_b = n_a as isize - shift;
                    (0..d as isize).contains(&n_b).then_some((n_a, n_b as usize))
                })
                .collect()
        })
        .collect()
}

/// Weight a vacuum-input two-mode squeezer with gain `g` puts outside the
/// cutoff: `1 − Σ_{n<d} tanh²ⁿg / cosh²g = tanh²ᵈ g`.
pub fn vacuum_leakage(g: f64, d: usize) -> f64 {
    g.tanh().powi(2 * d as i32)
}

/// Density matrix of modes A and B.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeDensityMatrix {
    rho: DMatrix<Complex64>,
    cutoff: usize,
    leakage: f64,
}

impl TwoModeDensityMatrix {
    pub fn vacuum(d: usize) -> Result<Self, FockError> {
        check_cutoff(d)?;
        let mut rho = DMatrix::zeros(d * d, d * d);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        Ok(Self {
            rho,
            cutoff: d,
            leakage: 0.0,
        })
    }

    /// `|n_a, n_b⟩⟨n_a, n_b|`.
    pub fn number_state(d: usize, n_a: usize, n_b: usize) -> Result<Self, FockError> {
        check_cutoff(d)?;
        let mut psi = DVector::zeros(d * d);
        psi[index(d, n_a, n_b)] = Complex64::new(1.0, 0.0);
        Ok(Self::from_pure(&psi, d, 0.0))
    }

    pub fn from_pure(psi: &DVector<Complex64>, d: usize, leakage: f64) -> Self {
        Self {
            rho: psi * psi.adjoint(),
            cutoff: d,
            leakage,
        }
    }

    pub fn from_matrix(rho: DMatrix<Complex64>, d: usize, leakage: f64) -> Result<Self, FockError> {
        check_cutoff(d)?;
        assert_eq!(rho.shape(), (d * d, d * d), "matrix must be d² × d²");
        Ok(Self { rho, cutoff: d, leakage })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn truncation_warning(&self) -> Option<TruncationWarning> {
        TruncationWarning::check(self.leakage, self.cutoff)
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.rho - self.rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        // the QR iteration can return -inf on nearly pure states whose
        // spectrum is mostly exact zeros; shifting by the identity avoids it
        // at a cost of one ulp of absolute precision
        let n = herm.nrows();
        let shifted = herm + DMatrix::<Complex64>::identity(n, n);
        shifted.symmetric_eigenvalues().iter().map(|x| x - 1.0).fold(f64::INFINITY, f64::min)
    }

    /// Population of `|n_a, n_b⟩`.
    pub fn population(&self, n_a: usize, n_b: usize) -> f64 {
        let i = index(self.cutoff, n_a, n_b);
        self.rho[(i, i)].re
    }

    /// Reduced state of one mode.
    pub fn reduced(&self, mode: Mode) -> DMatrix<Complex64> {
        let d = self.cutoff;
        DMatrix::from_fn(d, d, |i, j| {
            (0..d)
                .map(|k| match mode {
                    Mode::A => self.rho[(index(d, i, k), index(d, j, k))],
                    Mode::B => self.rho[(index(d, k, i), index(d, k, j))],
                })
                .sum()
        })
    }

    /// `(⟨n_a⟩, ⟨n_b⟩, ⟨n_a n_b⟩)`.
    pub fn photon_moments(&self) -> (f64, f64, f64) {
        let d = self.cutoff;
        let mut out = (0.0, 0.0, 0.0);
        for n_a in 0..d {
            for n_b in 0..d {
                let p = self.population(n_a, n_b);
                out.0 += n_a as f64 * p;
                out.1 += n_b as f64 * p;
                out.2 += (n_a * n_b) as f64 * p;
            }
        }
        out
    }
}

/// Truncated two-mode squeezer `exp[g (e^{−iθ} a†b† − e^{iθ} ab)]`, which
/// maps `a → cosh g · a + e^{−iθ} sinh g · b†` like the second-stage
/// Bogoliubov matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Squeezer {
    pub unitary: DMatrix<Complex64>,
    pub cutoff: usize,
    /// Vacuum-input leakage, see [`vacuum_leakage`].
    pub leakage: f64,
}

impl Squeezer {
    pub fn truncation_warning(&self) -> Option<TruncationWarning> {
        TruncationWarning::check(self.leakage, self.cutoff)
    }

    pub fn apply(&self, rho: &TwoModeDensityMatrix) -> TwoModeDensityMatrix {
        TwoModeDensityMatrix {
            rho: &self.unitary * &rho.rho * self.unitary.adjoint(),
            cutoff: rho.cutoff,
            leakage: rho.leakage,
        }
    }
}

pub fn two_mode_squeezer(g: f64, theta: f64, d: usize) -> Result<Squeezer, FockError> {
    check_cutoff(d)?;
    let dim = d * d;
    let up = Complex64::from_polar(g, -theta);
    // a†b† |n, n'⟩ = √((n+1)(n'+1)) |n+1, n'+1⟩ and the ab term is its
    // adjoint; the exponential is taken block by block
    let mut unitary = DMatrix::<Complex64>::zeros(dim, dim);
    for states in difference_blocks(d) {
        let m = states.len();
        let mut generator = DMatrix::<Complex64>::zeros(m, m);
        for j in 0..m - 1 {
            let (n_a, n_b) = states[j];
            let amp = (((n_a + 1) * (n_b + 1)) as f64).sqrt();
            generator[(j + 1, j)] = up * amp;
            generator[(j, j + 1)] = -up.conj() * amp;
        }
        let block = generator.exp();
        for (i, &(ra, rb)) in states.iter().enumerate() {
            for (j, &(ca, cb)) in states.iter().enumerate() {
                unitary[(index(d, ra, rb), index(d, ca, cb))] = block[(i, j)];
            }
        }
    }
    Ok(Squeezer {
        unitary,
        cutoff: d,
        leakage: vacuum_leakage(g, d),
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `w[k][m] = ⟨m| K_k |m+k⟩ = √C(m+k, k) · √T^m · √(1−T)^k`.
fn loss_weights(t: f64, d: usize) -> Vec<Vec<f64>> {
    let (st, sr) = (t.sqrt(), (1.0 - t).sqrt());
    (0..d)
        .map(|k| {
            (0..d - k)
                .map(|m| binomial(m + k, k).sqrt() * st.powi(m as i32) * sr.powi(k as i32))
                .collect()
        })
        .collect()
}

/// Kraus operators `K_k = Σ_n √C(n,k) √T^{n−k} √(1−T)^k |n−k⟩⟨n|` of a
/// single-mode pure-loss channel.
pub fn loss_kraus(t: f64, d: usize) -> Vec<DMatrix<f64>> {
    let w = loss_weights(t, d);
    (0..d)
        .map(|k| {
            let mut m = DMatrix::zeros(d, d);
            for (j, &wk) in w[k].iter().enumerate() {
                m[(j, j + k)] = wk;
            }
            m
        })
        .collect()
}

fn check_transmission(t: f64) -> Result<(), FockError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(FockError::InvalidTransmission(t))
    }
}

/// `Σ_k (K_k ⊗ 1) ρ (K_k ⊗ 1)†` (or on mode B), evaluated index-wise.
fn apply_loss(rho: &DMatrix<Complex64>, mode: Mode, t: f64, d: usize) -> DMatrix<Complex64> {
    let w = loss_weights(t, d);
    let dim = d * d;
    let mut out = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let (ca, cb) = (col / d, col % d);
        for row in 0..dim {
            let (ra, rb) = (row / d, row % d);
            let (r, c, other_r, other_c) = match mode {
                Mode::A => (ra, ca, rb, cb),
                Mode::B => (rb, cb, ra, ca),
            };
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, wk) in w.iter().enumerate().take(d - r.max(c)) {
                let src = match mode {
                    Mode::A => (index(d, r + k, other_r), index(d, c + k, other_c)),
                    Mode::B => (index(d, other_r, r + k), index(d, other_c, c + k)),
                };
                acc += rho[src] * (wk[r] * wk[c]);
            }
            out[(row, col)] = acc;
        }
    }
    out
}

/// Heisenberg-picture loss: `Σ_k (K_k ⊗ 1)† O (K_k ⊗ 1)`.
fn apply_loss_adjoint(op: &DMatrix<Complex64>, mode: Mode, t: f64, d: usize) -> DMatrix<Complex64> {
    let w = loss_weights(t, d);
    let dim = d * d;
    let mut out = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let (ca, cb) = (col / d, col % d);
        for row in 0..dim {
            let (ra, rb) = (row / d, row % d);
            let (r, c, other_r, other_c) = match mode {
                Mode::A => (ra, ca, rb, cb),
                Mode::B => (rb, cb, ra, ca),
            };
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..=r.min(c) {
                let src = match mode {
                    Mode::A => (index(d, r - k, other_r), index(d, c - k, other_c)),
                    Mode::B => (index(d, other_r, r - k), index(d, other_c, c - k)),
                };
                acc += op[src] * (w[k][r - k] * w[k][c - k]);
            }
            out[(row, col)] = acc;
        }
    }
    out
}

pub fn loss_channel(rho: &TwoModeDensityMatrix, mode: Mode, t: f64) -> Result<TwoModeDensityMatrix, FockError> {
    check_transmission(t)?;
    Ok(TwoModeDensityMatrix {
        rho: apply_loss(&rho.rho, mode, t, rho.cutoff),
        cutoff: rho.cutoff,
        leakage: rho.leakage,
    })
}

/// Conjugation by `diag(e^{inφ})` on one mode.
pub fn phase_shift(rho: &TwoModeDensityMatrix, mode: Mode, phi: f64) -> TwoModeDensityMatrix {
    let d = rho.cutoff;
    let number = |i: usize| match mode {
        Mode::A => (i / d) as f64,
        Mode::B => (i % d) as f64,
    };
    let out = DMatrix::from_fn(d * d, d * d, |i, j| {
        rho.rho[(i, j)] * Complex64::from_polar(1.0, phi * (number(i) - number(j)))
    });
    TwoModeDensityMatrix {
        rho: out,
        cutoff: d,
        leakage: rho.leakage,
    }
}

/// Leakage estimate for a full pipeline: the vacuum-input tail of a single
/// squeezer with the combined gain `g1 + g2`, which bounds the photon
/// number the two stages can build up together.
pub fn pipeline_leakage(config: &ValidatedConfig, d: usize) -> f64 {
    vacuum_leakage(config.g1 + config.g2, d)
}

/// Propagate vacuum through the whole interferometer.
pub fn run_interferometer(config: &ValidatedConfig, d: usize) -> Result<TwoModeDensityMatrix, FockError> {
    let s1 = two_mode_squeezer(config.g1, 0.0, d)?;
    let s2 = two_mode_squeezer(config.g2, config.theta, d)?;
    let mut rho = s1.apply(&TwoModeDensityMatrix::vacuum(d)?);
    rho = phase_shift(&rho, Mode::A, config.phi);
    rho = loss_channel(&rho, Mode::A, config.t_a)?;
    rho = loss_channel(&rho, Mode::B, config.t_b)?;
    rho = s2.apply(&rho);
    rho = loss_channel(&rho, Mode::A, config.eta_a)?;
    rho = loss_channel(&rho, Mode::B, config.eta_b)?;
    rho.leakage = pipeline_leakage(config, d);
    if let Some(w) = rho.truncation_warning() {
        log::warn!("Fock cutoff {} may drop up to {:e} probability", w.cutoff, w.leakage);
    }
    Ok(rho)
}

/// Joint outcome of the two click detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClickOutcome {
    NoClickNoClick,
    ClickNoClick,
    NoClickClick,
    ClickClick,
}

impl ClickOutcome {
    pub const ALL: [ClickOutcome; 4] = [
        ClickOutcome::NoClickNoClick,
        ClickOutcome::ClickNoClick,
        ClickOutcome::NoClickClick,
        ClickOutcome::ClickClick,
    ];

    fn matches(&self, n_a: usize, n_b: usize) -> bool {
        let (a, b) = (n_a > 0, n_b > 0);
        match self {
            ClickOutcome::NoClickNoClick => !a && !b,
            ClickOutcome::ClickNoClick => a && !b,
            ClickOutcome::NoClickClick => !a && b,
            ClickOutcome::ClickClick => a && b,
        }
    }
}

/// Ideal two-detector click POVM. Every element is diagonal in the number
/// basis, so only the diagonals are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickPovm {
    cutoff: usize,
    elements: [DVector<f64>; 4],
}

impl ClickPovm {
    pub fn new(d: usize) -> Result<Self, FockError> {
        check_cutoff(d)?;
        let element = |outcome: ClickOutcome| {
            DVector::from_fn(d * d, |i, _| if outcome.matches(i / d, i % d) { 1.0 } else { 0.0 })
        };
        Ok(Self {
            cutoff: d,
            elements: ClickOutcome::ALL.map(element),
        })
    }

    pub fn element(&self, outcome: ClickOutcome) -> &DVector<f64> {
        &self.elements[outcome as usize]
    }

    /// Projector diagonal of a marginal click observable.
    pub fn observable(&self, observable: Observable) -> DVector<f64> {
        let d = self.cutoff;
        DVector::from_fn(d * d, |i, _| {
            let (a, b) = (i / d > 0, i % d > 0);
            let hit = match observable {
                Observable::SinglesA => a,
                Observable::SinglesB => b,
                Observable::Coincidences => a && b,
            };
            if hit {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Largest deviation of the summed outcome operators from identity.
    pub fn completeness_defect(&self) -> f64 {
        let sum = self.elements.iter().fold(DVector::zeros(self.cutoff * self.cutoff), |acc, e| acc + e);
        sum.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn probability(&self, rho: &TwoModeDensityMatrix, outcome: ClickOutcome) -> f64 {
        diagonal_expectation(rho, self.element(outcome))
    }
}

fn diagonal_expectation(rho: &TwoModeDensityMatrix, diag: &DVector<f64>) -> f64 {
    diag.iter()
        .enumerate()
        .map(|(i, w)| w * rho.rho[(i, i)].re)
        .sum()
}

/// Singles and coincidence probabilities of a state.
///
/// The click weights are summed directly over the populations with at least
/// one photon instead of as `1 − P(no click)`, which keeps full relative
/// precision at `p ~ 1e-6`.
pub fn click_probabilities_numeric(rho: &TwoModeDensityMatrix) -> ClickProbabilities {
    let povm = ClickPovm::new(rho.cutoff).expect("state cutoff already validated");
    let p = |obs| diagonal_expectation(rho, &povm.observable(obs)).clamp(0.0, 1.0);
    let (p_a, p_b) = (p(Observable::SinglesA), p(Observable::SinglesB));
    ClickProbabilities {
        p_a,
        p_b,
        p_cc: p(Observable::Coincidences).min(p_a).min(p_b),
        engine: Engine::Fock,
    }
}

/// Click probabilities as exact Fourier series in the internal phase.
///
/// `U† · O · U` for block-diagonal `U` and `O`.
fn conjugate_blockwise(
    op: &DMatrix<Complex64>,
    u: &DMatrix<Complex64>,
    blocks: &[Vec<(usize, usize)>],
    d: usize,
) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(op.nrows(), op.ncols());
    for states in blocks {
        let idx: Vec<usize> = states.iter().map(|&(a, b)| index(d, a, b)).collect();
        let sub = |m: &DMatrix<Complex64>| DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]);
        let ub = sub(u);
        let block = ub.adjoint() * sub(op) * ub;
        for (i, &r) in idx.iter().enumerate() {
            for (j, &c) in idx.iter().enumerate() {
                out[(r, c)] = block[(i, j)];
            }
        }
    }
    out
}

/// For the stage-1 state `|ψ⟩` and a click projector `Π` pulled back through
/// the post-phase pipeline to `O`, `p(φ) = Σ_k c_k e^{ikφ}` with
/// `c_k = Σ_{m−n=k} ψ_n* O_{nn,mm} ψ_m`. Only `k ≥ 0` is stored; `c_{−k}`
/// is the conjugate.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResponse {
    cutoff: usize,
    leakage: f64,
    harmonics: [Vec<Complex64>; 3],
}

impl PhaseResponse {
    pub fn new(config: &ValidatedConfig, d: usize) -> Result<Self, FockError> {
        let s1 = two_mode_squeezer(config.g1, 0.0, d)?;
        let s2 = two_mode_squeezer(config.g2, config.theta, d)?;
        check_transmission(config.t_a)?;
        check_transmission(config.t_b)?;
        let psi: Vec<Complex64> = (0..d).map(|n| s1.unitary[(index(d, n, n), 0)]).collect();
        let povm = ClickPovm::new(d)?;
        let u2 = &s2.unitary;
        let blocks = difference_blocks(d);

        let harmonics = Observable::ALL.map(|obs| {
            let diag = povm.observable(obs);
            let mut op = DMatrix::from_diagonal(&diag.map(|x| Complex64::new(x, 0.0)));
            op = apply_loss_adjoint(&op, Mode::B, config.eta_b, d);
            op = apply_loss_adjoint(&op, Mode::A, config.eta_a, d);
            // op is diagonal here, so U†·op·U stays block diagonal
            op = conjugate_blockwise(&op, u2, &blocks, d);
            op = apply_loss_adjoint(&op, Mode::B, config.t_b, d);
            op = apply_loss_adjoint(&op, Mode::A, config.t_a, d);
            (0..d)
                .map(|k| {
                    (0..d - k)
                        .map(|n| psi[n].conj() * op[(index(d, n, n), index(d, n + k, n + k))] * psi[n + k])
                        .sum()
                })
                .collect()
        });
        Ok(Self {
            cutoff: d,
            leakage: pipeline_leakage(config, d),
            harmonics,
        })
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn truncation_warning(&self) -> Option<TruncationWarning> {
        TruncationWarning::check(self.leakage, self.cutoff)
    }

    fn slot(observable: Observable) -> usize {
        match observable {
            Observable::SinglesA => 0,
            Observable::SinglesB => 1,
            Observable::Coincidences => 2,
        }
    }

    pub fn probability(&self, observable: Observable, phi: f64) -> f64 {
        let c = &self.harmonics[Self::slot(observable)];
        let mut p = c[0].re;
        for (k, ck) in c.iter().enumerate().skip(1) {
            p += 2.0 * (ck * Complex64::from_polar(1.0, k as f64 * phi)).re;
        }
        p
    }

    /// Sum of harmonic magnitudes, an upper bound on `|p(φ)|`.
    fn scale(&self, observable: Observable) -> f64 {
        let c = &self.harmonics[Self::slot(observable)];
        c[0].norm() + 2.0 * c.iter().skip(1).map(|z| z.norm()).sum::<f64>()
    }

    pub fn click_probabilities(&self, phi: f64) -> ClickProbabilities {
        let p = |obs| self.probability(obs, phi).clamp(0.0, 1.0);
        let (p_a, p_b) = (p(Observable::SinglesA), p(Observable::SinglesB));
        ClickProbabilities {
            p_a,
            p_b,
            p_cc: p(Observable::Coincidences).min(p_a).min(p_b),
            engine: Engine::Fock,
        }
    }

    /// Probabilities of the four joint click outcomes.
    pub fn outcome_probabilities(&self, phi: f64) -> [f64; 4] {
        let p_a = self.probability(Observable::SinglesA, phi);
        let p_b = self.probability(Observable::SinglesB, phi);
        let p_cc = self.probability(Observable::Coincidences, phi);
        [1.0 - p_a - p_b + p_cc, p_a - p_cc, p_b - p_cc, p_cc]
    }

    fn derivative(&self, observable: Observable, phi: f64, h: f64) -> f64 {
        (self.probability(observable, phi + h) - self.probability(observable, phi - h)) / (2.0 * h)
    }

    /// Binary-outcome FI `(∂_φ p)² / (p(1−p))` with a central difference.
    pub fn fisher(&self, observable: Observable, phi: f64, h: f64) -> f64 {
        let p = self.probability(observable, phi);
        if p < PROBABILITY_FLOOR || 1.0 - p < PROBABILITY_FLOOR {
            return 0.0;
        }
        let dp = self.derivative(observable, phi, h);
        dp * dp / (p * (1.0 - p))
    }

    /// Relative error estimate of the central difference at `phi`, from the
    /// Richardson difference between steps `h` and `2h` plus rounding.
    pub fn derivative_error(&self, observable: Observable, phi: f64, h: f64) -> f64 {
        let d1 = self.derivative(observable, phi, h);
        let d2 = self.derivative(observable, phi, 2.0 * h);
        let rounding = 4.0 * f64::EPSILON * self.scale(observable) / h;
        let err = (d1 - d2).abs() / 3.0 + rounding;
        err / d1.abs().max(f64::MIN_POSITIVE)
    }

    /// FI of the full four-outcome click measurement. Diagnostic only.
    pub fn four_outcome_fisher(&self, phi: f64, h: f64) -> f64 {
        let p = self.outcome_probabilities(phi);
        let plus = self.outcome_probabilities(phi + h);
        let minus = self.outcome_probabilities(phi - h);
        (0..4)
            .filter(|&i| p[i] >= PROBABILITY_FLOOR)
            .map(|i| {
                let dp = (plus[i] - minus[i]) / (2.0 * h);
                dp * dp / p[i]
            })
            .sum()
    }
}

fn check_phi_step(h: f64) -> Result<(), FockError> {
    if h > 0.0 && h <= 1e-2 {
        Ok(())
    } else {
        Err(FockError::InvalidPhiStep(h))
    }
}

/// Numeric FI report for one observable from a precomputed response.
pub fn fisher_from_response(
    response: &PhaseResponse,
    config: &ValidatedConfig,
    observable: Observable,
    phi_step: f64,
) -> Result<FisherReport, FockError> {
    check_phi_step(phi_step)?;
    let fi = |phi: f64| response.fisher(observable, phi, phi_step);
    // with θ = 0 every operator is real, so p(φ) = p(2π − φ)
    let upper = if config.theta == 0.0 { PI } else { TAU };
    let (phi_star, fi_max) = grid_then_golden_max(fi, 0.0, upper, PHASE_GRID_POINTS, 1e-10);
    let fi_at_phi = fi(config.phi);

    if fi_max > 0.0 {
        let rel = response.derivative_error(observable, phi_star, phi_step);
        if rel > DERIVATIVE_TOLERANCE {
            return Err(FockError::DerivativeUnstable {
                phi: phi_star,
                relative_error: rel,
            });
        }
        // the value at the configured phase only matters when it is not negligible
        if fi_at_phi > 1e-6 * fi_max {
            let rel = response.derivative_error(observable, config.phi, phi_step);
            if rel > DERIVATIVE_TOLERANCE {
                return Err(FockError::DerivativeUnstable {
                    phi: config.phi,
                    relative_error: rel,
                });
            }
        }
    }
    Ok(FisherReport {
        observable,
        fi_at_phi,
        fi_max: fi_max.max(fi_at_phi),
        phi_star,
        defined: fi_max > 0.0,
    })
}

/// Simulated FI of one binary click observable at the configured phase and
/// maximised over the phase.
pub fn fisher_numeric(
    config: &ValidatedConfig,
    d: usize,
    observable: Observable,
    phi_step: f64,
) -> Result<FisherReport, FockError> {
    check_phi_step(phi_step)?;
    let response = PhaseResponse::new(config, d)?;
    fisher_from_response(&response, config, observable, phi_step)
}

/// Reports for all three observables sharing one simulation.
pub fn fisher_numeric_all(
    config: &ValidatedConfig,
    d: usize,
    phi_step: f64,
) -> Result<[FisherReport; 3], FockError> {
    check_phi_step(phi_step)?;
    let response = PhaseResponse::new(config, d)?;
    let a = fisher_from_response(&response, config, Observable::SinglesA, phi_step)?;
    let b = fisher_from_response(&response, config, Observable::SinglesB, phi_step)?;
    let cc = fisher_from_response(&response, config, Observable::Coincidences, phi_step)?;
    Ok([a, b, cc])
}
