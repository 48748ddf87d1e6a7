//! Exact moment engine.
//!
//! Every element of the interferometer is a linear (Bogoliubov) map on the
//! six operators `(d_A, l_A, a, b†, l_B†, d_B†)`: detector-loss, internal-loss
//! and signal modes, with the B side written in creation operators. The
//! interferometer is the product `Det · PDC₂ · Loss · P · PDC₁`, and for
//! vacuum input its rows give the output photon-number moments in closed
//! form at any gain.

use nalgebra::Matrix6;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::{ClickProbabilities, Engine, ValidatedConfig};

pub type TransferMatrix6 = Matrix6<Complex64>;

/// Row/column index of each operator in the 6×6 transfer matrices.
pub mod index {
    pub const D_A: usize = 0;
    pub const L_A: usize = 1;
    pub const A: usize = 2;
    pub const B_DAG: usize = 3;
    pub const L_B_DAG: usize = 4;
    pub const D_B_DAG: usize = 5;
}

/// Metric `diag(+1, +1, +1, −1, −1, −1)` preserved by every stage.
pub fn metric() -> TransferMatrix6 {
    let mut m = TransferMatrix6::zeros();
    for i in 0..6 {
        m[(i, i)] = Complex64::new(if i < 3 { 1.0 } else { -1.0 }, 0.0);
    }
    m
}

/// Largest elementwise deviation of `T Σ T†` from `Σ`.
pub fn pseudo_unitarity_defect(t: &TransferMatrix6) -> f64 {
    let sigma = metric();
    let lhs = t * sigma * t.adjoint();
    (lhs - sigma).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// The five stage matrices of the interferometer.
#[derive(Debug, Clone, PartialEq)]
pub struct StageMatrices {
    pub pdc1: TransferMatrix6,
    pub pdc2: TransferMatrix6,
    pub phase: TransferMatrix6,
    pub loss: TransferMatrix6,
    pub det: TransferMatrix6,
}

pub fn stage_matrices(config: &ValidatedConfig) -> StageMatrices {
    use index::*;
    let (c1, s1) = (config.g1.cosh(), config.g1.sinh());
    let (c2, s2) = (config.g2.cosh(), config.g2.sinh());
    let alpha_a = 1.0 - config.t_a;
    let alpha_b = 1.0 - config.t_b;

    let mut pdc1 = TransferMatrix6::identity();
    pdc1[(A, A)] = re(c1);
    pdc1[(A, B_DAG)] = re(s1);
    pdc1[(B_DAG, A)] = re(s1);
    pdc1[(B_DAG, B_DAG)] = re(c1);

    let mut pdc2 = TransferMatrix6::identity();
    pdc2[(A, A)] = re(c2);
    pdc2[(A, B_DAG)] = Complex64::from_polar(s2, -config.theta);
    pdc2[(B_DAG, A)] = Complex64::from_polar(s2, config.theta);
    pdc2[(B_DAG, B_DAG)] = re(c2);

    let mut phase = TransferMatrix6::identity();
    phase[(A, A)] = Complex64::from_polar(1.0, config.phi);

    let mut loss = TransferMatrix6::identity();
    loss[(L_A, L_A)] = re((1.0 - alpha_a).sqrt());
    loss[(L_A, A)] = re(alpha_a.sqrt());
    loss[(A, L_A)] = re(-alpha_a.sqrt());
    loss[(A, A)] = re((1.0 - alpha_a).sqrt());
    loss[(B_DAG, B_DAG)] = re((1.0 - alpha_b).sqrt());
    loss[(B_DAG, L_B_DAG)] = re(-alpha_b.sqrt());
    loss[(L_B_DAG, B_DAG)] = re(alpha_b.sqrt());
    loss[(L_B_DAG, L_B_DAG)] = re((1.0 - alpha_b).sqrt());

    let mut det = TransferMatrix6::identity();
    det[(D_A, D_A)] = re(config.eta_a.sqrt());
    det[(D_A, A)] = re((1.0 - config.eta_a).sqrt());
    det[(A, D_A)] = re(-(1.0 - config.eta_a).sqrt());
    det[(A, A)] = re(config.eta_a.sqrt());
    det[(B_DAG, B_DAG)] = re(config.eta_b.sqrt());
    det[(B_DAG, D_B_DAG)] = re(-(1.0 - config.eta_b).sqrt());
    det[(D_B_DAG, B_DAG)] = re((1.0 - config.eta_b).sqrt());
    det[(D_B_DAG, D_B_DAG)] = re(config.eta_b.sqrt());

    StageMatrices {
        pdc1,
        pdc2,
        phase,
        loss,
        det,
    }
}

/// Input-to-output transfer matrix, multiplied strictly left to right.
pub fn compose(config: &ValidatedConfig) -> TransferMatrix6 {
    let s = stage_matrices(config);
    let t = s.det * s.pdc2;
    let t = t * s.loss;
    let t = t * s.phase;
    t * s.pdc1
}

/// Coefficients `𝒜, ℬ, 𝒞, 𝒟` of the composed matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoreCoefficients {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

pub fn core_coefficients(config: &ValidatedConfig) -> CoreCoefficients {
    let (c1, s1) = (config.g1.cosh(), config.g1.sinh());
    let (c2, s2) = (config.g2.cosh(), config.g2.sinh());
    let (ta, tb) = (config.t_a.sqrt(), config.t_b.sqrt());
    let e_phi = Complex64::from_polar(1.0, config.phi);
    let e_minus = Complex64::from_polar(1.0, -(config.theta + config.phi));
    let e_plus = Complex64::from_polar(1.0, config.theta + config.phi);
    CoreCoefficients {
        a: e_phi * (re(ta * c1 * c2) + e_minus * (tb * s1 * s2)),
        b: e_phi * (re(ta * s1 * c2) + e_minus * (tb * c1 * s2)),
        c: e_plus * (ta * c1 * s2) + re(tb * s1 * c2),
        d: e_plus * (ta * s1 * s2) + re(tb * c1 * c2),
    }
}

/// The composed transfer matrix written out entry by entry.
pub fn closed_form_transfer(config: &ValidatedConfig) -> TransferMatrix6 {
    let k = core_coefficients(config);
    let (c1, s1) = (config.g1.cosh(), config.g1.sinh());
    let (c2, s2) = (config.g2.cosh(), config.g2.sinh());
    let alpha_a = (1.0 - config.t_a).sqrt();
    let alpha_b = (1.0 - config.t_b).sqrt();
    let (ea, ea_c) = (config.eta_a.sqrt(), (1.0 - config.eta_a).sqrt());
    let (eb, eb_c) = (config.eta_b.sqrt(), (1.0 - config.eta_b).sqrt());
    let e_phi = Complex64::from_polar(1.0, config.phi);
    let e_th = Complex64::from_polar(1.0, config.theta);
    let e_mth = Complex64::from_polar(1.0, -config.theta);
    let z = Complex64::new(0.0, 0.0);
    #[rustfmt::skip]
    let rows = [
        [re(ea), re(-c2 * alpha_a * ea_c), k.a * ea_c, k.b * ea_c, -e_mth * s2 * alpha_b * ea_c, z],
        [z, re(config.t_a.sqrt()), e_phi * (c1 * alpha_a), e_phi * (s1 * alpha_a), z, z],
        [re(-ea_c), re(-c2 * alpha_a * ea), k.a * ea, k.b * ea, -e_mth * s2 * alpha_b * ea, z],
        [z, -e_th * s2 * alpha_a * eb, k.c * eb, k.d * eb, re(-c2 * alpha_b * eb), re(-eb_c)],
        [z, z, re(s1 * alpha_b), re(c1 * alpha_b), re(config.t_b.sqrt()), z],
        [z, -e_th * s2 * alpha_a * eb_c, k.c * eb_c, k.d * eb_c, re(-c2 * alpha_b * eb_c), re(eb)],
    ];
    TransferMatrix6::from_fn(|i, j| rows[i][j])
}

/// Output photon-number moments for vacuum input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub n_a: f64,
    pub n_b: f64,
    pub n_ab: f64,
}

/// Output-mode expansion coefficients in the notation
/// `a_out = D_A d_A + L_A l_A + A a + B* b† + L_B* l_B†` and
/// `b_out† = L̃_A l_A + Ã a + B̃* b† + L̃_B* l_B† + D_B* d_B†`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputCoefficients {
    pub l_a: Complex64,
    pub a: Complex64,
    pub b: Complex64,
    pub l_b: Complex64,
    pub l_a_t: Complex64,
    pub a_t: Complex64,
    pub b_t: Complex64,
    pub l_b_t: Complex64,
}

pub fn output_coefficients(t: &TransferMatrix6) -> OutputCoefficients {
    use index::*;
    OutputCoefficients {
        l_a: t[(A, L_A)],
        a: t[(A, A)],
        b: t[(A, B_DAG)].conj(),
        l_b: t[(A, L_B_DAG)].conj(),
        l_a_t: t[(B_DAG, L_A)],
        a_t: t[(B_DAG, A)],
        b_t: t[(B_DAG, B_DAG)].conj(),
        l_b_t: t[(B_DAG, L_B_DAG)].conj(),
    }
}

/// Moments with their imaginary residues, which vanish up to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMoments {
    pub n_a: f64,
    pub n_b: f64,
    pub n_ab: Complex64,
}

/// Moments built from the rows of a transfer matrix.
///
/// `⟨n_a⟩` collects the creation-operator coefficients of `a_out`, `⟨n_b⟩`
/// the annihilation-operator coefficients of `b_out†`, and
/// `⟨n_a n_b⟩ = ⟨n_a⟩⟨n_b⟩ + (L_A L̃_A* + A Ã*)(B B̃* + L_B L̃_B*)`.
pub fn moments_from_transfer(t: &TransferMatrix6) -> ComplexMoments {
    use index::*;
    let n_a: f64 = (B_DAG..=D_B_DAG).map(|j| t[(A, j)].norm_sqr()).sum();
    let n_b: f64 = (D_A..=A).map(|j| t[(B_DAG, j)].norm_sqr()).sum();
    let k = output_coefficients(t);
    let pair = (k.l_a * k.l_a_t.conj() + k.a * k.a_t.conj()) * (k.b * k.b_t.conj() + k.l_b * k.l_b_t.conj());
    ComplexMoments {
        n_a,
        n_b,
        n_ab: re(n_a * n_b) + pair,
    }
}

pub fn moments(config: &ValidatedConfig) -> MomentSet {
    let m = moments_from_transfer(&compose(config));
    MomentSet {
        n_a: m.n_a,
        n_b: m.n_b,
        n_ab: m.n_ab.re,
    }
}

/// Mean photon numbers written directly in the gains, transmissions and
/// efficiencies.
pub fn closed_form_mean_photon_numbers(config: &ValidatedConfig) -> (f64, f64) {
    let (c1, s1) = (config.g1.cosh(), config.g1.sinh());
    let (c2, s2) = (config.g2.cosh(), config.g2.sinh());
    let (ta, tb) = (config.t_a, config.t_b);
    let cross = 2.0 * s1 * s2 * c1 * c2 * (ta * tb).sqrt() * (config.theta + config.phi).cos();
    let n_a = config.eta_a * (s1 * s1 * c2 * c2 * ta + c1 * c1 * s2 * s2 * tb + s2 * s2 * (1.0 - tb) + cross);
    let n_b = config.eta_b * (s1 * s1 * c2 * c2 * tb + c1 * c1 * s2 * s2 * ta + s2 * s2 * (1.0 - ta) + cross);
    (n_a, n_b)
}

/// Exact moments tagged as click probabilities for comparison with the
/// closed-form low-gain engine; the two agree to `O(g⁴)`.
///
/// Above `g ≈ 0.1` moments are not click probabilities; use the Fock engine.
pub fn lowgain_click_probabilities(config: &ValidatedConfig) -> ClickProbabilities {
    let m = moments(config);
    ClickProbabilities {
        p_a: m.n_a,
        p_b: m.n_b,
        p_cc: m.n_ab,
        engine: Engine::BogoliubovLowgain,
    }
}
