use proptest::prelude::*;

use su11_core::analytic::{fisher_max_value, fisher_upper_bound, loss_balanced_g2, visibilities};
use su11_core::bogoliubov::{compose, moments, pseudo_unitarity_defect};
use su11_core::calibration::{klyshko_efficiencies, transmissions_at_loss_balance, CountRecord};
use su11_core::comparison::{advantage_by_direct_comparison, advantage_threshold, AdvantageKind};
use su11_core::model::{validate, Field, InterferometerConfig, ModelError, Observable};

fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

prop_compose! {
    fn config(g_max: f64)(g1 in 0.0..g_max, g2 in 0.0..g_max, t_a in unit(), t_b in unit(),
                          eta_a in unit(), eta_b in unit(), phi in -10.0..10.0f64)
                          -> InterferometerConfig {
        InterferometerConfig { g1, g2, t_a, t_b, eta_a, eta_b, phi, theta: 0.0 }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn validation_names_first_bad_field(
        v in prop::array::uniform6(-0.5..1.5f64),
        phi in -100.0..100.0f64,
    ) {
        let c = InterferometerConfig { g1: v[0], g2: v[1], t_a: v[2], t_b: v[3], eta_a: v[4], eta_b: v[5], phi, theta: 0.0 };
        let fields = [Field::G1, Field::G2, Field::TA, Field::TB, Field::EtaA, Field::EtaB];
        let first_bad = (0..6).find(|&i| if i < 2 { v[i] < 0.0 } else { !(0.0..=1.0).contains(&v[i]) });
        match (validate(c), first_bad) {
            (Ok(ok), None) => prop_assert!((0.0..std::f64::consts::TAU).contains(&ok.phi)),
            (Err(ModelError::OutOfRange { field, .. }), Some(i)) => prop_assert_eq!(field, fields[i]),
            (r, b) => prop_assert!(false, "{:?} vs {:?}", r, b),
        }
    }

    #[test]
    fn visibilities_are_bounded(c in config(0.3)) {
        let c = validate(c).unwrap();
        let v = visibilities(&c);
        prop_assert!(v.v_a >= 0.0 && v.v_a <= c.t_b.sqrt() + 1e-12);
        prop_assert!(v.v_b >= 0.0 && v.v_b <= c.t_a.sqrt() + 1e-12);
        prop_assert!(v.v_cc >= 0.0 && v.v_cc <= 1.0 + 1e-12);
    }

    #[test]
    fn fisher_is_bounded(c in config(0.1)) {
        let c = validate(c).unwrap();
        let bound = fisher_upper_bound(&c);
        for obs in Observable::ALL {
            let fi = fisher_max_value(&c, obs);
            prop_assert!(fi >= 0.0 && fi <= bound * (1.0 + 1e-9) + 1e-300);
        }
    }

    #[test]
    fn coincidences_dominate_with_perfect_detectors(g1 in 0.0..0.3f64, g2 in 0.0..0.3f64, t_a in unit(), t_b in unit()) {
        let c = validate(InterferometerConfig::lossless(g1, g2).with_transmissions(t_a, t_b)).unwrap();
        let cc = fisher_max_value(&c, Observable::Coincidences);
        prop_assert!(cc >= fisher_max_value(&c, Observable::SinglesA) - 1e-12);
        prop_assert!(cc >= fisher_max_value(&c, Observable::SinglesB) - 1e-12);
    }

    #[test]
    fn transfer_matrix_is_pseudo_unitary(c in config(1.0), theta in 0.0..6.3f64) {
        let c = validate(c.with_theta(theta)).unwrap();
        prop_assert!(pseudo_unitarity_defect(&compose(&c)) <= 1e-12);
        let m = moments(&c);
        prop_assert!(m.n_a >= 0.0 && m.n_b >= 0.0 && m.n_ab >= 0.0);
    }

    #[test]
    fn klyshko_roundtrip(eta_a in 0.001..1.0f64, eta_b in 0.001..1.0f64, pairs in 1.0..1e9f64) {
        let counts = CountRecord::new(pairs * eta_a, pairs * eta_b, pairs * eta_a * eta_b, "").unwrap();
        let (a, b) = klyshko_efficiencies(&counts).unwrap();
        prop_assert!((a - eta_a).abs() <= 1e-12 && (b - eta_b).abs() <= 1e-12);
    }

    #[test]
    fn loss_balance_inversion(t_a in unit(), t_b in unit(), g1 in 0.001..0.1f64) {
        let c = validate(InterferometerConfig::lossless(g1, loss_balanced_g2(g1, t_a, t_b)).with_transmissions(t_a, t_b)).unwrap();
        let v = visibilities(&c);
        let (a, b) = transmissions_at_loss_balance(v.v_a, v.v_b);
        prop_assert!((a - t_a).abs() <= 1e-12 && (b - t_b).abs() <= 1e-12);
    }

    #[test]
    fn threshold_agrees_with_direct_comparison_off_boundary(
        t_a in 0.05..1.0f64, t_b in 0.05..1.0f64, eta_a in 0.05..1.0f64, eta_b in 0.05..1.0f64,
        log_x in -3.0..4.0f64,
    ) {
        let g1 = 0.05;
        let base = validate(InterferometerConfig::lossless(g1, g1 * 10f64.powf(log_x / 2.0))
            .with_transmissions(t_a, t_b).with_efficiencies(eta_a, eta_b)).unwrap();
        let x = 10f64.powf(log_x);
        let em = base.eta_max();
        for obs in Observable::ALL {
            for kind in AdvantageKind::ALL {
                let v = advantage_threshold(&base, em, obs, kind);
                let near = v.threshold_gain_ratio.is_some_and(|t| (x - t).abs() <= 1e-6 * t.max(1e-6));
                if !near {
                    prop_assert_eq!(v.holds, advantage_by_direct_comparison(&base, em, obs, kind),
                        "{:?} {:?} x = {} threshold {:?}", obs, kind, x, v.threshold_gain_ratio);
                }
            }
        }
    }
}
