use nptruth_core::belief::Belief;
use nptruth_core::bias::{biased_size, DecisionGate};
use nptruth_core::engine::RocFunction;
use nptruth_core::los::{self, CostMatrix};
use nptruth_core::models::{OneSampleNormal, TeaTastingBinomial, TeaTastingFisher, TwoSampleT};
use proptest::prelude::*;

fn check_roc<R: RocFunction>(roc: &R, a: f64, h: f64) -> Result<(), TestCaseError> {
    let (lo, hi) = (a - h, a + h);
    let r = roc.rho(a);
    prop_assert!(r >= a - 1e-12);
    prop_assert!(r >= 0.5 * (roc.rho(lo) + roc.rho(hi)) - 1e-10);
    prop_assert!(roc.rho(hi) >= roc.rho(lo) - 1e-12);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normal_roc_is_concave_and_above_diagonal(xi in 0.0f64..3.0, n in 1usize..40, a in 0.01f64..0.99, h in 1e-3f64..1e-2) {
        let m = OneSampleNormal::new(0.0, xi, 1.0, n).unwrap();
        check_roc(&m, a, h)?;
        prop_assert!(m.rho_prime(a - h) >= m.rho_prime(a + h) - 1e-12);
    }

    #[test]
    fn tea_rocs_are_concave_and_above_diagonal(theta in 0.5f64..1.0, a in 0.01f64..0.99, h in 1e-3f64..1e-2) {
        check_roc(&TeaTastingBinomial::new(theta).unwrap(), a, h)?;
        check_roc(&TeaTastingFisher::new(theta).unwrap(), a, h)?;
    }

    #[test]
    fn bayes_level_solves_the_slope_condition(xi in 0.1f64..3.0, n in 1usize..10, k0 in 0.05f64..0.95, c01 in 0.5f64..20.0) {
        let m = OneSampleNormal::new(0.0, xi, 1.0, n).unwrap();
        let c = CostMatrix::errors_only(c01, 1.0).unwrap();
        let s = los::solve_bayes(&m, &c, k0).unwrap();
        if s.alpha_star > 0.0 && s.alpha_star < 1.0 - 1e-6 {
            let r3 = c.r3(k0);
            prop_assert!((m.log_rho_prime(s.alpha_star) - r3.ln()).abs() < 1e-10);
            let closed = los::bayes_normal_closed_form(&m, &c, k0).unwrap();
            prop_assert!((closed - s.alpha_star).abs() <= 1e-9 * closed.max(1e-300));
        }
    }

    #[test]
    fn reporting_gate_never_shrinks_size(eta0 in 0.0f64..1.0, d in 0.0f64..1.0, a in 0.001f64..0.999) {
        let eta1 = eta0 + d * (1.0 - eta0);
        prop_assume!(eta1 > 0.0);
        let g = DecisionGate::new(eta0, eta1).unwrap();
        prop_assert!(biased_size(&g, a).unwrap() >= a - 1e-15);
    }

    #[test]
    fn sample_size_grows_with_the_bound(b in 0.5f64..12.0, db in 0.0f64..4.0, xi in 0.2f64..2.0) {
        let lo = los::sample_size_normal(b, xi).unwrap();
        let hi = los::sample_size_normal(b + db, xi).unwrap();
        prop_assert!(hi.n_star >= lo.n_star);
        prop_assert!(hi.n_bar.unwrap() >= lo.n_bar.unwrap());
    }

    #[test]
    fn belief_updates_add_on_the_log_odds_scale(k0 in 0.01f64..0.99, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let start = Belief::new(k0).unwrap();
        let one = start.update_log_lr(a).update_log_lr(b);
        let other = start.update_log_lr(b).update_log_lr(a);
        prop_assert!((one.log_odds() - other.log_odds()).abs() < 1e-12);
        prop_assert!((one.log_odds() - start.log_odds() - a - b).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn two_sample_roc_is_concave_and_above_diagonal(mu1 in 0.0f64..3.0, n in 2usize..12, a in 0.02f64..0.98) {
        let m = TwoSampleT::new(0.0, mu1, 1.0, n).unwrap();
        check_roc(&m, a, 5e-3)?;
        let h = 1e-5;
        let fd = (m.rho(a + h) - m.rho(a - h)) / (2.0 * h);
        prop_assert!((fd - m.rho_prime(a)).abs() < 1e-5 * m.rho_prime(a).max(1.0));
    }
}
