use nptruth_core::engine::{build_rule, decide, exact_rule, p_functional};
use nptruth_core::models::{TeaTastingBinomial, TeaTastingFisher};
use num_bigint::BigInt;
use num_rational::BigRational;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn binomial_version_worked_value() {
    let m = TeaTastingBinomial::new(0.8).unwrap();
    let p = p_functional(&m, 6.0, 0.973).unwrap();
    assert_eq!(format!("{p:.4}"), "0.1416");
    let rule = build_rule(&m, 0.05).unwrap();
    assert_eq!(decide(&rule, 6.0, 0.973).unwrap(), 0);
}

#[test]
fn fisher_version_worked_value() {
    let m = TeaTastingFisher::new(0.8).unwrap();
    let p = p_functional(&m, 3.0, 0.815).unwrap();
    // 1/70 + 0.815 * 16/70 = 0.2005714...
    assert!((p - (1.0 + 0.815 * 16.0) / 70.0).abs() < 1e-15);
    let rule = build_rule(&m, 0.05).unwrap();
    assert_eq!(decide(&rule, 3.0, 0.815).unwrap(), 0);
}

#[test]
fn exact_size_in_rationals() {
    let theta = q(4, 5);
    for a in [q(1, 100), q(1, 20), q(1, 10)] {
        let b = exact_rule(&TeaTastingBinomial::exact_null_pmf(), &TeaTastingBinomial::exact_pmf(&theta), &a).unwrap();
        assert_eq!(b.size, a);
        let f = exact_rule(&TeaTastingFisher::exact_null_pmf(), &TeaTastingFisher::exact_pmf(&theta), &a).unwrap();
        assert_eq!(f.size, a);
    }
}
