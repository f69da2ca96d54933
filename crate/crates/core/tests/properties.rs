use ccp_core::exact::{
    expectation_exact, expectation_oracle_inclusion_exclusion, expectation_oracle_markov, rising_moment_exact,
    variance_exact,
};
use ccp_core::model::{build_distribution, CouponFamily};
use ccp_core::QuadratureConfig;
use proptest::prelude::*;

fn explicit(weights: Vec<f64>) -> ccp_core::CouponDistribution {
    let n = weights.len();
    build_distribution(&CouponFamily::Explicit { weights }, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expectation_increases_with_m(weights in prop::collection::vec(0.05f64..1.0, 2..6)) {
        let d = explicit(weights);
        let cfg = QuadratureConfig::default();
        let mut prev = 0.0;
        for m in 1..=4 {
            let e = expectation_exact(&d, m, &cfg).unwrap().expectation.unwrap();
            prop_assert!(e > prev);
            prev = e;
        }
    }

    #[test]
    fn rising_moment_dominates_square(weights in prop::collection::vec(0.01f64..1.0, 2..8), m in 1u32..4) {
        let d = explicit(weights);
        let r = variance_exact(&d, m, &QuadratureConfig::default()).unwrap();
        let (e, q) = (r.expectation.unwrap(), r.rising_moment.unwrap());
        prop_assert!(q >= e * e + e - 1e-9 * q, "{} < {}", q, e * e + e);
    }

    #[test]
    fn equal_probabilities_minimize_expectation(weights in prop::collection::vec(0.05f64..1.0, 2..6), m in 1u32..3) {
        let n = weights.len();
        let equal = expectation_oracle_markov(&build_distribution(&CouponFamily::Equal, n).unwrap(), m).unwrap();
        let other = expectation_oracle_markov(&explicit(weights), m).unwrap();
        prop_assert!(equal <= other * (1.0 + 1e-12));
    }
}

#[test]
fn single_set_triple_agreement() {
    let cfg = QuadratureConfig::default();
    for family in [CouponFamily::Equal, CouponFamily::Zipf { p: 1.0 }, CouponFamily::LogZipf { p: 2.0 }] {
        for n in 1..=12 {
            let d = build_distribution(&family, n).unwrap();
            let q = expectation_exact(&d, 1, &cfg).unwrap().expectation.unwrap();
            let mk = expectation_oracle_markov(&d, 1).unwrap();
            let ie = expectation_oracle_inclusion_exclusion(&d).unwrap();
            assert!((q / mk - 1.0).abs() < 1e-8, "{family:?} N={n}: {q} vs {mk}");
            assert!((ie / mk - 1.0).abs() < 1e-8, "{family:?} N={n}: {ie} vs {mk}");
        }
    }
}

#[test]
fn rising_moment_single_call_matches_joint_evaluation() {
    let d = build_distribution(&CouponFamily::LogZipf { p: 1.0 }, 50).unwrap();
    let cfg = QuadratureConfig::default();
    let a = rising_moment_exact(&d, 2, &cfg).unwrap().rising_moment.unwrap();
    let b = variance_exact(&d, 2, &cfg).unwrap().rising_moment.unwrap();
    assert!((a / b - 1.0).abs() < 1e-9);
}
