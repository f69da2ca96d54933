//! Scaled errors of the large-N expansions against quadrature.

use ccp_core::asymptotic::{equal_case_expectation, expectation_asymptotic, rising_moment_asymptotic};
use ccp_core::exact::variance_exact;
use ccp_core::model::{build_distribution, CouponFamily};
use ccp_core::QuadratureConfig;

const GRID: [usize; 5] = [1_000, 3_000, 10_000, 30_000, 100_000];
const CASES: [(f64, u32); 3] = [(1.0, 1), (1.0, 2), (2.0, 1)];

// Largest scaled errors observed on GRID (at N = 10³), with headroom.
const EXPECTATION_BOUND: f64 = 50.0;
const RISING_BOUND: f64 = 100.0;

fn scaled_errors(p: f64, m: u32) -> Vec<(f64, f64)> {
    let cfg = QuadratureConfig::default();
    GRID.iter()
        .map(|&n| {
            let d = build_distribution(&CouponFamily::LogZipf { p }, n).unwrap();
            let r = variance_exact(&d, m, &cfg).unwrap();
            let e = expectation_asymptotic(p, m, n).unwrap();
            let q = rising_moment_asymptotic(p, m, n).unwrap();
            (
                (r.expectation.unwrap() - e.total).abs() / e.error_scale,
                (r.rising_moment.unwrap() - q.total).abs() / q.error_scale,
            )
        })
        .collect()
}

#[test]
fn expansion_errors_bounded_and_not_growing() {
    for (p, m) in CASES {
        let errs = scaled_errors(p, m);
        for w in errs.windows(2) {
            assert!(w[1].0 <= w[0].0, "expectation p={p} m={m}: {errs:?}");
            assert!(w[1].1 <= w[0].1, "rising moment p={p} m={m}: {errs:?}");
        }
        assert!(errs.iter().all(|e| e.0 <= EXPECTATION_BOUND && e.1 <= RISING_BOUND), "{errs:?}");
    }
}

#[test]
fn equal_case_remainder_is_sublinear() {
    let cfg = QuadratureConfig::default();
    let mut prev = f64::INFINITY;
    for &n in &[100usize, 1_000, 10_000, 100_000] {
        let d = build_distribution(&CouponFamily::Equal, n).unwrap();
        let exact = variance_exact(&d, 2, &cfg).unwrap().expectation.unwrap();
        let r = (equal_case_expectation(2, n).unwrap().total - exact).abs() / n as f64;
        assert!(r < prev, "N={n}: {r}");
        prev = r;
    }
}
