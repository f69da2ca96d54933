//! Numerically exact moments and tail probabilities of `T_m(N)`.
//!
//! The quadrature route integrates
//! `E[T] = ∫₀^∞ (1 − Π_j P(m, p_j t)) dt` and
//! `E[T(T+1)] = 2∫₀^∞ t (1 − Π_j P(m, p_j t)) dt`,
//! where `P(m, x) = 1 − S_m(x)e^{−x}`. The remaining routes are independent
//! small-`N` oracles over capped count vectors and over subsets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CouponDistribution;
use crate::quadrature::{integrate, QuadratureConfig};
use crate::special::{CompensatedSum, PoissonTail};

/// Largest state space accepted by [`expectation_oracle_markov`].
pub const MARKOV_STATE_LIMIT: f64 = 1e7;
/// Largest state space accepted by [`ccdf_exact`].
pub const CCDF_STATE_LIMIT: f64 = 1e6;
/// Largest draw count accepted by [`ccdf_exact`].
pub const CCDF_MAX_DRAWS: u64 = 100_000;
/// Largest `N` accepted by [`expectation_oracle_inclusion_exclusion`].
pub const INCLUSION_EXCLUSION_MAX_TYPES: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    MarkovOracle,
    InclusionExclusion,
    Asymptotic,
}

/// Moments of `T_m(N)` together with how they were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub method: Method,
    pub m: u32,
    pub n_types: usize,
    pub expectation: Option<f64>,
    pub rising_moment: Option<f64>,
    pub variance: Option<f64>,
    /// Absolute error bound on the reported quantity (quadrature plus truncation).
    pub error_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_epsilon: Option<f64>,
    /// Upper limit `T*` of the truncated integral, in draws.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_point: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panels: Option<usize>,
}

impl MomentReport {
    fn oracle(method: Method, dist: &CouponDistribution, m: u32) -> Self {
        Self {
            method,
            m,
            n_types: dist.n_types(),
            expectation: None,
            rising_moment: None,
            variance: None,
            error_estimate: 0.0,
            rel_tol: None,
            abs_tol: None,
            tail_epsilon: None,
            truncation_point: None,
            panels: None,
        }
    }
}

fn check_m(m: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParameter("number of sets m must be at least 1".into()));
    }
    Ok(())
}

/// `1 − Π_j (1 − S_m(p_j t)e^{−p_j t})` for a fixed distribution and `m`,
/// evaluated through `Σ_j ln P(m, p_j t)`.
#[derive(Debug, Clone)]
pub struct SurvivalIntegrand<'a> {
    probs: &'a [f64],
    tail: PoissonTail,
}

impl<'a> SurvivalIntegrand<'a> {
    pub fn new(dist: &'a CouponDistribution, m: u32) -> Self {
        Self { probs: dist.probs(), tail: PoissonTail::new(m) }
    }

    /// `Σ_j ln P(m, p_j t)`. Summation stops once the partial sum is below
    /// `−750`, where the product is exactly zero in double precision.
    pub fn log_product(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let mut acc = 0.0;
        for chunk in self.probs.chunks(1024) {
            for &p in chunk {
                acc += self.tail.ln_lower(p * t);
            }
            if acc < -750.0 {
                return f64::NEG_INFINITY;
            }
        }
        acc
    }

    /// `P(T_m > t)` for the Poissonized process; 1 at `t = 0`, nonincreasing.
    pub fn value(&self, t: f64) -> f64 {
        let l = self.log_product(t);
        if l == f64::NEG_INFINITY {
            1.0
        } else {
            -l.exp_m1()
        }
    }

    /// Union bound `Σ_j S_m(p_j t)e^{−p_j t} ≥ value(t)`.
    pub fn union_bound(&self, t: f64) -> f64 {
        self.probs.iter().map(|&p| self.tail.upper(p * t)).sum()
    }

    /// Bounds on `∫_T^∞ value(t) dt` and `2∫_T^∞ t·value(t) dt`, from the
    /// union bound integrated in closed form.
    pub fn tail_bounds(&self, t: f64) -> (f64, f64) {
        let m = self.tail.m();
        let tails: Vec<PoissonTail> = (1..=m + 1).map(PoissonTail::new).collect();
        let mut first = CompensatedSum::new();
        let mut second = CompensatedSum::new();
        for &p in self.probs {
            let x = p * t;
            // ∫_x^∞ Q(m,u) du = Σ_{l<m} Q(l+1, x);  ∫_x^∞ u Q(m,u) du = Σ_{l<m} (l+1) Q(l+2, x)
            let mut a = 0.0;
            let mut b = 0.0;
            for l in 0..m as usize {
                a += tails[l].upper(x);
                b += (l + 1) as f64 * tails[l + 1].upper(x);
            }
            first.add(a / p);
            second.add(2.0 * b / (p * p));
        }
        (first.value(), second.value())
    }
}

/// `T*` such that the union bound is below `eps`.
fn truncation_point(integrand: &SurvivalIntegrand<'_>, dist: &CouponDistribution, eps: f64) -> f64 {
    let mut hi = 1.0 / dist.max_prob();
    while integrand.union_bound(hi) >= eps {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    if integrand.union_bound(lo) < eps {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if integrand.union_bound(mid) < eps {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-6 * hi {
            break;
        }
    }
    hi
}

struct QuadratureMoments {
    expectation: f64,
    rising: f64,
    err_expectation: f64,
    err_rising: f64,
    truncation: f64,
    panels: usize,
}

// Integration runs in s = t / A_N (A_N the weight sum), so p_j t = a_j s.
fn quadrature_moments<const D: usize>(
    dist: &CouponDistribution,
    m: u32,
    cfg: &QuadratureConfig,
) -> Result<QuadratureMoments> {
    check_m(m)?;
    cfg.validate()?;
    let integrand = SurvivalIntegrand::new(dist, m);
    let t_star = truncation_point(&integrand, dist, cfg.tail_epsilon);
    let scale = dist.normalizer();
    let s_star = t_star / scale;
    let f = |s: f64| -> [f64; D] {
        let v = integrand.value(scale * s);
        let mut out = [0.0; D];
        out[0] = v;
        if D > 1 {
            out[1] = 2.0 * s * v;
        }
        out
    };
    let scaled = QuadratureConfig { abs_tol: cfg.abs_tol / scale, ..*cfg };
    let r = integrate(f, 0.0, s_star, &scaled)?;
    let (tail_e, tail_q) = integrand.tail_bounds(t_star);
    let expectation = scale * r.value[0];
    let err_expectation = scale * r.error[0] + tail_e;
    let (rising, err_rising) =
        if D > 1 { (scale * scale * r.value[1], scale * scale * r.error[1] + tail_q) } else { (f64::NAN, f64::NAN) };
    Ok(QuadratureMoments { expectation, rising, err_expectation, err_rising, truncation: t_star, panels: r.panels })
}

fn quadrature_report(dist: &CouponDistribution, m: u32, cfg: &QuadratureConfig) -> MomentReport {
    MomentReport {
        method: Method::Quadrature,
        m,
        n_types: dist.n_types(),
        expectation: None,
        rising_moment: None,
        variance: None,
        error_estimate: 0.0,
        rel_tol: Some(cfg.rel_tol),
        abs_tol: Some(cfg.abs_tol),
        tail_epsilon: Some(cfg.tail_epsilon),
        truncation_point: None,
        panels: None,
    }
}

/// `E[T_m(N)]` by adaptive quadrature.
pub fn expectation_exact(dist: &CouponDistribution, m: u32, cfg: &QuadratureConfig) -> Result<MomentReport> {
    let q = quadrature_moments::<1>(dist, m, cfg)?;
    Ok(MomentReport {
        expectation: Some(q.expectation),
        error_estimate: q.err_expectation,
        truncation_point: Some(q.truncation),
        panels: Some(q.panels),
        ..quadrature_report(dist, m, cfg)
    })
}

/// `E[T_m(N)(T_m(N)+1)]` by adaptive quadrature.
pub fn rising_moment_exact(dist: &CouponDistribution, m: u32, cfg: &QuadratureConfig) -> Result<MomentReport> {
    let q = quadrature_moments::<2>(dist, m, cfg)?;
    Ok(MomentReport {
        expectation: Some(q.expectation),
        rising_moment: Some(q.rising),
        error_estimate: q.err_rising,
        truncation_point: Some(q.truncation),
        panels: Some(q.panels),
        ..quadrature_report(dist, m, cfg)
    })
}

/// `V[T_m(N)] = E[T(T+1)] − E[T] − E[T]²`, with both moments from one
/// quadrature pass. The report carries all three quantities.
pub fn variance_exact(dist: &CouponDistribution, m: u32, cfg: &QuadratureConfig) -> Result<MomentReport> {
    let q = quadrature_moments::<2>(dist, m, cfg)?;
    let e = q.expectation;
    let variance = q.rising - e - e * e;
    let error = q.err_rising + q.err_expectation * (1.0 + 2.0 * e);
    Ok(MomentReport {
        expectation: Some(e),
        rising_moment: Some(q.rising),
        variance: Some(variance),
        error_estimate: error,
        truncation_point: Some(q.truncation),
        panels: Some(q.panels),
        ..quadrature_report(dist, m, cfg)
    })
}

fn state_count(m: u32, n: usize) -> f64 {
    (m as f64 + 1.0).powi(n as i32)
}

/// Exact moments from the absorbing chain on count vectors capped at `m`.
///
/// States are mixed-radix integers with base `m+1`; drawing type `j` moves
/// to a strictly larger index unless type `j` is already complete, so a
/// single descending sweep solves the chain without a linear system.
pub fn moments_oracle_markov(dist: &CouponDistribution, m: u32) -> Result<MomentReport> {
    check_m(m)?;
    let n = dist.n_types();
    let states = state_count(m, n);
    if states > MARKOV_STATE_LIMIT {
        return Err(Error::StateSpaceTooLarge { states, limit: MARKOV_STATE_LIMIT });
    }
    let states = states as usize;
    let base = m as usize + 1;
    let strides: Vec<usize> = (0..n).map(|j| base.pow(j as u32)).collect();
    let probs = dist.probs();
    let mut mean = vec![0.0f64; states];
    let mut second = vec![0.0f64; states];
    let full = states - 1;
    let mut digits = vec![0usize; n];
    for idx in (0..full).rev() {
        let mut rest = idx;
        for d in digits.iter_mut() {
            *d = rest % base;
            rest /= base;
        }
        let mut open = 0.0;
        let mut closed = 0.0;
        let mut acc_mean = 0.0;
        let mut acc_second = 0.0;
        for j in 0..n {
            let p = probs[j];
            if digits[j] == m as usize {
                closed += p;
            } else {
                let next = idx + strides[j];
                open += p;
                acc_mean += p * mean[next];
                acc_second += p * (2.0 * mean[next] + second[next]);
            }
        }
        let e = (1.0 + acc_mean) / open;
        mean[idx] = e;
        second[idx] = (1.0 + 2.0 * closed * e + acc_second) / open;
    }
    let e = mean[0];
    let rising = second[0] + e;
    Ok(MomentReport {
        expectation: Some(e),
        rising_moment: Some(rising),
        variance: Some(second[0] - e * e),
        ..MomentReport::oracle(Method::MarkovOracle, dist, m)
    })
}

/// `E[T_m(N)]` from the capped-count-vector chain.
pub fn expectation_oracle_markov(dist: &CouponDistribution, m: u32) -> Result<f64> {
    Ok(moments_oracle_markov(dist, m)?.expectation.unwrap_or(f64::NAN))
}

/// `E[T_1(N)] = Σ_{∅≠J⊆[N]} (−1)^{|J|+1} / Σ_{j∈J} p_j`.
pub fn expectation_oracle_inclusion_exclusion(dist: &CouponDistribution) -> Result<f64> {
    let n = dist.n_types();
    if n > INCLUSION_EXCLUSION_MAX_TYPES {
        return Err(Error::SubsetSpaceTooLarge { types: n, limit: INCLUSION_EXCLUSION_MAX_TYPES });
    }
    fn walk(probs: &[f64], start: usize, mass: f64, size: usize, acc: &mut CompensatedSum) {
        for j in start..probs.len() {
            let m2 = mass + probs[j];
            let sign = if size.is_multiple_of(2) { 1.0 } else { -1.0 };
            acc.add(sign / m2);
            walk(probs, j + 1, m2, size + 1, acc);
        }
    }
    let mut acc = CompensatedSum::new();
    walk(dist.probs(), 0, 0.0, 0, &mut acc);
    Ok(acc.value())
}

/// Exact `P(T_m > n)` by forward propagation of the capped-count-vector law.
pub fn ccdf_exact(dist: &CouponDistribution, m: u32, draws: u64) -> Result<f64> {
    check_m(m)?;
    let n = dist.n_types();
    let states = state_count(m, n);
    if states > CCDF_STATE_LIMIT {
        return Err(Error::StateSpaceTooLarge { states, limit: CCDF_STATE_LIMIT });
    }
    if draws > CCDF_MAX_DRAWS {
        return Err(Error::InvalidParameter(format!("draw count {draws} exceeds the limit of {CCDF_MAX_DRAWS}")));
    }
    if draws < m as u64 * n as u64 {
        return Ok(1.0);
    }
    let states = states as usize;
    let base = m as usize + 1;
    let strides: Vec<usize> = (0..n).map(|j| base.pow(j as u32)).collect();
    let probs = dist.probs();
    let full = states - 1;
    let mut law = vec![0.0f64; states];
    law[0] = 1.0;
    let mut digits = vec![0usize; n];
    for _ in 0..draws {
        // Descending sweep: mass only moves to larger indices, which have
        // already been advanced this step.
        for idx in (0..full).rev() {
            let mass = law[idx];
            if mass == 0.0 {
                continue;
            }
            let mut rest = idx;
            for d in digits.iter_mut() {
                *d = rest % base;
                rest /= base;
            }
            let mut stay = 0.0;
            for j in 0..n {
                if digits[j] == m as usize {
                    stay += probs[j];
                } else {
                    law[idx + strides[j]] += mass * probs[j];
                }
            }
            law[idx] = mass * stay;
        }
    }
    Ok(law[..full].iter().copied().collect::<CompensatedSum>().value().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_distribution, CouponFamily};

    fn equal(n: usize) -> CouponDistribution {
        build_distribution(&CouponFamily::Equal, n).unwrap()
    }

    fn harmonic_oracle(n: usize) -> f64 {
        n as f64 * (1..=n).map(|k| 1.0 / k as f64).sum::<f64>()
    }

    #[test]
    fn integrand_examples() {
        let d = equal(1);
        let f = SurvivalIntegrand::new(&d, 1);
        assert_eq!(f.value(0.0), 1.0);
        for t in [0.1, 1.0, 5.0] {
            assert!((f.value(t) - (-t).exp()).abs() < 1e-15);
        }
        let d = equal(2);
        let f = SurvivalIntegrand::new(&d, 1);
        assert!((f.value(4f64.ln()) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn integrand_monotone_and_bounded() {
        let d = build_distribution(&CouponFamily::LogZipf { p: 1.0 }, 40).unwrap();
        for m in 1..4 {
            let f = SurvivalIntegrand::new(&d, m);
            let mut prev = 1.0;
            for i in 0..2000 {
                let v = f.value(i as f64 * 0.5);
                assert!((0.0..=1.0).contains(&v));
                assert!(v <= prev + 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn expectation_examples() {
        let cfg = QuadratureConfig::default();
        let r = expectation_exact(&equal(1), 3, &cfg).unwrap();
        assert!((r.expectation.unwrap() - 3.0).abs() < 1e-9);
        let r = expectation_exact(&equal(2), 1, &cfg).unwrap();
        assert!((r.expectation.unwrap() - 3.0).abs() < 1e-9);
        let r = expectation_exact(&equal(3), 1, &cfg).unwrap();
        assert!((r.expectation.unwrap() - 5.5).abs() < 1e-9);
        assert!(r.error_estimate < 1e-8);
        assert!(r.truncation_point.unwrap() > 0.0);
    }

    #[test]
    fn rising_and_variance_examples() {
        let cfg = QuadratureConfig::default();
        let r = rising_moment_exact(&equal(1), 1, &cfg).unwrap();
        assert!((r.rising_moment.unwrap() - 2.0).abs() < 1e-9);
        // E[T] = 3, V[T] = 2, so E[T(T+1)] = V + E² + E = 14.
        let r = rising_moment_exact(&equal(2), 1, &cfg).unwrap();
        assert!((r.rising_moment.unwrap() - 14.0).abs() < 1e-8);
        for m in 1..4 {
            let v = variance_exact(&equal(1), m, &cfg).unwrap();
            assert!(v.variance.unwrap().abs() < 1e-8, "{v:?}");
        }
        let v = variance_exact(&equal(2), 1, &cfg).unwrap();
        assert!((v.variance.unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn rising_matches_markov_equal_four_two() {
        let cfg = QuadratureConfig::default();
        let d = equal(4);
        let oracle = moments_oracle_markov(&d, 2).unwrap();
        let q = rising_moment_exact(&d, 2, &cfg).unwrap();
        let want = oracle.rising_moment.unwrap();
        assert!(((q.rising_moment.unwrap() - want) / want).abs() < 1e-8);
    }

    #[test]
    fn variance_log_zipf_six_matches_markov() {
        let cfg = QuadratureConfig::default();
        let d = build_distribution(&CouponFamily::LogZipf { p: 1.0 }, 6).unwrap();
        let oracle = moments_oracle_markov(&d, 2).unwrap().variance.unwrap();
        let v = variance_exact(&d, 2, &cfg).unwrap();
        assert!(((v.variance.unwrap() - oracle) / oracle).abs() < 1e-6);
        assert!(v.variance.unwrap() >= -v.error_estimate);
    }

    #[test]
    fn markov_examples() {
        assert!((expectation_oracle_markov(&equal(2), 1).unwrap() - 3.0).abs() < 1e-12);
        assert!((expectation_oracle_markov(&equal(1), 4).unwrap() - 4.0).abs() < 1e-12);
        let d = build_distribution(&CouponFamily::Explicit { weights: vec![0.9, 0.1] }, 2).unwrap();
        let want = 1.0 / 0.9 + 1.0 / 0.1 - 1.0;
        assert!((expectation_oracle_markov(&d, 1).unwrap() - want).abs() < 1e-10);
        assert!((expectation_oracle_inclusion_exclusion(&d).unwrap() - want).abs() < 1e-10);
        let r = moments_oracle_markov(&equal(2), 1).unwrap();
        assert!((r.variance.unwrap() - 2.0).abs() < 1e-12);
        assert!((r.rising_moment.unwrap() - 14.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_guards() {
        assert!(matches!(moments_oracle_markov(&equal(30), 1), Err(Error::StateSpaceTooLarge { .. })));
        assert!(matches!(expectation_oracle_inclusion_exclusion(&equal(26)), Err(Error::SubsetSpaceTooLarge { .. })));
        assert!(matches!(ccdf_exact(&equal(21), 1, 10), Err(Error::StateSpaceTooLarge { .. })));
        assert!(ccdf_exact(&equal(2), 1, 100_001).is_err());
        assert!(expectation_exact(&equal(2), 0, &QuadratureConfig::default()).is_err());
    }

    #[test]
    fn inclusion_exclusion_matches_harmonic() {
        for n in 1..=12 {
            let got = expectation_oracle_inclusion_exclusion(&equal(n)).unwrap();
            let want = harmonic_oracle(n);
            assert!(((got - want) / want).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn ccdf_examples() {
        assert_eq!(ccdf_exact(&equal(1), 2, 1).unwrap(), 1.0);
        assert!((ccdf_exact(&equal(2), 1, 2).unwrap() - 0.5).abs() < 1e-15);
        // Cannot finish before m·N draws.
        assert_eq!(ccdf_exact(&equal(3), 2, 5).unwrap(), 1.0);
        assert!(ccdf_exact(&equal(3), 2, 6).unwrap() < 1.0);
    }

    #[test]
    fn ccdf_nonincreasing_and_sums_to_mean() {
        let d = build_distribution(&CouponFamily::LogZipf { p: 1.0 }, 4).unwrap();
        let mut prev = 1.0;
        let mut mean = 0.0;
        for n in 0..3000 {
            let c = ccdf_exact(&d, 1, n).unwrap();
            assert!(c <= prev + 1e-15);
            prev = c;
            mean += c;
        }
        // E[T] = Σ_n P(T > n)
        let want = expectation_oracle_markov(&d, 1).unwrap();
        assert!((mean - want).abs() < 1e-9, "{mean} {want}");
    }
}
