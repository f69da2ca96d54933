//! Coupon-probability families and their normalizers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::CompensatedSum;

/// Symbolic description of the weight sequence `a_j`.
///
/// Serialized as `{"kind":"log-zipf","p":1.0}`, `{"kind":"equal"}`,
/// `{"kind":"zipf","p":2.0}` or `{"kind":"explicit","weights":[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CouponFamily {
    /// `a_j = 1`.
    Equal,
    /// `a_j = j^{-p}`, `j = 1..=N`.
    Zipf { p: f64 },
    /// `a_j = (ln j)^{-p}`, `j = 2..=N+1`.
    LogZipf { p: f64 },
    /// User-supplied positive weights, used in the order given.
    Explicit { weights: Vec<f64> },
}

impl CouponFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            CouponFamily::Equal => Ok(()),
            CouponFamily::Zipf { p } | CouponFamily::LogZipf { p } => {
                if p.is_finite() && *p > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("exponent p must be positive, got {p}")))
                }
            }
            CouponFamily::Explicit { weights } => {
                if weights.is_empty() {
                    return Err(Error::InvalidParameter("explicit weights are empty".into()));
                }
                match weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
                    Some(i) => Err(Error::InvalidParameter(format!(
                        "explicit weight #{} is not strictly positive: {}",
                        i + 1,
                        weights[i]
                    ))),
                    None => Ok(()),
                }
            }
        }
    }

    /// Short kebab-case name, matching the serialized `kind`.
    pub fn kind(&self) -> &'static str {
        match self {
            CouponFamily::Equal => "equal",
            CouponFamily::Zipf { .. } => "zipf",
            CouponFamily::LogZipf { .. } => "log-zipf",
            CouponFamily::Explicit { .. } => "explicit",
        }
    }

    /// Exponent `p` for the Zipf families.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            CouponFamily::Zipf { p } | CouponFamily::LogZipf { p } => Some(*p),
            _ => None,
        }
    }

    /// Index of the first weight used when building `N` types.
    pub fn first_index(&self) -> usize {
        match self {
            CouponFamily::LogZipf { .. } => 2,
            _ => 1,
        }
    }

    /// Loads explicit weights from a text file with one value per line.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn explicit_from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut weights = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let w: f64 =
                line.parse().map_err(|_| Error::Parse(format!("line {}: not a number: {line:?}", lineno + 1)))?;
            weights.push(w);
        }
        let family = CouponFamily::Explicit { weights };
        family.validate()?;
        Ok(family)
    }
}

/// The weight `a_j` of the family.
pub fn weight(family: &CouponFamily, j: usize) -> Result<f64> {
    if j == 0 {
        return Err(Error::Domain("coupon index must be at least 1".into()));
    }
    match family {
        CouponFamily::Equal => Ok(1.0),
        CouponFamily::Zipf { p } => Ok((j as f64).powf(-p)),
        CouponFamily::LogZipf { p } => {
            if j < 2 {
                return Err(Error::Domain("log-Zipf weights need j >= 2 (ln 1 = 0)".into()));
            }
            Ok((j as f64).ln().powf(-p))
        }
        CouponFamily::Explicit { weights } => {
            weights.get(j - 1).copied().ok_or(Error::Index { index: j, len: weights.len() })
        }
    }
}

/// A concrete `N`-point probability vector `p_j = a_j / A_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouponDistribution {
    n_types: usize,
    probs: Vec<f64>,
    normalizer: f64,
    family: CouponFamily,
    /// Family index of the first type (2 for log-Zipf, 1 otherwise).
    first_index: usize,
}

impl CouponDistribution {
    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `A_N`, the exact (compensated) sum of the weights used.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn family(&self) -> &CouponFamily {
        &self.family
    }

    pub fn first_index(&self) -> usize {
        self.first_index
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }
}

/// Builds the `N`-type distribution of `family`.
///
/// Log-Zipf uses indices `j = 2..=N+1`; an explicit family uses its first
/// `N` weights.
pub fn build_distribution(family: &CouponFamily, n: usize) -> Result<CouponDistribution> {
    family.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("number of coupon types N must be at least 1".into()));
    }
    if let CouponFamily::Explicit { weights } = family {
        if n > weights.len() {
            return Err(Error::Index { index: n, len: weights.len() });
        }
    }
    let first = family.first_index();
    let weights = (first..first + n).map(|j| weight(family, j)).collect::<Result<Vec<f64>>>()?;
    let normalizer = weights.iter().copied().collect::<CompensatedSum>().value();
    if !(normalizer.is_finite() && normalizer > 0.0) {
        return Err(Error::Domain(format!("weight sum is not finite and positive: {normalizer}")));
    }
    let probs: Vec<f64> = weights.iter().map(|a| a / normalizer).collect();
    if let Some(bad) = probs.iter().find(|q| !(q.is_finite() && **q > 0.0)) {
        return Err(Error::Domain(format!("coupon probability underflowed: {bad}")));
    }
    Ok(CouponDistribution { n_types: n, probs, normalizer, family: family.clone(), first_index: first })
}

/// `Σ_{j=2}^{N} (ln j)^{-p}` by compensated summation.
pub fn log_zipf_normalizer_exact(p: f64, n: usize) -> f64 {
    (2..=n).map(|j| (j as f64).ln().powf(-p)).collect::<CompensatedSum>().value()
}

/// Three-term large-`N` expansion of `Σ_{j=2}^{N} (ln j)^{-p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizerExpansion {
    pub terms: Vec<(String, f64)>,
    /// `N / (ln N)^{p+3}`, the order of the omitted remainder.
    pub error_scale: f64,
}

impl NormalizerExpansion {
    pub fn total(&self) -> f64 {
        self.terms.iter().map(|(_, v)| v).sum()
    }
}

pub fn normalizer_asymptotic(p: f64, n: usize) -> Result<NormalizerExpansion> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidParameter(format!("exponent p must be positive, got {p}")));
    }
    if n < 3 {
        return Err(Error::InvalidParameter(format!("N must be at least 3, got {n}")));
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let lead = nf / ln_n.powf(p);
    Ok(NormalizerExpansion {
        terms: vec![
            ("N/(ln N)^p".into(), lead),
            ("pN/(ln N)^(p+1)".into(), p * lead / ln_n),
            ("p(p+1)N/(ln N)^(p+2)".into(), p * (p + 1.0) * lead / (ln_n * ln_n)),
        ],
        error_scale: nf / ln_n.powf(p + 3.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weight_examples() {
        let lz = CouponFamily::LogZipf { p: 1.0 };
        assert!((weight(&lz, 2).unwrap() - std::f64::consts::LOG2_E).abs() < 1e-15);
        assert_eq!(weight(&CouponFamily::Equal, 17).unwrap(), 1.0);
        let z = CouponFamily::Zipf { p: 2.0 };
        assert!((weight(&z, 3).unwrap() - 1.0 / 9.0).abs() < 1e-16);
    }

    #[test]
    fn weight_errors() {
        assert!(matches!(weight(&CouponFamily::LogZipf { p: 1.0 }, 1), Err(Error::Domain(_))));
        let ex = CouponFamily::Explicit { weights: vec![1.0, 2.0] };
        assert_eq!(weight(&ex, 3), Err(Error::Index { index: 3, len: 2 }));
    }

    #[test]
    fn invalid_families_rejected() {
        assert!(build_distribution(&CouponFamily::Zipf { p: 0.0 }, 3).is_err());
        assert!(build_distribution(&CouponFamily::LogZipf { p: -1.0 }, 3).is_err());
        let bad = CouponFamily::Explicit { weights: vec![1.0, 0.0] };
        assert!(build_distribution(&bad, 2).is_err());
        assert!(build_distribution(&CouponFamily::Equal, 0).is_err());
    }

    #[test]
    fn build_examples() {
        let d = build_distribution(&CouponFamily::Equal, 4).unwrap();
        assert_eq!(d.probs(), &[0.25; 4]);
        assert_eq!(d.normalizer(), 4.0);

        let d = build_distribution(&CouponFamily::LogZipf { p: 1.0 }, 3).unwrap();
        let a = [1.0 / 2f64.ln(), 1.0 / 3f64.ln(), 1.0 / 4f64.ln()];
        let total: f64 = a.iter().sum();
        assert!((d.normalizer() - total).abs() < 1e-15);
        for (q, w) in d.probs().iter().zip(a) {
            assert!((q - w / total).abs() < 1e-15);
        }
        assert_eq!(d.first_index(), 2);

        let d = build_distribution(&CouponFamily::Explicit { weights: vec![2.0, 6.0] }, 2).unwrap();
        assert_eq!(d.probs(), &[0.25, 0.75]);
    }

    #[test]
    fn zipf_families_strictly_decreasing() {
        for fam in [CouponFamily::LogZipf { p: 1.5 }, CouponFamily::Zipf { p: 0.7 }] {
            let d = build_distribution(&fam, 500).unwrap();
            assert!(d.probs().windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn normalization_holds_at_large_n() {
        let d = build_distribution(&CouponFamily::LogZipf { p: 1.0 }, 10_000_000).unwrap();
        let s: f64 = d.probs().iter().copied().collect::<CompensatedSum>().value();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn family_json_format() {
        let f = CouponFamily::LogZipf { p: 1.0 };
        assert_eq!(serde_json::to_string(&f).unwrap(), r#"{"kind":"log-zipf","p":1.0}"#);
        let g: CouponFamily = serde_json::from_str(r#"{"kind":"equal"}"#).unwrap();
        assert_eq!(g, CouponFamily::Equal);
        let h: CouponFamily = serde_json::from_str(r#"{"kind":"explicit","weights":[1,2]}"#).unwrap();
        assert_eq!(h, CouponFamily::Explicit { weights: vec![1.0, 2.0] });
    }

    #[test]
    fn explicit_weights_from_file() {
        let dir = std::env::temp_dir().join(format!("ccp-weights-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("w.txt");
        std::fs::write(&path, "# weights\n2\n\n6.0\n").unwrap();
        let fam = CouponFamily::explicit_from_file(&path).unwrap();
        assert_eq!(fam, CouponFamily::Explicit { weights: vec![2.0, 6.0] });
        std::fs::write(&path, "2\nabc\n").unwrap();
        assert!(matches!(CouponFamily::explicit_from_file(&path), Err(Error::Parse(_))));
        std::fs::remove_dir_all(&dir).ok();
    }

    // Error ratio |exact - expansion| / (N/(ln N)^{p+3}) on a geometric grid.
    fn normalizer_error_ratio(p: f64, n: usize) -> f64 {
        let exact = log_zipf_normalizer_exact(p, n);
        let e = normalizer_asymptotic(p, n).unwrap();
        (exact - e.total()).abs() / e.error_scale
    }

    #[test]
    fn normalizer_expansion_p1_million() {
        let e = normalizer_asymptotic(1.0, 1_000_000).unwrap();
        assert_eq!(e.terms.len(), 3);
        assert!((e.total() - 7.84e4).abs() < 100.0, "{}", e.total());
        // The remainder's leading coefficient is p(p+1)(p+2) = 6.
        let r = normalizer_error_ratio(1.0, 1_000_000);
        assert!(r < 10.0, "ratio {r}");
    }

    #[test]
    fn normalizer_error_ratio_bounded() {
        for p in [1.0, 2.0] {
            let ratios: Vec<f64> =
                [1_000usize, 10_000, 100_000, 1_000_000].iter().map(|&n| normalizer_error_ratio(p, n)).collect();
            // Frozen from the direct-summation oracle: ratios shrink towards
            // p(p+1)(p+2) from above as N grows.
            let cap = if p == 1.0 { 20.0 } else { 200.0 };
            assert!(ratios.iter().all(|r| *r < cap), "p={p}: {ratios:?}");
            assert!(ratios.windows(2).all(|w| w[1] <= w[0]), "p={p}: {ratios:?}");
        }
        let e = normalizer_asymptotic(2.0, 10_000).unwrap();
        assert!((e.terms[0].1 - 117.88).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn probabilities_positive_and_normalized(
            weights in proptest::collection::vec(1e-3f64..1e3, 1..60)
        ) {
            let fam = CouponFamily::Explicit { weights: weights.clone() };
            let d = build_distribution(&fam, weights.len()).unwrap();
            let s: f64 = d.probs().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(d.probs().iter().all(|q| *q > 0.0));
        }

        #[test]
        fn scale_invariance(
            weights in proptest::collection::vec(1e-3f64..1e3, 1..40),
            c in prop_oneof![Just(1e-6), Just(1.0), Just(1e6)],
        ) {
            let n = weights.len();
            let base = build_distribution(&CouponFamily::Explicit { weights: weights.clone() }, n).unwrap();
            let scaled: Vec<f64> = weights.iter().map(|w| w * c).collect();
            let other = build_distribution(&CouponFamily::Explicit { weights: scaled }, n).unwrap();
            for (a, b) in base.probs().iter().zip(other.probs()) {
                prop_assert!(((a - b) / a).abs() <= 1e-15);
            }
        }
    }
}
