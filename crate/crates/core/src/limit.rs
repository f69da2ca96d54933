//! Gumbel limit law of the normalized collection time and the `Λ_N`
//! functional whose pointwise limit identifies it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CouponDistribution;
use crate::special::{compensated_sum, ln_factorial, EULER_GAMMA};

/// Where a centering/scale pair comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// `N ln N + (m−1)N lnln N + [γ + p − ln((p+1)(m−1)!)]N`.
    PaperMainResultIv,
    /// Arithmetic of the worked birthday example, including its rounded
    /// intermediates and without the `−ln(p+1)N` term.
    PaperExamplePrinted,
    /// Equal probabilities: `N ln N + (m−1)N lnln N − N ln(m−1)!`.
    EqualCase,
    /// `N ln N + (m−1)N lnln N`, the centering under which `Λ_N → g`.
    TheoremN,
    /// `TheoremN` shifted by `(p − ln((p+1)(m−1)!))N`, so that the limit is
    /// the standard Gumbel law when `g(y) = e^{−(y−p)}/((p+1)(m−1)!)`.
    GumbelConsistent,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::PaperMainResultIv => "paper_main_result_iv",
            Provenance::PaperExamplePrinted => "paper_example_printed",
            Provenance::EqualCase => "equal_case",
            Provenance::TheoremN => "theorem_n",
            Provenance::GumbelConsistent => "gumbel_consistent",
        }
    }
}

/// Family for which a limit normalization is requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitFamily {
    Equal,
    LogZipf { p: f64 },
}

/// Affine normalization `(T − b_N)/k_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelNormalization {
    pub b_n: f64,
    pub k_n: f64,
    pub provenance: Provenance,
}

impl GumbelNormalization {
    pub fn standardize(&self, t: f64) -> f64 {
        (t - self.b_n) / self.k_n
    }
}

/// Standard Gumbel distribution function `exp(−e^{−y})`.
pub fn gumbel_cdf(y: f64) -> f64 {
    (-(-y).exp()).exp()
}

fn check(m: u32, n: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParameter("number of sets m must be at least 1".into()));
    }
    if n < 3 {
        return Err(Error::InvalidParameter(format!("N must be at least 3, got {n}")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("exponent p must be positive, got {p}")))
    }
}

fn leading(m: u32, n: usize) -> f64 {
    let nf = n as f64;
    nf * nf.ln() + (m - 1) as f64 * nf * nf.ln().ln()
}

/// Log-Zipf normalization of the main theorem, `k_N = N`.
pub fn gumbel_normalization(p: f64, m: u32, n: usize) -> Result<GumbelNormalization> {
    normalization(LimitFamily::LogZipf { p }, m, n, Provenance::PaperMainResultIv)
}

/// Equal-probability (Erdős–Rényi) normalization.
pub fn equal_case_normalization(m: u32, n: usize) -> Result<GumbelNormalization> {
    normalization(LimitFamily::Equal, m, n, Provenance::EqualCase)
}

/// Normalization for `family` under the requested provenance.
///
/// For the equal family the log-Zipf specific tags collapse to the
/// Erdős–Rényi centering, except `PaperExamplePrinted`, which rounds
/// `N ln N` to an integer as the worked example does.
pub fn normalization(family: LimitFamily, m: u32, n: usize, provenance: Provenance) -> Result<GumbelNormalization> {
    check(m, n)?;
    let nf = n as f64;
    let ln_fact = ln_factorial(m - 1);
    let lnln = (m - 1) as f64 * nf * nf.ln().ln();
    let (b_n, provenance) = match family {
        LimitFamily::Equal => match provenance {
            Provenance::PaperExamplePrinted => ((nf * nf.ln()).round() + lnln - nf * ln_fact, provenance),
            Provenance::TheoremN => (leading(m, n), provenance),
            _ => (leading(m, n) - nf * ln_fact, Provenance::EqualCase),
        },
        LimitFamily::LogZipf { p } => {
            check_p(p)?;
            let l = ln_fact + (p + 1.0).ln();
            let b = match provenance {
                Provenance::PaperMainResultIv => leading(m, n) + (EULER_GAMMA + p - l) * nf,
                Provenance::PaperExamplePrinted => {
                    let shift = ((EULER_GAMMA + p - ln_fact) * nf * 1e3).round() / 1e3;
                    (nf * nf.ln()).round() + lnln + shift
                }
                Provenance::TheoremN => leading(m, n),
                Provenance::GumbelConsistent => leading(m, n) + (p - l) * nf,
                Provenance::EqualCase => {
                    return Err(Error::InvalidParameter(
                        "equal_case normalization does not apply to log-Zipf weights".into(),
                    ))
                }
            };
            (b, provenance)
        }
    };
    Ok(GumbelNormalization { b_n, k_n: nf, provenance })
}

/// `gumbel_cdf((n − b_N)/k_N)` for log-Zipf weights.
pub fn limit_probability(p: f64, m: u32, n_types: usize, n: f64, provenance: Provenance) -> Result<f64> {
    let norm = normalization(LimitFamily::LogZipf { p }, m, n_types, provenance)?;
    Ok(gumbel_cdf(norm.standardize(n)))
}

/// Erdős–Rényi limit `P(T_m(N) ≤ n)` for equal probabilities.
pub fn equal_case_limit_probability(m: u32, n_types: usize, n: f64) -> Result<f64> {
    let norm = equal_case_normalization(m, n_types)?;
    Ok(gumbel_cdf(norm.standardize(n)))
}

/// `Λ_N(y) = b_N^{m−1}/(m−1)! · Σ_j p_j^{m−1} e^{−p_j(b_N + y k_N)}`.
pub fn lambda_n(dist: &CouponDistribution, m: u32, norm: &GumbelNormalization, y: f64) -> f64 {
    assert!(m >= 1, "m must be positive");
    let k = (m - 1) as f64;
    let ln_fact = ln_factorial(m - 1);
    let t = norm.b_n + y * norm.k_n;
    compensated_sum(dist.probs().iter().map(|&pj| {
        let ln_term = if m == 1 { -pj * t } else { k * (norm.b_n * pj).ln() - pj * t - ln_fact };
        ln_term.exp()
    }))
}

/// `g(y) = e^{−(y−p)}/((p+1)(m−1)!)`.
pub fn limit_target_g(p: f64, m: u32, y: f64) -> f64 {
    (-(y - p) - (p + 1.0).ln() - ln_factorial(m - 1)).exp()
}
