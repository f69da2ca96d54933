//! Large-`N` expansions for the log-Zipf and equal-probability families,
//! evaluated term by term.
//!
//! Notation shared by the expansions: `ℓ = ln N`, `ℓ₂ = ln ln N`,
//! `L = ln(m−1)! + ln(p+1)`, `b = p/(p+1)` and
//! `d₁ = (1−b²)(m−1) − (1−b)/b − 3b²(1−b)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_scalar, QuadratureConfig};
use crate::special::{ln_factorial, EULER_GAMMA, PI_SQUARED_OVER_SIX};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    pub value: f64,
}

/// Labeled term-by-term breakdown of an asymptotic expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub expansion: String,
    pub terms: Vec<Term>,
    pub total: f64,
    /// Magnitude of the omitted remainder.
    pub error_scale: f64,
    pub constants: BTreeMap<String, f64>,
}

impl ExpansionReport {
    fn new(expansion: &str, terms: Vec<(&str, f64)>, error_scale: f64, constants: BTreeMap<String, f64>) -> Self {
        let terms: Vec<Term> =
            terms.into_iter().map(|(label, value)| Term { label: label.to_string(), value }).collect();
        let total = terms.iter().map(|t| t.value).sum();
        Self { expansion: expansion.to_string(), terms, total, error_scale, constants }
    }

    pub fn term(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.label == label).map(|t| t.value)
    }
}

/// Constants entering the log-Zipf expansions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogZipfConstants {
    pub p: f64,
    pub m: u32,
    /// `ln(m−1)! + ln(p+1)`.
    pub l: f64,
    pub b: f64,
    pub d1: f64,
}

impl LogZipfConstants {
    pub fn new(p: f64, m: u32) -> Self {
        let b = p / (p + 1.0);
        let k = (m - 1) as f64;
        let d1 = (1.0 - b * b) * k - (1.0 - b) / b - 3.0 * b * b * (1.0 - b);
        Self { p, m, l: ln_factorial(m - 1) + (p + 1.0).ln(), b, d1 }
    }

    /// Coefficient of `N`: `p + γ − ln(m−1)! − ln(p+1)`.
    pub fn linear(&self) -> f64 {
        self.p + EULER_GAMMA - self.l
    }

    /// `(b − (m−1))(γ − L − d₁(1−b))`, shared by both moment expansions.
    fn cross(&self) -> f64 {
        let k = (self.m - 1) as f64;
        (self.b - k) * (EULER_GAMMA - self.l - self.d1 * (1.0 - self.b))
    }

    /// Coefficient `C5` of `N/ln N` in the expectation.
    pub fn c5(&self) -> f64 {
        let p = self.p;
        p * (p + 1.0) + p * (EULER_GAMMA - self.l) - self.cross()
    }

    /// Constant coefficient of `N²` in the rising moment.
    pub fn rising_constant(&self) -> f64 {
        let (p, g, l) = (self.p, EULER_GAMMA, self.l);
        p * p + 2.0 * p * (p + 1.0) - 2.0 * (2.0 * p + g) * l + 4.0 * p * g - l * l + g * g + PI_SQUARED_OVER_SIX
            - 2.0 * self.cross()
    }

    fn map(&self, ln_n: f64) -> BTreeMap<String, f64> {
        let mut c = BTreeMap::new();
        c.insert("gamma".into(), EULER_GAMMA);
        c.insert("b".into(), self.b);
        c.insert("d1".into(), self.d1);
        c.insert("C_m".into(), EULER_GAMMA - ln_factorial(self.m - 1));
        c.insert("L".into(), self.l);
        c.insert("omega".into(), 1.0 / ln_n);
        c
    }
}

fn check(p: f64, m: u32, n: usize) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidParameter(format!("exponent p must be positive, got {p}")));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("number of sets m must be at least 1".into()));
    }
    if n < 3 {
        return Err(Error::InvalidParameter(format!("N must be at least 3, got {n}")));
    }
    Ok(())
}

/// Five-term expansion of `E[T_m(N)]` for log-Zipf weights `(ln j)^{−p}`.
pub fn expectation_asymptotic(p: f64, m: u32, n: usize) -> Result<ExpansionReport> {
    check(p, m, n)?;
    let c = LogZipfConstants::new(p, m);
    let nf = n as f64;
    let ln_n = nf.ln();
    let lln = ln_n.ln();
    let k = (m - 1) as f64;
    Ok(ExpansionReport::new(
        "expectation",
        vec![
            ("N ln N", nf * ln_n),
            ("(m-1) N lnln N", k * nf * lln),
            ("[p+gamma-ln(m-1)!-ln(p+1)] N", c.linear() * nf),
            ("-(m-1)[b-(m-1)-p] N lnln N/ln N", -k * (c.b - k - p) * nf * lln / ln_n),
            ("C5 N/ln N", c.c5() * nf / ln_n),
        ],
        nf * lln / (ln_n * ln_n),
        {
            let mut map = c.map(ln_n);
            map.insert("C5".into(), c.c5());
            map
        },
    ))
}

/// Six-term expansion of `E[T_m(N)(T_m(N)+1)]` for log-Zipf weights.
pub fn rising_moment_asymptotic(p: f64, m: u32, n: usize) -> Result<ExpansionReport> {
    check(p, m, n)?;
    let c = LogZipfConstants::new(p, m);
    let nf = n as f64;
    let n2 = nf * nf;
    let ln_n = nf.ln();
    let lln = ln_n.ln();
    let k = (m - 1) as f64;
    Ok(ExpansionReport::new(
        "rising_moment",
        vec![
            ("N^2 (ln N)^2", n2 * ln_n * ln_n),
            ("2(m-1) N^2 ln N lnln N", 2.0 * k * n2 * ln_n * lln),
            ("2[p+gamma-ln(m-1)!-ln(p+1)] N^2 ln N", 2.0 * c.linear() * n2 * ln_n),
            ("(m-1)^2 N^2 (lnln N)^2", k * k * n2 * lln * lln),
            ("-2(m-1)[b-(m-1)-gamma-2p+L] N^2 lnln N", -2.0 * k * (c.b - k - EULER_GAMMA - 2.0 * p + c.l) * n2 * lln),
            ("C6 N^2", c.rising_constant() * n2),
        ],
        n2 * lln * lln / ln_n,
        {
            let mut map = c.map(ln_n);
            map.insert("C6".into(), c.rising_constant());
            map
        },
    ))
}

/// Leading variance `(π²/6) N²`, the same for every `m`.
pub fn variance_leading(n: usize) -> f64 {
    let nf = n as f64;
    PI_SQUARED_OVER_SIX * nf * nf
}

/// Classical equal-probability expansion `N ln N + (m−1)N lnln N + C_m N`,
/// `C_m = γ − ln(m−1)!`.
pub fn equal_case_expectation(m: u32, n: usize) -> Result<ExpansionReport> {
    check(1.0, m, n)?;
    let nf = n as f64;
    let ln_n = nf.ln();
    let lln = ln_n.ln();
    let cm = EULER_GAMMA - ln_factorial(m - 1);
    let mut constants = BTreeMap::new();
    constants.insert("gamma".into(), EULER_GAMMA);
    constants.insert("C_m".into(), cm);
    Ok(ExpansionReport::new(
        "equal_expectation",
        vec![("N ln N", nf * ln_n), ("(m-1) N lnln N", (m - 1) as f64 * nf * lln), ("C_m N", cm * nf)],
        nf / ln_n,
        constants,
    ))
}

/// Three-term Laplace expansion of
/// `I_k(N) = ∫₂^N exp(−(ln N)^{p+1} s / (ln x)^p) (ln x)^{−kp} dx`,
/// with `ln N` supplied directly.
pub fn laplace_ik_expansion_ln(p: f64, k: u32, s: f64, ln_n: f64) -> f64 {
    let kp = k as f64 * p;
    let q = 1.0 + p * s;
    let bracket = 1.0 / q + kp / (q * q * ln_n) - p * (p + 1.0) * s / (q * q * q * ln_n);
    ((1.0 - s) * ln_n - kp * ln_n.ln()).exp() * bracket
}

/// Three-term Laplace expansion of `I_k(N)`.
pub fn laplace_ik_expansion(p: f64, k: u32, s: f64, n: usize) -> Result<f64> {
    check(p, 1, n)?;
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidParameter(format!("s must be positive, got {s}")));
    }
    Ok(laplace_ik_expansion_ln(p, k, s, (n as f64).ln()))
}

/// `I_k(N)` by adaptive quadrature in `u = ln x`:
/// `∫_{ln 2}^{ln N} exp(u − (ln N)^{p+1} s u^{−p}) u^{−kp} du`.
///
/// The exponent is increasing in `u`, so its value at `u = ln N` is
/// factored out before integrating.
pub fn laplace_ik_quadrature(p: f64, k: u32, s: f64, n: usize, cfg: &QuadratureConfig) -> Result<f64> {
    check(p, 1, n)?;
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidParameter(format!("s must be positive, got {s}")));
    }
    let ln_n = (n as f64).ln();
    let lambda = ln_n.powf(p + 1.0) * s;
    let kp = k as f64 * p;
    let peak = ln_n - lambda * ln_n.powf(-p) - kp * ln_n.ln();
    let f = |u: f64| (u - lambda * u.powf(-p) - kp * u.ln() - peak).exp();
    let cfg = QuadratureConfig { abs_tol: cfg.abs_tol.min(1e-300), ..*cfg };
    let (v, _) = integrate_scalar(f, 2f64.ln(), ln_n, &cfg)?;
    Ok(peak.exp() * v)
}
