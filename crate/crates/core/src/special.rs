//! Elementary special functions used throughout the crate: the truncated
//! exponential series, the Poisson tail split `P(m, x) + Q(m, x) = 1`, and a
//! compensated accumulator.

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `π²/6`, the variance of the standard Gumbel law.
pub const PI_SQUARED_OVER_SIX: f64 = 1.644_934_066_848_226_4;

/// `ln(n!)`, exact summation for small `n` and Stirling's series beyond.
pub fn ln_factorial(n: u32) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n <= 64 {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let x = n as f64 + 1.0;
    // ln Γ(x) by Stirling with four correction terms; |err| < 1e-15 for x > 64.
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// `S_m(y) = Σ_{l=0}^{m-1} y^l / l!`, the m-th partial sum of `e^y`.
pub fn partial_sum_exp(y: f64, m: u32) -> f64 {
    debug_assert!(m >= 1);
    let mut term = 1.0;
    let mut sum = 1.0;
    for l in 1..m {
        term *= y / l as f64;
        sum += term;
    }
    sum
}

/// `1 − S_m(x)e^{−x}`, the probability that a Poisson(x) variable reaches `m`.
///
/// This is the regularized lower incomplete gamma function `P(m, x)`.
pub fn deficiency(x: f64, m: u32) -> f64 {
    PoissonTail::new(m).split(x).0
}

/// Evaluates both sides of `P(m, x) + Q(m, x) = 1` without cancellation.
///
/// For `x < m` the lower side `P` comes from its power series; otherwise the
/// upper side `Q = e^{−x} S_m(x)` is a finite sum of positive terms. The other
/// side is recovered by subtraction, which is safe because it is at least
/// roughly one half.
#[derive(Debug, Clone, Copy)]
pub struct PoissonTail {
    m: u32,
    ln_fact_m: f64,
    ln_fact_m1: f64,
}

impl PoissonTail {
    pub fn new(m: u32) -> Self {
        assert!(m >= 1, "m must be positive");
        Self { m, ln_fact_m: ln_factorial(m), ln_fact_m1: ln_factorial(m - 1) }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Returns `(P(m, x), Q(m, x))`.
    pub fn split(&self, x: f64) -> (f64, f64) {
        if x <= 0.0 {
            return (0.0, 1.0);
        }
        if self.m == 1 {
            return (-(-x).exp_m1(), (-x).exp());
        }
        if x < self.m as f64 {
            let p = self.ln_lower_series(x).exp();
            (p, 1.0 - p)
        } else {
            let q = self.upper_sum(x);
            (1.0 - q, q)
        }
    }

    /// `ln P(m, x)`, accurate also when `P` underflows.
    pub fn ln_lower(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if self.m == 1 {
            return if x < std::f64::consts::LN_2 { (-(-x).exp_m1()).ln() } else { (-(-x).exp()).ln_1p() };
        }
        if x < self.m as f64 {
            self.ln_lower_series(x)
        } else {
            (-self.upper_sum(x)).ln_1p()
        }
    }

    /// `Q(m, x) = e^{−x} S_m(x)`.
    pub fn upper(&self, x: f64) -> f64 {
        self.split(x).1
    }

    // ln[e^{-x} x^m / m! · Σ_n x^n / ((m+1)…(m+n))]
    fn ln_lower_series(&self, x: f64) -> f64 {
        let m = self.m as f64;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = m;
        loop {
            k += 1.0;
            term *= x / k;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        -x + m * x.ln() - self.ln_fact_m + sum.ln()
    }

    // Summed downward from the largest term (l = m-1) so large x cannot overflow.
    fn upper_sum(&self, x: f64) -> f64 {
        let top = m_minus_one(self.m);
        let ln_top = -x + top * x.ln() - self.ln_fact_m1;
        if ln_top < -745.0 {
            return 0.0;
        }
        let mut ratio = 1.0;
        let mut sum = 1.0;
        let mut l = top;
        while l >= 1.0 {
            ratio *= l / x;
            sum += ratio;
            l -= 1.0;
        }
        ln_top.exp() * sum
    }
}

fn m_minus_one(m: u32) -> f64 {
    (m - 1) as f64
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}
