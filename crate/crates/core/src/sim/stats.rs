//! Streaming moments, empirical distribution functions and the
//! Kolmogorov–Smirnov distance.

use serde::{Deserialize, Serialize};

/// One-pass mean and sum of squared deviations (Welford), mergeable with
/// Chan's pairwise update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        self.mean += delta * nb / n;
        self.m2 += other.m2 + delta * delta * na * nb / n;
        self.count += other.count;
    }

    /// Unbiased variance; `None` with fewer than two observations.
    pub fn variance(&self) -> Option<f64> {
        if self.count < 2 {
            None
        } else {
            Some((self.m2 / (self.count - 1) as f64).max(0.0))
        }
    }
}

/// Step function `n ↦ #{T ≤ n}/reps`, stored at its jump points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmpiricalCdf {
    pub points: Vec<(u64, f64)>,
}

impl EmpiricalCdf {
    /// From an already sorted sample.
    pub fn from_sorted(sorted: &[u64]) -> Self {
        let total = sorted.len() as f64;
        let mut points: Vec<(u64, f64)> = Vec::new();
        for (i, &v) in sorted.iter().enumerate() {
            let frac = (i + 1) as f64 / total;
            match points.last_mut() {
                Some(last) if last.0 == v => last.1 = frac,
                _ => points.push((v, frac)),
            }
        }
        Self { points }
    }

    /// Empirical `P(T ≤ n)`.
    pub fn at(&self, n: u64) -> f64 {
        match self.points.partition_point(|&(v, _)| v <= n) {
            0 => 0.0,
            k => self.points[k - 1].1,
        }
    }
}

/// `sup_x |F_emp(x) − F(x)|` over the jump points of `ecdf` after mapping
/// each point through `transform`; `cdf` must be continuous.
pub fn ks_statistic<F, G>(ecdf: &EmpiricalCdf, transform: G, cdf: F) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let mut below = 0.0;
    let mut d: f64 = 0.0;
    for &(v, frac) in &ecdf.points {
        let f = cdf(transform(v as f64));
        d = d.max((frac - f).abs()).max((below - f).abs());
        below = frac;
    }
    d
}

/// KS statistic of a real-valued sample against a continuous `cdf`.
pub fn ks_statistic_sample<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(|a, b| a.total_cmp(b));
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}
