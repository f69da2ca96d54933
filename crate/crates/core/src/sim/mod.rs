//! Reproducible Monte Carlo simulation of `T_m(N)`.
//!
//! Replication `i` draws from its own ChaCha8 stream (key from the seed,
//! stream number `i`), so results do not depend on scheduling. Replications
//! are grouped into fixed blocks whose Welford summaries are merged in block
//! order.

mod alias;
mod stats;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limit::{gumbel_cdf, GumbelNormalization};
use crate::model::CouponDistribution;

pub use alias::AliasTable;
pub use stats::{ks_statistic, ks_statistic_sample, EmpiricalCdf, Welford};

/// Hard cap on draws in one replication.
pub const MAX_DRAWS: u64 = 1 << 46;

const BLOCK: usize = 4096;

/// Draw loop for one distribution and one `m`, reusing its count buffer.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    table: &'a AliasTable,
    m: u32,
    counts: Vec<u32>,
}

impl<'a> Sampler<'a> {
    pub fn new(table: &'a AliasTable, m: u32) -> Self {
        assert!(m >= 1, "m must be positive");
        Self { table, m, counts: vec![0; table.len()] }
    }

    /// Number of draws until every type has been seen `m` times.
    pub fn trial(&mut self, rng: &mut ChaCha8Rng) -> Result<u64> {
        self.counts.fill(0);
        let m = self.m;
        let mut remaining = self.counts.len() as u64 * m as u64;
        let mut draws = 0u64;
        while remaining > 0 {
            if draws >= MAX_DRAWS {
                return Err(Error::SimulationStall { draws });
            }
            draws += 1;
            let c = &mut self.counts[self.table.sample(rng)];
            if *c < m {
                *c += 1;
                remaining -= 1;
            }
        }
        Ok(draws)
    }
}

/// One replication of `T_m(N)` from `rng`.
pub fn sample_trial(dist: &CouponDistribution, m: u32, rng: &mut ChaCha8Rng) -> Result<u64> {
    check_m(m)?;
    let table = AliasTable::new(dist.probs());
    Sampler::new(&table, m).trial(rng)
}

/// Independent stream for replication `index`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn check_m(m: u32) -> Result<()> {
    if m == 0 {
        Err(Error::InvalidParameter("number of sets m must be at least 1".into()))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub replications: u64,
    pub mean: f64,
    /// Unbiased sample variance; 0 when `replications == 1`.
    pub variance: f64,
    /// Set when the variance is a convention rather than an estimate.
    pub variance_degenerate: bool,
    pub min: u64,
    pub max: u64,
    pub total_draws: u64,
    pub empirical_cdf: EmpiricalCdf,
    pub seed: u64,
    #[serde(with = "seconds")]
    pub elapsed: Duration,
    /// Raw replication values in replication order; not serialized.
    #[serde(skip)]
    pub samples: Vec<u64>,
}

impl SimulationSummary {
    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.replications as f64).sqrt()
    }

    pub fn draws_per_second(&self) -> f64 {
        self.total_draws as f64 / self.elapsed.as_secs_f64().max(1e-12)
    }

    /// Writes one replication value per line.
    pub fn write_samples<W: Write>(&self, mut out: W) -> Result<()> {
        for v in &self.samples {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }
}

/// Equality of everything except wall-clock time.
impl PartialEq for SimulationSummary {
    fn eq(&self, other: &Self) -> bool {
        self.replications == other.replications
            && self.mean.to_bits() == other.mean.to_bits()
            && self.variance.to_bits() == other.variance.to_bits()
            && self.variance_degenerate == other.variance_degenerate
            && self.min == other.min
            && self.max == other.max
            && self.total_draws == other.total_draws
            && self.empirical_cdf == other.empirical_cdf
            && self.seed == other.seed
            && self.samples == other.samples
    }
}

mod seconds {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

struct Block {
    stats: Welford,
    samples: Vec<u64>,
}

fn run_block(table: &AliasTable, m: u32, seed: u64, range: std::ops::Range<u64>) -> Result<Block> {
    let mut sampler = Sampler::new(table, m);
    let mut stats = Welford::default();
    let mut samples = Vec::with_capacity((range.end - range.start) as usize);
    for i in range {
        let t = sampler.trial(&mut replication_rng(seed, i))?;
        stats.push(t as f64);
        samples.push(t);
    }
    Ok(Block { stats, samples })
}

/// Runs `reps` independent replications on `workers` threads.
///
/// The output is bit-identical for fixed `(dist, m, reps, seed)` whatever the
/// worker count.
pub fn run_simulation(
    dist: &CouponDistribution,
    m: u32,
    reps: u64,
    seed: u64,
    workers: usize,
) -> Result<SimulationSummary> {
    check_m(m)?;
    if reps == 0 {
        return Err(Error::InvalidParameter("replications must be at least 1".into()));
    }
    if workers == 0 {
        return Err(Error::InvalidParameter("workers must be at least 1".into()));
    }
    let start = Instant::now();
    let table = AliasTable::new(dist.probs());
    let ranges: Vec<_> = (0..reps).step_by(BLOCK).map(|lo| lo..(lo + BLOCK as u64).min(reps)).collect();
    let blocks: Vec<Block> = if workers == 1 {
        ranges.into_iter().map(|r| run_block(&table, m, seed, r)).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| ranges.into_par_iter().map(|r| run_block(&table, m, seed, r)).collect::<Result<Vec<_>>>())?
    };

    let mut stats = Welford::default();
    let mut samples = Vec::with_capacity(reps as usize);
    for b in &blocks {
        stats.merge(&b.stats);
        samples.extend_from_slice(&b.samples);
    }
    let mut sorted = samples.clone();
    sorted.sort_unstable();
    let (variance, variance_degenerate) = match stats.variance() {
        Some(v) => (v, false),
        None => (0.0, true),
    };
    Ok(SimulationSummary {
        replications: reps,
        mean: stats.mean,
        variance,
        variance_degenerate,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        total_draws: samples.iter().sum(),
        empirical_cdf: EmpiricalCdf::from_sorted(&sorted),
        seed,
        elapsed: start.elapsed(),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub sample_size: u64,
    pub normalization: GumbelNormalization,
}

/// KS distance between the law of `(T − b_N)/k_N` and the standard Gumbel.
pub fn ks_distance_to_gumbel(summary: &SimulationSummary, norm: &GumbelNormalization) -> Result<KsReport> {
    if summary.replications < 100 {
        return Err(Error::InvalidParameter(format!(
            "KS distance needs at least 100 replications, got {}",
            summary.replications
        )));
    }
    let statistic = ks_statistic(&summary.empirical_cdf, |t| norm.standardize(t), gumbel_cdf);
    Ok(KsReport { statistic, sample_size: summary.replications, normalization: *norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_distribution, CouponFamily};
    use rand::Rng;

    fn dist(family: CouponFamily, n: usize) -> CouponDistribution {
        build_distribution(&family, n).unwrap()
    }

    #[test]
    fn single_type_takes_m_draws() {
        let d = dist(CouponFamily::Equal, 1);
        let mut rng = replication_rng(5, 0);
        for _ in 0..20 {
            assert_eq!(sample_trial(&d, 3, &mut rng).unwrap(), 3);
        }
    }

    #[test]
    fn trial_at_least_m_times_n() {
        let d = dist(CouponFamily::Zipf { p: 1.0 }, 7);
        let table = AliasTable::new(d.probs());
        let mut s = Sampler::new(&table, 2);
        let mut rng = replication_rng(9, 0);
        for _ in 0..500 {
            assert!(s.trial(&mut rng).unwrap() >= 14);
        }
    }

    #[test]
    fn alias_frequencies_within_binomial_bounds() {
        let d = dist(CouponFamily::LogZipf { p: 1.0 }, 50);
        let table = AliasTable::new(d.probs());
        let mut rng = replication_rng(11, 0);
        let draws = 2_000_000u64;
        let mut counts = vec![0u64; 50];
        for _ in 0..draws {
            counts[table.sample(&mut rng)] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            let p = d.probs()[j];
            let sd = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!((c as f64 - draws as f64 * p).abs() < 5.0 * sd, "type {j}");
        }
    }

    #[test]
    fn streams_are_distinct() {
        let a: u64 = replication_rng(1, 0).random();
        let b: u64 = replication_rng(1, 1).random();
        let c: u64 = replication_rng(2, 0).random();
        assert!(a != b && a != c && b != c);
    }

    #[test]
    fn summary_invariants() {
        let d = dist(CouponFamily::Equal, 10);
        let s = run_simulation(&d, 1, 5000, 42, 1).unwrap();
        assert!(s.variance >= 0.0 && !s.variance_degenerate);
        assert!(s.min as f64 <= s.mean && s.mean <= s.max as f64);
        let mut prev = 0.0;
        for &(_, f) in &s.empirical_cdf.points {
            assert!(f > prev && f <= 1.0);
            prev = f;
        }
        assert_eq!(prev, 1.0);
        assert_eq!(s.total_draws, s.samples.iter().sum::<u64>());
    }

    #[test]
    fn single_replication_is_flagged() {
        let d = dist(CouponFamily::Equal, 5);
        let s = run_simulation(&d, 1, 1, 3, 1).unwrap();
        assert_eq!(s.variance, 0.0);
        assert!(s.variance_degenerate);
        assert_eq!(s.min, s.max);
    }

    #[test]
    fn deterministic_across_workers() {
        let d = dist(CouponFamily::LogZipf { p: 1.0 }, 40);
        let a = run_simulation(&d, 2, 10_000, 77, 1).unwrap();
        let b = run_simulation(&d, 2, 10_000, 77, 8).unwrap();
        let c = run_simulation(&d, 2, 10_000, 78, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn bad_arguments() {
        let d = dist(CouponFamily::Equal, 3);
        assert!(run_simulation(&d, 1, 0, 1, 1).is_err());
        assert!(run_simulation(&d, 0, 10, 1, 1).is_err());
        assert!(run_simulation(&d, 1, 10, 1, 0).is_err());
        let s = run_simulation(&d, 1, 50, 1, 1).unwrap();
        let norm = crate::limit::equal_case_normalization(1, 3).unwrap();
        assert!(ks_distance_to_gumbel(&s, &norm).is_err());
    }

    #[test]
    fn equal_two_types_mean() {
        let d = dist(CouponFamily::Equal, 2);
        let s = run_simulation(&d, 1, 200_000, 2024, 1).unwrap();
        assert!((s.mean - 3.0).abs() < 3.0 * s.std_error(), "{} ± {}", s.mean, s.std_error());
        assert!((s.variance - 2.0).abs() < 0.05);
    }

    #[test]
    fn summary_json_skips_samples() {
        let d = dist(CouponFamily::Equal, 4);
        let s = run_simulation(&d, 1, 200, 5, 1).unwrap();
        let j = serde_json::to_value(&s).unwrap();
        assert!(j.get("samples").is_none());
        assert!(j["elapsed"].is_f64());
        let back: SimulationSummary = serde_json::from_value(j).unwrap();
        assert_eq!(back.mean, s.mean);
        assert_eq!(back.empirical_cdf, s.empirical_cdf);
    }
}
