//! Walker/Vose alias table with a single 64-bit draw per sample.

use rand::RngCore;

#[derive(Debug, Clone, Copy)]
struct Slot {
    threshold: u64,
    alias: u32,
}

/// O(1) sampler for a fixed discrete distribution.
#[derive(Debug, Clone)]
pub struct AliasTable {
    slots: Vec<Slot>,
}

impl AliasTable {
    /// Builds the table in O(n). `probs` must be nonnegative with a positive sum.
    pub fn new(probs: &[f64]) -> Self {
        let n = probs.len();
        assert!(n > 0 && n <= u32::MAX as usize, "alias table needs 1..=u32::MAX entries");
        let total: f64 = probs.iter().sum();
        let mut scaled: Vec<f64> = probs.iter().map(|&p| p * n as f64 / total).collect();
        let mut slots = vec![Slot { threshold: u64::MAX, alias: 0 }; n];
        let mut small = Vec::with_capacity(n);
        let mut large = Vec::with_capacity(n);
        for (i, &q) in scaled.iter().enumerate() {
            if q < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            slots[s] = Slot { threshold: to_threshold(scaled[s]), alias: l as u32 };
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding: they always keep themselves.
        for i in small.into_iter().chain(large) {
            slots[i] = Slot { threshold: u64::MAX, alias: i as u32 };
        }
        Self { slots }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Column from the high half of `u·n`, acceptance test from the low half.
    #[inline(always)]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        let wide = rng.next_u64() as u128 * self.slots.len() as u128;
        let column = (wide >> 64) as usize;
        let slot = self.slots[column];
        if (wide as u64) < slot.threshold {
            column
        } else {
            slot.alias as usize
        }
    }

    /// Probability that `sample` returns `i`, reconstructed from the table.
    pub fn probability(&self, i: usize) -> f64 {
        let n = self.slots.len() as f64;
        let keep = |s: &Slot| s.threshold as f64 / 18_446_744_073_709_551_616.0;
        let mut p = keep(&self.slots[i]);
        for s in &self.slots {
            if s.alias as usize == i && s.threshold != u64::MAX {
                p += 1.0 - keep(s);
            }
        }
        p / n
    }
}

fn to_threshold(q: f64) -> u64 {
    if q <= 0.0 {
        0
    } else if q >= 1.0 {
        u64::MAX
    } else {
        (q * 18_446_744_073_709_551_616.0) as u64
    }
}
