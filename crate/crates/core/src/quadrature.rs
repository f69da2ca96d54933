//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector-valued
//! integrands on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::CompensatedSum;

/// Tolerances and budget shared by every quadrature in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Union-bound threshold used to truncate improper integrals.
    pub tail_epsilon: f64,
    pub max_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, tail_epsilon: 1e-14, max_panels: 1 << 20 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.rel_tol) || !positive(self.abs_tol) || !positive(self.tail_epsilon) {
            return Err(Error::InvalidParameter(format!("quadrature tolerances must be strictly positive: {self:?}")));
        }
        if self.max_panels < 2 {
            return Err(Error::InvalidParameter("max_panels must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<const D: usize> {
    pub value: [f64; D],
    pub error: [f64; D],
    pub panels: usize,
    pub evaluations: usize,
}

// Kronrod abscissae (descending, last is the centre) and weights; the Gauss
// 7-point weights apply to the odd-indexed abscissae.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel<const D: usize> {
    a: f64,
    b: f64,
    value: [f64; D],
    error: [f64; D],
    // Largest component error scaled by its tolerance; the heap key.
    priority: f64,
    splittable: bool,
}

impl<const D: usize> PartialEq for Panel<D> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<const D: usize> Eq for Panel<D> {}
impl<const D: usize> PartialOrd for Panel<D> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const D: usize> Ord for Panel<D> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority).then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gauss_kronrod<const D: usize, F>(f: &F, a: f64, b: f64) -> ([f64; D], [f64; D])
where
    F: Fn(f64) -> [f64; D],
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = [0.0; D];
    let mut gauss = [0.0; D];
    let mut abs_k = [0.0; D];
    let mut fvals: [([f64; D], [f64; D]); 7] = [([0.0; D], [0.0; D]); 7];
    for d in 0..D {
        kronrod[d] = WGK[7] * fc[d];
        gauss[d] = WG[3] * fc[d];
        abs_k[d] = WGK[7] * fc[d].abs();
    }
    for (i, slot) in fvals.iter_mut().enumerate() {
        let dx = half * XGK[i];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        for d in 0..D {
            kronrod[d] += WGK[i] * (f1[d] + f2[d]);
            abs_k[d] += WGK[i] * (f1[d].abs() + f2[d].abs());
            if i % 2 == 1 {
                gauss[d] += WG[i / 2] * (f1[d] + f2[d]);
            }
        }
        *slot = (f1, f2);
    }
    let mut value = [0.0; D];
    let mut error = [0.0; D];
    for d in 0..D {
        let mean = 0.5 * kronrod[d];
        let mut asc = WGK[7] * (fc[d] - mean).abs();
        for (i, (f1, f2)) in fvals.iter().enumerate() {
            asc += WGK[i] * ((f1[d] - mean).abs() + (f2[d] - mean).abs());
        }
        let resasc = asc * half.abs();
        value[d] = kronrod[d] * half;
        let raw = ((kronrod[d] - gauss[d]) * half).abs();
        // QUADPACK's empirical sharpening of |K15 - G7|.
        error[d] = if resasc != 0.0 && raw != 0.0 { resasc * (200.0 * raw / resasc).powf(1.5).min(1.0) } else { raw };
        let roundoff = 50.0 * f64::EPSILON * abs_k[d] * half.abs();
        if roundoff > error[d] {
            error[d] = roundoff;
        }
    }
    (value, error)
}

/// Integrates a vector-valued `f` over `[a, b]` until every component meets
/// `max(abs_tol, rel_tol·|I_d|)`.
///
/// Subdivision is deterministic: the same inputs always produce the same
/// panels and the same (compensated, left-to-right) final sums.
pub fn integrate<const D: usize, F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult<D>>
where
    F: Fn(f64) -> [f64; D],
{
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadratureResult { value: [0.0; D], error: [0.0; D], panels: 0, evaluations: 0 });
    }
    let mut evaluations = 0usize;
    let mut totals = [0.0; D];
    let mut errors = [0.0; D];

    let make_panel = |a: f64, b: f64, value: [f64; D], error: [f64; D], scale: &[f64; D]| {
        let priority = (0..D).map(|d| error[d] / scale[d]).fold(0.0f64, f64::max);
        let mid = 0.5 * (a + b);
        let splittable = mid > a.min(b) && mid < a.max(b) && (b - a).abs() > 1e-13 * mid.abs().max(1e-300);
        Panel { a, b, value, error, priority, splittable }
    };

    let (v0, e0) = gauss_kronrod(&f, a, b);
    evaluations += 15;
    totals.copy_from_slice(&v0);
    errors.copy_from_slice(&e0);
    let target = |totals: &[f64; D]| {
        let mut t = [0.0; D];
        for d in 0..D {
            t[d] = cfg.abs_tol.max(cfg.rel_tol * totals[d].abs());
        }
        t
    };
    let mut heap = BinaryHeap::new();
    let mut finished: Vec<Panel<D>> = Vec::new();
    heap.push(make_panel(a, b, v0, e0, &target(&totals)));
    let mut panels = 1usize;

    loop {
        let tol = target(&totals);
        if (0..D).all(|d| errors[d] <= tol[d]) {
            break;
        }
        let Some(worst) = heap.pop() else {
            return Err(failure(panels, &totals, &errors));
        };
        if !worst.splittable {
            finished.push(worst);
            continue;
        }
        if panels + 1 > cfg.max_panels {
            return Err(failure(panels, &totals, &errors));
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (vl, el) = gauss_kronrod(&f, worst.a, mid);
        let (vr, er) = gauss_kronrod(&f, mid, worst.b);
        evaluations += 30;
        panels += 1;
        for d in 0..D {
            totals[d] += vl[d] + vr[d] - worst.value[d];
            errors[d] += el[d] + er[d] - worst.error[d];
        }
        let tol = target(&totals);
        heap.push(make_panel(worst.a, mid, vl, el, &tol));
        heap.push(make_panel(mid, worst.b, vr, er, &tol));
    }

    let mut all: Vec<Panel<D>> = heap.into_vec();
    all.extend(finished);
    all.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = [0.0; D];
    let mut error = [0.0; D];
    for d in 0..D {
        value[d] = all.iter().map(|p| p.value[d]).collect::<CompensatedSum>().value();
        error[d] = all.iter().map(|p| p.error[d]).sum();
    }
    Ok(QuadratureResult { value, error, panels, evaluations })
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let r = integrate(|x| [f(x)], a, b, cfg)?;
    Ok((r.value[0], r.error[0]))
}

fn failure<const D: usize>(panels: usize, totals: &[f64; D], errors: &[f64; D]) -> Error {
    let worst =
        (0..D).max_by(|&i, &j| (errors[i] / totals[i].abs()).total_cmp(&(errors[j] / totals[j].abs()))).unwrap_or(0);
    Error::ConvergenceFailure {
        panels,
        estimate: totals.get(worst).copied().unwrap_or(f64::NAN),
        error: errors.get(worst).copied().unwrap_or(f64::NAN),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let cfg = QuadratureConfig::default();
        let (v, _) = integrate_scalar(|x| x.powi(5) - 3.0 * x * x + 1.0, -1.0, 2.0, &cfg).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0) + 3.0;
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand() {
        let cfg = QuadratureConfig::default();
        let (v, e) = integrate_scalar(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, &cfg).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!(((v - exact) / exact).abs() < 1e-10, "{v} {exact} {e}");
    }

    #[test]
    fn vector_components_share_panels() {
        let cfg = QuadratureConfig::default();
        let r = integrate(|x: f64| [(-x).exp(), x * (-x).exp()], 0.0, 40.0, &cfg).unwrap();
        assert!((r.value[0] - (1.0 - (-40.0f64).exp())).abs() < 1e-12);
        assert!((r.value[1] - (1.0 - 41.0 * (-40.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_reports_failure() {
        let cfg = QuadratureConfig { max_panels: 3, ..Default::default() };
        let err = integrate_scalar(|x| (1.0 / (x + 1e-9)).sin(), 0.0, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::ConvergenceFailure { .. }));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = QuadratureConfig { rel_tol: 0.0, ..Default::default() };
        assert!(integrate_scalar(|x| x, 0.0, 1.0, &cfg).is_err());
        let cfg = QuadratureConfig { max_panels: 1, ..Default::default() };
        assert!(integrate_scalar(|x| x, 0.0, 1.0, &cfg).is_err());
    }
}
