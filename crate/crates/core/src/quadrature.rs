//! Globally adaptive Gauss–Kronrod (7/15) integration.
//!
//! Each pass splits the subinterval with the largest error estimate until the
//! summed estimate meets `max(abs_tol, rel_tol·|I|)`. Callers seed the
//! partition with breakpoints wherever the integrand has a kink or a sharp
//! transition.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Integration tolerances.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-10,
            abs: 1e-25,
            max_intervals: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Piece {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrate `f` over `[points[0], points[last]]`; interior entries of
/// `points` are initial breakpoints. `points` must be non-decreasing.
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod(&f, w[0], w[1]));
        }
    }
    let mut value: f64 = heap.iter().map(|p| p.value).sum();
    let mut error: f64 = heap.iter().map(|p| p.error).sum();
    loop {
        if error <= tol.abs.max(tol.rel * value.abs()) {
            // Re-sum to shed drift from the running totals.
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
            if error <= tol.abs.max(tol.rel * value.abs()) {
                return Ok(Estimate { value, error });
            }
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                context: "adaptive Gauss-Kronrod".into(),
                value,
                error,
            });
        }
        let worst = heap.pop().expect("non-empty partition");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point.
            return Err(Error::Quadrature {
                context: "adaptive Gauss-Kronrod (interval underflow)".into(),
                value,
                error,
            });
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
}

/// Sorted, deduplicated breakpoints restricted to `[a, b]` with the ends
/// included.
pub fn breakpoints(a: f64, b: f64, interior: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = interior
        .into_iter()
        .filter(|x| x.is_finite() && *x > a && *x < b)
        .collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Breakpoints `center ± scale·4^j` covering `[lo, hi]`, used to resolve a
/// feature of width `scale` inside a much wider interval.
pub fn ladder(center: f64, scale: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    if !(scale > 0.0 && center.is_finite()) {
        return pts;
    }
    pts.push(center);
    let reach = (center - lo).abs().max((hi - center).abs());
    let mut step = 0.25 * scale;
    while step < reach {
        pts.push(center - step);
        pts.push(center + step);
        step *= 4.0;
    }
    pts
}

/// Iterated 2-D integral `∫_{x} ∫_{y} f(x, y) dy dx`, with inner
/// breakpoints supplied per `x`.
pub fn integrate_2d<F, P>(f: F, outer: &[f64], inner: P, tol: Tolerance) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64,
    P: Fn(f64) -> Vec<f64>,
{
    let inner_tol = Tolerance {
        rel: tol.rel * 0.1,
        abs: tol.abs * 0.1,
        ..tol
    };
    let failure = std::cell::Cell::new(None);
    let outer_value = integrate(
        |x| match integrate(|y| f(x, y), &inner(x), inner_tol) {
            Ok(e) => e.value,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        },
        outer,
        tol,
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    outer_value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(|x| x.powi(6) - 3.0 * x, &[0.0, 2.0], Tolerance::default()).unwrap();
        assert!((est.value - (128.0 / 7.0 - 6.0)).abs() < 1e-13);
    }

    #[test]
    fn narrow_peak_with_breakpoint() {
        let sd = 1e-6;
        let f = |x: f64| (-(x * x) / (2.0 * sd * sd)).exp();
        let pts = breakpoints(-40.0 * sd, 40.0 * sd, [0.0]);
        let est = integrate(f, &pts, Tolerance::default()).unwrap();
        let exact = sd * (2.0 * std::f64::consts::PI).sqrt();
        assert!((est.value / exact - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reports_failure_when_budget_is_exhausted() {
        let tol = Tolerance {
            rel: 1e-14,
            abs: 0.0,
            max_intervals: 4,
        };
        let err = integrate(|x: f64| (1.0 / x).sin(), &[1e-3, 1.0], tol).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn separable_2d() {
        let est = integrate_2d(|x, y| x * y * y, &[0.0, 1.0], |_| vec![0.0, 3.0], Tolerance::default()).unwrap();
        assert!((est.value - 4.5).abs() < 1e-12);
    }
}
