//! Standard normal helpers with tail-stable evaluation.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `Φ(x)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `1 − Φ(x)`, accurate deep in the upper tail.
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `P(lo ≤ Z ≤ hi)` for a standard normal `Z`, avoiding cancellation when the
/// interval sits in either tail.
pub fn interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        0.0
    } else if lo >= 0.0 {
        (sf(lo) - sf(hi)).max(0.0)
    } else if hi <= 0.0 {
        (cdf(hi) - cdf(lo)).max(0.0)
    } else {
        (1.0 - cdf(lo) - sf(hi)).max(0.0)
    }
}

/// `P(Z < lo or Z > hi)`.
pub fn outside(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        1.0
    } else {
        cdf(lo) + sf(hi)
    }
}

/// Density of `N(0, sd²)` at `x`.
pub fn pdf(x: f64, sd: f64) -> f64 {
    let z = x / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tails_are_resolved() {
        // Φ(−30) ≈ 4.906e-198
        let lower = cdf(-30.0);
        assert!((lower / 4.906_713_927_148_19e-198 - 1.0).abs() < 1e-9);
        assert_eq!(sf(30.0), lower);
        let narrow = interval(30.0, 31.0);
        assert!(narrow > 0.0 && narrow < lower);
    }

    #[test]
    fn interval_plus_outside_is_one() {
        for (lo, hi) in [(-1.0, 2.0), (0.5, 3.0), (-4.0, -0.1), (-0.2, 0.2)] {
            assert!((interval(lo, hi) + outside(lo, hi) - 1.0).abs() < 1e-15);
        }
        assert_eq!(interval(1.0, 1.0), 0.0);
        assert_eq!(interval(f64::NEG_INFINITY, f64::INFINITY), 1.0);
    }
}
