//! WDM channel-pair grids and the per-pair entry probabilities
//! `p₊₊, p₊₋, p₋₊, p₋₋`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;
use crate::quadrature::{self, Tolerance};
use crate::source::{SourceParams, SpectralGaussian};

/// Sign of the signal/idler spectral correlation the grid is laid out for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationSign {
    Negative,
    Positive,
}

/// Transmission profile of a single WDM channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelProfile {
    /// Flat top of full width `width` (rad/s).
    Rect { width: f64 },
    /// Amplitude `exp[−(ω−ω₀)²/(2σ_f²)]`, so the photon passes with
    /// probability `exp[−(ω−ω₀)²/σ_f²]`.
    Gauss { sigma_f: f64 },
}

/// A WDM grid definition shared by Alice and Bob.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPlan {
    pub n_pairs: usize,
    pub sign: CorrelationSign,
    /// Spacing between neighbouring channels, rad/s.
    pub omega_sep: f64,
    pub profile: ChannelProfile,
}

impl ChannelPlan {
    pub fn new(n_pairs: usize, sign: CorrelationSign, omega_sep: f64, profile: ChannelProfile) -> Result<Self> {
        let plan = ChannelPlan {
            n_pairs,
            sign,
            omega_sep,
            profile,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pairs == 0 {
            return Err(Error::invalid("n_pairs", "at least one channel pair is required"));
        }
        if !(self.omega_sep.is_finite() && self.omega_sep > 0.0) {
            return Err(Error::invalid(
                "omega_sep",
                format!("must be positive, got {}", self.omega_sep),
            ));
        }
        match self.profile {
            ChannelProfile::Rect { width } => {
                if !(width > 0.0) {
                    return Err(Error::invalid("width", format!("must be positive, got {width}")));
                }
                // A single pair has no neighbour to overlap with.
                if self.n_pairs > 1 && width > self.omega_sep {
                    return Err(Error::invalid(
                        "width",
                        format!(
                            "rectangular channels of width {width:e} overlap at separation {:e}",
                            self.omega_sep
                        ),
                    ));
                }
            }
            ChannelProfile::Gauss { sigma_f } => {
                if !(sigma_f > 0.0) {
                    return Err(Error::invalid("sigma_f", format!("must be positive, got {sigma_f}")));
                }
            }
        }
        Ok(())
    }

    /// Identification numbers `−(N−1), −(N−1)+2, …, N−1`; even for odd `N`,
    /// odd for even `N`.
    pub fn pair_ids(&self) -> impl Iterator<Item = i64> {
        let top = self.n_pairs as i64 - 1;
        (0..self.n_pairs as i64).map(move |j| -top + 2 * j)
    }
}

/// One correlated pair of channels: Alice's (signal) centre and Bob's
/// (idler) centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPair {
    pub id: i64,
    pub omega_s0: f64,
    pub omega_i0: f64,
}

pub fn build_grid(plan: &ChannelPlan) -> Vec<ChannelPair> {
    plan.pair_ids()
        .map(|id| {
            let half = id as f64 / 2.0 * plan.omega_sep;
            let omega_s0 = match plan.sign {
                CorrelationSign::Negative => -half,
                CorrelationSign::Positive => half,
            };
            ChannelPair {
                id,
                omega_s0,
                omega_i0: half,
            }
        })
        .collect()
}

/// Fate of the two photons of one SPDC pair with respect to one channel
/// pair: both enter, only the signal enters, only the idler enters, neither.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketProbs {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl BucketProbs {
    /// Every photon enters its channel: the no-WDM setup.
    pub const ALL_PASS: BucketProbs = BucketProbs {
        pp: 1.0,
        pm: 0.0,
        mp: 0.0,
        mm: 0.0,
    };

    fn closed(pp: f64, pm: f64, mp: f64) -> Self {
        BucketProbs {
            pp,
            pm,
            mp,
            mm: (1.0 - pp - pm - mp).max(0.0),
        }
    }

    pub fn total(&self) -> f64 {
        self.pp + self.pm + self.mp + self.mm
    }

    /// Exchange signal and idler roles.
    pub fn swapped(&self) -> Self {
        BucketProbs {
            pm: self.mp,
            mp: self.pm,
            ..*self
        }
    }
}

const CLIP_SDS: f64 = 40.0;

/// `∫_{lo1}^{hi1} φ_s(x) · P(ω_i ∈ [lo2, hi2] | ω_s = x) dx`, or the
/// complementary conditional probability when `inside` is false.
fn rect_conditional(lo1: f64, hi1: f64, lo2: f64, hi2: f64, g: &SpectralGaussian, inside: bool) -> Result<f64> {
    let sd = g.marginal_sd();
    let a = lo1.max(-CLIP_SDS * sd);
    let b = hi1.min(CLIP_SDS * sd);
    if !(b > a) {
        return Ok(0.0);
    }
    let rho = g.correlation();
    let cond_sd = g.conditional_var().sqrt();

    let mut interior = quadrature::ladder(0.0, sd, a, b);
    if rho != 0.0 {
        let width = cond_sd / rho.abs();
        for edge in [lo2, hi2] {
            interior.extend(quadrature::ladder(edge / rho, width, a, b));
        }
    }
    let pts = quadrature::breakpoints(a, b, interior);

    let integrand = |x: f64| {
        let mean = rho * x;
        let lo = (lo2 - mean) / cond_sd;
        let hi = (hi2 - mean) / cond_sd;
        let conditional = if inside {
            normal::interval(lo, hi)
        } else {
            normal::outside(lo, hi)
        };
        normal::pdf(x, sd) * conditional
    };
    let est = quadrature::integrate(integrand, &pts, Tolerance::default()).map_err(|e| match e {
        Error::Quadrature { value, error, .. } => Error::Quadrature {
            context: format!("rectangle probability on [{lo1:e}, {hi1:e}] x [{lo2:e}, {hi2:e}]"),
            value,
            error,
        },
        other => other,
    })?;
    Ok(est.value.max(0.0))
}

/// Entry probabilities for rectangular channels of full width `width`.
pub fn bucket_probs_rect(pair: &ChannelPair, width: f64, src: &SourceParams) -> Result<BucketProbs> {
    if !(width > 0.0) {
        return Err(Error::invalid("width", format!("must be positive, got {width}")));
    }
    let g = src.spectral();
    let (lo_s, hi_s) = (pair.omega_s0 - width / 2.0, pair.omega_s0 + width / 2.0);
    let (lo_i, hi_i) = (pair.omega_i0 - width / 2.0, pair.omega_i0 + width / 2.0);
    let pp = rect_conditional(lo_s, hi_s, lo_i, hi_i, &g, true)?;
    let pm = rect_conditional(lo_s, hi_s, lo_i, hi_i, &g, false)?;
    // The density is symmetric under ω_s ↔ ω_i, so conditioning on the idler
    // has the same form.
    let mp = rect_conditional(lo_i, hi_i, lo_s, hi_s, &g, false)?;
    Ok(BucketProbs::closed(pp, pm, mp))
}

/// Entry probability for a single Gaussian filter at `center` acting on one
/// photon of the pair.
fn gauss_single(center: f64, sigma_f: f64, g: &SpectralGaussian) -> f64 {
    let sf2 = sigma_f * sigma_f;
    let v = g.marginal_var();
    (1.0 + 2.0 * v / sf2).powf(-0.5) * (-center * center / (2.0 * v + sf2)).exp()
}

/// Entry probabilities for Gaussian channels, in closed form.
pub fn bucket_probs_gauss(pair: &ChannelPair, sigma_f: f64, src: &SourceParams) -> BucketProbs {
    let g = src.spectral();
    let sf2 = sigma_f * sigma_f;
    let d = pair.omega_s0 - pair.omega_i0;
    let s = pair.omega_s0 + pair.omega_i0;
    let pp = ((1.0 + g.var_u / sf2) * (1.0 + g.var_v / sf2)).powf(-0.5)
        * (-d * d / (2.0 * (g.var_u + sf2)) - s * s / (2.0 * (g.var_v + sf2))).exp();
    let signal = gauss_single(pair.omega_s0, sigma_f, &g);
    let idler = gauss_single(pair.omega_i0, sigma_f, &g);
    BucketProbs::closed(pp, (signal - pp).max(0.0), (idler - pp).max(0.0))
}

pub fn bucket_probs(pair: &ChannelPair, profile: &ChannelProfile, src: &SourceParams) -> Result<BucketProbs> {
    match *profile {
        ChannelProfile::Rect { width } => bucket_probs_rect(pair, width, src),
        ChannelProfile::Gauss { sigma_f } => Ok(bucket_probs_gauss(pair, sigma_f, src)),
    }
}

/// Entry probabilities for every pair of the grid, sorted by pair id.
pub fn grid_buckets(plan: &ChannelPlan, src: &SourceParams) -> Result<Vec<(ChannelPair, BucketProbs)>> {
    plan.validate()?;
    build_grid(plan)
        .into_iter()
        .map(|pair| bucket_probs(&pair, &plan.profile, src).map(|b| (pair, b)))
        .collect()
}

/// Scale every frequency by `a` and the pulse duration by `1/a`; entry
/// probabilities are unchanged.
pub fn rescale(plan: &ChannelPlan, src: &SourceParams, a: f64) -> Result<(ChannelPlan, SourceParams)> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid("scale", format!("must be positive, got {a}")));
    }
    let profile = match plan.profile {
        ChannelProfile::Rect { width } => ChannelProfile::Rect { width: a * width },
        ChannelProfile::Gauss { sigma_f } => ChannelProfile::Gauss { sigma_f: a * sigma_f },
    };
    let plan = ChannelPlan {
        omega_sep: a * plan.omega_sep,
        profile,
        ..*plan
    };
    let src = SourceParams {
        sigma_cr: a * src.sigma_cr,
        tau_p: src.tau_p / a,
        ..*src
    };
    Ok((plan, src))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::PairStatistics;
    use std::f64::consts::PI;

    const SEP: f64 = 2.0 * PI * 100e9;
    const WIDTH: f64 = 2.0 * PI * 50e9;

    fn src(sigma_cr: f64, tau_p: f64) -> SourceParams {
        SourceParams::new(sigma_cr, tau_p, 0.1, PairStatistics::Poisson).unwrap()
    }

    fn rect_plan(n: usize, sign: CorrelationSign) -> ChannelPlan {
        ChannelPlan::new(n, sign, SEP, ChannelProfile::Rect { width: WIDTH }).unwrap()
    }

    #[test]
    fn odd_grid_uses_even_ids() {
        let grid = build_grid(&rect_plan(7, CorrelationSign::Negative));
        let ids: Vec<i64> = grid.iter().map(|p| p.id).collect();
        assert_eq!(ids, vec![-6, -4, -2, 0, 2, 4, 6]);
        let last = grid.last().unwrap();
        assert!((last.omega_s0 + 3.0 * SEP).abs() < 1e-3);
        assert!((last.omega_i0 - 3.0 * SEP).abs() < 1e-3);
    }

    #[test]
    fn even_grid_uses_odd_ids() {
        let grid = build_grid(&rect_plan(8, CorrelationSign::Positive));
        let ids: Vec<i64> = grid.iter().map(|p| p.id).collect();
        assert_eq!(ids, vec![-7, -5, -3, -1, 1, 3, 5, 7]);
        assert!(grid.iter().all(|p| p.omega_s0 == p.omega_i0));
    }

    #[test]
    fn single_pair_sits_at_origin() {
        for sign in [CorrelationSign::Negative, CorrelationSign::Positive] {
            let grid = build_grid(&rect_plan(1, sign));
            assert_eq!(grid.len(), 1);
            assert_eq!((grid[0].id, grid[0].omega_s0, grid[0].omega_i0), (0, 0.0, 0.0));
        }
    }

    #[test]
    fn overlapping_rect_channels_rejected() {
        let err = ChannelPlan::new(
            3,
            CorrelationSign::Negative,
            SEP,
            ChannelProfile::Rect { width: 1.5 * SEP },
        );
        assert!(matches!(err, Err(Error::InvalidParameter { field: "width", .. })));
        assert!(ChannelPlan::new(
            1,
            CorrelationSign::Negative,
            SEP,
            ChannelProfile::Rect { width: f64::INFINITY }
        )
        .is_ok());
    }

    #[test]
    fn wide_rect_captures_everything() {
        let s = src(3e12, 3e-12);
        let pair = build_grid(&rect_plan(1, CorrelationSign::Negative))[0];
        let b = bucket_probs_rect(&pair, 1e3 * s.sigma_cr, &s).unwrap();
        assert!((b.pp - 1.0).abs() < 1e-9, "{b:?}");
        assert!(b.pm < 1e-9 && b.mp < 1e-9 && b.mm < 1e-9);
    }

    #[test]
    fn centred_square_is_symmetric() {
        for (sigma_cr, tau_p) in [(1e13, 3.33e-10), (3e12, 3e-12), (1e10, 1e-13)] {
            let s = src(sigma_cr, tau_p);
            let pair = build_grid(&rect_plan(1, CorrelationSign::Negative))[0];
            let b = bucket_probs_rect(&pair, WIDTH, &s).unwrap();
            assert!((b.pm - b.mp).abs() <= 1e-12 * b.pm.max(1e-300), "{b:?}");
            assert!((b.total() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rect_marginals_match_closed_form() {
        // p₊₊ + p₊₋ must equal the marginal probability of the signal channel.
        let s = src(1e13, 3e-12);
        let g = s.spectral();
        let sd = g.marginal_sd();
        for pair in build_grid(&rect_plan(5, CorrelationSign::Negative)) {
            let b = bucket_probs_rect(&pair, WIDTH, &s).unwrap();
            let lo = (pair.omega_s0 - WIDTH / 2.0) / sd;
            let hi = (pair.omega_s0 + WIDTH / 2.0) / sd;
            let marginal = normal::interval(lo, hi);
            assert!(((b.pp + b.pm) / marginal - 1.0).abs() < 1e-9, "pair {}", pair.id);
        }
    }

    #[test]
    fn gauss_transparent_limit() {
        let s = src(3e12, 3e-12);
        let pair = build_grid(&rect_plan(1, CorrelationSign::Negative))[0];
        let b = bucket_probs_gauss(&pair, 1e6 * s.sigma_cr, &s);
        assert!((b.pp - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mirror_pairs_swap_roles() {
        let s = src(1e13, 3e-12);
        for profile in [
            ChannelProfile::Rect { width: WIDTH },
            ChannelProfile::Gauss { sigma_f: WIDTH },
        ] {
            let plan = ChannelPlan::new(5, CorrelationSign::Negative, SEP, profile).unwrap();
            let grid = grid_buckets(&plan, &s).unwrap();
            for (pair, b) in &grid {
                let (_, mirror) = grid.iter().find(|(p, _)| p.id == -pair.id).unwrap();
                let m = mirror.swapped();
                for (x, y) in [(b.pp, m.pp), (b.pm, m.pm), (b.mp, m.mp), (b.mm, m.mm)] {
                    assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn rescale_by_one_is_identity() {
        let plan = rect_plan(3, CorrelationSign::Negative);
        let s = src(1e13, 3e-12);
        let (p2, s2) = rescale(&plan, &s, 1.0).unwrap();
        assert_eq!(p2, plan);
        assert_eq!(s2, s);
        assert!(rescale(&plan, &s, 0.0).is_err());
    }

    #[test]
    fn rescale_by_two_preserves_buckets() {
        let s = src(3e12, 1e-11);
        for profile in [
            ChannelProfile::Rect { width: WIDTH },
            ChannelProfile::Gauss { sigma_f: WIDTH },
        ] {
            let plan = ChannelPlan::new(4, CorrelationSign::Negative, SEP, profile).unwrap();
            let (p2, s2) = rescale(&plan, &s, 2.0).unwrap();
            let before = grid_buckets(&plan, &s).unwrap();
            let after = grid_buckets(&p2, &s2).unwrap();
            for ((_, a), (_, b)) in before.iter().zip(&after) {
                for (x, y) in [(a.pp, b.pp), (a.pm, b.pm), (a.mp, b.mp), (a.mm, b.mm)] {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gauss_leakage_ratio_at_wide_crystal() {
        let s = src(1e14, 333e-12);
        let pair = build_grid(&rect_plan(1, CorrelationSign::Negative))[0];
        let b = bucket_probs_gauss(&pair, WIDTH, &s);
        // Narrow anti-diagonal: ∫e^{-x²/σ²} / ∫e^{-2x²/σ²} − 1 = √2 − 1.
        assert!((b.pm / b.pp - (2f64.sqrt() - 1.0)).abs() < 5e-3, "{}", b.pm / b.pp);
    }
}
