//! Pulsed SPDC source: spectral biphoton density and photon-pair number
//! statistics.
//!
//! Frequencies are angular detunings in rad/s, durations in seconds. The
//! squared biphoton wavefunction is a bivariate Gaussian which is easiest to
//! handle in the rotated coordinates `u = ω_s − ω_i`, `v = ω_s + ω_i`, where
//! it factorises into independent normals of standard deviations `σ_cr / 2`
//! and `1 / τ_p`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail mass tolerance used when the photon-number cutoff is chosen
/// automatically.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-13;

/// Photon-pair number statistics of a single polarization mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PairStatistics {
    Thermal,
    Poisson,
    /// Convolution of `modes` thermal spectral modes with Schmidt weights.
    Multimode {
        modes: usize,
    },
}

/// Pump, crystal and intensity parameters of the source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Effective phase-matching function width, rad/s.
    pub sigma_cr: f64,
    /// Pump pulse duration, s.
    pub tau_p: f64,
    /// Mean number of pairs per polarization mode per pulse.
    pub mu: f64,
    pub stats: PairStatistics,
}

impl SourceParams {
    pub fn new(sigma_cr: f64, tau_p: f64, mu: f64, stats: PairStatistics) -> Result<Self> {
        let src = SourceParams {
            sigma_cr,
            tau_p,
            mu,
            stats,
        };
        src.validate()?;
        Ok(src)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_cr.is_finite() && self.sigma_cr > 0.0) {
            return Err(Error::invalid(
                "sigma_cr",
                format!("must be positive, got {}", self.sigma_cr),
            ));
        }
        if !(self.tau_p.is_finite() && self.tau_p > 0.0) {
            return Err(Error::invalid("tau_p", format!("must be positive, got {}", self.tau_p)));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::invalid("mu", format!("must be non-negative, got {}", self.mu)));
        }
        if let PairStatistics::Multimode { modes } = self.stats {
            if modes == 0 {
                return Err(Error::invalid("modes", "multimode statistics need at least one mode"));
            }
        }
        Ok(())
    }

    pub fn with_mu(self, mu: f64) -> Self {
        SourceParams { mu, ..self }
    }

    pub fn with_stats(self, stats: PairStatistics) -> Self {
        SourceParams { stats, ..self }
    }

    /// The dimensionless product `σ_cr·τ_p` that fixes the spectral shape.
    pub fn shape_product(&self) -> f64 {
        self.sigma_cr * self.tau_p
    }

    pub fn spectral(&self) -> SpectralGaussian {
        SpectralGaussian::new(self.sigma_cr, self.tau_p)
    }
}

/// Derived photon-level spectral parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedSpectral {
    /// Photon spectral bandwidth, rad/s.
    pub sigma: f64,
    /// Signal/idler spectral correlation coefficient.
    pub rho: f64,
}

/// Second moments of `|f|²` viewed as a centred bivariate normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGaussian {
    /// Variance of `ω_s − ω_i`.
    pub var_u: f64,
    /// Variance of `ω_s + ω_i`.
    pub var_v: f64,
}

impl SpectralGaussian {
    pub fn new(sigma_cr: f64, tau_p: f64) -> Self {
        SpectralGaussian {
            var_u: sigma_cr * sigma_cr / 4.0,
            var_v: 1.0 / (tau_p * tau_p),
        }
    }

    /// Variance of either marginal, `Var ω_s = Var ω_i`.
    pub fn marginal_var(&self) -> f64 {
        (self.var_u + self.var_v) / 4.0
    }

    pub fn marginal_sd(&self) -> f64 {
        self.marginal_var().sqrt()
    }

    pub fn correlation(&self) -> f64 {
        (self.var_v - self.var_u) / (self.var_v + self.var_u)
    }

    /// Variance of `ω_i` given `ω_s` (and vice versa). Computed without
    /// forming `1 − ρ²`.
    pub fn conditional_var(&self) -> f64 {
        self.var_u * self.var_v / (self.var_u + self.var_v)
    }
}

/// `|f(ω_s, ω_i)|²`, the joint spectral density of a pair, in s²/rad² units.
pub fn biphoton_density(omega_s: f64, omega_i: f64, src: &SourceParams) -> f64 {
    let diff = omega_s - omega_i;
    let sum = omega_s + omega_i;
    let norm = 2.0 * src.tau_p / (PI * src.sigma_cr);
    let exponent = -2.0 * diff * diff / (src.sigma_cr * src.sigma_cr) - sum * sum * src.tau_p * src.tau_p / 2.0;
    norm * exponent.exp()
}

pub fn derived_params(src: &SourceParams) -> DerivedSpectral {
    let x2 = src.shape_product().powi(2);
    DerivedSpectral {
        sigma: (4.0 + x2).sqrt() / (2.0 * SQRT_2 * src.tau_p),
        rho: (4.0 - x2) / (4.0 + x2),
    }
}

/// Ratio `λ_{m+1}/λ_m` of consecutive Schmidt mode weights.
pub fn mode_ratio(shape_product: f64) -> f64 {
    let r = (2.0 - shape_product) / (2.0 + shape_product);
    r * r
}

/// Relative strengths `λ_0..λ_{M−1}` of the spectral modes.
pub fn mode_strengths(src: &SourceParams, modes: usize) -> Vec<f64> {
    let x = src.shape_product();
    let ratio = mode_ratio(x);
    let mut lambda = 8.0 * x / ((2.0 + x) * (2.0 + x));
    let mut out = Vec::with_capacity(modes);
    for _ in 0..modes {
        out.push(lambda);
        lambda *= ratio;
    }
    out
}

/// Truncated photon-pair number distribution with a certified tail.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistribution {
    probs: Vec<f64>,
    tail_bound: f64,
    tail_ratio: f64,
}

impl PairDistribution {
    /// A distribution concentrated on zero pairs.
    pub fn vacuum() -> Self {
        PairDistribution {
            probs: vec![1.0],
            tail_bound: 0.0,
            tail_ratio: 0.0,
        }
    }

    /// `π(0..=k_max)`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn k_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// Upper bound on `Σ_{k>k_max} π(k)`.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Upper bound on `π(k+1)/π(k)` for every `k ≥ k_max`; `1.0` or more
    /// means no geometric tail control is available.
    pub fn tail_ratio(&self) -> f64 {
        self.tail_ratio
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// Upper bound on `Σ_{k>k_max} π(k)·k^power·z^k` for `0 ≤ z ≤ 1`.
    pub fn weighted_tail_bound(&self, power: i32, z: f64) -> f64 {
        let k = self.k_max() as f64;
        let p_k = self.probs[self.k_max()];
        if self.tail_bound == 0.0 || p_k == 0.0 && self.tail_ratio < 1.0 {
            return 0.0;
        }
        let q = self.tail_ratio * z;
        if q == 0.0 {
            return 0.0;
        }
        let growth = ((k + 2.0) / (k + 1.0)).powi(power);
        let s = q * growth;
        if s >= 1.0 {
            return f64::INFINITY;
        }
        p_k * z.powf(k) * q * (k + 1.0).powi(power) / (1.0 - s)
    }

    fn from_log_concave(probs: Vec<f64>) -> Self {
        let k = probs.len() - 1;
        let last = probs[k];
        let (tail_bound, tail_ratio) = if last == 0.0 {
            (0.0, 0.0)
        } else if k == 0 || probs[k - 1] == 0.0 {
            ((1.0 - probs.iter().sum::<f64>()).max(0.0), 1.0)
        } else {
            let r = last / probs[k - 1];
            if r < 1.0 {
                (last * r / (1.0 - r), r)
            } else {
                ((1.0 - probs.iter().sum::<f64>()).max(0.0), r)
            }
        };
        PairDistribution {
            probs,
            tail_bound,
            tail_ratio,
        }
    }
}

fn thermal_probs(mu: f64, k_max: usize) -> (Vec<f64>, f64, f64) {
    let ratio = mu / (1.0 + mu);
    let mut probs = Vec::with_capacity(k_max + 1);
    let mut p = 1.0 / (1.0 + mu);
    for _ in 0..=k_max {
        probs.push(p);
        p *= ratio;
    }
    let tail = ratio.powi(k_max as i32 + 1);
    (probs, tail, ratio)
}

fn poisson_probs(mu: f64, k_max: usize) -> (Vec<f64>, f64, f64) {
    let ln_mu = mu.ln();
    let probs: Vec<f64> = (0..=k_max)
        .map(|k| (k as f64 * ln_mu - mu - libm::lgamma(k as f64 + 1.0)).exp())
        .collect();
    let ratio = mu / (k_max as f64 + 1.0);
    let tail = if ratio < 1.0 {
        probs[k_max] * ratio / (1.0 - ratio)
    } else {
        (1.0 - probs.iter().sum::<f64>()).max(0.0)
    };
    (probs, tail, ratio)
}

/// Iterated convolution of geometric laws, exact on `0..=k_max`: convolving
/// with a thermal law of ratio `r` is the first-order recurrence
/// `y_k = r·y_{k−1} + (1 − r)·x_k`.
fn multimode_probs(mu: f64, lambdas: &[f64], k_max: usize) -> Vec<f64> {
    let mut probs = vec![0.0; k_max + 1];
    probs[0] = 1.0;
    for &lambda in lambdas {
        let nu = mu * lambda;
        if nu == 0.0 {
            continue;
        }
        let r = nu / (1.0 + nu);
        let keep = 1.0 / (1.0 + nu);
        let mut prev = 0.0;
        for p in probs.iter_mut() {
            prev = r * prev + keep * *p;
            *p = prev;
        }
    }
    probs
}

/// `π(0..=k_max)` for the source statistics at its mean `μ`. Fails when the
/// certified tail exceeds `tolerance`.
pub fn pair_distribution(src: &SourceParams, k_max: usize, tolerance: f64) -> Result<PairDistribution> {
    src.validate()?;
    let dist = build_distribution(src, k_max);
    if dist.tail_bound > tolerance {
        return Err(Error::Truncation {
            context: format!("pair distribution with k_max = {k_max}"),
            bound: dist.tail_bound,
            tolerance,
        });
    }
    Ok(dist)
}

fn build_distribution(src: &SourceParams, k_max: usize) -> PairDistribution {
    let mu = src.mu;
    if mu == 0.0 {
        return PairDistribution::vacuum();
    }
    match src.stats {
        PairStatistics::Thermal => {
            let (probs, tail_bound, tail_ratio) = thermal_probs(mu, k_max);
            PairDistribution {
                probs,
                tail_bound,
                tail_ratio,
            }
        }
        PairStatistics::Poisson => {
            let (probs, tail_bound, tail_ratio) = poisson_probs(mu, k_max);
            PairDistribution {
                probs,
                tail_bound,
                tail_ratio,
            }
        }
        PairStatistics::Multimode { modes } => {
            // Convolutions of geometric laws are log-concave, so the last
            // computed ratio bounds all later ones.
            let lambdas = mode_strengths(src, modes);
            PairDistribution::from_log_concave(multimode_probs(mu, &lambdas, k_max))
        }
    }
}

/// Cutoff that brings a thermal tail of mean `mean` below `tolerance`.
fn thermal_cutoff(mean: f64, tolerance: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let ratio = mean / (1.0 + mean);
    let k = (tolerance.ln() / ratio.ln()).ceil() - 1.0;
    k.max(0.0) as usize
}

/// Distribution with the smallest cutoff whose certified tail is below
/// `tolerance`.
pub fn pair_distribution_auto(src: &SourceParams, tolerance: f64) -> Result<PairDistribution> {
    src.validate()?;
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(Error::invalid("tolerance", "tail tolerance must lie in (0, 1)"));
    }
    let mu = src.mu;
    if mu == 0.0 {
        return Ok(PairDistribution::vacuum());
    }
    match src.stats {
        PairStatistics::Thermal => Ok(build_distribution(src, thermal_cutoff(mu, tolerance))),
        PairStatistics::Poisson => {
            let ln_mu = mu.ln();
            let mut k = mu.floor() as usize;
            loop {
                let ratio = mu / (k as f64 + 1.0);
                if ratio < 1.0 {
                    let ln_p = k as f64 * ln_mu - mu - libm::lgamma(k as f64 + 1.0);
                    if ln_p + (ratio / (1.0 - ratio)).ln() <= tolerance.ln() {
                        return Ok(build_distribution(src, k));
                    }
                }
                k += 1;
            }
        }
        PairStatistics::Multimode { modes } => {
            let lambdas = mode_strengths(src, modes);
            let mean = mu * lambdas.iter().sum::<f64>();
            let mut k_max = thermal_cutoff(mean, tolerance).max(4);
            loop {
                let full = PairDistribution::from_log_concave(multimode_probs(mu, &lambdas, k_max));
                if full.tail_bound <= tolerance {
                    return Ok(trim_log_concave(full, tolerance));
                }
                if k_max > 50_000_000 {
                    return Err(Error::Truncation {
                        context: "multimode pair distribution".into(),
                        bound: full.tail_bound,
                        tolerance,
                    });
                }
                k_max *= 2;
            }
        }
    }
}

/// Shortest prefix of a log-concave table that still certifies `tolerance`.
fn trim_log_concave(dist: PairDistribution, tolerance: f64) -> PairDistribution {
    let probs = dist.probs;
    let mut best = probs.len();
    for k in (1..probs.len()).rev() {
        let candidate = PairDistribution::from_log_concave(probs[..=k].to_vec());
        if candidate.tail_bound <= tolerance {
            best = k + 1;
        } else {
            break;
        }
    }
    PairDistribution::from_log_concave(probs[..best].to_vec())
}
