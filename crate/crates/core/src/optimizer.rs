//! Maximization over the mean photon number and parameter sweeps.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelPlan, ChannelProfile};
use crate::counting::LinkParams;
use crate::error::{Error, Result};
use crate::keyrate::{nowdm_rate, time_rate, KeyRateResult, PreparedGrid};
use crate::source::{PairStatistics, SourceParams};

/// Search range for `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuBounds {
    pub lo: f64,
    pub hi: f64,
}

impl Default for MuBounds {
    fn default() -> Self {
        MuBounds { lo: 1e-6, hi: 1e3 }
    }
}

impl MuBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.hi.is_finite()) {
            return Err(Error::invalid(
                "mu_bounds",
                format!("need 0 < lo < hi, got [{}, {}]", self.lo, self.hi),
            ));
        }
        Ok(())
    }
}

/// Where the maximum was found relative to the search range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketStatus {
    Interior,
    LowerBound,
    UpperBound,
    /// The objective is zero everywhere on the scan.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuOptimum {
    pub mu: f64,
    pub rate: f64,
    pub status: BracketStatus,
    /// The coarse scan was not unimodal and the dense grid was used.
    pub used_fallback: bool,
    pub evaluations: usize,
}

impl MuOptimum {
    /// False when the maximum sits on a bound or the objective is flat.
    pub fn bracketed(&self) -> bool {
        self.status == BracketStatus::Interior
    }
}

/// Relative resolution in `μ` of the final estimate.
pub const MU_REL_TOL: f64 = 1e-4;
const SCAN_POINTS: usize = 16;
const DENSE_PER_DECADE: f64 = 64.0;

fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| a + (b - a) * j as f64 / (n - 1) as f64).collect()
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = j;
        }
    }
    best
}

fn is_unimodal(values: &[f64]) -> bool {
    let peak = argmax(values);
    let slack = |v: f64| v * 1e-12;
    values[..=peak].windows(2).all(|w| w[0] <= w[1] + slack(w[1]))
        && values[peak..].windows(2).all(|w| w[1] <= w[0] + slack(w[0]))
}

/// Maximize `objective(μ)` over `bounds`.
///
/// A 16-point scan in `ln μ` locates the peak; if the scan is not unimodal a
/// 64-points-per-decade grid replaces it. Golden-section search between the
/// neighbours of the best grid point then refines `μ` to [`MU_REL_TOL`].
pub fn optimize_mu<F>(mut objective: F, bounds: MuBounds) -> Result<MuOptimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    bounds.validate()?;
    let (a, b) = (bounds.lo.ln(), bounds.hi.ln());
    let mut evaluations = 0;
    let mut eval = |t: f64| -> Result<f64> {
        evaluations += 1;
        let v = objective(t.exp())?;
        if v.is_nan() {
            return Err(Error::invalid("objective", format!("not finite at mu = {:e}", t.exp())));
        }
        Ok(v)
    };

    let mut ts = log_grid(a, b, SCAN_POINTS);
    let mut vs = ts.iter().map(|&t| eval(t)).collect::<Result<Vec<_>>>()?;
    if vs.iter().all(|&v| v <= 0.0) {
        return Ok(MuOptimum {
            mu: bounds.lo,
            rate: 0.0,
            status: BracketStatus::Flat,
            used_fallback: false,
            evaluations,
        });
    }
    let used_fallback = !is_unimodal(&vs);
    if used_fallback {
        let decades = (b - a) / std::f64::consts::LN_10;
        let n = (decades * DENSE_PER_DECADE).ceil() as usize + 1;
        ts = log_grid(a, b, n);
        vs = ts.iter().map(|&t| eval(t)).collect::<Result<Vec<_>>>()?;
    }

    let j = argmax(&vs);
    let (mut best_t, mut best_v) = (ts[j], vs[j]);
    let mut lo = ts[j.saturating_sub(1)];
    let mut hi = ts[(j + 1).min(ts.len() - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while hi - lo > MU_REL_TOL {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2)?;
        }
    }
    for (t, v) in [(x1, f1), (x2, f2)] {
        if v > best_v {
            best_t = t;
            best_v = v;
        }
    }

    let status = if best_t - a < 2.0 * MU_REL_TOL {
        BracketStatus::LowerBound
    } else if b - best_t < 2.0 * MU_REL_TOL {
        BracketStatus::UpperBound
    } else {
        BracketStatus::Interior
    };
    Ok(MuOptimum {
        mu: best_t.exp(),
        rate: best_v,
        status,
        used_fallback,
        evaluations,
    })
}

/// `μ`-optimized no-WDM key rate for the statistics of `src`.
pub fn optimize_nowdm(src: &SourceParams, link: &LinkParams, bounds: MuBounds) -> Result<MuOptimum> {
    optimize_mu(|mu| Ok(nowdm_rate(&src.with_mu(mu), link)?.k_total), bounds)
}

/// The gain baseline: `μ`-optimized thermal no-WDM rate.
pub fn thermal_baseline(src: &SourceParams, link: &LinkParams, bounds: MuBounds) -> Result<MuOptimum> {
    optimize_nowdm(&src.with_stats(PairStatistics::Thermal), link, bounds)
}

/// `μ`-optimized key rate summed over a WDM grid.
pub fn optimize_wdm(plan: &ChannelPlan, src: &SourceParams, link: &LinkParams, bounds: MuBounds) -> Result<MuOptimum> {
    let grid = PreparedGrid::new(plan, src)?;
    optimize_mu(|mu| Ok(grid.rate(&src.with_mu(mu), link)?.k_total), bounds)
}

/// One fully specified configuration. `plan = None` means no WDM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub src: SourceParams,
    pub plan: Option<ChannelPlan>,
    pub link: LinkParams,
    /// Detector recovery time, for rates per second.
    pub tau_rec: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    TauP,
    SigmaCr,
    Transmittance,
    NPairs,
    DeltaOmega,
    SigmaF,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::TauP => "tau_p",
            SweepAxis::SigmaCr => "sigma_cr",
            SweepAxis::Transmittance => "t",
            SweepAxis::NPairs => "n_pairs",
            SweepAxis::DeltaOmega => "width",
            SweepAxis::SigmaF => "sigma_f",
        }
    }
}

impl Scenario {
    /// Copy of the scenario with one parameter replaced.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Scenario> {
        let mut s = *self;
        fn plan(s: &mut Scenario, axis: SweepAxis) -> Result<&mut ChannelPlan> {
            s.plan
                .as_mut()
                .ok_or_else(|| Error::invalid("axis", format!("sweeping {} needs a channel plan", axis.name())))
        }
        match axis {
            SweepAxis::TauP => s.src.tau_p = value,
            SweepAxis::SigmaCr => s.src.sigma_cr = value,
            SweepAxis::Transmittance => s.link = LinkParams::symmetric(value)?,
            SweepAxis::NPairs => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::invalid(
                        "n_pairs",
                        format!("must be a positive integer, got {value}"),
                    ));
                }
                plan(&mut s, axis)?.n_pairs = value as usize;
            }
            SweepAxis::DeltaOmega => match &mut plan(&mut s, axis)?.profile {
                ChannelProfile::Rect { width } => *width = value,
                ChannelProfile::Gauss { .. } => {
                    return Err(Error::invalid("axis", "width sweep needs rectangular channels"))
                }
            },
            SweepAxis::SigmaF => match &mut plan(&mut s, axis)?.profile {
                ChannelProfile::Gauss { sigma_f } => *sigma_f = value,
                ChannelProfile::Rect { .. } => {
                    return Err(Error::invalid("axis", "sigma_f sweep needs Gaussian channels"))
                }
            },
        }
        s.src.validate()?;
        if let Some(p) = &s.plan {
            p.validate()?;
        }
        Ok(s)
    }

    fn prepared(&self) -> Result<PreparedGrid> {
        match &self.plan {
            Some(plan) => PreparedGrid::new(plan, &self.src),
            None => Ok(PreparedGrid::all_pass()),
        }
    }

    /// Key rate, optionally at the optimal `μ`, with the gain over the
    /// thermal no-WDM baseline.
    pub fn evaluate(&self, optimize_mu_flag: bool, bounds: MuBounds) -> Result<Evaluation> {
        self.link.validate()?;
        let grid = self.prepared()?;
        let rate_at = |mu: f64| -> Result<KeyRateResult> {
            let src = self.src.with_mu(mu);
            match self.plan {
                Some(_) => grid.rate(&src, &self.link),
                None => nowdm_rate(&src, &self.link),
            }
        };
        let optimum = if optimize_mu_flag {
            Some(optimize_mu(|mu| Ok(rate_at(mu)?.k_total), bounds)?)
        } else {
            None
        };
        let mu = optimum.map_or(self.src.mu, |o| o.mu);
        let mut result = rate_at(mu)?;
        let baseline = thermal_baseline(&self.src, &self.link, bounds)?;
        if baseline.rate > 0.0 {
            result.gain = Some(result.k_total / baseline.rate);
        }
        if let Some(tau_rec) = self.tau_rec {
            result.r_per_second = Some(time_rate(result.k_total, tau_rec, self.src.tau_p)?);
        }
        Ok(Evaluation {
            result,
            optimum,
            baseline,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub result: KeyRateResult,
    /// Present when `μ` was optimized.
    pub optimum: Option<MuOptimum>,
    pub baseline: MuOptimum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub fixed: Scenario,
    pub optimize_mu: bool,
    pub mu_bounds: MuBounds,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid("grid", "sweep grid is empty"));
        }
        if !self.grid.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::invalid("grid", "sweep grid must be strictly increasing"));
        }
        self.mu_bounds.validate()
    }
}

/// `n` points from `lo` to `hi`, evenly spaced in `log10`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|j| {
            if j == 0 {
                lo
            } else if j == n - 1 {
                hi
            } else {
                10f64.powf(a + (b - a) * j as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub outcome: Result<Evaluation>,
}

fn run_row(spec: &SweepSpec, index: usize) -> SweepRow {
    let value = spec.grid[index];
    let outcome = spec
        .fixed
        .with_axis(spec.axis, value)
        .and_then(|s| s.evaluate(spec.optimize_mu, spec.mu_bounds));
    SweepRow { index, value, outcome }
}

/// Evaluate every grid point on at most `jobs` worker threads; rows come
/// back in grid order and failures stay in their row.
pub fn run_sweep(spec: &SweepSpec, jobs: Option<usize>) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    Ok(map_rows(spec.grid.len(), jobs, |j| run_row(spec, j)))
}

/// `f(0) .. f(n-1)` on the sweep worker pool, in index order.
#[cfg(feature = "parallel")]
pub fn map_rows<T, F>(n: usize, jobs: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..n).into_par_iter().map(&f).collect();
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => (0..n).map(&f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_rows<T, F>(n: usize, _jobs: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
