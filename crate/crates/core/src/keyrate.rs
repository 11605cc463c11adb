//! Acceptance probability, QBER and secret key rates.

use serde::{Deserialize, Serialize};

use crate::channel::{grid_buckets, BucketProbs, ChannelPair, ChannelPlan};
use crate::counting::{click_table, click_table_nowdm, ClickTable, LinkParams};
use crate::error::{Error, Result};
use crate::source::{pair_distribution_auto, PairDistribution, SourceParams, DEFAULT_TAIL_TOLERANCE};

/// Fraction of detections kept after basis sifting.
pub const P_SIFT: f64 = 0.5;

/// Binary Shannon entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(q: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(q) + term(1.0 - q)
}

/// Probability of exactly one click on each side, and the error rate among
/// those events. The QBER is 0 when nothing is accepted.
pub fn acceptance_and_qber(table: &ClickTable) -> (f64, f64) {
    let p_acc = table.sum();
    if p_acc <= 0.0 {
        return (0.0, 0.0);
    }
    (p_acc, ((table.p1010 + table.p0101) / p_acc).clamp(0.0, 1.0))
}

/// Asymptotic BB84 key per source use, clamped at zero.
pub fn secret_key_rate(p_acc: f64, qber: f64) -> f64 {
    (P_SIFT * p_acc * (1.0 - 2.0 * binary_entropy(qber))).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRate {
    pub id: i64,
    pub p_acc: f64,
    pub qber: f64,
    pub key_rate: f64,
}

impl PairRate {
    fn from_table(id: i64, table: &ClickTable) -> Self {
        let (p_acc, qber) = acceptance_and_qber(table);
        PairRate {
            id,
            p_acc,
            qber,
            key_rate: secret_key_rate(p_acc, qber),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    /// Sorted by pair id.
    pub per_pair: Vec<PairRate>,
    /// Bits per source use, summed over pairs.
    pub k_total: f64,
    pub gain: Option<f64>,
    /// Bits per second, when a repetition rate is known.
    pub r_per_second: Option<f64>,
    pub mu_used: f64,
}

impl KeyRateResult {
    fn from_pairs(per_pair: Vec<PairRate>, mu: f64) -> Self {
        let k_total = per_pair.iter().map(|p| p.key_rate).sum();
        KeyRateResult {
            per_pair,
            k_total,
            gain: None,
            r_per_second: None,
            mu_used: mu,
        }
    }
}

/// Run `f` on the pair distribution, tightening the tail tolerance when the
/// resulting table cannot be certified. Tables at tiny `μ` or `T` are small
/// enough that the default absolute tail is too coarse.
fn with_distribution<T>(src: &SourceParams, f: impl Fn(&PairDistribution) -> Result<T>) -> Result<T> {
    let mut tolerance = DEFAULT_TAIL_TOLERANCE;
    loop {
        let pi = pair_distribution_auto(src, tolerance)?;
        match f(&pi) {
            Err(Error::Truncation { .. }) if tolerance > 1e-250 => tolerance *= 1e-6,
            other => return other,
        }
    }
}

/// Entry probabilities of a grid, which do not depend on `μ` or the pair
/// statistics; reused across a `μ` optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedGrid {
    pairs: Vec<(ChannelPair, BucketProbs)>,
}

impl PreparedGrid {
    pub fn new(plan: &ChannelPlan, src: &SourceParams) -> Result<Self> {
        src.validate()?;
        Ok(PreparedGrid {
            pairs: grid_buckets(plan, src)?,
        })
    }

    /// A single all-pass pair: no spectral filtering.
    pub fn all_pass() -> Self {
        PreparedGrid {
            pairs: vec![(
                ChannelPair {
                    id: 0,
                    omega_s0: 0.0,
                    omega_i0: 0.0,
                },
                BucketProbs::ALL_PASS,
            )],
        }
    }

    pub fn pairs(&self) -> &[(ChannelPair, BucketProbs)] {
        &self.pairs
    }

    /// Key rates for the source's `μ` and statistics. The spectral
    /// parameters of `src` are ignored; they are baked into the buckets.
    pub fn rate(&self, src: &SourceParams, link: &LinkParams) -> Result<KeyRateResult> {
        link.validate()?;
        let per_pair = self
            .pairs
            .iter()
            .map(|(pair, b)| {
                let table =
                    with_distribution(src, |pi| click_table(b, pi, pi, link)).map_err(|e| annotate(e, pair.id))?;
                Ok(PairRate::from_table(pair.id, &table))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KeyRateResult::from_pairs(per_pair, src.mu))
    }
}

fn annotate(e: Error, id: i64) -> Error {
    match e {
        Error::Truncation {
            context,
            bound,
            tolerance,
        } => Error::Truncation {
            context: format!("{context} for channel pair {id}"),
            bound,
            tolerance,
        },
        other => other,
    }
}

/// Key rate summed over every channel pair of the grid.
pub fn total_wdm_rate(plan: &ChannelPlan, src: &SourceParams, link: &LinkParams) -> Result<KeyRateResult> {
    PreparedGrid::new(plan, src)?.rate(src, link)
}

/// Key rate of the unfiltered setup: one detector pair per side, every
/// photon accepted.
pub fn nowdm_rate(src: &SourceParams, link: &LinkParams) -> Result<KeyRateResult> {
    src.validate()?;
    link.validate()?;
    let table = with_distribution(src, |pi| click_table_nowdm(pi, pi, link))?;
    Ok(KeyRateResult::from_pairs(vec![PairRate::from_table(0, &table)], src.mu))
}

/// `K_WDM / baseline`; `baseline` is normally the `μ`-optimized thermal
/// no-WDM rate at the same link.
pub fn gain(plan: &ChannelPlan, src: &SourceParams, link: &LinkParams, baseline: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(Error::ZeroBaseline);
    }
    Ok(total_wdm_rate(plan, src, link)?.k_total / baseline)
}

/// Source repetition rate: limited by detector recovery or by keeping
/// pulses three durations apart.
pub fn repetition_rate(tau_rec: f64, tau_p: f64) -> Result<f64> {
    for (field, v) in [("tau_rec", tau_rec), ("tau_p", tau_p)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(field, format!("must be positive, got {v}")));
        }
    }
    Ok((1.0 / tau_rec).min(1.0 / (3.0 * tau_p)))
}

/// Key rate in bits per second.
pub fn time_rate(k: f64, tau_rec: f64, tau_p: f64) -> Result<f64> {
    Ok(k * repetition_rate(tau_rec, tau_p)?)
}
