//! Photon-entry statistics and lossy click probabilities for one channel
//! pair.
//!
//! Pairs from the HV mode put a photon into Alice's H arm and Bob's V arm;
//! VH pairs do the opposite. Each SPDC pair lands in one of the four
//! [`BucketProbs`] categories independently, and each entering photon is
//! detected with probability `T_A` (Alice) or `T_B` (Bob).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::channel::BucketProbs;
use crate::error::{Error, Result};
use crate::source::PairDistribution;

/// Largest certified truncation error tolerated, relative to the table sum.
pub const TABLE_TOLERANCE: f64 = 1e-9;

/// Channel transmittances, detector efficiency included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub t_a: f64,
    pub t_b: f64,
}

impl LinkParams {
    pub fn new(t_a: f64, t_b: f64) -> Result<Self> {
        let link = LinkParams { t_a, t_b };
        link.validate()?;
        Ok(link)
    }

    pub fn symmetric(t: f64) -> Result<Self> {
        Self::new(t, t)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, t) in [("t_a", self.t_a), ("t_b", self.t_b)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid(
                    field,
                    format!("transmittance must lie in [0, 1], got {t}"),
                ));
            }
        }
        Ok(())
    }
}

/// A single-click pattern `(i_H, i_V; j_H, j_V)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pattern {
    pub i_h: u8,
    pub i_v: u8,
    pub j_h: u8,
    pub j_v: u8,
}

impl Pattern {
    pub const HH: Pattern = Pattern::new(1, 0, 1, 0);
    pub const HV: Pattern = Pattern::new(1, 0, 0, 1);
    pub const VH: Pattern = Pattern::new(0, 1, 1, 0);
    pub const VV: Pattern = Pattern::new(0, 1, 0, 1);
    pub const ALL: [Pattern; 4] = [Pattern::HH, Pattern::HV, Pattern::VH, Pattern::VV];

    pub const fn new(i_h: u8, i_v: u8, j_h: u8, j_v: u8) -> Self {
        Pattern { i_h, i_v, j_h, j_v }
    }

    pub fn label(&self) -> String {
        format!("{}{}{}{}", self.i_h, self.i_v, self.j_h, self.j_v)
    }
}

/// Probabilities of the four accepted click patterns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickTable {
    pub p1010: f64,
    pub p1001: f64,
    pub p0110: f64,
    pub p0101: f64,
    /// Upper bound on the error from truncating the photon-number sums.
    pub truncation_error: f64,
}

impl ClickTable {
    pub const ZERO: ClickTable = ClickTable {
        p1010: 0.0,
        p1001: 0.0,
        p0110: 0.0,
        p0101: 0.0,
        truncation_error: 0.0,
    };

    pub fn get(&self, pattern: Pattern) -> f64 {
        match pattern {
            Pattern::HH => self.p1010,
            Pattern::HV => self.p1001,
            Pattern::VH => self.p0110,
            Pattern::VV => self.p0101,
            _ => 0.0,
        }
    }

    pub fn entries(&self) -> [(Pattern, f64); 4] {
        Pattern::ALL.map(|p| (p, self.get(p)))
    }

    pub fn sum(&self) -> f64 {
        self.p1010 + self.p1001 + self.p0110 + self.p0101
    }

    fn certify(self, context: &str) -> Result<Self> {
        let tolerance = TABLE_TOLERANCE * self.sum();
        if self.truncation_error > tolerance {
            return Err(Error::Truncation {
                context: context.into(),
                bound: self.truncation_error,
                tolerance,
            });
        }
        Ok(self)
    }
}

/// Per-pair detection categories after loss: both photons detected, only
/// Alice's, only Bob's, neither.
#[derive(Debug, Clone, Copy)]
struct Detected {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Detected {
    fn new(buckets: &BucketProbs, link: &LinkParams) -> Self {
        let (ta, tb) = (link.t_a, link.t_b);
        let BucketProbs { pp, pm, mp, mm } = *buckets;
        Detected {
            a: pp * ta * tb,
            b: ta * (pp * (1.0 - tb) + pm),
            c: tb * (pp * (1.0 - ta) + mp),
            d: pp * (1.0 - ta) * (1.0 - tb) + pm * (1.0 - ta) + mp * (1.0 - tb) + mm,
        }
    }
}

/// `Σ_k π(k)·w(k)` for one polarization branch, where `w(k)` is the
/// probability that `k` pairs give exactly `x ∈ {0,1}` detections at Alice
/// and `y ∈ {0,1}` at Bob.
#[derive(Debug, Clone, Copy)]
struct Branch {
    w00: f64,
    w10: f64,
    w01: f64,
    w11: f64,
    e00: f64,
    e10: f64,
    e01: f64,
    e11: f64,
}

/// Bound on `Σ_{k>K} π(k)·pref·k^power·z^(k−shift)`.
fn tail_term(dist: &PairDistribution, pref: f64, power: i32, z: f64, shift: i32) -> f64 {
    if pref == 0.0 || dist.tail_bound() == 0.0 {
        return 0.0;
    }
    if z == 0.0 {
        return if dist.k_max() as i32 >= shift {
            0.0
        } else {
            pref * dist.weighted_tail_bound(power, 1.0)
        };
    }
    pref * dist.weighted_tail_bound(power, z) / z.powi(shift)
}

fn branch(dist: &PairDistribution, det: &Detected) -> Branch {
    let Detected { a, b, c, d } = *det;
    let (mut w00, mut w10, mut w01, mut w11) = (0.0, 0.0, 0.0, 0.0);
    // d^(k−2), d^(k−1), d^k as k advances.
    let (mut dm2, mut dm1, mut dk) = (0.0, 0.0, 1.0);
    for (k, &p) in dist.probs().iter().enumerate() {
        let kf = k as f64;
        w00 += p * dk;
        w10 += p * kf * b * dm1;
        w01 += p * kf * c * dm1;
        w11 += p * (kf * a * dm1 + kf * (kf - 1.0) * b * c * dm2);
        dm2 = dm1;
        dm1 = dk;
        dk *= d;
    }
    Branch {
        w00,
        w10,
        w01,
        w11,
        e00: tail_term(dist, 1.0, 0, d, 0),
        e10: tail_term(dist, b, 1, d, 1),
        e01: tail_term(dist, c, 1, d, 1),
        e11: tail_term(dist, a, 1, d, 1) + tail_term(dist, b * c, 2, d, 2),
    }
}

/// Value and certified error of a product of two truncated sums.
fn product(x: f64, ex: f64, y: f64, ey: f64) -> (f64, f64) {
    (x * y, ex * y + x * ey + ex * ey)
}

fn assemble(hv: &Branch, vh: &Branch) -> ClickTable {
    // HV branch: (Alice H, Bob V); VH branch: (Alice V, Bob H).
    let (p1010, e1) = product(hv.w10, hv.e10, vh.w01, vh.e01);
    let (p1001, e2) = product(hv.w11, hv.e11, vh.w00, vh.e00);
    let (p0110, e3) = product(hv.w00, hv.e00, vh.w11, vh.e11);
    let (p0101, e4) = product(hv.w01, hv.e01, vh.w10, vh.e10);
    ClickTable {
        p1010,
        p1001,
        p0110,
        p0101,
        truncation_error: e1 + e2 + e3 + e4,
    }
}

/// Click-pattern probabilities for one channel pair.
///
/// The photon-number sums over both branches are resummed per pair number
/// `k`, which is exact and linear in the distribution cutoff.
pub fn click_table(
    buckets: &BucketProbs,
    pi_hv: &PairDistribution,
    pi_vh: &PairDistribution,
    link: &LinkParams,
) -> Result<ClickTable> {
    link.validate()?;
    let det = Detected::new(buckets, link);
    assemble(&branch(pi_hv, &det), &branch(pi_vh, &det)).certify("click table")
}

/// Click-pattern probabilities with no spectral filtering: every photon
/// reaches its detector arm and only loss acts.
pub fn click_table_nowdm(pi_hv: &PairDistribution, pi_vh: &PairDistribution, link: &LinkParams) -> Result<ClickTable> {
    link.validate()?;
    let (ta, tb) = (link.t_a, link.t_b);
    let (la, lb) = (1.0 - ta, 1.0 - tb);
    // Binomial detection of m photons at each side.
    let side = |dist: &PairDistribution, x: i32, y: i32| -> (f64, f64) {
        let mut sum = 0.0;
        for (m, &p) in dist.probs().iter().enumerate() {
            if p != 0.0 {
                sum += p * detect(m, x as u8, ta) * detect(m, y as u8, tb);
            }
        }
        let pref = ta.powi(x) * tb.powi(y);
        let err = if la == 0.0 || lb == 0.0 {
            tail_term(dist, pref, x + y, 0.0, x + y)
        } else {
            pref / (la.powi(x) * lb.powi(y)) * dist.weighted_tail_bound(x + y, la * lb)
        };
        (sum, if dist.tail_bound() == 0.0 { 0.0 } else { err })
    };
    let hv = |x, y| side(pi_hv, x, y);
    let vh = |x, y| side(pi_vh, x, y);
    let br = |f: &dyn Fn(i32, i32) -> (f64, f64)| {
        let (w00, e00) = f(0, 0);
        let (w10, e10) = f(1, 0);
        let (w01, e01) = f(0, 1);
        let (w11, e11) = f(1, 1);
        Branch {
            w00,
            w10,
            w01,
            w11,
            e00,
            e10,
            e01,
            e11,
        }
    };
    assemble(&br(&hv), &br(&vh)).certify("no-WDM click table")
}

/// Natural log of `p^n`, with `0^0 = 1`.
fn ln_pow(p: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * p.ln()
    }
}

fn ln_factorial(n: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// Probability that one branch delivers `s` photons to the signal side and
/// `i` to the idler side, summed over the pair-number distribution.
fn branch_entry(s: usize, i: usize, buckets: &BucketProbs, dist: &PairDistribution) -> f64 {
    let probs = dist.probs();
    let mut total = 0.0;
    // α pairs with both photons inside, β signal only, γ idler only, δ neither.
    for alpha in 0..=s.min(i) {
        let beta = s - alpha;
        let gamma = i - alpha;
        let base = alpha + beta + gamma;
        let ln_fixed = ln_pow(buckets.pp, alpha) + ln_pow(buckets.pm, beta) + ln_pow(buckets.mp, gamma)
            - ln_factorial(alpha)
            - ln_factorial(beta)
            - ln_factorial(gamma);
        if ln_fixed == f64::NEG_INFINITY {
            continue;
        }
        for (k, &pk) in probs.iter().enumerate().skip(base) {
            if pk == 0.0 {
                continue;
            }
            let delta = k - base;
            let ln_term = pk.ln() + ln_factorial(k) - ln_factorial(delta) + ln_fixed + ln_pow(buckets.mm, delta);
            total += ln_term.exp();
        }
    }
    total
}

/// `q(m_H, m_V, n_H, n_V)`: the probability that `m_H`, `m_V` photons enter
/// Alice's H and V arms and `n_H`, `n_V` enter Bob's.
pub fn joint_entry_prob(
    m_h: usize,
    m_v: usize,
    n_h: usize,
    n_v: usize,
    buckets: &BucketProbs,
    pi_hv: &PairDistribution,
    pi_vh: &PairDistribution,
) -> Result<f64> {
    let bound = pi_hv.tail_bound() + pi_vh.tail_bound();
    if bound > TABLE_TOLERANCE {
        return Err(Error::Truncation {
            context: "joint entry probability".into(),
            bound,
            tolerance: TABLE_TOLERANCE,
        });
    }
    Ok(branch_entry(m_h, n_v, buckets, pi_hv) * branch_entry(m_v, n_h, buckets, pi_vh))
}

/// Memo of per-branch entry probabilities keyed by photon counts.
pub struct EntryCache<'a> {
    buckets: BucketProbs,
    pi_hv: &'a PairDistribution,
    pi_vh: &'a PairDistribution,
    hv: HashMap<(usize, usize), f64>,
    vh: HashMap<(usize, usize), f64>,
}

impl<'a> EntryCache<'a> {
    pub fn new(buckets: BucketProbs, pi_hv: &'a PairDistribution, pi_vh: &'a PairDistribution) -> Self {
        EntryCache {
            buckets,
            pi_hv,
            pi_vh,
            hv: HashMap::new(),
            vh: HashMap::new(),
        }
    }

    pub fn q(&mut self, m_h: usize, m_v: usize, n_h: usize, n_v: usize) -> f64 {
        let (buckets, pi_hv, pi_vh) = (self.buckets, self.pi_hv, self.pi_vh);
        let hv = *self
            .hv
            .entry((m_h, n_v))
            .or_insert_with(|| branch_entry(m_h, n_v, &buckets, pi_hv));
        if hv == 0.0 {
            return 0.0;
        }
        let vh = *self
            .vh
            .entry((m_v, n_h))
            .or_insert_with(|| branch_entry(m_v, n_h, &buckets, pi_vh));
        hv * vh
    }
}

/// Binomial probability of exactly `clicks` detections among `n` photons.
fn detect(n: usize, clicks: u8, t: f64) -> f64 {
    match clicks {
        0 => (1.0 - t).powi(n as i32),
        1 if n >= 1 => n as f64 * t * (1.0 - t).powi(n as i32 - 1),
        _ => 0.0,
    }
}

/// Reference evaluation of the click table: sums `q(m_H, m_V, n_H, n_V)`
/// against the binomial loss factors over every photon-count combination up
/// to the distribution cutoffs. Polynomial in the cutoff; meant for checks
/// at small mean photon numbers.
pub fn click_table_literal(
    buckets: &BucketProbs,
    pi_hv: &PairDistribution,
    pi_vh: &PairDistribution,
    link: &LinkParams,
) -> Result<ClickTable> {
    link.validate()?;
    let mut cache = EntryCache::new(*buckets, pi_hv, pi_vh);
    let (ka, kb) = (pi_hv.k_max(), pi_vh.k_max());
    let mut out = [0.0; 4];
    for (slot, pattern) in out.iter_mut().zip(Pattern::ALL) {
        let mut sum = 0.0;
        for m_h in pattern.i_h as usize..=ka {
            let fa = detect(m_h, pattern.i_h, link.t_a);
            for n_v in pattern.j_v as usize..=ka {
                let fb = fa * detect(n_v, pattern.j_v, link.t_b);
                if fb == 0.0 {
                    continue;
                }
                for m_v in pattern.i_v as usize..=kb {
                    let fc = fb * detect(m_v, pattern.i_v, link.t_a);
                    for n_h in pattern.j_h as usize..=kb {
                        let weight = fc * detect(n_h, pattern.j_h, link.t_b);
                        if weight != 0.0 {
                            sum += weight * cache.q(m_h, m_v, n_h, n_v);
                        }
                    }
                }
            }
        }
        *slot = sum;
    }
    // Every omitted term needs more pairs than a cutoff allows.
    let truncation_error = pi_hv.tail_bound() + pi_vh.tail_bound();
    ClickTable {
        p1010: out[0],
        p1001: out[1],
        p0110: out[2],
        p0101: out[3],
        truncation_error,
    }
    .certify("literal click table")
}
