//! Monte-Carlo simulation of emission, filtering, loss and photon-number
//! resolving detection.
//!
//! Trials are split into fixed-size chunks and chunk `c` draws from the
//! ChaCha stream `c` of the seed, so results do not depend on the number of
//! worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::channel::{build_grid, ChannelPair, ChannelPlan, ChannelProfile};
use crate::counting::{ClickTable, LinkParams, Pattern};
use crate::error::{Error, Result};
use crate::optimizer::map_rows;
use crate::source::{mode_strengths, PairStatistics, SourceParams};

const CHUNK: u64 = 1 << 16;

/// Draw `(ω_s, ω_i)` from the biphoton spectral density.
pub fn sample_pair_spectrum<R: Rng + ?Sized>(src: &SourceParams, rng: &mut R) -> (f64, f64) {
    let u = src.sigma_cr / 2.0 * sample_std_normal(rng);
    let v = sample_std_normal(rng) / src.tau_p;
    ((u + v) / 2.0, (v - u) / 2.0)
}

fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
}

/// Pair-number sampler for one polarization mode.
enum PairSampler {
    Vacuum,
    Thermal(Geometric),
    Poisson(Poisson<f64>),
    Multimode(Vec<Geometric>),
}

fn geometric(mean: f64) -> Result<Geometric> {
    Geometric::new(1.0 / (1.0 + mean)).map_err(|e| Error::invalid("mu", e.to_string()))
}

impl PairSampler {
    fn new(src: &SourceParams) -> Result<Self> {
        src.validate()?;
        if src.mu == 0.0 {
            return Ok(PairSampler::Vacuum);
        }
        Ok(match src.stats {
            PairStatistics::Thermal => PairSampler::Thermal(geometric(src.mu)?),
            PairStatistics::Poisson => {
                PairSampler::Poisson(Poisson::new(src.mu).map_err(|e| Error::invalid("mu", e.to_string()))?)
            }
            PairStatistics::Multimode { modes } => PairSampler::Multimode(
                mode_strengths(src, modes)
                    .into_iter()
                    .filter(|&l| src.mu * l > 0.0)
                    .map(|l| geometric(src.mu * l))
                    .collect::<Result<_>>()?,
            ),
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            PairSampler::Vacuum => 0,
            PairSampler::Thermal(g) => g.sample(rng),
            PairSampler::Poisson(p) => p.sample(rng) as u64,
            PairSampler::Multimode(gs) => gs.iter().map(|g| g.sample(rng)).sum(),
        }
    }
}

/// Filter layout used by the simulator; `None` plan means one all-pass pair.
struct Filters {
    pairs: Vec<ChannelPair>,
    profile: Option<ChannelProfile>,
}

impl Filters {
    fn new(plan: Option<&ChannelPlan>) -> Result<Self> {
        match plan {
            Some(p) => {
                p.validate()?;
                Ok(Filters {
                    pairs: build_grid(p),
                    profile: Some(p.profile),
                })
            }
            None => Ok(Filters {
                pairs: vec![ChannelPair {
                    id: 0,
                    omega_s0: 0.0,
                    omega_i0: 0.0,
                }],
                profile: None,
            }),
        }
    }

    fn passes<R: Rng + ?Sized>(&self, omega: f64, center: f64, rng: &mut R) -> bool {
        match self.profile {
            None => true,
            Some(ChannelProfile::Rect { width }) => (omega - center).abs() <= width / 2.0,
            Some(ChannelProfile::Gauss { sigma_f }) => {
                let x = (omega - center) / sigma_f;
                rng.random::<f64>() < (-x * x).exp()
            }
        }
    }
}

/// Click counts for one channel pair: Alice H, Alice V, Bob H, Bob V.
type Clicks = [u32; 4];

fn pattern_index(c: &Clicks) -> Option<usize> {
    match *c {
        [1, 0, 1, 0] => Some(0),
        [1, 0, 0, 1] => Some(1),
        [0, 1, 1, 0] => Some(2),
        [0, 1, 0, 1] => Some(3),
        _ => None,
    }
}

/// Accepted-pattern counts of one channel pair, in the order of
/// [`Pattern::ALL`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub id: i64,
    pub counts: [u64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub trials: u64,
    pub seed: u64,
    pub per_pair: Vec<PairCounts>,
}

/// Estimated probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub value: f64,
    pub std_err: f64,
}

impl Frequency {
    fn new(count: u64, trials: u64) -> Self {
        let n = trials as f64;
        let f = count as f64 / n;
        Frequency {
            value: f,
            std_err: (f * (1.0 - f) / n).sqrt(),
        }
    }
}

impl McEstimate {
    pub fn frequency(&self, pair: usize, pattern: Pattern) -> Frequency {
        let j = Pattern::ALL
            .iter()
            .position(|p| *p == pattern)
            .expect("accepted pattern");
        Frequency::new(self.per_pair[pair].counts[j], self.trials)
    }

    /// Pattern counts summed over every channel pair.
    pub fn total_counts(&self) -> [u64; 4] {
        let mut out = [0; 4];
        for p in &self.per_pair {
            for (o, c) in out.iter_mut().zip(p.counts) {
                *o += c;
            }
        }
        out
    }

    pub fn total_frequency(&self, pattern: Pattern) -> Frequency {
        let j = Pattern::ALL
            .iter()
            .position(|p| *p == pattern)
            .expect("accepted pattern");
        Frequency::new(self.total_counts()[j], self.trials)
    }

    /// Empirical error rate among accepted events of one pair.
    pub fn qber(&self, pair: usize) -> f64 {
        let c = self.per_pair[pair].counts;
        let acc: u64 = c.iter().sum();
        if acc == 0 {
            0.0
        } else {
            (c[0] + c[3]) as f64 / acc as f64
        }
    }

    /// Largest `|f − p|/σ` over the four summed patterns against an analytic
    /// table, with `σ = sqrt(p(1−p)/trials)` evaluated at the analytic value.
    pub fn max_deviation(&self, analytic: &ClickTable) -> f64 {
        let n = self.trials as f64;
        let counts = self.total_counts();
        Pattern::ALL
            .iter()
            .zip(counts)
            .map(|(&pat, c)| deviation(c as f64 / n, analytic.get(pat), self.trials))
            .fold(0.0, f64::max)
    }
}

/// `|f − p|` in units of the binomial standard error at `p`.
pub fn deviation(f: f64, p: f64, trials: u64) -> f64 {
    let sd = (p * (1.0 - p) / trials as f64).sqrt();
    if sd == 0.0 {
        if f == p {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (f - p).abs() / sd
    }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn chunked<T, F>(trials: u64, jobs: Option<usize>, run: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    let chunks = trials.div_ceil(CHUNK);
    map_rows(chunks as usize, jobs, |c| {
        let c = c as u64;
        let len = CHUNK.min(trials - c * CHUNK);
        run(c, len)
    })
}

/// Simulate `trials` source uses and count the accepted click patterns of
/// every channel pair.
pub fn simulate(
    plan: Option<&ChannelPlan>,
    src: &SourceParams,
    link: &LinkParams,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    simulate_with_jobs(plan, src, link, trials, seed, None)
}

pub fn simulate_with_jobs(
    plan: Option<&ChannelPlan>,
    src: &SourceParams,
    link: &LinkParams,
    trials: u64,
    seed: u64,
    jobs: Option<usize>,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::invalid("trials", "at least one trial is required"));
    }
    link.validate()?;
    let sampler = PairSampler::new(src)?;
    let filters = Filters::new(plan)?;
    let n_pairs = filters.pairs.len();

    let partials = chunked(trials, jobs, |chunk, len| {
        let mut rng = chunk_rng(seed, chunk);
        let mut counts = vec![[0u64; 4]; n_pairs];
        let mut clicks = vec![[0u32; 4]; n_pairs];
        for _ in 0..len {
            let m = sampler.sample(&mut rng);
            let n = sampler.sample(&mut rng);
            if m == 0 && n == 0 {
                continue;
            }
            clicks.iter_mut().for_each(|c| *c = [0; 4]);
            // HV pairs feed Alice H / Bob V, VH pairs feed Alice V / Bob H.
            for (pairs, alice, bob) in [(m, 0, 3), (n, 1, 2)] {
                for _ in 0..pairs {
                    let (ws, wi) = sample_pair_spectrum(src, &mut rng);
                    let seen_a = rng.random::<f64>() < link.t_a;
                    let seen_b = rng.random::<f64>() < link.t_b;
                    for (c, ch) in clicks.iter_mut().zip(&filters.pairs) {
                        if filters.passes(ws, ch.omega_s0, &mut rng) && seen_a {
                            c[alice] += 1;
                        }
                        if filters.passes(wi, ch.omega_i0, &mut rng) && seen_b {
                            c[bob] += 1;
                        }
                    }
                }
            }
            for (total, c) in counts.iter_mut().zip(&clicks) {
                if let Some(j) = pattern_index(c) {
                    total[j] += 1;
                }
            }
        }
        counts
    });

    let mut per_pair: Vec<PairCounts> = filters
        .pairs
        .iter()
        .map(|p| PairCounts {
            id: p.id,
            counts: [0; 4],
        })
        .collect();
    for part in partials {
        for (acc, c) in per_pair.iter_mut().zip(part) {
            for (a, b) in acc.counts.iter_mut().zip(c) {
                *a += b;
            }
        }
    }
    Ok(McEstimate { trials, seed, per_pair })
}

/// Fate of single pairs with respect to each channel pair: both enter, only
/// the signal, only the idler, neither.
pub fn sample_buckets(plan: &ChannelPlan, src: &SourceParams, samples: u64, seed: u64) -> Result<Vec<PairCounts>> {
    src.validate()?;
    let filters = Filters::new(Some(plan))?;
    let n_pairs = filters.pairs.len();
    let partials = chunked(samples, None, |chunk, len| {
        let mut rng = chunk_rng(seed, chunk);
        let mut counts = vec![[0u64; 4]; n_pairs];
        for _ in 0..len {
            let (ws, wi) = sample_pair_spectrum(src, &mut rng);
            for (c, ch) in counts.iter_mut().zip(&filters.pairs) {
                let s = filters.passes(ws, ch.omega_s0, &mut rng);
                let i = filters.passes(wi, ch.omega_i0, &mut rng);
                c[match (s, i) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                }] += 1;
            }
        }
        counts
    });
    let mut out: Vec<PairCounts> = filters
        .pairs
        .iter()
        .map(|p| PairCounts {
            id: p.id,
            counts: [0; 4],
        })
        .collect();
    for part in partials {
        for (acc, c) in out.iter_mut().zip(part) {
            for (a, b) in acc.counts.iter_mut().zip(c) {
                *a += b;
            }
        }
    }
    Ok(out)
}

/// Histogram of sampled pair numbers; the last bin collects everything at
/// or above `bins − 1`.
pub fn pair_number_histogram(src: &SourceParams, samples: u64, bins: usize, seed: u64) -> Result<Vec<u64>> {
    if bins == 0 {
        return Err(Error::invalid("bins", "need at least one bin"));
    }
    let sampler = PairSampler::new(src)?;
    let partials = chunked(samples, None, |chunk, len| {
        let mut rng = chunk_rng(seed, chunk);
        let mut hist = vec![0u64; bins];
        for _ in 0..len {
            let k = (sampler.sample(&mut rng) as usize).min(bins - 1);
            hist[k] += 1;
        }
        hist
    });
    let mut out = vec![0u64; bins];
    for part in partials {
        for (o, h) in out.iter_mut().zip(part) {
            *o += h;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bucket_probs, CorrelationSign};
    use crate::source::pair_distribution_auto;
    use std::f64::consts::PI;

    fn src(stats: PairStatistics, mu: f64) -> SourceParams {
        SourceParams::new(1e13, 3.33e-10, mu, stats).unwrap()
    }

    fn plan(profile: ChannelProfile) -> ChannelPlan {
        ChannelPlan::new(3, CorrelationSign::Negative, 2.0 * PI * 100e9, profile).unwrap()
    }

    #[test]
    fn spectrum_moments() {
        let s = SourceParams::new(3e12, 1e-12, 0.1, PairStatistics::Poisson).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let (mut ms, mut mi, mut sd2) = (0.0, 0.0, 0.0);
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            let (a, b) = sample_pair_spectrum(&s, &mut rng);
            ms += a;
            mi += b;
            sd2 += (a - b) * (a - b);
            xs.push((a, b));
        }
        let nf = n as f64;
        let g = s.spectral();
        let sd = g.marginal_sd();
        assert!((ms / nf).abs() < 3.0 * sd / nf.sqrt());
        assert!((mi / nf).abs() < 3.0 * sd / nf.sqrt());
        // Var of (ω_s−ω_i)² estimate: 2σ⁴ for a normal.
        let target = g.var_u;
        assert!((sd2 / nf - target).abs() < 3.0 * (2.0f64).sqrt() * target / nf.sqrt());
        // Pearson correlation, standard error (1−ρ²)/√n.
        let rho = g.correlation();
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (a, b) in &xs {
            sxy += a * b;
            sxx += a * a;
            syy += b * b;
        }
        let r = sxy / (sxx * syy).sqrt();
        assert!((r - rho).abs() < 3.0 * (1.0 - rho * rho) / nf.sqrt(), "{r} vs {rho}");
    }

    #[test]
    fn dead_link_never_accepts() {
        let s = src(PairStatistics::Poisson, 1.0);
        let p = plan(ChannelProfile::Rect { width: 2.0 * PI * 50e9 });
        let est = simulate(Some(&p), &s, &LinkParams::symmetric(0.0).unwrap(), 10_000, 1).unwrap();
        assert_eq!(est.total_counts(), [0; 4]);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let s = src(PairStatistics::Thermal, 0.5);
        let p = plan(ChannelProfile::Gauss {
            sigma_f: 2.0 * PI * 50e9,
        });
        let link = LinkParams::symmetric(0.5).unwrap();
        let a = simulate_with_jobs(Some(&p), &s, &link, 200_000, 42, Some(1)).unwrap();
        let b = simulate_with_jobs(Some(&p), &s, &link, 200_000, 42, Some(3)).unwrap();
        assert_eq!(a, b);
        let c = simulate(Some(&p), &s, &link, 200_000, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn filter_frequencies_match_buckets() {
        let s = SourceParams::new(3e12, 3e-12, 0.1, PairStatistics::Poisson).unwrap();
        for profile in [
            ChannelProfile::Rect { width: 2.0 * PI * 50e9 },
            ChannelProfile::Gauss {
                sigma_f: 2.0 * PI * 50e9,
            },
        ] {
            let p = plan(profile);
            let n = 1_000_000;
            let counts = sample_buckets(&p, &s, n, 11).unwrap();
            for (pc, pair) in counts.iter().zip(build_grid(&p)) {
                let b = bucket_probs(&pair, &p.profile, &s).unwrap();
                for (c, q) in pc.counts.iter().zip([b.pp, b.pm, b.mp, b.mm]) {
                    let d = deviation(*c as f64 / n as f64, q, n);
                    assert!(d < 4.0, "pair {}: {d} sigma", pair.id);
                }
            }
        }
    }

    #[test]
    fn multimode_histogram_passes_chi_square() {
        let s = SourceParams::new(1e13, 5e-13, 0.8, PairStatistics::Multimode { modes: 10 }).unwrap();
        let pi = pair_distribution_auto(&s, 1e-13).unwrap();
        let samples = 200_000u64;
        let bins = 8;
        let hist = pair_number_histogram(&s, samples, bins, 5).unwrap();
        let mut chi2 = 0.0;
        for (k, &obs) in hist.iter().enumerate() {
            let p = if k + 1 < bins {
                pi.prob(k)
            } else {
                1.0 - (0..bins - 1).map(|j| pi.prob(j)).sum::<f64>()
            };
            let e = p * samples as f64;
            chi2 += (obs as f64 - e).powi(2) / e;
        }
        // 0.99 quantile of χ² with 7 degrees of freedom.
        assert!(chi2 < 18.475, "chi2 = {chi2}");
    }
}
