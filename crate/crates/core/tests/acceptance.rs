//! Quantitative acceptance checks. Runs as a plain binary (no libtest
//! harness) and prints one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wdmqkd::channel::{bucket_probs_gauss, build_grid, grid_buckets, rescale};
use wdmqkd::optimizer::{log_space, optimize_nowdm, optimize_wdm, thermal_baseline};
use wdmqkd::source::{biphoton_density, pair_distribution_auto};
use wdmqkd::{
    binary_entropy, click_table, mc, quadrature, secret_key_rate, total_wdm_rate, ChannelPlan, ChannelProfile,
    ClickTable, CorrelationSign, LinkParams, MuBounds, PairStatistics, PreparedGrid, SourceParams,
};

const SEP: f64 = 2.0 * PI * 100e9;
const WIDTH: f64 = 2.0 * PI * 50e9;

fn rect(n: usize, sign: CorrelationSign) -> ChannelPlan {
    ChannelPlan::new(n, sign, SEP, ChannelProfile::Rect { width: WIDTH }).unwrap()
}

fn gauss(n: usize, sign: CorrelationSign) -> ChannelPlan {
    ChannelPlan::new(n, sign, SEP, ChannelProfile::Gauss { sigma_f: WIDTH }).unwrap()
}

fn source(sigma_cr: f64, tau_p: f64, stats: PairStatistics) -> SourceParams {
    SourceParams::new(sigma_cr, tau_p, 0.1, stats).unwrap()
}

fn link(t: f64) -> LinkParams {
    LinkParams::symmetric(t).unwrap()
}

fn k_opt(plan: &ChannelPlan, src: &SourceParams, t: f64) -> f64 {
    optimize_wdm(plan, src, &link(t), MuBounds::default()).unwrap().rate
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn baseline_ratio() -> Outcome {
    let t = link(1e-4);
    let src = source(1e13, 3.33e-10, PairStatistics::Thermal);
    let th = optimize_nowdm(&src, &t, MuBounds::default()).unwrap();
    let po = optimize_nowdm(&src.with_stats(PairStatistics::Poisson), &t, MuBounds::default()).unwrap();
    let ratio = th.rate / po.rate;
    outcome(
        (1.10..=1.16).contains(&ratio) && th.mu > po.mu,
        format!(
            "K_thermal/K_poisson = {ratio:.4} (want [1.10, 1.16]); mu* thermal {:.4} > poisson {:.4}",
            th.mu, po.mu
        ),
    )
}

fn gain_asymptote() -> Outcome {
    let t = 1e-3;
    let src = source(1e13, 3e-9, PairStatistics::Poisson);
    let base = thermal_baseline(&src, &link(t), MuBounds::default()).unwrap().rate;
    let poisson = optimize_nowdm(&src, &link(t), MuBounds::default()).unwrap().rate;
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [1usize, 2] {
        let g = k_opt(&rect(n, CorrelationSign::Negative), &src, t) / base;
        let target = n as f64 * poisson / base;
        let ok = (g / target - 1.0).abs() <= 0.05;
        pass &= ok;
        parts.push(format!("N={n}: G = {g:.4} vs {target:.4}"));
    }
    outcome(pass, parts.join("; ") + " (want within 5%)")
}

fn saturation() -> Outcome {
    let src = source(3e12, 3e-9, PairStatistics::Poisson);
    let k6 = k_opt(&rect(6, CorrelationSign::Negative), &src, 1e-3);
    let k10 = k_opt(&rect(10, CorrelationSign::Negative), &src, 1e-3);
    let ratio = k10 / k6;
    outcome(
        ratio < 1.02,
        format!("k(N=10)/k(N=6) = {ratio:.4} at tau_p = 3 ns (want < 1.02)"),
    )
}

fn pulse_optimum() -> Outcome {
    let grid = log_space(1e-12, 1e-6, 32);
    let step = 6.0 / 31.0;
    let plan = rect(1, CorrelationSign::Negative);
    let rates: Vec<f64> = grid
        .iter()
        .map(|&tau| k_opt(&plan, &source(1e13, tau, PairStatistics::Poisson), 1e-3))
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for tau_rec in [1e-10, 1e-9, 1e-8, 1e-7] {
        let (best, _) = grid
            .iter()
            .zip(&rates)
            .map(|(&tau, &k)| (tau, wdmqkd::time_rate(k, tau_rec, tau).unwrap()))
            .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        let off = (best / (tau_rec / 3.0)).log10().abs();
        pass &= off <= step + 1e-12;
        parts.push(format!("tau_rec={tau_rec:e}: argmax {best:.3e} ({off:.3} dec)"));
    }
    outcome(
        pass,
        parts.join("; ") + &format!(" (want within {step:.3} dec of tau_rec/3)"),
    )
}

fn gauss_penalty() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for sigma_cr in [1e13, 1e14] {
        let src = source(sigma_cr, 333e-12, PairStatistics::Poisson);
        for n in [1usize, 3, 5] {
            let r = k_opt(&gauss(n, CorrelationSign::Negative), &src, 1e-3)
                / k_opt(&rect(n, CorrelationSign::Negative), &src, 1e-3);
            pass &= (0.4..=0.6).contains(&r);
            parts.push(format!("{sigma_cr:.0e}/N={n}: {r:.3}"));
        }
    }
    let src = source(1e14, 333e-12, PairStatistics::Poisson);
    let pair = build_grid(&gauss(1, CorrelationSign::Negative))[0];
    let b = bucket_probs_gauss(&pair, WIDTH, &src);
    let leak = b.pm / b.pp;
    let leak_ok = (0.45..=0.55).contains(&leak);
    outcome(
        pass && leak_ok,
        format!(
            "Gauss/Rect {} (want [0.4, 0.6]); p+-/p++ at 1e14 = {leak:.4} (want [0.45, 0.55])",
            parts.join(", ")
        ),
    )
}

fn rescale_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let sigma_cr = 10f64.powf(rng.random_range(11.0..14.0));
        let tau_p = 10f64.powf(rng.random_range(-13.0..-9.5));
        let stats = if rng.random_bool(0.5) {
            PairStatistics::Poisson
        } else {
            PairStatistics::Thermal
        };
        let src = SourceParams::new(sigma_cr, tau_p, 10f64.powf(rng.random_range(-3.0..0.0)), stats).unwrap();
        let sign = if rng.random_bool(0.5) {
            CorrelationSign::Negative
        } else {
            CorrelationSign::Positive
        };
        let n = rng.random_range(1..=6);
        let plan = if rng.random_bool(0.5) {
            rect(n, sign)
        } else {
            gauss(n, sign)
        };
        let t = link(10f64.powf(rng.random_range(-4.0..-1.0)));
        let k = total_wdm_rate(&plan, &src, &t).unwrap().k_total;
        for a in [0.1, 0.5, 2.0, 10.0] {
            let (p2, s2) = rescale(&plan, &src, a).unwrap();
            let k2 = total_wdm_rate(&p2, &s2, &t).unwrap().k_total;
            if k > 0.0 {
                worst = worst.max((k2 / k - 1.0).abs());
            } else if k2 != 0.0 {
                worst = f64::INFINITY;
            }
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max relative change {worst:.2e} over 20 configs x 4 scales (want <= 1e-9)"),
    )
}

fn delta_k() -> Outcome {
    let cases = [
        (9.5, CorrelationSign::Negative, 3e12, 0.055, 0.005, "0.055 +- 0.005"),
        (30.0, CorrelationSign::Negative, 3e12, 0.0, 0.02, "|dK| < 0.02"),
        (0.1, CorrelationSign::Positive, 1e12, 0.021, 0.005, "0.021 +- 0.005"),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (x, sign, sigma_cr, want, tol, label) in cases {
        let plan = rect(1, sign);
        let poisson = source(sigma_cr, x / sigma_cr, PairStatistics::Poisson);
        let kp = k_opt(&plan, &poisson, 1e-3);
        let mut vals = Vec::new();
        for modes in [1000usize, 4000] {
            let km = k_opt(&plan, &poisson.with_stats(PairStatistics::Multimode { modes }), 1e-3);
            let dk = (km - kp) / kp;
            let ok = if want == 0.0 {
                dk.abs() < tol
            } else {
                (dk - want).abs() <= tol
            };
            pass &= ok;
            vals.push(format!("M={modes}: {dk:.4}"));
        }
        parts.push(format!("x={x}: {} (want {label})", vals.join(", ")));
    }
    outcome(pass, parts.join("; "))
}

fn summed_table(plan: &ChannelPlan, src: &SourceParams, t: &LinkParams) -> ClickTable {
    let pi = pair_distribution_auto(src, 1e-15).unwrap();
    let mut sum = ClickTable::ZERO;
    for (_, b) in grid_buckets(plan, src).unwrap() {
        let c = click_table(&b, &pi, &pi, t).unwrap();
        sum.p1010 += c.p1010;
        sum.p1001 += c.p1001;
        sum.p0110 += c.p0110;
        sum.p0101 += c.p0101;
    }
    sum
}

fn oracle_equivalence() -> Outcome {
    use CorrelationSign::{Negative, Positive};
    let configs = [
        (
            rect(3, Negative),
            source(1e13, 333e-12, PairStatistics::Poisson),
            0.2,
            (0.3, 0.3),
        ),
        (
            gauss(3, Negative),
            source(1e13, 333e-12, PairStatistics::Thermal),
            0.2,
            (0.3, 0.3),
        ),
        (
            rect(4, Positive),
            source(1e11, 1e-13, PairStatistics::Poisson),
            0.3,
            (0.2, 0.2),
        ),
        (
            gauss(2, Positive),
            source(1e11, 1e-13, PairStatistics::Thermal),
            0.3,
            (0.2, 0.4),
        ),
        (
            rect(5, Negative),
            source(3e12, 3e-12, PairStatistics::Thermal),
            0.5,
            (0.1, 0.1),
        ),
        (
            gauss(2, Negative),
            source(3e12, 1e-11, PairStatistics::Poisson),
            1.0,
            (0.05, 0.08),
        ),
    ];
    let trials = 10_000_000;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (plan, src, mu, (ta, tb)) in configs {
        let src = src.with_mu(mu);
        let t = LinkParams::new(ta, tb).unwrap();
        let est = mc::simulate(Some(&plan), &src, &t, trials, 42).unwrap();
        let dev = est.max_deviation(&summed_table(&plan, &src, &t));
        worst = worst.max(dev);
        parts.push(format!("{dev:.2}"));
    }
    outcome(
        worst < 3.0,
        format!(
            "max deviation per config [{}] sigma at 1e7 trials (want < 3)",
            parts.join(", ")
        ),
    )
}

fn property_suite() -> Outcome {
    let mut failures = Vec::new();

    // Normalization over ±8 marginal standard deviations, in rotated
    // coordinates where the density factorizes.
    for (sigma_cr, tau_p) in [(1e13, 3.33e-10), (3e12, 3e-12), (1e10, 1e-13)] {
        let src = source(sigma_cr, tau_p, PairStatistics::Poisson);
        let sd = src.spectral().marginal_sd();
        let span = 8.0 * sd;
        let g = src.spectral();
        let su = g.var_u.sqrt();
        let sv = g.var_v.sqrt();
        let tol = quadrature::Tolerance::default();
        let outer = quadrature::breakpoints(-span, span, quadrature::ladder(0.0, sd.min(su.min(sv)), -span, span));
        let est = quadrature::integrate_2d(
            |ws, wi| biphoton_density(ws, wi, &src),
            &outer,
            |ws| {
                let rho = g.correlation();
                let c = rho * ws;
                let w = g.conditional_var().sqrt();
                quadrature::breakpoints(-span, span, quadrature::ladder(c, w, -span, span))
            },
            tol,
        )
        .unwrap();
        if (est.value - 1.0).abs() > 1e-6 {
            failures.push(format!("density mass {}", est.value));
        }
    }

    // Closure and ±n per-pair rate symmetry.
    let t = link(1e-3);
    for plan in [
        rect(7, CorrelationSign::Negative),
        gauss(6, CorrelationSign::Negative),
        rect(8, CorrelationSign::Positive),
    ] {
        for (sigma_cr, tau_p) in [(1e13, 3.33e-10), (3e12, 3e-12)] {
            let src = source(sigma_cr, tau_p, PairStatistics::Poisson);
            for (pair, b) in grid_buckets(&plan, &src).unwrap() {
                let parts = [b.pp, b.pm, b.mp, b.mm];
                if (b.total() - 1.0).abs() > 1e-9 || parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    failures.push(format!("closure pair {}", pair.id));
                }
            }
            if plan.sign == CorrelationSign::Negative {
                let r = total_wdm_rate(&plan, &src, &t).unwrap();
                for p in &r.per_pair {
                    let m = r.per_pair.iter().find(|q| q.id == -p.id).unwrap();
                    if (p.key_rate - m.key_rate).abs() > 1e-10 * p.key_rate.max(f64::MIN_POSITIVE) {
                        failures.push(format!("rate symmetry pair {}", p.id));
                    }
                }
            }
        }
    }

    // Distribution mass including the certified tail.
    for stats in [
        PairStatistics::Thermal,
        PairStatistics::Poisson,
        PairStatistics::Multimode { modes: 200 },
    ] {
        for mu in [1e-4, 0.1, 1.0, 10.0] {
            let src = SourceParams::new(1e13, 1e-11, mu, stats).unwrap();
            let d = pair_distribution_auto(&src, wdmqkd::DEFAULT_TAIL_TOLERANCE).unwrap();
            let total = d.mass() + d.tail_bound();
            if (total - 1.0).abs() > 1e-12 {
                failures.push(format!("mass {stats:?} mu={mu}: {total}"));
            }
        }
    }

    // Clamping and entropy endpoints.
    if binary_entropy(0.0) != 0.0 || binary_entropy(1.0) != 0.0 || (binary_entropy(0.5) - 1.0).abs() > 1e-15 {
        failures.push("entropy endpoints".into());
    }
    if secret_key_rate(0.3, 0.5) != 0.0 || secret_key_rate(0.3, 0.2) != 0.0 || secret_key_rate(0.3, 0.0) != 0.15 {
        failures.push("key clamping".into());
    }

    // Seeded determinism, independent of worker count.
    let src = source(1e13, 333e-12, PairStatistics::Poisson).with_mu(0.3);
    let plan = rect(3, CorrelationSign::Negative);
    let a = mc::simulate_with_jobs(Some(&plan), &src, &link(0.3), 300_000, 9, Some(1)).unwrap();
    let b = mc::simulate_with_jobs(Some(&plan), &src, &link(0.3), 300_000, 9, Some(4)).unwrap();
    if a != b {
        failures.push("simulation not deterministic".into());
    }

    // Prepared grids reproduce direct evaluation.
    let grid = PreparedGrid::new(&plan, &src).unwrap();
    if grid.rate(&src, &t).unwrap() != total_wdm_rate(&plan, &src, &t).unwrap() {
        failures.push("prepared grid mismatch".into());
    }

    if failures.is_empty() {
        outcome(true, "normalization, closure, symmetry, mass, clamping, determinism")
    } else {
        outcome(false, failures.join("; "))
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("thermal/Poisson baseline ratio", baseline_ratio),
        ("gain asymptote", gain_asymptote),
        ("saturation at sigma_cr = 3e12", saturation),
        ("pulse-duration optimum", pulse_optimum),
        ("Gaussian-profile penalty", gauss_penalty),
        ("rescale invariance", rescale_invariance),
        ("multimode detuning", delta_k),
        ("oracle equivalence", oracle_equivalence),
        ("property suite", property_suite),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (j, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| name.contains(f.as_str()) || *f == (j + 1).to_string())
        {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{} {}. {name}: {} [{secs:.1} s]",
            if out.pass { "PASS" } else { "FAIL" },
            j + 1,
            out.detail
        );
        if !out.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
