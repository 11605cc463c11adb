//! Canned sweeps behind `wdmqkd figure <id>`.
//!
//! Unless stated otherwise: Poisson statistics, `T = 1e-3`, negative
//! correlation, rectangular channels of width 2π·50 GHz on a 2π·100 GHz
//! grid, `μ` optimized at every point.

use std::f64::consts::PI;

use wdmqkd::optimizer::{log_space, map_rows, optimize_mu, optimize_nowdm, thermal_baseline};
use wdmqkd::{
    bucket_probs_gauss, build_grid, ChannelPlan, ChannelProfile, CorrelationSign, Evaluation, LinkParams, MuBounds,
    PairStatistics, Result, Scenario, SourceParams, SweepAxis,
};

use crate::output::{Cell, Table};

const SEP: f64 = 2.0 * PI * 100e9;
const WIDTH: f64 = 2.0 * PI * 50e9;
const T: f64 = 1e-3;

type Eval = Box<dyn Fn(f64) -> Result<f64> + Send + Sync>;

pub struct Column {
    pub name: String,
    eval: Eval,
}

fn col(name: impl Into<String>, eval: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Column {
    Column {
        name: name.into(),
        eval: Box::new(eval),
    }
}

pub struct Figure {
    pub id: &'static str,
    pub title: &'static str,
    pub x: &'static str,
    pub grid: Vec<f64>,
    pub columns: Vec<Column>,
}

pub const IDS: &[&str] = &[
    "3a", "3b", "3c", "4a", "4b", "4c", "4d", "5", "6a", "6b", "7a", "7b", "8a", "8b", "9a", "9b", "10", "width-a",
    "width-b",
];

fn src(sigma_cr: f64, tau_p: f64, stats: PairStatistics) -> SourceParams {
    SourceParams::new(sigma_cr, tau_p, 0.1, stats).expect("canned source is valid")
}

fn rect(n: usize, sign: CorrelationSign) -> ChannelPlan {
    ChannelPlan::new(n, sign, SEP, ChannelProfile::Rect { width: WIDTH }).expect("canned plan is valid")
}

fn gauss(n: usize) -> ChannelPlan {
    ChannelPlan::new(
        n,
        CorrelationSign::Negative,
        SEP,
        ChannelProfile::Gauss { sigma_f: WIDTH },
    )
    .expect("canned plan is valid")
}

fn link(t: f64) -> Result<LinkParams> {
    LinkParams::symmetric(t)
}

#[derive(Clone, Copy, PartialEq)]
enum Metric {
    Gain,
    Mu,
    PerSecond,
}

fn evaluate(base: Scenario, axis: SweepAxis, x: f64) -> Result<Evaluation> {
    base.with_axis(axis, x)?.evaluate(true, MuBounds::default())
}

fn metric(e: &Evaluation, m: Metric) -> f64 {
    match m {
        Metric::Gain => e.result.gain.unwrap_or(f64::NAN),
        Metric::Mu => e.optimum.map_or(e.result.mu_used, |o| o.mu),
        Metric::PerSecond => e.result.r_per_second.unwrap_or(f64::NAN),
    }
}

fn scenario_col(name: String, base: Scenario, axis: SweepAxis, m: Metric) -> Column {
    col(name, move |x| Ok(metric(&evaluate(base, axis, x)?, m)))
}

/// One column per `N = 1..=10`.
fn per_n(sign: CorrelationSign, s: SourceParams, axis: SweepAxis, m: Metric) -> Vec<Column> {
    let prefix = match m {
        Metric::Gain => "G",
        Metric::Mu => "mu",
        Metric::PerSecond => "R",
    };
    (1..=10)
        .map(|n| {
            let base = Scenario {
                src: s,
                plan: Some(rect(n, sign)),
                link: link(T).expect("valid"),
                tau_rec: None,
            };
            scenario_col(format!("{prefix}_N{n}"), base, axis, m)
        })
        .collect()
}

fn nowdm(stats: PairStatistics, mu: bool) -> Column {
    let s = src(1e13, 333e-12, stats);
    let name = match (stats, mu) {
        (PairStatistics::Thermal, false) => "k_thermal",
        (PairStatistics::Thermal, true) => "mu_thermal",
        (_, false) => "k_poisson",
        (_, true) => "mu_poisson",
    };
    col(name, move |t| {
        let o = optimize_nowdm(&s, &link(t)?, MuBounds::default())?;
        Ok(if mu { o.mu } else { o.rate })
    })
}

fn k_opt(plan: ChannelPlan, s: SourceParams) -> Result<f64> {
    let grid = wdmqkd::PreparedGrid::new(&plan, &s)?;
    let l = link(T)?;
    Ok(optimize_mu(|mu| Ok(grid.rate(&s.with_mu(mu), &l)?.k_total), MuBounds::default())?.rate)
}

pub fn lookup(id: &str) -> Option<Figure> {
    use CorrelationSign::{Negative, Positive};
    use PairStatistics::{Poisson, Thermal};
    let id: &'static str = IDS.iter().copied().find(|i| *i == id)?;
    let t_grid = || log_space(1e-4, 1.0, 13);
    let fig = match id {
        "3a" => Figure {
            id,
            title: "thermal key rate without WDM",
            x: "t",
            grid: t_grid(),
            columns: vec![nowdm(Thermal, false)],
        },
        "3b" => Figure {
            id,
            title: "Poisson over thermal key rate without WDM",
            x: "t",
            grid: t_grid(),
            columns: vec![col("ratio", |t| {
                let s = src(1e13, 333e-12, Poisson);
                let l = link(t)?;
                let p = optimize_nowdm(&s, &l, MuBounds::default())?.rate;
                let th = thermal_baseline(&s, &l, MuBounds::default())?.rate;
                Ok(p / th)
            })],
        },
        "3c" => Figure {
            id,
            title: "optimal mu without WDM",
            x: "t",
            grid: t_grid(),
            columns: vec![nowdm(Thermal, true), nowdm(Poisson, true)],
        },
        "4a" | "4b" | "4c" | "4d" => {
            let sigma_cr = if matches!(id, "4a" | "4c") { 3e12 } else { 1e13 };
            let m = if matches!(id, "4a" | "4b") {
                Metric::Gain
            } else {
                Metric::Mu
            };
            Figure {
                id,
                title: if m == Metric::Gain {
                    "gain vs pulse duration"
                } else {
                    "optimal mu vs pulse duration"
                },
                x: "tau_p",
                grid: log_space(1e-12, 1e-8, 13),
                columns: per_n(Negative, src(sigma_cr, 333e-12, Poisson), SweepAxis::TauP, m),
            }
        }
        "5" => Figure {
            id,
            title: "key rate per second vs pulse duration, N = 1",
            x: "tau_p",
            grid: log_space(1e-12, 1e-6, 19),
            columns: [1e-10, 1e-9, 1e-8, 1e-7]
                .into_iter()
                .map(|tau_rec| {
                    let base = Scenario {
                        src: src(1e13, 333e-12, Poisson),
                        plan: Some(rect(1, Negative)),
                        link: link(T).expect("valid"),
                        tau_rec: Some(tau_rec),
                    };
                    scenario_col(
                        format!("R_tau_rec_{tau_rec:e}"),
                        base,
                        SweepAxis::TauP,
                        Metric::PerSecond,
                    )
                })
                .collect(),
        },
        "6a" | "6b" => {
            let m = if id == "6a" { Metric::Gain } else { Metric::Mu };
            Figure {
                id,
                title: "gain or optimal mu vs crystal bandwidth, tau_p = 333 ps",
                x: "sigma_cr",
                grid: log_space(1e11, 1e14, 13),
                columns: per_n(Negative, src(1e13, 333e-12, Poisson), SweepAxis::SigmaCr, m),
            }
        }
        "7a" | "7b" => {
            let m = if id == "7a" { Metric::Gain } else { Metric::Mu };
            Figure {
                id,
                title: "positive correlation, sigma_cr = 1e10: gain or optimal mu vs pulse duration",
                x: "tau_p",
                grid: log_space(1e-13, 1e-9, 13),
                columns: per_n(Positive, src(1e10, 333e-12, Poisson), SweepAxis::TauP, m),
            }
        }
        "8a" | "8b" => {
            let m = if id == "8a" { Metric::Gain } else { Metric::Mu };
            Figure {
                id,
                title: "positive correlation, tau_p = 100 fs: gain or optimal mu vs crystal bandwidth",
                x: "sigma_cr",
                grid: log_space(1e8, 1e13, 11),
                columns: per_n(Positive, src(1e10, 1e-13, Poisson), SweepAxis::SigmaCr, m),
            }
        }
        "9a" => Figure {
            id,
            title: "Gaussian vs rectangular channels: gain vs crystal bandwidth",
            x: "sigma_cr",
            grid: log_space(1e11, 1e14, 13),
            columns: [1usize, 3, 5]
                .into_iter()
                .flat_map(|n| {
                    [("rect", rect(n, Negative)), ("gauss", gauss(n))].map(|(kind, plan)| {
                        let base = Scenario {
                            src: src(1e13, 333e-12, Poisson),
                            plan: Some(plan),
                            link: link(T).expect("valid"),
                            tau_rec: None,
                        };
                        scenario_col(format!("G_{kind}_N{n}"), base, SweepAxis::SigmaCr, Metric::Gain)
                    })
                })
                .collect(),
        },
        "9b" => Figure {
            id,
            title: "Gaussian channels: p+-/p++ vs crystal bandwidth",
            x: "sigma_cr",
            grid: log_space(1e11, 1e14, 13),
            columns: [0i64, 2, 4]
                .into_iter()
                .map(|n| {
                    col(format!("leak_n{n}"), move |sigma_cr| {
                        let pair = build_grid(&gauss(5))
                            .into_iter()
                            .find(|p| p.id == n)
                            .expect("pair on grid");
                        let b = bucket_probs_gauss(&pair, WIDTH, &SourceParams::new(sigma_cr, 333e-12, 0.1, Poisson)?);
                        Ok(b.pm / b.pp)
                    })
                })
                .collect(),
        },
        "10" => Figure {
            id,
            title: "multimode over Poisson key rate, minus one, vs number of modes",
            x: "modes",
            grid: vec![10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0, 4000.0],
            columns: [(9.5, Negative, 3e12), (30.0, Negative, 3e12), (0.1, Positive, 1e12)]
                .into_iter()
                .map(|(x, sign, sigma_cr)| {
                    col(format!("dK_x{x}"), move |modes| {
                        let s = SourceParams::new(sigma_cr, x / sigma_cr, 0.1, Poisson)?;
                        let kp = k_opt(rect(1, sign), s)?;
                        let km = k_opt(
                            rect(1, sign),
                            s.with_stats(PairStatistics::Multimode { modes: modes as usize }),
                        )?;
                        Ok((km - kp) / kp)
                    })
                })
                .collect(),
        },
        "width-a" | "width-b" => {
            let m = if id == "width-a" { Metric::Gain } else { Metric::Mu };
            Figure {
                id,
                title: "gain or optimal mu vs rectangular channel width, sigma_cr = 1e13",
                x: "width",
                grid: log_space(2.0 * PI * 5e9, SEP, 11),
                columns: [1usize, 3, 5, 10]
                    .into_iter()
                    .map(|n| {
                        let base = Scenario {
                            src: src(1e13, 333e-12, Poisson),
                            plan: Some(rect(n, Negative)),
                            link: link(T).expect("valid"),
                            tau_rec: None,
                        };
                        let prefix = if m == Metric::Gain { "G" } else { "mu" };
                        scenario_col(format!("{prefix}_N{n}"), base, SweepAxis::DeltaOmega, m)
                    })
                    .collect(),
            }
        }
        _ => return None,
    };
    Some(fig)
}

/// Text that pins down the figure; its hash goes into the output preamble.
pub fn fingerprint(fig: &Figure) -> String {
    let grid: Vec<String> = fig.grid.iter().map(|v| format!("{v:e}")).collect();
    let cols: Vec<&str> = fig.columns.iter().map(|c| c.name.as_str()).collect();
    format!(
        "figure {}\n{}\n{}: {}\n{}\n",
        fig.id,
        fig.title,
        fig.x,
        grid.join(" "),
        cols.join(" ")
    )
}

/// Every cell evaluated on the worker pool. Failed cells come back as
/// errors in place.
pub fn run(fig: &Figure, jobs: Option<usize>) -> Vec<Vec<Result<f64>>> {
    let nc = fig.columns.len();
    let flat = map_rows(fig.grid.len() * nc, jobs, |k| {
        (fig.columns[k % nc].eval)(fig.grid[k / nc])
    });
    let mut rows = Vec::with_capacity(fig.grid.len());
    let mut it = flat.into_iter();
    for _ in 0..fig.grid.len() {
        rows.push(it.by_ref().take(nc).collect());
    }
    rows
}

pub fn table(fig: &Figure, cells: &[Vec<Result<f64>>]) -> Table {
    let mut cols = vec![fig.x];
    cols.extend(fig.columns.iter().map(|c| c.name.as_str()));
    let mut t = Table::new(&cols);
    t.note("figure", Cell::Text(fig.id.to_string()));
    t.note("title", Cell::Text(fig.title.to_string()));
    for (x, row) in fig.grid.iter().zip(cells) {
        let mut r = vec![Cell::Num(*x)];
        r.extend(row.iter().map(|c| Cell::Num(*c.as_ref().unwrap_or(&f64::NAN))));
        t.rows.push(r);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete() {
        for id in IDS {
            let f = lookup(id).unwrap_or_else(|| panic!("{id}"));
            assert_eq!(f.id, *id);
            assert!(!f.columns.is_empty() && !f.grid.is_empty());
        }
        assert!(lookup("11").is_none());
    }

    #[test]
    fn leakage_column_is_cheap_and_sane() {
        let f = lookup("9b").unwrap();
        let v = (f.columns[0].eval)(1e14).unwrap();
        assert!((v - (2f64.sqrt() - 1.0)).abs() < 1e-3, "{v}");
    }
}
