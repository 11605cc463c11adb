#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod figures;
mod output;
mod units;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wdmqkd::{
    click_table, click_table_nowdm, grid_buckets, mc, pair_distribution_auto, ClickTable, Evaluation, Pattern, Scenario,
};

use config::{ConfigError, Format, RunConfig};
use output::{Cell, Meta, Table};

#[derive(Parser)]
#[command(
    name = "wdmqkd",
    version,
    about = "Key rates of wavelength-multiplexed entanglement-based BB84"
)]
struct Cli {
    /// TOML run configuration; defaults apply to anything left out.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps and simulation.
    #[arg(long, short, global = true, env = "WDMQKD_JOBS")]
    jobs: Option<usize>,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_parser = Format::parse)]
    format: Option<Format>,
    /// Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Also write the effective configuration, defaults filled in.
    #[arg(long, global = true, value_name = "PATH")]
    emit_config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Key rate at the configured mu (or the optimal one for mu = "optimize").
    Rate,
    /// Key rate at the optimal mu.
    Optimize,
    /// Run the configured [sweep].
    Sweep,
    /// Compare the click table against Monte Carlo.
    Validate,
    /// Reproduce the data behind one figure.
    Figure {
        /// Figure id; `list` prints the registry.
        id: String,
    },
}

enum Failure {
    Config(String),
    Numerical(String),
    Deviation(f64),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<wdmqkd::Error> for Failure {
    fn from(e: wdmqkd::Error) -> Self {
        if matches!(e, wdmqkd::Error::InvalidParameter { .. }) {
            Failure::Config(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

const VALIDATE_LIMIT: f64 = 5.0;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Deviation(d)) => {
            eprintln!("validation failed: max deviation {d:.2} sigma exceeds {VALIDATE_LIMIT}");
            ExitCode::from(3)
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        if t == 0 {
            return Err(Failure::Config("--trials: must be at least 1".into()));
        }
        cfg.trials = t;
    }
    if let Some(o) = &cli.output {
        cfg.output = Some(o.clone());
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let effective = cfg.to_toml();
    if let Some(path) = &cli.emit_config {
        std::fs::write(path, &effective).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    }
    let mut meta = Meta {
        command: "",
        config_sha256: output::sha256_hex(&effective),
        seed: None,
    };
    let mut deviation = None;
    let (table, failed) = match &cli.command {
        Command::Rate => {
            meta.command = "rate";
            (
                rate_table(&cfg.scenario.evaluate(cfg.mu.is_none(), cfg.mu_bounds)?, &cfg.scenario),
                None,
            )
        }
        Command::Optimize => {
            meta.command = "optimize";
            (
                rate_table(&cfg.scenario.evaluate(true, cfg.mu_bounds)?, &cfg.scenario),
                None,
            )
        }
        Command::Sweep => {
            meta.command = "sweep";
            sweep_table(&cfg, cli.jobs)?
        }
        Command::Validate => {
            meta.command = "validate";
            meta.seed = Some(cfg.seed);
            let (t, d) = validate_table(&cfg, cli.jobs)?;
            deviation = Some(d);
            (t, None)
        }
        Command::Figure { id } if id == "list" => {
            let mut t = Table::new(&["id", "x", "columns", "title"]);
            for id in figures::IDS {
                let f = figures::lookup(id).expect("registered");
                t.rows.push(vec![
                    Cell::Text(f.id.into()),
                    Cell::Text(f.x.into()),
                    Cell::Int(f.columns.len() as i64),
                    Cell::Text(f.title.into()),
                ]);
            }
            meta.command = "figure list";
            (t, None)
        }
        Command::Figure { id } => {
            let fig = figures::lookup(id).ok_or_else(|| {
                Failure::Config(format!("unknown figure `{id}` (known: {})", figures::IDS.join(", ")))
            })?;
            meta.command = "figure";
            meta.config_sha256 = output::sha256_hex(&figures::fingerprint(&fig));
            let cells = figures::run(&fig, cli.jobs);
            let failed = cells.iter().flatten().find_map(|c| c.as_ref().err().cloned());
            (figures::table(&fig, &cells), failed.map(Failure::from))
        }
    };
    let text = match cfg.format {
        Format::Table => output::render_tsv(&meta, &table),
        Format::Structured => output::render_json(&meta, &table),
    };
    match &cfg.output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if let Some(f) = failed {
        return Err(f);
    }
    match deviation {
        Some(d) if !(d <= VALIDATE_LIMIT) => Err(Failure::Deviation(d)),
        _ => Ok(()),
    }
}

fn rate_table(e: &Evaluation, s: &Scenario) -> Table {
    let r = &e.result;
    let mut t = Table::new(&["pair", "p_acc", "qber", "key_rate"]);
    t.note("mu", Cell::Num(r.mu_used));
    t.note("k_total", Cell::Num(r.k_total));
    t.note("gain", Cell::opt(r.gain));
    t.note("baseline_k", Cell::Num(e.baseline.rate));
    t.note("baseline_mu", Cell::Num(e.baseline.mu));
    if s.tau_rec.is_some() {
        t.note("r_per_second", Cell::opt(r.r_per_second));
    }
    if let Some(o) = &e.optimum {
        t.note("mu_status", Cell::Text(format!("{:?}", o.status).to_lowercase()));
        t.note("mu_fallback_scan", Cell::Text(o.used_fallback.to_string()));
        t.note("mu_evaluations", Cell::Int(o.evaluations as i64));
    }
    for p in &r.per_pair {
        t.rows.push(vec![
            Cell::Int(p.id),
            Cell::Num(p.p_acc),
            Cell::Num(p.qber),
            Cell::Num(p.key_rate),
        ]);
    }
    t
}

fn sweep_table(cfg: &RunConfig, jobs: Option<usize>) -> Result<(Table, Option<Failure>), Failure> {
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Failure::Config("sweep: the configuration has no [sweep] section".into()))?;
    let rows = wdmqkd::run_sweep(&sw.spec(&cfg.scenario, cfg.mu_bounds), jobs)?;
    let mut cols = vec![sw.axis.name(), "mu", "k_total", "gain", "baseline_k"];
    if cfg.scenario.tau_rec.is_some() {
        cols.push("r_per_second");
    }
    cols.extend(["mu_status", "error"]);
    let mut t = Table::new(&cols);
    let mut failed = None;
    for row in rows {
        let mut r = vec![Cell::Num(row.value)];
        match row.outcome {
            Ok(e) => {
                r.extend([
                    Cell::Num(e.result.mu_used),
                    Cell::Num(e.result.k_total),
                    Cell::opt(e.result.gain),
                    Cell::Num(e.baseline.rate),
                ]);
                if cfg.scenario.tau_rec.is_some() {
                    r.push(Cell::opt(e.result.r_per_second));
                }
                let status = e
                    .optimum
                    .map_or("fixed".to_string(), |o| format!("{:?}", o.status).to_lowercase());
                r.extend([Cell::Text(status), Cell::Text(String::new())]);
            }
            Err(err) => {
                let blanks = cols.len() - 3;
                r.extend(std::iter::repeat_n(Cell::Num(f64::NAN), blanks));
                r.extend([Cell::Text("failed".into()), Cell::Text(err.to_string())]);
                failed.get_or_insert(Failure::from(err));
            }
        }
        t.rows.push(r);
    }
    Ok((t, failed))
}

fn validate_table(cfg: &RunConfig, jobs: Option<usize>) -> Result<(Table, f64), Failure> {
    let s = &cfg.scenario;
    let mu = match cfg.mu {
        Some(mu) => mu,
        None => s.evaluate(true, cfg.mu_bounds)?.result.mu_used,
    };
    let src = s.src.with_mu(mu);
    let pi = pair_distribution_auto(&src, 1e-15)?;
    let analytic: Vec<(i64, ClickTable)> = match &s.plan {
        Some(plan) => grid_buckets(plan, &src)?
            .into_iter()
            .map(|(pair, b)| Ok((pair.id, click_table(&b, &pi, &pi, &s.link)?)))
            .collect::<wdmqkd::Result<_>>()?,
        None => vec![(0, click_table_nowdm(&pi, &pi, &s.link)?)],
    };
    let est = mc::simulate_with_jobs(s.plan.as_ref(), &src, &s.link, cfg.trials, cfg.seed, jobs)?;

    let mut t = Table::new(&["pair", "pattern", "analytic", "mc", "std_err", "deviation"]);
    let mut worst: f64 = 0.0;
    let mut push = |t: &mut Table, pair: Cell, pat: Pattern, p: f64, f: mc::Frequency| {
        let d = mc::deviation(f.value, p, cfg.trials);
        worst = worst.max(d);
        t.rows.push(vec![
            pair,
            Cell::Text(pat.label()),
            Cell::Num(p),
            Cell::Num(f.value),
            Cell::Num((p * (1.0 - p) / cfg.trials as f64).sqrt()),
            Cell::Num(d),
        ]);
    };
    let mut total = ClickTable::ZERO;
    for (j, (id, table)) in analytic.iter().enumerate() {
        for pat in Pattern::ALL {
            push(&mut t, Cell::Int(*id), pat, table.get(pat), est.frequency(j, pat));
        }
        total.p1010 += table.p1010;
        total.p1001 += table.p1001;
        total.p0110 += table.p0110;
        total.p0101 += table.p0101;
    }
    if analytic.len() > 1 {
        for pat in Pattern::ALL {
            push(
                &mut t,
                Cell::Text("all".into()),
                pat,
                total.get(pat),
                est.total_frequency(pat),
            );
        }
    }
    t.note("mu", Cell::Num(mu));
    t.note("trials", Cell::Int(cfg.trials as i64));
    t.note("max_deviation_sigma", Cell::Num(worst));
    Ok((t, worst))
}
