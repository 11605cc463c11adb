//! TOML run configuration.
//!
//! Every section is optional. A missing `[channels]` section means a single
//! rectangular pair on the default grid; `profile = "none"` switches the
//! multiplexer off entirely.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wdmqkd::{
    ChannelPlan, ChannelProfile, CorrelationSign, LinkParams, MuBounds, PairStatistics, Scenario, SourceParams,
    SweepAxis, SweepSpec,
};

use crate::units::{self, Quantity};

/// Placeholder intensity carried by the source while `mu = "optimize"`.
const PLACEHOLDER_MU: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn field_err(field: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("{field}: {msg}"))
}

// Raw, as written in the file.

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<RawSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<RawChannels>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<RawLink>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<RawTiming>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<RawSweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<RawMc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<RawOutput>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSource {
    pub sigma_cr: Option<Quantity>,
    pub tau_p: Option<Quantity>,
    /// A number or `"optimize"`.
    pub mu: Option<Quantity>,
    pub stats: Option<String>,
    pub modes: Option<usize>,
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChannels {
    pub n_pairs: Option<usize>,
    pub sign: Option<String>,
    pub omega_sep: Option<Quantity>,
    /// `rect`, `gauss` or `none`.
    pub profile: Option<String>,
    /// Full width of a rectangular channel.
    pub width: Option<Quantity>,
    /// Gaussian channel parameter.
    pub sigma_f: Option<Quantity>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLink {
    pub t: Option<f64>,
    pub t_a: Option<f64>,
    pub t_b: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTiming {
    pub tau_rec: Option<Quantity>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub axis: Option<String>,
    pub values: Option<Vec<Quantity>>,
    pub from: Option<Quantity>,
    pub to: Option<Quantity>,
    pub points: Option<usize>,
    /// `log` (default) or `linear`.
    pub spacing: Option<String>,
    pub optimize_mu: Option<bool>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMc {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub path: Option<PathBuf>,
    pub format: Option<String>,
}

// Validated.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Structured,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "table" => Ok(Format::Table),
            "structured" | "json" => Ok(Format::Structured),
            other => Err(format!("unknown format `{other}` (expected table or structured)")),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Format::Table => "table",
            Format::Structured => "structured",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub optimize_mu: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// `None` means optimize.
    pub mu: Option<f64>,
    pub mu_bounds: MuBounds,
    pub sweep: Option<SweepConfig>,
    pub trials: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_raw(RawConfig::default()).expect("defaults are valid")
    }
}

pub const DEFAULT_SIGMA_CR: f64 = 1e13;
pub const DEFAULT_TAU_P: f64 = 333e-12;
pub const DEFAULT_T: f64 = 1e-3;
pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 42;

pub fn default_sep() -> f64 {
    2.0 * std::f64::consts::PI * 100e9
}

pub fn default_width() -> f64 {
    2.0 * std::f64::consts::PI * 50e9
}

fn freq(field: &str, q: &Option<Quantity>, default: f64) -> Result<f64, ConfigError> {
    q.as_ref()
        .map_or(Ok(default), |q| units::frequency(q).map_err(|e| field_err(field, e)))
}

fn duration(field: &str, q: &Option<Quantity>, default: f64) -> Result<f64, ConfigError> {
    q.as_ref()
        .map_or(Ok(default), |q| units::time(q).map_err(|e| field_err(field, e)))
}

fn core(section: &str, e: wdmqkd::Error) -> ConfigError {
    match e {
        wdmqkd::Error::InvalidParameter { field, reason } => field_err(&format!("{section}.{field}"), reason),
        other => field_err(section, other),
    }
}

fn parse_axis(s: &str) -> Result<SweepAxis, ConfigError> {
    Ok(match s {
        "tau_p" => SweepAxis::TauP,
        "sigma_cr" => SweepAxis::SigmaCr,
        "t" | "transmittance" => SweepAxis::Transmittance,
        "n_pairs" => SweepAxis::NPairs,
        "width" => SweepAxis::DeltaOmega,
        "sigma_f" => SweepAxis::SigmaF,
        other => {
            return Err(field_err(
                "sweep.axis",
                format!("unknown axis `{other}` (expected tau_p, sigma_cr, t, n_pairs, width or sigma_f)"),
            ))
        }
    })
}

fn axis_value(axis: SweepAxis, field: &str, q: &Quantity) -> Result<f64, ConfigError> {
    match axis {
        SweepAxis::TauP => units::time(q),
        SweepAxis::SigmaCr | SweepAxis::DeltaOmega | SweepAxis::SigmaF => units::frequency(q),
        SweepAxis::Transmittance | SweepAxis::NPairs => match q {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(t) => Err(format!("expected a plain number, got `{t}`")),
        },
    }
    .map_err(|e| field_err(field, e))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string().trim_end().to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let s = raw.source.unwrap_or_default();
        let sigma_cr = freq("source.sigma_cr", &s.sigma_cr, DEFAULT_SIGMA_CR)?;
        let tau_p = duration("source.tau_p", &s.tau_p, DEFAULT_TAU_P)?;
        let mu = match &s.mu {
            None => None,
            Some(Quantity::Text(t)) if t == "optimize" => None,
            Some(Quantity::Number(v)) => Some(*v),
            Some(Quantity::Text(t)) => {
                return Err(field_err(
                    "source.mu",
                    format!("expected a number or \"optimize\", got `{t}`"),
                ))
            }
        };
        let stats = match (s.stats.as_deref().unwrap_or("poisson"), s.modes) {
            ("poisson", None) => PairStatistics::Poisson,
            ("thermal", None) => PairStatistics::Thermal,
            ("multimode", modes) => PairStatistics::Multimode {
                modes: modes.unwrap_or(1000),
            },
            ("poisson" | "thermal", Some(_)) => {
                return Err(field_err("source.modes", "only meaningful with stats = \"multimode\""))
            }
            (other, _) => {
                return Err(field_err(
                    "source.stats",
                    format!("unknown statistics `{other}` (expected thermal, poisson or multimode)"),
                ))
            }
        };
        let src =
            SourceParams::new(sigma_cr, tau_p, mu.unwrap_or(PLACEHOLDER_MU), stats).map_err(|e| core("source", e))?;
        let defaults = MuBounds::default();
        let mu_bounds = MuBounds {
            lo: s.mu_min.unwrap_or(defaults.lo),
            hi: s.mu_max.unwrap_or(defaults.hi),
        };
        mu_bounds.validate().map_err(|e| core("source", e))?;

        let c = raw.channels.unwrap_or_default();
        let profile_kind = c.profile.as_deref().unwrap_or("rect");
        let plan = if profile_kind == "none" {
            for (name, set) in [
                ("n_pairs", c.n_pairs.is_some()),
                ("sign", c.sign.is_some()),
                ("omega_sep", c.omega_sep.is_some()),
                ("width", c.width.is_some()),
                ("sigma_f", c.sigma_f.is_some()),
            ] {
                if set {
                    return Err(field_err(
                        &format!("channels.{name}"),
                        "not allowed with profile = \"none\"",
                    ));
                }
            }
            None
        } else {
            let sign = match c.sign.as_deref().unwrap_or("negative") {
                "negative" => CorrelationSign::Negative,
                "positive" => CorrelationSign::Positive,
                other => {
                    return Err(field_err(
                        "channels.sign",
                        format!("unknown sign `{other}` (expected negative or positive)"),
                    ))
                }
            };
            let profile = match profile_kind {
                "rect" => {
                    if c.sigma_f.is_some() {
                        return Err(field_err(
                            "channels.sigma_f",
                            "only meaningful with profile = \"gauss\"",
                        ));
                    }
                    ChannelProfile::Rect {
                        width: freq("channels.width", &c.width, default_width())?,
                    }
                }
                "gauss" => {
                    if c.width.is_some() {
                        return Err(field_err("channels.width", "Gaussian channels take sigma_f"));
                    }
                    ChannelProfile::Gauss {
                        sigma_f: freq("channels.sigma_f", &c.sigma_f, default_width())?,
                    }
                }
                other => {
                    return Err(field_err(
                        "channels.profile",
                        format!("unknown profile `{other}` (expected rect, gauss or none)"),
                    ))
                }
            };
            let sep = freq("channels.omega_sep", &c.omega_sep, default_sep())?;
            Some(ChannelPlan::new(c.n_pairs.unwrap_or(1), sign, sep, profile).map_err(|e| core("channels", e))?)
        };

        let l = raw.link.unwrap_or_default();
        let link = match (l.t, l.t_a, l.t_b) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(field_err("link.t", "give either t or t_a/t_b, not both"))
            }
            (t, None, None) => LinkParams::symmetric(t.unwrap_or(DEFAULT_T)),
            (None, Some(a), Some(b)) => LinkParams::new(a, b),
            (None, Some(_), None) => return Err(field_err("link.t_b", "missing (t_a is set)")),
            (None, None, Some(_)) => return Err(field_err("link.t_a", "missing (t_b is set)")),
        }
        .map_err(|e| core("link", e))?;

        let tau_rec = match raw.timing.and_then(|t| t.tau_rec) {
            Some(q) => {
                let v = units::time(&q).map_err(|e| field_err("timing.tau_rec", e))?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(field_err("timing.tau_rec", format!("must be positive, got {v}")));
                }
                Some(v)
            }
            None => None,
        };

        let scenario = Scenario {
            src,
            plan,
            link,
            tau_rec,
        };

        let sweep = match raw.sweep {
            None => None,
            Some(sw) => Some(Self::sweep(sw, mu.is_none(), &scenario, mu_bounds)?),
        };

        let m = raw.mc.unwrap_or_default();
        let trials = m.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(field_err("mc.trials", "must be at least 1"));
        }
        let o = raw.output.unwrap_or_default();
        let format =
            Format::parse(o.format.as_deref().unwrap_or("table")).map_err(|e| field_err("output.format", e))?;

        Ok(RunConfig {
            scenario,
            mu,
            mu_bounds,
            sweep,
            trials,
            seed: m.seed.unwrap_or(DEFAULT_SEED),
            output: o.path,
            format,
        })
    }

    fn sweep(
        sw: RawSweep,
        default_opt: bool,
        scenario: &Scenario,
        bounds: MuBounds,
    ) -> Result<SweepConfig, ConfigError> {
        let axis = parse_axis(sw.axis.as_deref().ok_or_else(|| field_err("sweep.axis", "missing"))?)?;
        let range = sw.from.is_some() || sw.to.is_some() || sw.points.is_some() || sw.spacing.is_some();
        let grid = match (sw.values, range) {
            (Some(_), true) => {
                return Err(field_err(
                    "sweep.values",
                    "give either values or from/to/points, not both",
                ))
            }
            (Some(vals), false) => vals
                .iter()
                .enumerate()
                .map(|(j, q)| axis_value(axis, &format!("sweep.values[{j}]"), q))
                .collect::<Result<Vec<_>, _>>()?,
            (None, _) => {
                let from = axis_value(
                    axis,
                    "sweep.from",
                    sw.from.as_ref().ok_or_else(|| field_err("sweep.from", "missing"))?,
                )?;
                let to = axis_value(
                    axis,
                    "sweep.to",
                    sw.to.as_ref().ok_or_else(|| field_err("sweep.to", "missing"))?,
                )?;
                let points = sw.points.ok_or_else(|| field_err("sweep.points", "missing"))?;
                if points == 0 {
                    return Err(field_err("sweep.points", "must be at least 1"));
                }
                match sw.spacing.as_deref().unwrap_or("log") {
                    "log" => {
                        if !(from > 0.0 && to > 0.0) {
                            return Err(field_err("sweep.from", "log spacing needs positive endpoints"));
                        }
                        wdmqkd::optimizer::log_space(from, to, points)
                    }
                    "linear" => linear_space(from, to, points),
                    other => {
                        return Err(field_err(
                            "sweep.spacing",
                            format!("unknown spacing `{other}` (expected log or linear)"),
                        ))
                    }
                }
            }
        };
        let cfg = SweepConfig {
            axis,
            grid,
            optimize_mu: sw.optimize_mu.unwrap_or(default_opt),
        };
        let spec = cfg.spec(scenario, bounds);
        spec.validate().map_err(|e| core("sweep", e))?;
        // Reject impossible axis/profile combinations up front.
        scenario.with_axis(axis, spec.grid[0]).map_err(|e| core("sweep", e))?;
        Ok(cfg)
    }

    /// The configuration with every default filled in, as SI numbers.
    pub fn to_raw(&self) -> RawConfig {
        let src = &self.scenario.src;
        let (stats, modes) = match src.stats {
            PairStatistics::Poisson => ("poisson", None),
            PairStatistics::Thermal => ("thermal", None),
            PairStatistics::Multimode { modes } => ("multimode", Some(modes)),
        };
        let channels = match &self.scenario.plan {
            None => RawChannels {
                profile: Some("none".into()),
                ..Default::default()
            },
            Some(p) => {
                let (profile, width, sigma_f) = match p.profile {
                    ChannelProfile::Rect { width } => ("rect", Some(units::exact(width)), None),
                    ChannelProfile::Gauss { sigma_f } => ("gauss", None, Some(units::exact(sigma_f))),
                };
                RawChannels {
                    n_pairs: Some(p.n_pairs),
                    sign: Some(
                        match p.sign {
                            CorrelationSign::Negative => "negative",
                            CorrelationSign::Positive => "positive",
                        }
                        .into(),
                    ),
                    omega_sep: Some(units::exact(p.omega_sep)),
                    profile: Some(profile.into()),
                    width,
                    sigma_f,
                }
            }
        };
        let link = &self.scenario.link;
        RawConfig {
            source: Some(RawSource {
                sigma_cr: Some(units::exact(src.sigma_cr)),
                tau_p: Some(units::exact(src.tau_p)),
                mu: Some(self.mu.map_or(Quantity::Text("optimize".into()), Quantity::Number)),
                stats: Some(stats.into()),
                modes,
                mu_min: Some(self.mu_bounds.lo),
                mu_max: Some(self.mu_bounds.hi),
            }),
            channels: Some(channels),
            link: Some(RawLink {
                t: None,
                t_a: Some(link.t_a),
                t_b: Some(link.t_b),
            }),
            timing: self.scenario.tau_rec.map(|t| RawTiming {
                tau_rec: Some(Quantity::Number(t)),
            }),
            sweep: self.sweep.as_ref().map(|sw| RawSweep {
                axis: Some(sw.axis.name().into()),
                values: Some(sw.grid.iter().map(|&v| units::exact(v)).collect()),
                optimize_mu: Some(sw.optimize_mu),
                ..Default::default()
            }),
            mc: Some(RawMc {
                trials: Some(self.trials),
                seed: Some(self.seed),
            }),
            output: Some(RawOutput {
                path: self.output.clone(),
                format: Some(self.format.name().into()),
            }),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("config serializes")
    }
}

impl SweepConfig {
    pub fn spec(&self, scenario: &Scenario, mu_bounds: MuBounds) -> SweepSpec {
        SweepSpec {
            axis: self.axis,
            grid: self.grid.clone(),
            fixed: *scenario,
            optimize_mu: self.optimize_mu,
            mu_bounds,
        }
    }
}

fn linear_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|j| {
            if j == n - 1 {
                hi
            } else {
                lo + (hi - lo) * j as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.scenario.src.sigma_cr, 1e13);
        assert_eq!(c.scenario.src.tau_p, 333e-12);
        assert_eq!(c.mu, None);
        assert_eq!(c.scenario.link, LinkParams::symmetric(1e-3).unwrap());
        let plan = c.scenario.plan.unwrap();
        assert_eq!(plan.n_pairs, 1);
        assert_eq!(plan.profile, ChannelProfile::Rect { width: default_width() });
    }

    #[test]
    fn units_and_sections() {
        let c = RunConfig::parse(
            r#"
            [source]
            sigma_cr = "3 THz"
            tau_p = "100 fs"
            mu = 0.05
            stats = "thermal"
            [channels]
            n_pairs = 4
            sign = "positive"
            profile = "gauss"
            sigma_f = "2pi*20 GHz"
            [link]
            t_a = 0.5
            t_b = 0.25
            [timing]
            tau_rec = "1 ns"
            "#,
        )
        .unwrap();
        assert_eq!(c.scenario.src.sigma_cr, 3e12);
        assert_eq!(c.scenario.src.tau_p, 100e-15);
        assert_eq!(c.mu, Some(0.05));
        let plan = c.scenario.plan.unwrap();
        assert_eq!(plan.sign, CorrelationSign::Positive);
        assert_eq!(
            plan.profile,
            ChannelProfile::Gauss {
                sigma_f: 2.0 * std::f64::consts::PI * 20e9
            }
        );
        assert_eq!(c.scenario.tau_rec, Some(1e-9));
    }

    #[test]
    fn emitted_config_reads_back_identically() {
        let c = RunConfig::parse(
            r#"
            [source]
            tau_p = "3.17 ps"
            stats = "multimode"
            modes = 300
            [channels]
            width = "inf"
            [sweep]
            axis = "t"
            from = 1e-4
            to = 1
            points = 7
            "#,
        )
        .unwrap();
        let again = RunConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.to_toml(), c.to_toml());
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            ("[source]\nsigma_cr = \"3 parsecs\"", "source.sigma_cr"),
            ("[source]\nmu = \"lots\"", "source.mu"),
            ("[source]\nmu = -1.0", "source.mu"),
            ("[channels]\nn_pairs = 2\nwidth = \"2pi*200 GHz\"", "channels"),
            ("[link]\nt = 2.0", "link.t"),
            ("[link]\nt_a = 0.5", "link.t_b"),
            ("[sweep]\naxis = \"sigma_f\"\nvalues = [1e9]", "sweep"),
            (
                "[sweep]\naxis = \"tau_p\"\nvalues = [\"1 ps\", \"bad\"]",
                "sweep.values[1]",
            ),
            ("[mc]\ntrials = 0", "mc.trials"),
            ("[output]\nformat = \"xml\"", "output.format"),
        ];
        for (text, field) in cases {
            let err = RunConfig::parse(text).unwrap_err();
            assert!(err.0.starts_with(field), "{text}: {err}");
        }
        let err = RunConfig::parse("[source]\nbogus = 1").unwrap_err();
        assert!(err.0.contains("bogus") && err.0.contains("line"), "{err}");
    }
}
