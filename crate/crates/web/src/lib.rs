//! wasm-bindgen front end for the static page in `www/`.

use std::f64::consts::PI;

use wasm_bindgen::prelude::*;
use wdmqkd::optimizer::log_space;
use wdmqkd::source::biphoton_density;
use wdmqkd::{
    build_grid, ChannelPlan, ChannelProfile, CorrelationSign, LinkParams, MuBounds, PairStatistics, PreparedGrid,
    Scenario, SourceParams, SweepAxis,
};

const SEP: f64 = 2.0 * PI * 100e9;

#[wasm_bindgen]
#[derive(Debug, Clone, Copy)]
pub struct Setup {
    sigma_cr: f64,
    tau_p: f64,
    n_pairs: usize,
    positive: bool,
    gauss: bool,
    /// Channel width in cycles per second.
    width_hz: f64,
    t: f64,
    thermal: bool,
}

fn js(e: wdmqkd::Error) -> JsError {
    JsError::new(&e.to_string())
}

impl Setup {
    fn source(&self) -> wdmqkd::Result<SourceParams> {
        let stats = if self.thermal {
            PairStatistics::Thermal
        } else {
            PairStatistics::Poisson
        };
        SourceParams::new(self.sigma_cr, self.tau_p, 0.1, stats)
    }

    fn plan(&self) -> wdmqkd::Result<ChannelPlan> {
        let sign = if self.positive {
            CorrelationSign::Positive
        } else {
            CorrelationSign::Negative
        };
        let w = 2.0 * PI * self.width_hz;
        let profile = if self.gauss {
            ChannelProfile::Gauss { sigma_f: w }
        } else {
            ChannelProfile::Rect { width: w }
        };
        ChannelPlan::new(self.n_pairs, sign, SEP, profile)
    }

    fn scenario(&self) -> wdmqkd::Result<Scenario> {
        Ok(Scenario {
            src: self.source()?,
            plan: Some(self.plan()?),
            link: LinkParams::symmetric(self.t)?,
            tau_rec: None,
        })
    }

    /// `[μ₀, K₀, μ₁, K₁, …]`, log-spaced `μ`.
    pub fn curve(&self, points: usize) -> wdmqkd::Result<Vec<f64>> {
        let src = self.source()?;
        let grid = PreparedGrid::new(&self.plan()?, &src)?;
        let link = LinkParams::symmetric(self.t)?;
        let mut out = Vec::with_capacity(2 * points);
        for mu in log_space(1e-3, 1e2, points.max(2)) {
            out.push(mu);
            out.push(grid.rate(&src.with_mu(mu), &link)?.k_total);
        }
        Ok(out)
    }

    /// `[μ*, K*, G]`.
    pub fn best(&self) -> wdmqkd::Result<Vec<f64>> {
        let e = self.scenario()?.evaluate(true, MuBounds::default())?;
        Ok(vec![
            e.result.mu_used,
            e.result.k_total,
            e.result.gain.unwrap_or(f64::NAN),
        ])
    }

    /// `[τ₀, G₀, τ₁, G₁, …]` over 10 fs to 10 ns.
    pub fn gains(&self, points: usize) -> wdmqkd::Result<Vec<f64>> {
        let base = self.scenario()?;
        let mut out = Vec::with_capacity(2 * points);
        for tau in log_space(1e-14, 1e-8, points.max(2)) {
            let e = base
                .with_axis(SweepAxis::TauP, tau)?
                .evaluate(true, MuBounds::default())?;
            out.push(tau);
            out.push(e.result.gain.unwrap_or(f64::NAN));
        }
        Ok(out)
    }

    /// Row-major `pixels × pixels` joint density over `±extent` rad/s,
    /// idler along rows, normalized to a peak of 1.
    pub fn density(&self, pixels: usize, extent: f64) -> wdmqkd::Result<Vec<f64>> {
        let src = self.source()?;
        let step = 2.0 * extent / pixels as f64;
        let at = |j: usize| -extent + (j as f64 + 0.5) * step;
        let mut out = Vec::with_capacity(pixels * pixels);
        for r in 0..pixels {
            for c in 0..pixels {
                out.push(biphoton_density(at(c), -at(r), &src));
            }
        }
        let peak = out.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 {
            out.iter_mut().for_each(|v| *v /= peak);
        }
        Ok(out)
    }

    /// `[ω_s0, ω_i0, …]` channel centres in rad/s.
    pub fn centres(&self) -> wdmqkd::Result<Vec<f64>> {
        Ok(build_grid(&self.plan()?)
            .iter()
            .flat_map(|p| [p.omega_s0, p.omega_i0])
            .collect())
    }
}

#[wasm_bindgen]
impl Setup {
    #[wasm_bindgen(constructor)]
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sigma_cr: f64,
        tau_p: f64,
        n_pairs: usize,
        positive: bool,
        gauss: bool,
        width_hz: f64,
        t: f64,
        thermal: bool,
    ) -> Setup {
        Setup {
            sigma_cr,
            tau_p,
            n_pairs,
            positive,
            gauss,
            width_hz,
            t,
            thermal,
        }
    }

    #[wasm_bindgen(js_name = rateVsMu)]
    pub fn rate_vs_mu(&self, points: usize) -> Result<Vec<f64>, JsError> {
        self.curve(points).map_err(js)
    }

    pub fn optimum(&self) -> Result<Vec<f64>, JsError> {
        self.best().map_err(js)
    }

    #[wasm_bindgen(js_name = gainVsTau)]
    pub fn gain_vs_tau(&self, points: usize) -> Result<Vec<f64>, JsError> {
        self.gains(points).map_err(js)
    }

    pub fn spectrum(&self, pixels: usize, extent: f64) -> Result<Vec<f64>, JsError> {
        self.density(pixels, extent).map_err(js)
    }

    pub fn channels(&self) -> Result<Vec<f64>, JsError> {
        self.centres().map_err(js)
    }
}
