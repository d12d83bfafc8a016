//! Subcommand implementations. Each returns the payload; `main` adds the
//! configuration header and writes it out.

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use qjump::analytic;
use qjump::baseline;
use qjump::export;
use qjump::mc::{self, Ensemble};
use qjump::pde::{self, Recording, ThetaGrid};
use qjump::stats::{self, DelayDistribution};
use qjump::{JumpSemantics, ModelParams};

use crate::config::{Format, Panel, RunConfig};

pub enum Payload {
    Csv(Vec<u8>),
    Json(Value),
}

fn csv(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Payload> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(Payload::Csv(buf))
}

fn json_of<T: Serialize>(value: &T) -> Result<Value> {
    Ok(serde_json::to_value(value)?)
}

fn analytic_curve(params: &ModelParams, intervals: usize) -> Result<DelayDistribution> {
    let end = stats::analytic_grid_end(params)?;
    Ok(DelayDistribution::analytic(params, &stats::uniform_grid(end, intervals))?)
}

pub fn delay(cfg: &RunConfig) -> Result<Payload> {
    let dist = analytic_curve(&cfg.params, cfg.grid_n)?;
    match cfg.format {
        Format::Csv => csv(|w| export::write_distributions_csv(w, &[&dist])),
        Format::Json => Ok(Payload::Json(json!({
            "mass": dist.trapezoid_mass(),
            "mean_delay": analytic::mean_waiting_time(&cfg.params)?,
            "tau_k": analytic::weak_field_delay_scale(&cfg.params)?,
            "tau_q": analytic::dressed_atom_delay_scale(&cfg.params)?,
            "distribution": json_of(&dist)?,
        }))),
    }
}

pub fn pde(cfg: &RunConfig, field_only: bool, every: usize) -> Result<Payload> {
    let grid = ThetaGrid::new(cfg.grid_n)?;
    let dt = cfg
        .dt
        .unwrap_or_else(|| pde::stable_dt(&grid, &cfg.params, pde::DEFAULT_CFL));
    let recording = Recording {
        every_steps: every.max(1),
        snapshots: false,
    };
    let sol = pde::solve(&cfg.params, grid, cfg.horizon, dt, recording)?;
    match (cfg.format, field_only) {
        (Format::Csv, true) => csv(|w| export::write_field_csv(w, &sol.field)),
        (Format::Csv, false) => csv(|w| export::write_populations_csv(w, &sol.samples)),
        (Format::Json, _) => Ok(Payload::Json(json!({
            "dt": dt,
            "samples": json_of(&sol.samples)?,
            "final_field": {
                "theta_center": sol.field.grid().centers().collect::<Vec<_>>(),
                "p": sol.field.values(),
                "mass": sol.field.total_mass(),
            },
        }))),
    }
}

pub fn mc(cfg: &RunConfig) -> Result<Payload> {
    let ensemble = Ensemble {
        params: cfg.params,
        semantics: cfg.semantics,
        horizon: cfg.horizon,
        seed: cfg.seed,
        n_trajectories: cfg.n_trajectories,
    };
    let records = ensemble.records()?;
    match cfg.format {
        Format::Csv => csv(|w| export::write_emissions_csv(w, &records)),
        Format::Json => {
            let summary = mc::EnsembleSummary::from_records(&ensemble, &records);
            let mut value = json_of(&summary)?;
            // the renewal law applies to emission-only resets after a photon at t = 0
            if cfg.semantics == JumpSemantics::EmissionOnly && cfg.params.omega > 0.0 && cfg.params.theta0 == 0.0 {
                let samples = mc::interarrival_samples(&records, true);
                if samples.len() >= stats::KS_MIN_SAMPLES {
                    let report = stats::ks_test(&samples, |t| {
                        analytic::waiting_time_cdf(t, &cfg.params).unwrap_or(f64::NAN)
                    })?;
                    value["ks_vs_analytic"] = json_of(&report)?;
                }
            }
            Ok(Payload::Json(value))
        }
    }
}

fn baseline_grid_end(params: &ModelParams) -> f64 {
    // slowest no-jump decay rate of the truncated evolution
    let (omega, gamma) = (params.omega, params.gamma);
    let disc = gamma * gamma / 16.0 - omega * omega / 4.0;
    let slowest = if disc > 0.0 {
        2.0 * (gamma / 4.0 - disc.sqrt())
    } else {
        gamma / 2.0
    };
    -(stats::MASS_TOLERANCE * 1e-3).ln() / slowest
}

pub fn baseline(cfg: &RunConfig) -> Result<Payload> {
    let grid = stats::uniform_grid(baseline_grid_end(&cfg.params), cfg.grid_n);
    let dist = baseline::delay_function(&cfg.params, &grid)?;
    match cfg.format {
        Format::Csv => csv(|w| export::write_delay_function_csv(w, &dist)),
        Format::Json => Ok(Payload::Json(json!({
            "mass": dist.trapezoid_mass(),
            "mean_delay": stats::mean_delay(&dist)?,
            "tau_q": if cfg.params.omega > 0.0 { json!(analytic::dressed_atom_delay_scale(&cfg.params)?) } else { Value::Null },
            "distribution": json_of(&dist)?,
        }))),
    }
}

#[derive(Debug, Serialize)]
struct SweepRow {
    gamma: f64,
    mean_kolmogorov: f64,
    tau_k: f64,
    mean_baseline: f64,
    tau_q: f64,
}

pub fn sweep(cfg: &RunConfig, gamma_min: f64, gamma_max: f64, points: usize) -> Result<Payload> {
    anyhow::ensure!(points >= 3, "--points must be at least 3");
    anyhow::ensure!(
        gamma_min > 0.0 && gamma_max > gamma_min,
        "need 0 < --gamma-min < --gamma-max"
    );
    let omega = cfg.params.omega;
    anyhow::ensure!(omega > 0.0, "the sweep needs --omega > 0");
    let mut rows = Vec::with_capacity(points);
    for k in 0..points {
        let gamma = gamma_min * (gamma_max / gamma_min).powf(k as f64 / (points - 1) as f64);
        let params = ModelParams::new(omega, gamma, 0.0)?;
        let grid = stats::uniform_grid(baseline_grid_end(&params), cfg.grid_n);
        let base = baseline::delay_function(&params, &grid)?;
        rows.push(SweepRow {
            gamma,
            mean_kolmogorov: analytic::mean_waiting_time(&params)?,
            tau_k: analytic::weak_field_delay_scale(&params)?,
            mean_baseline: stats::mean_delay(&base)?,
            tau_q: analytic::dressed_atom_delay_scale(&params)?,
        });
    }
    let fit_k = stats::scaling_regression(&rows.iter().map(|r| (r.gamma, r.mean_kolmogorov)).collect::<Vec<_>>())?;
    let fit_q = stats::scaling_regression(&rows.iter().map(|r| (r.gamma, r.mean_baseline)).collect::<Vec<_>>())?;
    match cfg.format {
        Format::Csv => csv(|w| {
            use std::io::Write;
            writeln!(w, "gamma,mean_kolmogorov,tau_k,mean_baseline,tau_q")?;
            for r in &rows {
                writeln!(w, "{},{},{},{},{}", r.gamma, r.mean_kolmogorov, r.tau_k, r.mean_baseline, r.tau_q)?;
            }
            Ok(())
        }),
        Format::Json => Ok(Payload::Json(json!({
            "rows": json_of(&rows)?,
            "kolmogorov_fit": json_of(&fit_k)?,
            "baseline_fit": json_of(&fit_q)?,
        }))),
    }
}

/// Curves of one panel on a shared time grid.
pub struct PanelCurves {
    pub panel: Panel,
    pub params: ModelParams,
    pub kolmogorov: DelayDistribution,
    pub baseline: DelayDistribution,
}

pub fn panel_curves(panel: Panel, gamma: f64, intervals: usize) -> Result<PanelCurves> {
    let params = ModelParams::new(panel.ratio() * gamma, gamma, 0.0)?;
    let end = stats::analytic_grid_end(&params)?.max(baseline_grid_end(&params));
    let grid = stats::uniform_grid(end, intervals);
    let kolmogorov = DelayDistribution::analytic(&params, &grid)?;
    let baseline = baseline::delay_function(&params, &grid)
        .with_context(|| format!("baseline delay function for panel {}", panel.label()))?;
    Ok(PanelCurves {
        panel,
        params,
        kolmogorov,
        baseline,
    })
}

pub fn fig1(cfg: &RunConfig, panel: Option<Panel>) -> Result<Payload> {
    let panels = match panel {
        Some(p) => vec![p],
        None => vec![Panel::A, Panel::B],
    };
    let curves = panels
        .into_iter()
        .map(|p| panel_curves(p, cfg.params.gamma, cfg.grid_n))
        .collect::<Result<Vec<_>>>()?;
    match cfg.format {
        Format::Csv => csv(|w| {
            use std::io::Write;
            writeln!(w, "panel,omega_over_gamma,omega_tau,tau,ell_kolmogorov,ell_baseline")?;
            for c in &curves {
                let ratio = c.params.omega / c.params.gamma;
                for ((t, k), b) in c.kolmogorov.tau().iter().zip(c.kolmogorov.density()).zip(c.baseline.density()) {
                    writeln!(w, "{},{ratio},{},{t},{k},{b}", c.panel.label(), c.params.omega * t)?;
                }
            }
            Ok(())
        }),
        Format::Json => {
            let mut out = Vec::new();
            for c in &curves {
                let nk = c.kolmogorov.normalized()?;
                let nb = c.baseline.normalized()?;
                out.push(json!({
                    "panel": c.panel,
                    "omega": c.params.omega,
                    "gamma": c.params.gamma,
                    "mean_kolmogorov": stats::mean_delay(&c.kolmogorov)?,
                    "mean_baseline": stats::mean_delay(&c.baseline)?,
                    "l1_normalized": nk.l1_distance(&nb)?,
                    "tau": c.kolmogorov.tau(),
                    "ell_kolmogorov": c.kolmogorov.density(),
                    "ell_baseline": c.baseline.density(),
                }));
            }
            Ok(Payload::Json(Value::Array(out)))
        }
    }
}
