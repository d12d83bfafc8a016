//! Command-line arguments and the resolved run configuration.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qjump::{JumpSemantics, ModelParams};

#[derive(Debug, Parser)]
#[command(name = "qjump", version, about = "Quantum-jump statistics of a resonantly driven two-level atom")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic inter-emission density and its moments.
    Delay(CommonArgs),
    /// Solve the forward equation for the angle distribution.
    Pde {
        #[command(flatten)]
        common: CommonArgs,
        /// Write the final field (theta_center, p) instead of the population series.
        #[arg(long)]
        field: bool,
        /// Record every this many steps.
        #[arg(long, default_value_t = 10)]
        every: usize,
    },
    /// Monte Carlo ensemble of trajectories.
    Mc(CommonArgs),
    /// Truncated Lindblad delay function.
    Baseline(CommonArgs),
    /// Mean delays over a sweep of gamma at fixed omega.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 4.0)]
        gamma_min: f64,
        #[arg(long, default_value_t = 64.0)]
        gamma_max: f64,
        #[arg(long, default_value_t = 9)]
        points: usize,
    },
    /// Inter-emission curves of both theories for the two reference ratios.
    Fig1 {
        #[command(flatten)]
        common: CommonArgs,
        /// Panel a (omega/gamma = 3.33) or b (omega/gamma = 1/6); both when omitted.
        #[arg(long, value_enum)]
        panel: Option<Panel>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Panel {
    A,
    B,
}

impl Panel {
    pub fn ratio(self) -> f64 {
        match self {
            Panel::A => 3.33,
            Panel::B => 1.0 / 6.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Panel::A => "a",
            Panel::B => "b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SemanticsArg {
    Literal,
    Emission,
}

impl From<SemanticsArg> for JumpSemantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::Literal => JumpSemantics::KolmogorovLiteral,
            SemanticsArg::Emission => JumpSemantics::EmissionOnly,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Rabi frequency.
    #[arg(long, default_value_t = 3.33, allow_negative_numbers = true)]
    pub omega: f64,
    /// Spontaneous-emission coefficient.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Initial angle in [-pi/2, pi/2).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta0: f64,
    /// Number of trajectories.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Angle cells (pde) or time-grid intervals (delay, baseline, fig1).
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Simulated time span.
    #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
    pub horizon: f64,
    /// Time step; derived from the stability bounds when omitted.
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SemanticsArg::Literal)]
    pub semantics: SemanticsArg,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Omit the generation timestamp so identical runs give identical bytes.
    #[arg(long)]
    pub no_timestamp: bool,
}

/// Fully resolved configuration, echoed into every output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub params: ModelParams,
    pub n_trajectories: usize,
    pub grid_n: usize,
    pub horizon: f64,
    pub dt: Option<f64>,
    pub seed: u64,
    pub semantics: JumpSemantics,
    pub out_path: Option<PathBuf>,
    pub format: Format,
    pub timestamp: bool,
}

impl RunConfig {
    pub fn resolve(command: &'static str, args: &CommonArgs, default_grid: usize) -> Result<Self> {
        let params = ModelParams::new(args.omega, args.gamma, args.theta0)?;
        if !(args.horizon.is_finite() && args.horizon > 0.0) {
            bail!("--horizon must be a positive number, got {}", args.horizon);
        }
        if let Some(dt) = args.dt {
            if !(dt.is_finite() && dt > 0.0) {
                bail!("--dt must be a positive number, got {dt}");
            }
        }
        if args.n == 0 {
            bail!("--n must be at least 1");
        }
        let grid_n = args.grid_n.unwrap_or(default_grid);
        if grid_n < 2 {
            bail!("--grid-n must be at least 2, got {grid_n}");
        }
        Ok(RunConfig {
            command,
            params,
            n_trajectories: args.n,
            grid_n,
            horizon: args.horizon,
            dt: args.dt,
            seed: args.seed,
            semantics: args.semantics.into(),
            out_path: args.out.clone(),
            format: args.format,
            timestamp: !args.no_timestamp,
        })
    }

    /// `key: value` pairs for CSV comment headers.
    pub fn header_entries(&self) -> Vec<(String, String)> {
        let mut entries = vec![
            ("command".to_string(), self.command.to_string()),
            ("omega".to_string(), self.params.omega.to_string()),
            ("gamma".to_string(), self.params.gamma.to_string()),
            ("theta0".to_string(), self.params.theta0.to_string()),
            ("n_trajectories".to_string(), self.n_trajectories.to_string()),
            ("grid_n".to_string(), self.grid_n.to_string()),
            ("horizon".to_string(), self.horizon.to_string()),
            (
                "dt".to_string(),
                self.dt.map_or_else(|| "auto".to_string(), |d| d.to_string()),
            ),
            ("seed".to_string(), self.seed.to_string()),
            ("semantics".to_string(), self.semantics.to_string()),
        ];
        if self.timestamp {
            entries.push(("generated".to_string(), chrono::Utc::now().to_rfc3339()));
        }
        entries
    }
}
