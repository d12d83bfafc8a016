//! Estimators and tests linking simulated emissions to the analytic laws.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::{invalid, Error, Result};
use crate::model::ModelParams;

/// Captured mass below which a distribution is treated as tail-truncated.
pub const MASS_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Analytic,
    Empirical,
    Baseline,
}

impl DistributionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DistributionKind::Analytic => "analytic",
            DistributionKind::Empirical => "empirical",
            DistributionKind::Baseline => "baseline",
        }
    }
}

/// A waiting-time density sampled on an increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayDistribution {
    tau: Vec<f64>,
    density: Vec<f64>,
    kind: DistributionKind,
}

fn trapezoid(x: &[f64], y: impl Fn(usize) -> f64) -> f64 {
    x.windows(2)
        .enumerate()
        .map(|(i, w)| 0.5 * (w[1] - w[0]) * (y(i) + y(i + 1)))
        .sum()
}

impl DelayDistribution {
    pub fn new(tau: Vec<f64>, density: Vec<f64>, kind: DistributionKind) -> Result<Self> {
        if tau.len() != density.len() {
            return Err(invalid(
                "density",
                format!("{} grid points but {} density values", tau.len(), density.len()),
            ));
        }
        if tau.is_empty() {
            return Err(invalid("tau_grid", "empty grid"));
        }
        if tau.windows(2).any(|w| !(w[1] > w[0])) || !tau[0].is_finite() {
            return Err(invalid("tau_grid", "must be finite and strictly increasing"));
        }
        if let Some(bad) = density.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid("density", format!("must be finite and >= 0, found {bad}")));
        }
        let dist = DelayDistribution { tau, density, kind };
        let mass = dist.trapezoid_mass();
        if mass > 1.0 + 1e-6 {
            return Err(Error::Unnormalized { mass });
        }
        Ok(dist)
    }

    /// The inter-emission density of a driven atom on `tau_grid`.
    pub fn analytic(params: &ModelParams, tau_grid: &[f64]) -> Result<Self> {
        let density = tau_grid
            .iter()
            .map(|&t| analytic::waiting_time_density(t, params))
            .collect::<Result<Vec<_>>>()?;
        Self::new(tau_grid.to_vec(), density, DistributionKind::Analytic)
    }

    /// Histogram density of `samples` on `n_bins` equal bins over
    /// [0, tau_max], placed at the bin centres.
    pub fn empirical(samples: &[f64], n_bins: usize, tau_max: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples { required: 1, got: 0 });
        }
        if n_bins < 2 || !(tau_max > 0.0) {
            return Err(invalid("bins", "need at least 2 bins over a positive range"));
        }
        let width = tau_max / n_bins as f64;
        let mut counts = vec![0usize; n_bins];
        for &s in samples {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidSample(format!("{s}")));
            }
            let k = (s / width) as usize;
            if k < n_bins {
                counts[k] += 1;
            }
        }
        let norm = 1.0 / (samples.len() as f64 * width);
        let tau = (0..n_bins).map(|k| (k as f64 + 0.5) * width).collect();
        let density = counts.into_iter().map(|c| c as f64 * norm).collect();
        Self::new(tau, density, DistributionKind::Empirical)
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn trapezoid_mass(&self) -> f64 {
        trapezoid(&self.tau, |i| self.density[i])
    }

    /// Copy rescaled to unit trapezoidal mass.
    pub fn normalized(&self) -> Result<Self> {
        let mass = self.trapezoid_mass();
        if !(mass > 0.0) {
            return Err(Error::Unnormalized { mass });
        }
        Ok(DelayDistribution {
            tau: self.tau.clone(),
            density: self.density.iter().map(|d| d / mass).collect(),
            kind: self.kind,
        })
    }

    /// Trapezoidal ∫ |ℓ₁ − ℓ₂| dτ on a shared grid.
    pub fn l1_distance(&self, other: &DelayDistribution) -> Result<f64> {
        if self.tau != other.tau {
            return Err(invalid("tau_grid", "distributions live on different grids"));
        }
        Ok(trapezoid(&self.tau, |i| (self.density[i] - other.density[i]).abs()))
    }

    /// Hazard ℓ(τ)/S(τ), with S the trapezoidal survival; NaN where S
    /// underflows.
    pub fn hazard(&self) -> Vec<f64> {
        let mass = self.trapezoid_mass();
        let mut cumulative = 0.0;
        let mut out = Vec::with_capacity(self.tau.len());
        for i in 0..self.tau.len() {
            if i > 0 {
                cumulative += 0.5 * (self.tau[i] - self.tau[i - 1]) * (self.density[i] + self.density[i - 1]);
            }
            let survival = mass - cumulative;
            out.push(if survival > 1e-9 { self.density[i] / survival } else { f64::NAN });
        }
        out
    }
}

/// Mean delay ∫ τ ℓ(τ) dτ by the trapezoid rule.
///
/// Analytic and empirical densities must carry mass within
/// [`MASS_TOLERANCE`] of one. Baseline delay functions are sub-probability
/// densities; their mean is taken conditional on the captured mass, with a
/// warning when the grid misses more than [`MASS_TOLERANCE`] of it.
pub fn mean_delay(dist: &DelayDistribution) -> Result<f64> {
    if dist.tau.len() < 2 {
        return Err(invalid("tau_grid", "need at least two grid points"));
    }
    let mass = dist.trapezoid_mass();
    let first = trapezoid(&dist.tau, |i| dist.tau[i] * dist.density[i]);
    match dist.kind {
        DistributionKind::Analytic | DistributionKind::Empirical => {
            if (mass - 1.0).abs() > MASS_TOLERANCE {
                return Err(Error::Unnormalized { mass });
            }
            Ok(first)
        }
        DistributionKind::Baseline => {
            if !(mass > 0.0) {
                return Err(Error::Unnormalized { mass });
            }
            if mass < 1.0 - MASS_TOLERANCE {
                log::warn!("delay grid captures only {mass:.6} of the probability; mean is conditional");
            }
            Ok(first / mass)
        }
    }
}

/// One-sample Kolmogorov–Smirnov result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub n: usize,
    pub p_value: f64,
    pub reject_at_1pct: bool,
}

/// Minimum sample count accepted by [`ks_test`].
pub const KS_MIN_SAMPLES: usize = 10;

/// Survival function of the Kolmogorov distribution, P(K > x).
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // Jacobi-theta form converges fast for small arguments
        let y = -PI * PI / (8.0 * x * x);
        let cdf = (2.0 * PI).sqrt() / x
            * (1..=6)
                .map(|k| (((2 * k - 1) * (2 * k - 1)) as f64 * y).exp())
                .sum::<f64>();
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let sum: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * x * x).exp()
            })
            .sum();
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// One-sample KS test of `samples` against the continuous distribution
/// function `cdf`, with the asymptotic p-value.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsReport> {
    let n = samples.len();
    if n < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            required: KS_MIN_SAMPLES,
            got: n,
        });
    }
    if let Some(bad) = samples.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidSample(format!("non-finite sample {bad}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut statistic: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        statistic = statistic.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let statistic = statistic.clamp(0.0, 1.0);
    let root = nf.sqrt();
    let p_value = kolmogorov_survival((root + 0.12 + 0.11 / root) * statistic);
    Ok(KsReport {
        statistic,
        n,
        p_value,
        reject_at_1pct: p_value < 0.01,
    })
}

/// Least-squares power law y = c·x^exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

/// Log-log regression of `(x, y)` pairs.
pub fn scaling_regression(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::TooFewSamples {
            required: 3,
            got: points.len(),
        });
    }
    if let Some(bad) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(invalid("points", format!("need finite positive coordinates, got {bad:?}")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("points", "all abscissae are equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(ScalingFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
    })
}

/// Largest deviation, in units of γ, between the hazard of `dist` and the
/// renewal intensity γ sin⁴(Ωτ/2), over grid points where the survival is
/// above `min_survival`.
pub fn renewal_form_deviation(dist: &DelayDistribution, params: &ModelParams, min_survival: f64) -> f64 {
    let hazard = dist.hazard();
    let mass = dist.trapezoid_mass();
    let mut cumulative = 0.0;
    let mut worst: f64 = 0.0;
    for i in 0..dist.tau.len() {
        if i > 0 {
            cumulative += 0.5 * (dist.tau[i] - dist.tau[i - 1]) * (dist.density[i] + dist.density[i - 1]);
        }
        if mass - cumulative < min_survival || hazard[i].is_nan() {
            break;
        }
        let expected = params.gamma * (0.5 * params.omega * dist.tau[i]).sin().powi(4);
        worst = worst.max((hazard[i] - expected).abs() / params.gamma);
    }
    worst
}

/// Uniform grid on [0, tau_max] with `n` intervals.
pub fn uniform_grid(tau_max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| tau_max * k as f64 / n as f64).collect()
}

/// Grid end such that the analytic survival has dropped below
/// [`MASS_TOLERANCE`]·1e-3, in whole Rabi periods.
pub fn analytic_grid_end(params: &ModelParams) -> Result<f64> {
    let period = 2.0 * PI / params.omega;
    let per_period = params.gamma * 3.0 * PI / (4.0 * params.omega);
    // survival after k periods is at most exp(−k·per_period)
    if !(params.omega > 0.0) {
        return Err(invalid("omega", "the analytic density needs omega > 0"));
    }
    let target = -(MASS_TOLERANCE * 1e-3).ln();
    let periods = (target / per_period).ceil().max(1.0) + 1.0;
    Ok(periods * period)
}
