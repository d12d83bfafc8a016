//! Closed-form results: no-pump decay and the inter-emission density under a
//! resonant drive.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{AtomAngle, ModelParams};

fn require_drive(params: &ModelParams) -> Result<()> {
    if params.omega > 0.0 {
        Ok(())
    } else {
        Err(invalid(
            "omega",
            "the inter-emission density needs a nonzero Rabi frequency; use the no-pump formulas for omega = 0",
        ))
    }
}

/// ∫₀^τ sin⁴(Ωt/2) dt, in closed form.
pub fn integrated_sin4(tau: f64, omega: f64) -> f64 {
    let x = omega * tau;
    3.0 * tau / 8.0 - x.sin() / (2.0 * omega) + (2.0 * x).sin() / (16.0 * omega)
}

/// Inter-emission density ℓ(τ) = γ sin⁴(Ωτ/2) exp(−γ I(τ)), for an atom that
/// has just emitted.
pub fn waiting_time_density(tau: f64, params: &ModelParams) -> Result<f64> {
    require_drive(params)?;
    if !(tau >= 0.0) {
        return Err(invalid("tau", format!("must be >= 0, got {tau}")));
    }
    Ok(density_unchecked(tau, params.omega, params.gamma))
}

/// Survival function 1 − F(τ) = exp(−γ I(τ)) of the inter-emission time.
pub fn waiting_time_survival(tau: f64, params: &ModelParams) -> Result<f64> {
    require_drive(params)?;
    Ok((-params.gamma * integrated_sin4(tau.max(0.0), params.omega)).exp())
}

/// Cumulative distribution of the inter-emission time.
pub fn waiting_time_cdf(tau: f64, params: &ModelParams) -> Result<f64> {
    require_drive(params)?;
    Ok(-(-params.gamma * integrated_sin4(tau.max(0.0), params.omega)).exp_m1())
}

pub(crate) fn density_unchecked(tau: f64, omega: f64, gamma: f64) -> f64 {
    let s = (0.5 * omega * tau).sin();
    let s2 = s * s;
    gamma * s2 * s2 * (-gamma * integrated_sin4(tau, omega)).exp()
}

/// Excited population without pump: sin²θ₀ · exp(−γ sin²θ₀ t).
pub fn no_pump_excited_population(t: f64, params: &ModelParams) -> f64 {
    let s2 = params.initial_angle().excited_probability();
    s2 * (-params.gamma * s2 * t).exp()
}

/// Total probability that an unpumped atom ever emits: sin²θ₀.
pub fn no_pump_emission_probability(theta0: AtomAngle) -> f64 {
    theta0.excited_probability()
}

/// Amplitudes of the final atom+field state without pump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    /// Amplitude of |g, 1 photon⟩.
    pub one_photon: f64,
    /// Modulus of the amplitude of |g, 0 photons⟩ (its phase is not modeled).
    pub zero_photon: f64,
}

pub fn no_pump_final_state(theta0: AtomAngle) -> FinalState {
    let (s, c) = theta0.value().sin_cos();
    FinalState {
        one_photon: s,
        zero_photon: c.abs(),
    }
}

/// Weak-field mean-delay scale (Ω⁴γ)^(−1/5).
pub fn weak_field_delay_scale(params: &ModelParams) -> Result<f64> {
    require_drive(params)?;
    Ok((params.omega.powi(4) * params.gamma).powf(-0.2))
}

/// Dressed-atom delay scale γ/Ω².
pub fn dressed_atom_delay_scale(params: &ModelParams) -> Result<f64> {
    require_drive(params)?;
    Ok(params.gamma / (params.omega * params.omega))
}

/// Mean inter-emission time, ∫₀^∞ exp(−γ I(τ)) dτ.
///
/// The survival integral is evaluated period by period: over each Rabi
/// period I grows by exactly 3π/(4Ω), so the tail is a geometric series.
pub fn mean_waiting_time(params: &ModelParams) -> Result<f64> {
    require_drive(params)?;
    let (omega, gamma) = (params.omega, params.gamma);
    let period = 2.0 * std::f64::consts::PI / omega;
    let one_period = crate::quadrature::integrate(
        |t| (-gamma * integrated_sin4(t, omega)).exp(),
        0.0,
        period,
        1e-14,
        1e-12,
    )?;
    let ratio = (-gamma * 3.0 * std::f64::consts::PI / (4.0 * omega)).exp();
    Ok(one_period.value / (1.0 - ratio))
}
