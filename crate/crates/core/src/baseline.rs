//! Two-level Lindblad integrator and the truncated ("no-jump") propagation
//! whose trace loss defines the dressed-atom delay function.
//!
//! Basis order is (|g⟩, |e⟩). The drive is H = (Ω/2)(|e⟩⟨g| + |g⟩⟨e|) in the
//! rotating frame; the dissipator is built from A = √(γ/2)·|g⟩⟨e|,
//!
//! ```text
//! ρ̇ = −i[H, ρ] − (A†A ρ + ρ A†A) + 2 A ρ A†
//! ```
//!
//! so that without drive the excited population decays at rate γ. The
//! truncated evolution drops the gain term 2AρA†.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::ModelParams;
use crate::stats::{DelayDistribution, DistributionKind};

/// Largest accepted dt·max(Ω, γ) for the fixed-step integrator.
pub const MAX_STEP_PRODUCT: f64 = 0.1;
const HERMITIAN_TOL: f64 = 1e-9;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// 2×2 density matrix (or its time derivative).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix2 {
    pub gg: Complex64,
    pub ge: Complex64,
    pub eg: Complex64,
    pub ee: Complex64,
}

impl DensityMatrix2 {
    pub const ZERO: DensityMatrix2 = DensityMatrix2 {
        gg: Complex64 { re: 0.0, im: 0.0 },
        ge: Complex64 { re: 0.0, im: 0.0 },
        eg: Complex64 { re: 0.0, im: 0.0 },
        ee: Complex64 { re: 0.0, im: 0.0 },
    };

    pub fn ground() -> Self {
        DensityMatrix2 {
            gg: Complex64::new(1.0, 0.0),
            ..Self::ZERO
        }
    }

    pub fn excited() -> Self {
        DensityMatrix2 {
            ee: Complex64::new(1.0, 0.0),
            ..Self::ZERO
        }
    }

    /// Pure state cos θ|g⟩ + i sin θ|e⟩.
    pub fn pure(theta: f64) -> Self {
        let cg = Complex64::new(theta.cos(), 0.0);
        let ce = Complex64::new(0.0, theta.sin());
        DensityMatrix2 {
            gg: cg * cg.conj(),
            ge: cg * ce.conj(),
            eg: ce * cg.conj(),
            ee: ce * ce.conj(),
        }
    }

    pub fn trace(&self) -> f64 {
        (self.gg + self.ee).re
    }

    pub fn excited_population(&self) -> f64 {
        self.ee.re
    }

    /// Largest deviation from Hermiticity.
    pub fn hermitian_defect(&self) -> f64 {
        (self.ge - self.eg.conj())
            .norm()
            .max(self.gg.im.abs())
            .max(self.ee.im.abs())
    }

    /// Projects onto the Hermitian part.
    pub fn hermitize(self) -> Self {
        let off = 0.5 * (self.eg + self.ge.conj());
        DensityMatrix2 {
            gg: Complex64::new(self.gg.re, 0.0),
            ge: off.conj(),
            eg: off,
            ee: Complex64::new(self.ee.re, 0.0),
        }
    }

    /// Smallest eigenvalue of the (Hermitian) matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let a = self.gg.re;
        let d = self.ee.re;
        let b = self.eg.norm();
        0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
    }

    fn is_finite(&self) -> bool {
        [self.gg, self.ge, self.eg, self.ee]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for DensityMatrix2 {
    type Output = DensityMatrix2;

    fn add(self, o: DensityMatrix2) -> DensityMatrix2 {
        DensityMatrix2 {
            gg: self.gg + o.gg,
            ge: self.ge + o.ge,
            eg: self.eg + o.eg,
            ee: self.ee + o.ee,
        }
    }
}

impl Mul<DensityMatrix2> for f64 {
    type Output = DensityMatrix2;

    fn mul(self, m: DensityMatrix2) -> DensityMatrix2 {
        DensityMatrix2 {
            gg: m.gg * self,
            ge: m.ge * self,
            eg: m.eg * self,
            ee: m.ee * self,
        }
    }
}

fn rhs_unchecked(rho: &DensityMatrix2, omega: f64, gamma: f64, truncated: bool) -> DensityMatrix2 {
    let h = 0.5 * omega;
    // −i[H, ρ]
    let comm_gg = h * (rho.eg - rho.ge);
    let comm_ge = h * (rho.ee - rho.gg);
    let comm_eg = h * (rho.gg - rho.ee);
    let comm_ee = h * (rho.ge - rho.eg);
    let half = 0.5 * gamma;
    let gain = if truncated { 0.0 } else { gamma };
    DensityMatrix2 {
        gg: -I * comm_gg + gain * rho.ee,
        ge: -I * comm_ge - half * rho.ge,
        eg: -I * comm_eg - half * rho.eg,
        ee: -I * comm_ee - gamma * rho.ee,
    }
}

/// Time derivative of ρ under the full (or truncated) evolution.
pub fn lindblad_rhs(rho: &DensityMatrix2, params: &ModelParams, truncated: bool) -> Result<DensityMatrix2> {
    let defect = rho.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian { defect });
    }
    Ok(rhs_unchecked(rho, params.omega, params.gamma, truncated))
}

fn rk4_step(rho: &DensityMatrix2, omega: f64, gamma: f64, truncated: bool, dt: f64) -> DensityMatrix2 {
    let f = |r: &DensityMatrix2| rhs_unchecked(r, omega, gamma, truncated);
    let k1 = f(rho);
    let k2 = f(&(*rho + (0.5 * dt) * k1));
    let k3 = f(&(*rho + (0.5 * dt) * k2));
    let k4 = f(&(*rho + dt * k3));
    (*rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).hermitize()
}

fn check_step(params: &ModelParams, dt: f64) -> Result<()> {
    let scale = params.omega.max(params.gamma);
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::StepTooLarge {
            dt,
            reason: "time step must be finite and > 0".into(),
        });
    }
    if dt * scale > MAX_STEP_PRODUCT * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge {
            dt,
            reason: format!("dt*max(omega, gamma) = {:.4} exceeds {MAX_STEP_PRODUCT}", dt * scale),
        });
    }
    Ok(())
}

/// Output of [`integrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix2>,
    /// max |Tr ρ − 1| over the run (full evolution) or 0 (truncated).
    pub max_trace_defect: f64,
}

/// Fixed-step RK4 integration from `rho0` to `t_end`; the last step is
/// shortened when `t_end` is not a multiple of `dt`.
pub fn integrate(
    rho0: DensityMatrix2,
    params: &ModelParams,
    t_end: f64,
    dt: f64,
    truncated: bool,
) -> Result<Evolution> {
    params.validate()?;
    check_step(params, dt)?;
    let defect = rho0.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian { defect });
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(invalid("t_end", format!("must be finite and >= 0, got {t_end}")));
    }
    let n_steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut rho = rho0.hermitize();
    let mut t = 0.0;
    let trace0 = rho.trace();
    let mut max_defect: f64 = 0.0;
    times.push(t);
    states.push(rho);
    for k in 0..n_steps {
        let h = if k + 1 == n_steps { t_end - t } else { dt };
        rho = rk4_step(&rho, params.omega, params.gamma, truncated, h);
        t = if k + 1 == n_steps { t_end } else { t + h };
        if !rho.is_finite() {
            return Err(Error::IntegratorFailure {
                t,
                reason: "non-finite density matrix".into(),
            });
        }
        if !truncated {
            max_defect = max_defect.max((rho.trace() - trace0).abs());
        }
        times.push(t);
        states.push(rho);
    }
    Ok(Evolution {
        times,
        states,
        max_trace_defect: max_defect,
    })
}

/// Stationary excited population of the full resonant evolution,
/// Ω² / (γ² + 2Ω²).
pub fn steady_state_excited_population(params: &ModelParams) -> f64 {
    let w2 = params.omega * params.omega;
    w2 / (params.gamma * params.gamma + 2.0 * w2)
}

/// Delay function ℓ_Q(τ) = −d/dτ Tr ρ(τ) of the truncated evolution started
/// in the ground state, sampled on `tau_grid`.
///
/// The trace loss rate equals γ ρ_ee exactly, which is what is returned.
pub fn delay_function(params: &ModelParams, tau_grid: &[f64]) -> Result<DelayDistribution> {
    params.validate()?;
    if tau_grid.first() != Some(&0.0) {
        return Err(invalid("tau_grid", "must start at 0"));
    }
    if tau_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("tau_grid", "must be strictly increasing"));
    }
    let max_dt = 0.5 * MAX_STEP_PRODUCT / params.omega.max(params.gamma);
    let mut rho = DensityMatrix2::ground();
    let mut density = Vec::with_capacity(tau_grid.len());
    let mut prev = 0.0;
    for &tau in tau_grid {
        let span = tau - prev;
        if span > 0.0 {
            let n = (span / max_dt).ceil() as usize;
            let h = span / n as f64;
            for _ in 0..n {
                rho = rk4_step(&rho, params.omega, params.gamma, true, h);
            }
        }
        prev = tau;
        let ell = params.gamma * rho.excited_population();
        if !ell.is_finite() || ell < -1e-12 {
            return Err(Error::IntegratorFailure {
                t: tau,
                reason: format!("excited population went to {}", rho.excited_population()),
            });
        }
        density.push(ell.max(0.0));
    }
    DelayDistribution::new(tau_grid.to_vec(), density, DistributionKind::Baseline)
}

/// Remaining trace Tr ρ(τ) of the truncated evolution from the ground state.
pub fn no_jump_survival(params: &ModelParams, tau_grid: &[f64]) -> Result<Vec<f64>> {
    let t_end = *tau_grid.last().unwrap_or(&0.0);
    let dt = 0.5 * MAX_STEP_PRODUCT / params.omega.max(params.gamma);
    let mut out = Vec::with_capacity(tau_grid.len());
    let mut rho = DensityMatrix2::ground();
    let mut t = 0.0;
    for &tau in tau_grid {
        if tau < t || tau > t_end {
            return Err(invalid("tau_grid", "must be increasing"));
        }
        let span = tau - t;
        if span > 0.0 {
            let n = (span / dt).ceil() as usize;
            for _ in 0..n {
                rho = rk4_step(&rho, params.omega, params.gamma, true, span / n as f64);
            }
        }
        t = tau;
        out.push(rho.trace());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(omega: f64, gamma: f64) -> ModelParams {
        ModelParams::new(omega, gamma, 0.0).unwrap()
    }

    fn trace_of(m: &DensityMatrix2) -> Complex64 {
        m.gg + m.ee
    }

    #[test]
    fn ground_state_does_not_decay() {
        let d = lindblad_rhs(&DensityMatrix2::ground(), &p(1.3, 2.0), false).unwrap();
        assert_eq!(d.ee, Complex64::new(0.0, 0.0));
        assert_eq!(d.gg, Complex64::new(0.0, 0.0));
        // drive creates coherence: ρ̇_eg = −i(Ω/2)
        assert_abs_diff_eq!(d.eg.im, -0.65, epsilon = 1e-15);
        assert_abs_diff_eq!(d.ge.im, 0.65, epsilon = 1e-15);
    }

    #[test]
    fn excited_state_without_drive() {
        let gamma = 1.7;
        let full = lindblad_rhs(&DensityMatrix2::excited(), &p(0.0, gamma), false).unwrap();
        // the module's normalization: γ_eff = γ/2 so that ρ̇_ee = −2γ_eff ρ_ee = −γ
        assert_abs_diff_eq!(full.ee.re, -gamma, epsilon = 1e-15);
        assert_abs_diff_eq!(trace_of(&full).norm(), 0.0, epsilon = 1e-15);
        let trunc = lindblad_rhs(&DensityMatrix2::excited(), &p(0.0, gamma), true).unwrap();
        assert!(trace_of(&trunc).re < 0.0);
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let mut rho = DensityMatrix2::pure(0.4);
        rho.ge += Complex64::new(0.1, 0.0);
        assert!(matches!(lindblad_rhs(&rho, &p(1.0, 1.0), false), Err(Error::NotHermitian { .. })));
        assert!(integrate(rho, &p(1.0, 1.0), 1.0, 0.01, false).is_err());
    }

    #[test]
    fn free_decay_matches_closed_form() {
        let params = p(0.0, 1.3);
        let ev = integrate(DensityMatrix2::excited(), &params, 5.0, 0.01, false).unwrap();
        for (t, s) in ev.times.iter().zip(&ev.states) {
            assert_abs_diff_eq!(s.ee.re, (-1.3 * t).exp(), epsilon = 1e-10);
        }
    }

    #[test]
    fn step_bound_enforced() {
        assert!(matches!(
            integrate(DensityMatrix2::ground(), &p(10.0, 1.0), 1.0, 0.02, false),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn fourth_order_convergence() {
        let params = p(3.0, 1.0);
        let reference = integrate(DensityMatrix2::ground(), &params, 4.0, 0.001, false)
            .unwrap()
            .states
            .last()
            .unwrap()
            .ee
            .re;
        let errs: Vec<f64> = [0.032, 0.016, 0.008]
            .iter()
            .map(|&dt| {
                let v = integrate(DensityMatrix2::ground(), &params, 4.0, dt, false)
                    .unwrap()
                    .states
                    .last()
                    .unwrap()
                    .ee
                    .re;
                (v - reference).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 3.7, "observed order {order} from {errs:?}");
        }
    }

    #[test]
    fn delay_function_basics() {
        let params = p(3.33, 1.0);
        let grid: Vec<f64> = (0..=4000).map(|k| k as f64 * 0.01).collect();
        let d = delay_function(&params, &grid).unwrap();
        assert_eq!(d.density()[0], 0.0);
        assert!(d.density().iter().all(|&v| v >= 0.0));
        let mass = d.trapezoid_mass();
        assert!(mass <= 1.0 + 1e-6 && mass > 0.99, "mass {mass}");

        // ℓ_Q is the negative slope of the remaining trace
        let survival = no_jump_survival(&params, &grid).unwrap();
        for k in (100..3900).step_by(250) {
            let slope = -(survival[k + 1] - survival[k - 1]) / 0.02;
            assert_abs_diff_eq!(slope, d.density()[k], epsilon = 1e-4);
        }
        assert!(delay_function(&params, &[0.5, 1.0]).is_err());
        assert!(delay_function(&params, &[0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn pure_state_is_valid() {
        let r = DensityMatrix2::pure(0.7);
        assert_abs_diff_eq!(r.trace(), 1.0, epsilon = 1e-15);
        assert!(r.hermitian_defect() < 1e-15);
        assert_abs_diff_eq!(r.min_eigenvalue(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.excited_population(), 0.7f64.sin().powi(2), epsilon = 1e-15);
    }
}
