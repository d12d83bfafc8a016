//! Finite-volume solver for the forward equation of the angle distribution
//!
//! ```text
//! ∂p/∂t + (Ω/2) ∂p/∂θ = γ [ δ(sin θ) ∫ p(θ') sin²θ' dθ' − p(θ) sin²θ ]
//! ```
//!
//! on the periodic cell [−π/2, π/2). Each step is split into first-order
//! upwind transport, an exact exponential sink per cell, and re-injection of
//! the removed mass into the cell centred on θ = 0. The scheme conserves
//! mass to round-off and keeps every cell nonnegative.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{AtomAngle, ModelParams};

/// Default resolution of the angle grid.
pub const DEFAULT_CELLS: usize = 256;
/// Default Courant number for [`stable_dt`].
pub const DEFAULT_CFL: f64 = 0.5;
/// Upper bound on γ·dt accepted by [`step`].
pub const MAX_GAMMA_DT: f64 = 0.1;

/// Uniform periodic grid over [−π/2, π/2).
///
/// Cell `i` is centred on θᵢ = −π/2 + i·Δθ, so cell 0 holds the boundary
/// representative and cell `n/2` is centred exactly on θ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaGrid {
    n_cells: usize,
}

impl ThetaGrid {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 16 {
            return Err(invalid("n_cells", format!("need at least 16 cells, got {n_cells}")));
        }
        if !n_cells.is_multiple_of(2) {
            return Err(invalid(
                "n_cells",
                format!("must be even so that a cell is centred on theta = 0, got {n_cells}"),
            ));
        }
        Ok(ThetaGrid { n_cells })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn cell_width(&self) -> f64 {
        PI / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        -FRAC_PI_2 + i as f64 * self.cell_width()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.center(i))
    }

    /// Index of the cell receiving the reset mass (centred on θ = 0).
    pub fn source_index(&self) -> usize {
        self.n_cells / 2
    }

    /// Index of the cell containing `theta`.
    pub fn cell_of(&self, theta: AtomAngle) -> usize {
        let u = (theta.value() + FRAC_PI_2) / self.cell_width();
        (u.round() as usize) % self.n_cells
    }
}

/// Discretized density p(θ, t), in units of 1/rad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityField {
    grid: ThetaGrid,
    values: Vec<f64>,
    time: f64,
}

/// Excited and ground populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Populations {
    pub rho0: f64,
    pub rho1: f64,
}

impl ProbabilityField {
    /// Field with all probability in the cell containing `theta0`.
    pub fn delta(grid: ThetaGrid, theta0: AtomAngle) -> Self {
        let mut values = vec![0.0; grid.n_cells()];
        values[grid.cell_of(theta0)] = 1.0 / grid.cell_width();
        ProbabilityField {
            grid,
            values,
            time: 0.0,
        }
    }

    pub fn uniform(grid: ThetaGrid) -> Self {
        ProbabilityField {
            grid,
            values: vec![1.0 / PI; grid.n_cells()],
            time: 0.0,
        }
    }

    /// Builds a field from per-cell densities; rejects negative or
    /// non-finite entries.
    pub fn from_values(grid: ThetaGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(invalid(
                "values",
                format!("expected {} cells, got {}", grid.n_cells(), values.len()),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid("values", format!("densities must be finite and >= 0, found {bad}")));
        }
        Ok(ProbabilityField { grid, values, time })
    }

    pub fn grid(&self) -> ThetaGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_width()
    }

    /// Weighted integral Σ pᵢ f(θᵢ) Δθ.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.values
            .iter()
            .zip(self.grid.centers())
            .map(|(p, theta)| p * f(theta))
            .sum::<f64>()
            * self.grid.cell_width()
    }

    pub fn populations(&self) -> Populations {
        let rho1 = self.expectation(|t| t.sin().powi(2));
        let rho0 = self.expectation(|t| t.cos().powi(2));
        Populations { rho0, rho1 }
    }

    /// dρ₁/dt = ∫ p (Ω/2 · sin 2θ − γ sin⁴θ) dθ, by midpoint quadrature.
    pub fn population_rate(&self, params: &ModelParams) -> f64 {
        let half_omega = params.drift_speed();
        let gamma = params.gamma;
        self.expectation(|t| half_omega * (2.0 * t).sin() - gamma * t.sin().powi(4))
    }

    /// Ensemble photon intensity γ ∫ p sin⁴θ dθ.
    pub fn emission_rate(&self, params: &ModelParams) -> f64 {
        params.gamma * self.expectation(|t| t.sin().powi(4))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// L¹ distance ∫ |p − q| dθ between two fields on the same grid.
    pub fn l1_distance(&self, other: &ProbabilityField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(invalid(
                "grid",
                format!(
                    "cannot compare fields on {} and {} cells",
                    self.grid.n_cells(),
                    other.grid.n_cells()
                ),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.cell_width())
    }

    /// Redistributes the mass onto a grid `factor` times coarser, sharing
    /// each fine cell between the coarse cells it overlaps.
    pub fn coarsen(&self, factor: usize) -> Result<ProbabilityField> {
        let n = self.grid.n_cells();
        if factor == 0 || !n.is_multiple_of(factor) {
            return Err(invalid("factor", format!("{factor} does not divide {n}")));
        }
        let coarse = ThetaGrid::new(n / factor)?;
        let nc = coarse.n_cells();
        let f = factor as f64;
        let mut mass = vec![0.0; nc];
        for (i, p) in self.values.iter().enumerate() {
            let m = p * self.grid.cell_width();
            // fine cell i spans [lo, hi) in coarse-index units
            let lo = (i as f64 - 0.5) / f + 0.5;
            let hi = (i as f64 + 0.5) / f + 0.5;
            let j = lo.floor();
            let split = j + 1.0;
            let idx = |k: f64| (k.rem_euclid(nc as f64)) as usize % nc;
            if hi <= split + 1e-12 {
                mass[idx(j)] += m;
            } else {
                let w = (split - lo) / (hi - lo);
                mass[idx(j)] += m * w;
                mass[idx(split)] += m * (1.0 - w);
            }
        }
        let width = coarse.cell_width();
        Ok(ProbabilityField {
            grid: coarse,
            values: mass.into_iter().map(|m| m / width).collect(),
            time: self.time,
        })
    }
}

/// Largest step satisfying both the transport bound (Courant number `cfl`)
/// and γ·dt ≤ [`MAX_GAMMA_DT`].
pub fn stable_dt(grid: &ThetaGrid, params: &ModelParams, cfl: f64) -> f64 {
    let speed = params.drift_speed();
    let transport = if speed > 0.0 {
        cfl * grid.cell_width() / speed
    } else {
        f64::INFINITY
    };
    transport.min(MAX_GAMMA_DT / params.gamma)
}

/// Precomputed per-step factors for a fixed (grid, params, dt).
#[derive(Debug, Clone)]
pub struct Stepper {
    courant: f64,
    survival: Vec<f64>,
    source: usize,
    dt: f64,
}

impl Stepper {
    pub fn new(grid: &ThetaGrid, params: &ModelParams, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::StepTooLarge {
                dt,
                reason: "time step must be finite and > 0".into(),
            });
        }
        let mut courant = params.drift_speed() * dt / grid.cell_width();
        if courant > 1.0 + 1e-12 {
            return Err(Error::StepTooLarge {
                dt,
                reason: format!(
                    "Courant number {courant:.6} exceeds 1 (dt must be <= {:e})",
                    grid.cell_width() / params.drift_speed()
                ),
            });
        }
        courant = courant.min(1.0);
        if params.gamma * dt > MAX_GAMMA_DT * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge {
                dt,
                reason: format!(
                    "gamma*dt = {:.6} exceeds {MAX_GAMMA_DT}",
                    params.gamma * dt
                ),
            });
        }
        let survival = grid
            .centers()
            .map(|t| (-params.gamma * t.sin().powi(2) * dt).exp())
            .collect();
        Ok(Stepper {
            courant,
            survival,
            source: grid.source_index(),
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn courant(&self) -> f64 {
        self.courant
    }

    /// Advances `field` by one step in place.
    pub fn apply(&self, field: &mut ProbabilityField) {
        debug_assert_eq!(field.values.len(), self.survival.len());
        advect_in_place(&mut field.values, self.courant);
        let mut removed = 0.0;
        for (p, s) in field.values.iter_mut().zip(&self.survival) {
            let kept = *p * s;
            removed += *p - kept;
            *p = kept;
        }
        field.values[self.source] += removed;
        field.time += self.dt;
    }
}

/// One upwind transport substep with Courant number `courant` ∈ [0, 1].
fn advect_in_place(values: &mut [f64], courant: f64) {
    if courant == 0.0 {
        return;
    }
    let n = values.len();
    let last = values[n - 1];
    for i in (1..n).rev() {
        values[i] = (1.0 - courant) * values[i] + courant * values[i - 1];
    }
    values[0] = (1.0 - courant) * values[0] + courant * last;
}

/// Transport only: advances `field` at drift speed `speed` for `dt`.
pub fn advect(field: &ProbabilityField, speed: f64, dt: f64) -> Result<ProbabilityField> {
    let courant = speed * dt / field.grid.cell_width();
    if !(0.0..=1.0 + 1e-12).contains(&courant) {
        return Err(Error::StepTooLarge {
            dt,
            reason: format!("Courant number {courant} outside [0, 1]"),
        });
    }
    let mut out = field.clone();
    advect_in_place(&mut out.values, courant.min(1.0));
    out.time += dt;
    Ok(out)
}

/// One full step (transport, sink, re-injection).
pub fn step(field: &ProbabilityField, params: &ModelParams, dt: f64) -> Result<ProbabilityField> {
    let stepper = Stepper::new(&field.grid, params, dt)?;
    let mut out = field.clone();
    stepper.apply(&mut out);
    Ok(out)
}

/// Recorded state of a solve at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeSample {
    pub t: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub mass: f64,
    /// dρ₁/dt from the moment identity.
    pub rate: f64,
}

/// Recording options for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recording {
    /// Record a sample every this many steps (the initial and final states are
    /// always recorded).
    pub every_steps: usize,
    /// Keep a copy of the field at every sample.
    pub snapshots: bool,
}

impl Default for Recording {
    fn default() -> Self {
        Recording {
            every_steps: 1,
            snapshots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeSolution {
    pub samples: Vec<PdeSample>,
    pub snapshots: Vec<ProbabilityField>,
    pub field: ProbabilityField,
}

fn sample(field: &ProbabilityField, params: &ModelParams) -> PdeSample {
    let pops = field.populations();
    PdeSample {
        t: field.time,
        rho0: pops.rho0,
        rho1: pops.rho1,
        mass: field.total_mass(),
        rate: field.population_rate(params),
    }
}

/// Integrates from the delta at θ₀ up to `t_end` with step `dt`.
///
/// When `t_end` is not a whole number of steps the last step is shortened.
pub fn solve(
    params: &ModelParams,
    grid: ThetaGrid,
    t_end: f64,
    dt: f64,
    recording: Recording,
) -> Result<PdeSolution> {
    params.validate()?;
    let field = ProbabilityField::delta(grid, params.initial_angle());
    solve_from(field, params, t_end, dt, recording)
}

/// As [`solve`], starting from an arbitrary field.
pub fn solve_from(
    mut field: ProbabilityField,
    params: &ModelParams,
    t_end: f64,
    dt: f64,
    recording: Recording,
) -> Result<PdeSolution> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(invalid("t_end", format!("must be finite and >= 0, got {t_end}")));
    }
    let stepper = Stepper::new(&field.grid, params, dt)?;
    let every = recording.every_steps.max(1);
    let ratio = t_end / dt;
    let whole = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.floor() as usize
    };
    let remainder = t_end - whole as f64 * dt;

    let mut samples = vec![sample(&field, params)];
    let mut snapshots = Vec::new();
    if recording.snapshots {
        snapshots.push(field.clone());
    }
    for k in 1..=whole {
        stepper.apply(&mut field);
        if k % every == 0 || (k == whole && remainder <= 0.0) {
            samples.push(sample(&field, params));
            if recording.snapshots {
                snapshots.push(field.clone());
            }
        }
    }
    if remainder > 1e-12 * dt {
        Stepper::new(&field.grid, params, remainder)?.apply(&mut field);
        samples.push(sample(&field, params));
        if recording.snapshots {
            snapshots.push(field.clone());
        }
    }
    Ok(PdeSolution {
        samples,
        snapshots,
        field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::no_pump_excited_population;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn grid(n: usize) -> ThetaGrid {
        ThetaGrid::new(n).unwrap()
    }

    #[test]
    fn grid_layout() {
        assert!(ThetaGrid::new(8).is_err());
        assert!(ThetaGrid::new(17).is_err());
        let g = grid(64);
        assert_eq!(g.center(g.source_index()), 0.0);
        assert_eq!(g.center(0), -FRAC_PI_2);
        assert_eq!(g.cell_of(AtomAngle::GROUND), 32);
        assert_eq!(g.cell_of(AtomAngle::new(FRAC_PI_2 - 1e-9)), 0);
        assert_eq!(g.cell_of(AtomAngle::new(FRAC_PI_4)), 48);
    }

    #[test]
    fn delta_initial_conditions() {
        let g = grid(64);
        let f = ProbabilityField::delta(g, AtomAngle::GROUND);
        assert_abs_diff_eq!(f.values()[g.source_index()], 1.0 / g.cell_width(), epsilon = 1e-12);
        assert_abs_diff_eq!(f.total_mass(), 1.0, epsilon = 1e-14);
        let pops = f.populations();
        assert_abs_diff_eq!(pops.rho0, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pops.rho1, 0.0, epsilon = 1e-14);

        let excited = ProbabilityField::delta(g, AtomAngle::new(FRAC_PI_2 - 1e-6));
        assert_abs_diff_eq!(excited.populations().rho1, 1.0, epsilon = 1e-12);

        let quarter = ProbabilityField::delta(g, AtomAngle::new(FRAC_PI_4)).populations();
        assert_abs_diff_eq!(quarter.rho0, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(quarter.rho1, 0.5, epsilon = 1e-14);

        let uniform = ProbabilityField::uniform(g).populations();
        assert_abs_diff_eq!(uniform.rho0, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(uniform.rho1, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn population_rate_examples() {
        let g = grid(64);
        let p = ModelParams::new(2.0, 1.0, 0.0).unwrap();
        assert_eq!(ProbabilityField::delta(g, AtomAngle::GROUND).population_rate(&p), 0.0);

        let q = ProbabilityField::delta(g, AtomAngle::new(FRAC_PI_4));
        let transport = q.expectation(|t| (2.0 * t).sin());
        assert_abs_diff_eq!(transport, 1.0, epsilon = 1e-14);
        // Ω = 2 with γ → 0 leaves only the transport term (Ω/2)·sin(π/2)
        let tiny = ModelParams::new(2.0, 1e-300, 0.0).unwrap();
        assert_abs_diff_eq!(q.population_rate(&tiny), 1.0, epsilon = 1e-14);

        let p0 = ModelParams::new(0.0, 1.5, 0.4).unwrap();
        let d = ProbabilityField::delta(g, AtomAngle::new(g.center(g.cell_of(AtomAngle::new(0.4)))));
        let theta = g.center(g.cell_of(AtomAngle::new(0.4)));
        assert_abs_diff_eq!(d.population_rate(&p0), -1.5 * theta.sin().powi(4), epsilon = 1e-13);
    }

    #[test]
    fn pure_transport_returns_after_one_period() {
        let g = grid(64);
        let omega = 2.0;
        let speed = omega / 2.0;
        let dt = g.cell_width() / speed;
        let start = ProbabilityField::delta(g, AtomAngle::new(0.3));
        let mut f = start.clone();
        // Courant 1: exact shift by one cell per step
        for _ in 0..g.n_cells() / 2 {
            f = advect(&f, speed, dt).unwrap();
        }
        let half = start.values().iter().cycle().skip(g.n_cells() / 2);
        for (a, b) in f.values().iter().zip(half) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        for _ in 0..g.n_cells() / 2 {
            f = advect(&f, speed, dt).unwrap();
        }
        assert_abs_diff_eq!(f.l1_distance(&start).unwrap(), 0.0, epsilon = 1e-12);

        // Courant 1/2 diffuses but keeps the centroid moving at the drift speed
        let mut smooth = start.clone();
        for _ in 0..g.n_cells() * 2 {
            smooth = advect(&smooth, speed, dt / 2.0).unwrap();
        }
        assert!(smooth.min_value() >= 0.0);
        assert_abs_diff_eq!(smooth.total_mass(), 1.0, epsilon = 1e-12);
        let peak = smooth
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak, g.cell_of(AtomAngle::new(0.3)));
    }

    #[test]
    fn rejects_unstable_steps() {
        let g = grid(64);
        let p = ModelParams::new(10.0, 1.0, 0.0).unwrap();
        let f = ProbabilityField::delta(g, AtomAngle::GROUND);
        let max = g.cell_width() / 5.0;
        assert!(step(&f, &p, max).is_ok());
        assert!(matches!(step(&f, &p, 1.01 * max), Err(Error::StepTooLarge { .. })));
        let slow = ModelParams::new(0.0, 1.0, 0.0).unwrap();
        assert!(matches!(step(&f, &slow, 0.2), Err(Error::StepTooLarge { .. })));
        assert!(step(&f, &slow, -0.1).is_err());
        assert!(stable_dt(&g, &slow, 0.5) <= 0.1);
    }

    #[test]
    fn no_pump_matches_closed_form() {
        let params = ModelParams::new(0.0, 1.0, FRAC_PI_4).unwrap();
        let sol = solve(&params, grid(256), 10.0, 0.01, Recording::default()).unwrap();
        let worst = sol
            .samples
            .iter()
            .map(|s| (s.rho1 - no_pump_excited_population(s.t, &params)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "max error {worst}");
        assert_abs_diff_eq!(sol.samples.last().unwrap().t, 10.0, epsilon = 1e-9);
    }

    #[test]
    fn mass_and_sign_preserved_over_long_run() {
        let params = ModelParams::new(3.33, 1.0, 0.0).unwrap();
        let g = grid(128);
        let dt = stable_dt(&g, &params, DEFAULT_CFL);
        let stepper = Stepper::new(&g, &params, dt).unwrap();
        let mut f = ProbabilityField::delta(g, AtomAngle::GROUND);
        for _ in 0..20_000 {
            stepper.apply(&mut f);
        }
        assert!((f.total_mass() - 1.0).abs() < 1e-10);
        assert!(f.min_value() >= 0.0);
        let pops = f.populations();
        assert!((pops.rho0 + pops.rho1 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn partial_final_step() {
        let params = ModelParams::new(0.5, 1.0, 0.0).unwrap();
        let sol = solve(&params, grid(64), 1.05, 0.1, Recording { every_steps: 5, snapshots: true }).unwrap();
        let times: Vec<f64> = sol.samples.iter().map(|s| s.t).collect();
        assert_eq!(times.len(), 4);
        assert_abs_diff_eq!(*times.last().unwrap(), 1.05, epsilon = 1e-12);
        assert_eq!(sol.snapshots.len(), sol.samples.len());
    }

    #[test]
    fn coarsen_preserves_mass_and_location() {
        let g = grid(256);
        let f = ProbabilityField::delta(g, AtomAngle::new(0.7));
        let c = f.coarsen(4).unwrap();
        assert_abs_diff_eq!(c.total_mass(), 1.0, epsilon = 1e-13);
        let src = ProbabilityField::delta(g, AtomAngle::GROUND).coarsen(4).unwrap();
        assert_abs_diff_eq!(
            src.values()[src.grid().source_index()] * src.grid().cell_width(),
            1.0,
            epsilon = 1e-13
        );
        assert!(f.coarsen(3).is_err());
        // a fine cell on a coarse boundary is split evenly
        let edge = ProbabilityField::delta(g, AtomAngle::new(g.center(2))).coarsen(4).unwrap();
        let w = edge.grid().cell_width();
        assert_abs_diff_eq!(edge.values()[0] * w, 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(edge.values()[1] * w, 0.5, epsilon = 1e-13);
    }

    #[test]
    fn from_values_validation() {
        let g = grid(16);
        assert!(ProbabilityField::from_values(g, vec![0.0; 15], 0.0).is_err());
        assert!(ProbabilityField::from_values(g, vec![-1.0; 16], 0.0).is_err());
        assert!(ProbabilityField::from_values(g, vec![1.0 / PI; 16], 0.0).is_ok());
    }
}
