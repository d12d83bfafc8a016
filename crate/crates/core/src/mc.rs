//! Event-driven Monte Carlo of single-atom trajectories.
//!
//! Jump times are drawn by thinning a homogeneous Poisson stream of rate γ,
//! which dominates both reset hazards. Between jumps the angle drifts
//! deterministically; every jump resets it to the ground state.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{drift_angle, AtomAngle, JumpSemantics, ModelParams};
use crate::pde::{ProbabilityField, ThetaGrid};

/// Seed and stream selecting one reproducible random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededSource {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        SeededSource { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSegment {
    pub t_start: f64,
    pub theta_start: AtomAngle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: f64,
    pub theta_before: AtomAngle,
    pub emitted: bool,
}

/// One piecewise-deterministic path on [0, horizon].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub drift_speed: f64,
    pub horizon: f64,
    pub segments: Vec<DriftSegment>,
    pub jumps: Vec<Jump>,
}

impl Trajectory {
    /// Angle at time `t` (right-continuous: equals 0 at a jump time).
    pub fn theta_at(&self, t: f64) -> Result<AtomAngle> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(invalid(
                "t",
                format!("{t} lies outside the simulated window [0, {}]", self.horizon),
            ));
        }
        let k = self.segments.partition_point(|s| s.t_start <= t);
        let seg = self.segments[k.max(1) - 1];
        Ok(AtomAngle::new(seg.theta_start.value() + self.drift_speed * (t - seg.t_start)))
    }

    pub fn emissions(&self) -> impl Iterator<Item = &Jump> {
        self.jumps.iter().filter(|j| j.emitted)
    }
}

/// Photon-emission times of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionRecord {
    pub times: Vec<f64>,
    pub t_end: f64,
}

/// Simulates one trajectory on [0, horizon] starting from θ₀.
pub fn simulate(
    params: &ModelParams,
    semantics: JumpSemantics,
    horizon: f64,
    src: SeededSource,
) -> Result<(Trajectory, EmissionRecord)> {
    params.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid("horizon", format!("must be finite and > 0, got {horizon}")));
    }
    let mut rng = src.rng();
    let gamma = params.gamma;
    let mut seg = DriftSegment {
        t_start: 0.0,
        theta_start: params.initial_angle(),
    };
    let mut segments = vec![seg];
    let mut jumps = Vec::new();
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        // no drift and zero hazard: nothing can ever happen again
        if params.omega == 0.0 && semantics.hazard(seg.theta_start, gamma) == 0.0 {
            break;
        }
        let wait: f64 = rng.sample(Exp1);
        t += wait / gamma;
        if t > horizon {
            break;
        }
        let theta = drift_angle(t - seg.t_start, params, seg.theta_start);
        let accept = semantics.hazard(theta, gamma) / gamma;
        if rng.gen::<f64>() >= accept {
            continue;
        }
        let emitted = match semantics {
            JumpSemantics::KolmogorovLiteral => rng.gen::<f64>() < theta.excited_probability(),
            JumpSemantics::EmissionOnly => true,
        };
        jumps.push(Jump {
            t,
            theta_before: theta,
            emitted,
        });
        if emitted {
            times.push(t);
        }
        seg = DriftSegment {
            t_start: t,
            theta_start: AtomAngle::GROUND,
        };
        segments.push(seg);
    }
    Ok((
        Trajectory {
            drift_speed: params.drift_speed(),
            horizon,
            segments,
            jumps,
        },
        EmissionRecord { times, t_end: horizon },
    ))
}

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
/// The output is in index order either way.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// A batch of independent trajectories; trajectory `i` uses stream `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub params: ModelParams,
    pub semantics: JumpSemantics,
    pub horizon: f64,
    pub seed: u64,
    pub n_trajectories: usize,
}

impl Ensemble {
    pub fn source(&self, index: usize) -> SeededSource {
        SeededSource::new(self.seed, index as u64)
    }

    /// Runs every trajectory and hands it to `f`; results come back in
    /// trajectory order regardless of scheduling.
    pub fn map<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, Trajectory, EmissionRecord) -> T + Sync + Send,
    {
        if self.n_trajectories == 0 {
            return Err(Error::EmptyEnsemble);
        }
        map_indexed(self.n_trajectories, |i| {
            simulate(&self.params, self.semantics, self.horizon, self.source(i))
                .map(|(traj, rec)| f(i, traj, rec))
        })
        .into_iter()
        .collect()
    }

    /// As [`Ensemble::map`] but always on the calling thread.
    pub fn map_sequential<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        F: Fn(usize, Trajectory, EmissionRecord) -> T,
    {
        if self.n_trajectories == 0 {
            return Err(Error::EmptyEnsemble);
        }
        (0..self.n_trajectories)
            .map(|i| {
                simulate(&self.params, self.semantics, self.horizon, self.source(i))
                    .map(|(traj, rec)| f(i, traj, rec))
            })
            .collect()
    }

    pub fn run(&self) -> Result<Vec<(Trajectory, EmissionRecord)>> {
        self.map(|_, t, r| (t, r))
    }

    /// Runs the ensemble keeping only the emission records.
    pub fn records(&self) -> Result<Vec<EmissionRecord>> {
        self.map(|_, _, r| r)
    }

    /// Angles of every trajectory at the given times, `angles[k][i]` for
    /// time `k` and trajectory `i`.
    pub fn angles_at(&self, times: &[f64]) -> Result<Vec<Vec<AtomAngle>>> {
        let per_traj = self.map(|_, traj, _| {
            times
                .iter()
                .map(|&t| traj.theta_at(t))
                .collect::<Result<Vec<_>>>()
        })?;
        let mut out = vec![Vec::with_capacity(per_traj.len()); times.len()];
        for row in per_traj {
            for (k, a) in row?.into_iter().enumerate() {
                out[k].push(a);
            }
        }
        Ok(out)
    }

    pub fn summary(&self) -> Result<EnsembleSummary> {
        let records = self.records()?;
        Ok(EnsembleSummary::from_records(self, &records))
    }
}

/// Normalized histogram of the angles of an ensemble at time `t`.
pub fn ensemble_histogram_theta(
    trajectories: &[Trajectory],
    t: f64,
    grid: ThetaGrid,
) -> Result<ProbabilityField> {
    if trajectories.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let angles = trajectories
        .iter()
        .map(|tr| tr.theta_at(t))
        .collect::<Result<Vec<_>>>()?;
    histogram_of_angles(&angles, t, grid)
}

/// Normalized histogram of a set of angles.
pub fn histogram_of_angles(angles: &[AtomAngle], t: f64, grid: ThetaGrid) -> Result<ProbabilityField> {
    if angles.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut counts = vec![0u64; grid.n_cells()];
    for a in angles {
        counts[grid.cell_of(*a)] += 1;
    }
    let scale = 1.0 / (angles.len() as f64 * grid.cell_width());
    ProbabilityField::from_values(grid, counts.into_iter().map(|c| c as f64 * scale).collect(), t)
}

/// Fraction of the ensemble in the excited state, ⟨sin²θ(t)⟩.
pub fn ensemble_excited_population(trajectories: &[Trajectory], t: f64) -> Result<f64> {
    if trajectories.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut sum = 0.0;
    for tr in trajectories {
        sum += tr.theta_at(t)?.excited_probability();
    }
    Ok(sum / trajectories.len() as f64)
}

/// Successive differences of one record's emission times. With
/// `origin_anchored` the interval from t = 0 to the first emission is
/// included (valid when a photon was emitted at t = 0). The interval running
/// into the horizon is censored and never included.
pub fn interarrivals_of(record: &EmissionRecord, origin_anchored: bool) -> Vec<f64> {
    let mut out = Vec::with_capacity(record.times.len());
    let mut prev = if origin_anchored { Some(0.0) } else { None };
    for &t in &record.times {
        if let Some(p) = prev {
            out.push(t - p);
        }
        prev = Some(t);
    }
    out
}

/// Pooled interarrival times of many records, sorted ascending.
pub fn interarrival_samples(records: &[EmissionRecord], origin_anchored: bool) -> Vec<f64> {
    let mut pooled: Vec<f64> = records
        .iter()
        .flat_map(|r| interarrivals_of(r, origin_anchored))
        .collect();
    pooled.sort_by(f64::total_cmp);
    pooled
}

/// Empirical photon intensity over [t0, t1): emissions per trajectory per
/// unit time.
pub fn emission_intensity_estimate(records: &[EmissionRecord], t0: f64, t1: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if !(t1 > t0) {
        return Err(invalid("window", format!("empty window [{t0}, {t1})")));
    }
    let count = records
        .iter()
        .flat_map(|r| r.times.iter())
        .filter(|&&t| t >= t0 && t < t1)
        .count();
    Ok(count as f64 / (records.len() as f64 * (t1 - t0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
}

impl Moments {
    pub fn of(samples: &[f64]) -> Moments {
        let count = samples.len();
        if count == 0 {
            return Moments {
                count,
                mean: f64::NAN,
                variance: f64::NAN,
            };
        }
        let mean = samples.iter().sum::<f64>() / count as f64;
        let variance = if count > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        Moments { count, mean, variance }
    }
}

/// JSON-serializable summary of an ensemble run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n: usize,
    pub params: ModelParams,
    pub semantics: JumpSemantics,
    pub horizon: f64,
    pub seed: u64,
    pub ever_emitted_fraction: f64,
    pub ever_emitted_stderr: f64,
    pub mean_emissions: f64,
    pub interarrival: Moments,
}

impl EnsembleSummary {
    pub fn from_records(ensemble: &Ensemble, records: &[EmissionRecord]) -> Self {
        let n = records.len();
        let emitted = records.iter().filter(|r| !r.times.is_empty()).count();
        let frac = emitted as f64 / n as f64;
        let total: usize = records.iter().map(|r| r.times.len()).sum();
        let anchored = ensemble.params.theta0 == 0.0;
        let intervals = interarrival_samples(records, anchored);
        EnsembleSummary {
            n,
            params: ensemble.params,
            semantics: ensemble.semantics,
            horizon: ensemble.horizon,
            seed: ensemble.seed,
            ever_emitted_fraction: frac,
            ever_emitted_stderr: (frac * (1.0 - frac) / n as f64).sqrt(),
            mean_emissions: total as f64 / n as f64,
            interarrival: Moments::of(&intervals),
        }
    }
}
