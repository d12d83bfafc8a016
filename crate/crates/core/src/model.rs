//! Domain types, the deterministic drift law and the jump intensities.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// An atomic angle θ reduced modulo π to the principal cell [−π/2, π/2).
///
/// The distribution of θ is π-periodic, so −π/2 and π/2 name the same state;
/// −π/2 is the stored representative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AtomAngle(f64);

impl AtomAngle {
    pub const GROUND: AtomAngle = AtomAngle(0.0);

    /// Reduces an arbitrary angle into [−π/2, π/2).
    pub fn new(theta: f64) -> Self {
        if (-FRAC_PI_2..FRAC_PI_2).contains(&theta) {
            return AtomAngle(theta);
        }
        let shifted = (theta + FRAC_PI_2).rem_euclid(PI);
        let mut reduced = shifted - FRAC_PI_2;
        // rem_euclid can round up to exactly π for tiny negative inputs
        if reduced >= FRAC_PI_2 {
            reduced -= PI;
        }
        AtomAngle(reduced)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Probability sin²θ of finding the atom in the excited state.
    pub fn excited_probability(self) -> f64 {
        let s = self.0.sin();
        s * s
    }
}

impl fmt::Display for AtomAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Physical parameters of the driven atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Rabi frequency Ω (rad per unit time).
    pub omega: f64,
    /// Spontaneous-emission coefficient γ (per unit time).
    pub gamma: f64,
    /// Initial angle θ₀ in the principal cell.
    pub theta0: f64,
}

impl ModelParams {
    pub fn new(omega: f64, gamma: f64, theta0: f64) -> Result<Self> {
        let params = ModelParams {
            omega,
            gamma,
            theta0,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters for an atom that has just emitted (θ₀ = 0).
    pub fn after_emission(omega: f64, gamma: f64) -> Result<Self> {
        Self::new(omega, gamma, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(invalid("gamma", format!("must be finite and > 0, got {}", self.gamma)));
        }
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return Err(invalid("omega", format!("must be finite and >= 0, got {}", self.omega)));
        }
        if !(self.theta0.is_finite() && (-FRAC_PI_2..FRAC_PI_2).contains(&self.theta0)) {
            return Err(invalid(
                "theta0",
                format!("must lie in [-pi/2, pi/2), got {}", self.theta0),
            ));
        }
        Ok(())
    }

    pub fn initial_angle(&self) -> AtomAngle {
        AtomAngle::new(self.theta0)
    }

    /// Drift speed of θ between jumps.
    pub fn drift_speed(&self) -> f64 {
        0.5 * self.omega
    }
}

/// Which process governs the resets of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpSemantics {
    /// Resets at hazard γ sin²θ; each reset emits a photon with probability
    /// sin²θ(t⁻). This is the jump process of the forward equation.
    KolmogorovLiteral,
    /// Resets only at photon emissions, with hazard γ sin⁴θ.
    EmissionOnly,
}

impl JumpSemantics {
    /// Reset hazard at angle θ.
    pub fn hazard(self, theta: AtomAngle, gamma: f64) -> f64 {
        match self {
            JumpSemantics::KolmogorovLiteral => jump_hazard(theta, gamma),
            JumpSemantics::EmissionOnly => emission_intensity(theta, gamma),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JumpSemantics::KolmogorovLiteral => "literal",
            JumpSemantics::EmissionOnly => "emission",
        }
    }
}

impl fmt::Display for JumpSemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for JumpSemantics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" | "kolmogorov" | "kolmogorov_literal" => Ok(JumpSemantics::KolmogorovLiteral),
            "emission" | "emission_only" => Ok(JumpSemantics::EmissionOnly),
            other => Err(invalid(
                "semantics",
                format!("expected `literal` or `emission`, got `{other}`"),
            )),
        }
    }
}

/// Angle reached after drifting for time `t` from `theta_start`.
pub fn drift_angle(t: f64, params: &ModelParams, theta_start: AtomAngle) -> AtomAngle {
    debug_assert!(t >= 0.0, "drift time must be nonnegative");
    AtomAngle::new(theta_start.value() + params.drift_speed() * t)
}

/// Reset hazard γ sin²θ.
pub fn jump_hazard(theta: AtomAngle, gamma: f64) -> f64 {
    gamma * theta.excited_probability()
}

/// Photon-emission intensity γ sin⁴θ.
pub fn emission_intensity(theta: AtomAngle, gamma: f64) -> f64 {
    let s2 = theta.excited_probability();
    gamma * s2 * s2
}
