//! A numerical laboratory for a resonantly driven two-level atom whose
//! photo-emissions are treated as a piecewise-deterministic Markov process.
//!
//! The atomic state is a single angle θ that drifts at the constant rate Ω/2
//! between quantum jumps and resets to the ground state (θ = 0) when a jump
//! occurs. The crate provides
//!
//! * [`model`]: parameters, the drift law, jump and emission intensities;
//! * [`analytic`]: closed-form no-pump results and the inter-emission density;
//! * [`pde`]: a conservative finite-volume solver for the forward equation of
//!   the angle distribution p(θ, t);
//! * [`mc`]: an event-driven thinning simulator of single trajectories and
//!   seeded ensembles;
//! * [`baseline`]: a 2×2 Lindblad integrator and the truncated ("no-jump")
//!   delay function;
//! * [`stats`]: Kolmogorov–Smirnov tests, moments and scaling regressions;
//! * [`quadrature`]: adaptive Gauss–Kronrod integration used as an
//!   independent check on closed forms.
//!
//! Ensemble work runs on rayon when the `parallel` feature (on by default) is
//! enabled and falls back to a sequential loop otherwise. Both paths produce
//! identical results.

pub mod analytic;
pub mod baseline;
pub mod error;
pub mod export;
pub mod mc;
pub mod model;
pub mod pde;
pub mod quadrature;
pub mod stats;

pub use error::{Error, Result};
pub use model::{AtomAngle, JumpSemantics, ModelParams};
