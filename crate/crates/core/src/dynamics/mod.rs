//! Forward and backward evolution of populations.
//!
//! A step applies `φ ← M φ`. In competitive systems that product can push a
//! population below zero; the engine then stops at the interpolated instant the
//! population reaches zero, removes that species from the matrix and carries on
//! in the reduced space.

mod backward;
mod evolve;
mod scan;
mod system;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{EvolutionMatrix, MatrixError};
use crate::population::PopulationError;
use crate::tolerance::ToleranceConfig;

pub use backward::{evolve_backward, BackwardReport};
pub use evolve::{
    evolve, evolve_with_insertions, EliminationEvent, InsertionRecord, ScheduledInsertion,
    Snapshot, SnapshotEvent, Termination, Trajectory, TrajectoryEvent,
};
pub use scan::{elimination_time_scan, ScanRow};
pub use system::{add_species, eliminate_species, ActiveSystem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("species at local index {local_index} has population {value}, not zero")]
    NotExtinct { local_index: usize, value: f64 },
    #[error("cannot eliminate the last remaining species")]
    LastSpecies,
    #[error("local index {index} out of range for {len} species")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("new column sums to {0}, expected 1")]
    BadColumnSum(f64),
    #[error("seed fraction {0} must lie in (0, 1)")]
    BadFraction(f64),
    #[error("species ids must be strictly increasing and below {universe}")]
    BadIds { universe: usize },
    #[error("matrix is singular (determinant {0})")]
    SingularMatrix(f64),
    #[error("no species was eliminated")]
    NoElimination,
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Population(#[from] PopulationError),
}

/// Run controls for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub max_steps: usize,
    /// Stop once the L1 change over one full step drops below this.
    pub convergence_tol: f64,
    pub tolerances: ToleranceConfig,
    /// Record every n-th full step; event rows and the final state are always kept.
    pub record_every: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            max_steps: 10_000,
            convergence_tol: 1e-12,
            tolerances: ToleranceConfig::default(),
            record_every: 1,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.max_steps == 0 {
            return Err(DynamicsError::InvalidConfig("max_steps must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(DynamicsError::InvalidConfig(
                "record_every must be at least 1",
            ));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol < 0.0 {
            return Err(DynamicsError::InvalidConfig(
                "convergence_tol must be non-negative",
            ));
        }
        if !self.tolerances.is_valid() {
            return Err(DynamicsError::InvalidConfig("tolerances must be positive"));
        }
        Ok(())
    }
}

/// One application of the evolution matrix. Entries of the result may be negative.
pub fn step(m: &EvolutionMatrix, phi: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    if phi.len() != m.dim() {
        return Err(DynamicsError::DimensionMismatch {
            expected: m.dim(),
            got: phi.len(),
        });
    }
    Ok(m.apply(phi))
}

/// Earliest zero crossing within a step, by linear interpolation.
///
/// Among entries with `after < -zero_tol`, returns the local index with the
/// smallest `τ = before / (before - after)`; ties go to the lower index.
pub fn crossing_fraction(before: &[f64], after: &[f64], zero_tol: f64) -> Option<(usize, f64)> {
    before
        .iter()
        .zip(after)
        .enumerate()
        .filter(|(_, (_, &a))| a < -zero_tol)
        .map(|(i, (&b, &a))| {
            let b = b.max(0.0);
            (i, b / (b - a))
        })
        .fold(None, |best: Option<(usize, f64)>, (i, tau)| match best {
            Some((_, t)) if t <= tau => best,
            _ => Some((i, tau)),
        })
}

/// Resource-plenty growth: each population scales by its own rate per step.
pub fn growth_unconstrained(
    diagonal_rates: &[f64],
    phi0: &[f64],
    steps: u32,
) -> Result<Vec<f64>, DynamicsError> {
    if diagonal_rates.len() != phi0.len() {
        return Err(DynamicsError::DimensionMismatch {
            expected: diagonal_rates.len(),
            got: phi0.len(),
        });
    }
    Ok(diagonal_rates
        .iter()
        .zip(phi0)
        .map(|(&r, &p)| {
            let factor = match i32::try_from(steps) {
                Ok(s) => r.powi(s),
                Err(_) => r.powf(f64::from(steps)),
            };
            factor * p
        })
        .collect())
}
