//! Conserved-sum linear evolution of competing species.
//!
//! Populations live on the probability simplex and evolve under a matrix whose
//! columns each sum to one, so whatever one species gains another loses. With
//! all entries in `[0, 1]` the evolution is an ordinary Markov chain (the
//! altruistic regime); once some off-diagonal entry turns negative the system
//! becomes competitive and species can be driven to extinction in finite time.
//!
//! The crate is organized as:
//!
//! - [`population`], [`matrix`], [`random`]: domain types and their validation.
//! - [`spectral`]: eigenstructure, stationary distribution, convergence rate.
//! - [`dynamics`]: forward evolution with extinction events, species insertion,
//!   backward horizons and elimination-time scans.
//! - [`analytic`]: the exact two-species solution and regime classification.

pub mod analytic;
pub mod dynamics;
pub mod matrix;
pub mod population;
pub mod random;
pub mod spectral;
mod tolerance;

pub use analytic::{
    classify_regime, closed_form, crosscheck, predict_winner, AnalyticError, ClosedFormSolution,
    CrosscheckReport, Regime, TwoSpeciesParams, WinnerOutcome,
};
pub use dynamics::{
    add_species, crossing_fraction, eliminate_species, elimination_time_scan, evolve,
    evolve_backward, evolve_with_insertions, growth_unconstrained, step, ActiveSystem,
    BackwardReport, DynamicsError, EliminationEvent, InsertionRecord, ScanRow, ScheduledInsertion,
    SimulationConfig, Snapshot, SnapshotEvent, Termination, Trajectory, TrajectoryEvent,
};
pub use matrix::{
    classify_matrix, matrix_from_generator, two_species_matrix, EvolutionMatrix, GeneratorMatrix,
    MatrixClass, MatrixError, MatrixKind,
};
pub use population::{make_population, PopulationError, PopulationVector};
pub use random::{random_competitive, random_stochastic};
pub use spectral::{
    check_biorthogonality, convergence_rate, eigendecompose, stationary_by_iteration,
    BiorthogonalityReport, SpectralError, SpectralSummary, StationaryStatus,
};
pub use tolerance::{ToleranceConfig, CONSERVATION_TOL};

pub use nalgebra;
pub use num_complex::Complex64;
