//! Trajectory CSV, summary records and atomic file writes.
//!
//! Floating-point fields are written with 17 significant digits so that every
//! value round-trips exactly.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use zerosum_core::{
    check_biorthogonality, classify_matrix, eigendecompose, predict_winner,
    stationary_by_iteration, BiorthogonalityReport, EvolutionMatrix, MatrixKind, Regime,
    SnapshotEvent, SpectralError, StationaryStatus, ToleranceConfig, Trajectory, TrajectoryEvent,
    TwoSpeciesParams, WinnerOutcome,
};

use crate::error::CliError;

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes via a temporary file in the destination directory, so a failed
/// write never leaves a partial file at `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// `step,tau,<names...>,event`, one row per snapshot.
pub fn trajectory_csv(trajectory: &Trajectory, names: &[String]) -> String {
    let mut out = String::from("step,tau");
    for name in names {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",event\n");
    for snap in &trajectory.snapshots {
        out.push_str(&snap.step.to_string());
        out.push(',');
        out.push_str(&fmt_num(snap.tau));
        for &p in &snap.populations {
            out.push(',');
            out.push_str(&fmt_num(p));
        }
        out.push(',');
        match snap.event {
            Some(SnapshotEvent::Eliminated(id)) => {
                out.push_str("elim:");
                out.push_str(&names[id]);
            }
            Some(SnapshotEvent::Inserted(id)) => {
                out.push_str("insert:");
                out.push_str(&names[id]);
            }
            None => {}
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDigest {
    /// `(re, im)` pairs, unit eigenvalue first.
    pub eigenvalues: Vec<(f64, f64)>,
    pub lambda2_modulus: Option<f64>,
    pub lambda2_is_complex: bool,
    pub stationary: Option<Vec<f64>>,
    pub stationary_status: StationaryStatus,
    pub degenerate: bool,
    /// Absent when the spectrum is degenerate.
    pub biorthogonality: Option<BiorthogonalityReport>,
    /// Iterated-power limit, for stochastic matrices where it converges.
    pub stationary_by_iteration: Option<Vec<f64>>,
}

pub const BIORTHOGONALITY_TOL: f64 = 1e-8;

pub fn spectral_digest(
    m: &EvolutionMatrix,
    tol: &ToleranceConfig,
) -> Result<SpectralDigest, SpectralError> {
    let s = eigendecompose(m, tol)?;
    let biorthogonality = check_biorthogonality(&s, BIORTHOGONALITY_TOL).ok();
    let stationary_by_iteration = if classify_matrix(m, tol).kind == MatrixKind::Stochastic {
        stationary_by_iteration(m, 1e-14, 80)
            .ok()
            .map(|p| p.into_inner())
    } else {
        None
    };
    Ok(SpectralDigest {
        eigenvalues: s.eigenvalues.iter().map(|z| (z.re, z.im)).collect(),
        lambda2_modulus: s.lambda2_modulus,
        lambda2_is_complex: s.lambda2_is_complex,
        stationary: s.stationary.map(|p| p.into_inner()),
        stationary_status: s.stationary_status,
        degenerate: s.degenerate,
        biorthogonality,
        stationary_by_iteration,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EventRecord {
    Elimination {
        species: String,
        step: usize,
        tau: f64,
        neg_offdiag_before: usize,
        neg_offdiag_after: usize,
    },
    Insertion {
        species: String,
        step: usize,
        seed_fraction: f64,
    },
}

pub fn event_records(trajectory: &Trajectory, names: &[String]) -> Vec<EventRecord> {
    trajectory
        .events
        .iter()
        .map(|e| match e {
            TrajectoryEvent::Elimination(ev) => EventRecord::Elimination {
                species: names[ev.species_id].clone(),
                step: ev.step_index,
                tau: ev.fraction,
                neg_offdiag_before: ev.neg_offdiag_before,
                neg_offdiag_after: ev.neg_offdiag_after,
            },
            TrajectoryEvent::Insertion(ins) => EventRecord::Insertion {
                species: names[ins.species_id].clone(),
                step: ins.step_index,
                seed_fraction: ins.seed_fraction,
            },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    pub regime: Regime,
    pub winner: WinnerOutcome,
}

impl RegimeReport {
    pub fn new(params: &TwoSpeciesParams) -> Self {
        Self {
            alpha: params.alpha,
            beta: params.beta,
            a: params.a,
            regime: zerosum_core::classify_regime(params.alpha, params.beta),
            winner: predict_winner(params),
        }
    }

    /// `Coexistence, Both`, `UnstableWinnerTakesAll, species 1`, `Degenerate`, ...
    pub fn line(&self, names: Option<&[String]>) -> String {
        if self.regime == Regime::Degenerate {
            return "Degenerate".to_string();
        }
        let winner = match self.winner {
            WinnerOutcome::Both => "Both".to_string(),
            WinnerOutcome::KnifeEdge => "Knife-edge".to_string(),
            WinnerOutcome::Survivor(i) => match names {
                Some(n) => n[i].clone(),
                None => format!("species {}", i + 1),
            },
        };
        format!("{:?}, {}", self.regime, winner)
    }
}

/// What the surviving species settle into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedDigest {
    pub alive: Vec<String>,
    pub negative_offdiag_count: usize,
    pub stationary: Option<Vec<f64>>,
    pub stationary_status: Option<StationaryStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub species: Vec<String>,
    pub terminal_populations: Vec<f64>,
    pub exit_reason: zerosum_core::Termination,
    pub steps_taken: usize,
    pub events: Vec<EventRecord>,
    pub spectral: Option<SpectralDigest>,
    pub spectral_error: Option<String>,
    pub final_system: ReducedDigest,
    pub regime: Option<RegimeReport>,
}

pub fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summary serializes");
    s.push('\n');
    s
}
