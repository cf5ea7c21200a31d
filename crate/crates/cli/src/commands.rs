use std::path::Path;

use serde::{Deserialize, Serialize};
use zerosum_core::{
    eigendecompose, elimination_time_scan, evolve_backward, evolve_with_insertions, DynamicsError,
    ScanRow, TwoSpeciesParams,
};

use crate::error::CliError;
use crate::output::{
    event_records, fmt_num, spectral_digest, to_json, trajectory_csv, write_atomic, ReducedDigest,
    RegimeReport, RunSummary, SpectralDigest,
};
use crate::scenario::{FamilySpec, Scenario};

/// Runs the scenario forward, writing the trajectory CSV and a JSON summary.
pub fn cmd_simulate(
    scenario: &Scenario,
    csv_path: &Path,
    summary_path: &Path,
) -> Result<RunSummary, CliError> {
    let system = scenario.system()?;
    let tol = scenario.config.tolerances;
    let trajectory = evolve_with_insertions(&system, &scenario.config, &scenario.insertions())?;
    let names = &scenario.species_names[..trajectory.final_system.universe()];

    let (spectral, spectral_error) = match spectral_digest(system.matrix(), &tol) {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let reduced = trajectory.final_system.matrix();
    let reduced_spectrum = eigendecompose(reduced, &tol).ok();
    let final_system = ReducedDigest {
        alive: trajectory
            .final_system
            .alive_ids()
            .iter()
            .map(|&id| names[id].clone())
            .collect(),
        negative_offdiag_count: reduced.negative_offdiag_count(tol.zero_tol),
        stationary: reduced_spectrum
            .as_ref()
            .and_then(|s| s.stationary.clone())
            .map(|p| p.into_inner()),
        stationary_status: reduced_spectrum.map(|s| s.stationary_status),
    };
    let regime = match scenario.two_species_params() {
        Some((alpha, beta)) => {
            let start = scenario.population()?;
            Some(RegimeReport::new(&TwoSpeciesParams::new(
                alpha, beta, start[0],
            )?))
        }
        None => None,
    };
    let summary = RunSummary {
        species: names.to_vec(),
        terminal_populations: trajectory.terminal_populations(),
        exit_reason: trajectory.terminated,
        steps_taken: trajectory.steps_taken,
        events: event_records(&trajectory, names),
        spectral,
        spectral_error,
        final_system,
        regime,
    };

    write_atomic(csv_path, trajectory_csv(&trajectory, names).as_bytes())?;
    write_atomic(summary_path, to_json(&summary).as_bytes())?;
    Ok(summary)
}

/// Eigenstructure of the scenario matrix as a JSON document.
pub fn cmd_spectrum(scenario: &Scenario, out: Option<&Path>) -> Result<SpectralDigest, CliError> {
    let digest = spectral_digest(&scenario.matrix()?, &scenario.config.tolerances)?;
    if let Some(path) = out {
        write_atomic(path, to_json(&digest).as_bytes())?;
    }
    Ok(digest)
}

pub fn cmd_classify(alpha: f64, beta: f64, a: f64) -> Result<RegimeReport, CliError> {
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(CliError::Validation("alpha and beta must be finite".into()));
    }
    Ok(RegimeReport::new(&TwoSpeciesParams::new(alpha, beta, a)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardSummary {
    pub horizon: usize,
    pub max_steps: usize,
    pub offender: Option<String>,
    pub endpoint: Vec<f64>,
}

pub fn cmd_backward(scenario: &Scenario, max_steps: usize) -> Result<BackwardSummary, CliError> {
    let m = scenario.matrix()?;
    let report = evolve_backward(
        &m,
        &scenario.population()?,
        max_steps,
        scenario.config.tolerances.zero_tol,
    )?;
    Ok(BackwardSummary {
        horizon: report.horizon,
        max_steps,
        offender: report.offender.map(|i| scenario.species_names[i].clone()),
        endpoint: report.endpoint,
    })
}

/// `scale,steps_to_elimination`, with `none` where no species died.
pub fn sweep_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("scale,steps_to_elimination\n");
    for row in rows {
        out.push_str(&fmt_num(row.scale));
        out.push(',');
        match &row.steps {
            Ok(s) => out.push_str(&s.to_string()),
            Err(_) => out.push_str("none"),
        }
        out.push('\n');
    }
    out
}

pub fn cmd_sweep(
    scenario: &Scenario,
    family: FamilySpec,
    scales: &[f64],
    out: Option<&Path>,
) -> Result<Vec<ScanRow>, CliError> {
    if scales.is_empty() {
        return Err(CliError::Usage("at least one scale is required".into()));
    }
    if matches!(family, FamilySpec::TwoSpecies { .. }) && scenario.dim() != 2 {
        return Err(CliError::Validation(
            "two-species family needs a two-species initial population".into(),
        ));
    }
    let base = scenario.matrix()?;
    let rows = elimination_time_scan(
        |c| family.build(c, &base),
        &scenario.population()?,
        scales,
        &scenario.config,
    );
    for row in &rows {
        match &row.steps {
            Ok(_) | Err(DynamicsError::NoElimination) => {}
            Err(e) => return Err(e.clone().into()),
        }
    }
    if let Some(path) = out {
        write_atomic(path, sweep_csv(&rows).as_bytes())?;
    }
    Ok(rows)
}
