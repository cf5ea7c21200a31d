use rayon::prelude::*;

use super::evolve::evolve;
use super::system::ActiveSystem;
use super::{DynamicsError, SimulationConfig};
use crate::matrix::{EvolutionMatrix, MatrixError};
use crate::population::PopulationVector;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub scale: f64,
    /// Steps to the first elimination, or why there was none.
    pub steps: Result<usize, DynamicsError>,
}

/// Steps to the first extinction for each member `builder(c)` of a family.
///
/// Rows come back in the order of `scales`; runs execute in parallel.
pub fn elimination_time_scan<F>(
    builder: F,
    phi0: &PopulationVector,
    scales: &[f64],
    config: &SimulationConfig,
) -> Vec<ScanRow>
where
    F: Fn(f64) -> Result<EvolutionMatrix, MatrixError> + Sync,
{
    scales
        .par_iter()
        .map(|&scale| ScanRow {
            scale,
            steps: steps_to_first_elimination(&builder, scale, phi0, config),
        })
        .collect()
}

fn steps_to_first_elimination<F>(
    builder: &F,
    scale: f64,
    phi0: &PopulationVector,
    config: &SimulationConfig,
) -> Result<usize, DynamicsError>
where
    F: Fn(f64) -> Result<EvolutionMatrix, MatrixError>,
{
    let system = ActiveSystem::new(builder(scale)?, phi0.clone())?;
    let trajectory = evolve(&system, config)?;
    let first = trajectory
        .eliminations()
        .next()
        .ok_or(DynamicsError::NoElimination)?;
    Ok(first.steps_to_reach())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::two_species_matrix;
    use crate::population::make_population;

    #[test]
    fn steps_halve_as_coupling_doubles() {
        let half = make_population(&[0.5, 0.5]).unwrap();
        let rows = elimination_time_scan(
            |c| Ok(two_species_matrix(c, -c / 2.0)),
            &half,
            &[0.01, 0.02, 0.04],
            &SimulationConfig::default(),
        );
        let steps: Vec<usize> = rows.iter().map(|r| r.steps.clone().unwrap()).collect();
        // frozen from a brute-force iteration of the 2x2 recurrence
        assert_eq!(steps, vec![81, 41, 21]);
        assert_eq!(rows[1].scale, 0.02);
    }

    #[test]
    fn coexistence_family_never_eliminates() {
        let half = make_population(&[0.5, 0.5]).unwrap();
        let rows = elimination_time_scan(
            |c| Ok(two_species_matrix(c, c)),
            &half,
            &[0.05, 0.1],
            &SimulationConfig::default(),
        );
        assert!(rows
            .iter()
            .all(|r| r.steps == Err(DynamicsError::NoElimination)));
    }

    #[test]
    fn already_extinct_start_takes_zero_steps() {
        let start = make_population(&[0.0, 1.0]).unwrap();
        let rows = elimination_time_scan(
            |c| Ok(two_species_matrix(c, -c / 2.0)),
            &start,
            &[0.02],
            &SimulationConfig::default(),
        );
        assert_eq!(rows[0].steps, Ok(0));
    }
}
