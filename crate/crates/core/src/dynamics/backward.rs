use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::matrix::EvolutionMatrix;
use crate::population::PopulationVector;
use nalgebra::DVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardReport {
    /// Backward steps completed with every population still in `[0, 1]`.
    pub horizon: usize,
    /// Lowest-index species that left `[0, 1]` on the next step.
    pub offender: Option<usize>,
    /// State after `horizon` backward steps.
    pub endpoint: Vec<f64>,
}

/// Runs `φ(t - Δt) = M⁻¹ φ(t)` until a population leaves the physical range.
///
/// `M` is factorized once and each step is a triangular solve.
pub fn evolve_backward(
    m: &EvolutionMatrix,
    phi0: &PopulationVector,
    max_steps: usize,
    zero_tol: f64,
) -> Result<BackwardReport, DynamicsError> {
    if phi0.len() != m.dim() {
        return Err(DynamicsError::DimensionMismatch {
            expected: m.dim(),
            got: phi0.len(),
        });
    }
    let lu = m.entries().clone().lu();
    let det = lu.determinant();
    if det.abs() <= 1e-12 {
        return Err(DynamicsError::SingularMatrix(det));
    }
    let mut current = DVector::from_column_slice(phi0.as_slice());
    for completed in 0..max_steps {
        let previous = lu
            .solve(&current)
            .ok_or(DynamicsError::SingularMatrix(det))?;
        let offender = previous
            .iter()
            .position(|&x| x < -zero_tol || x > 1.0 + zero_tol);
        if offender.is_some() {
            return Ok(BackwardReport {
                horizon: completed,
                offender,
                endpoint: current.iter().copied().collect(),
            });
        }
        current = previous;
    }
    Ok(BackwardReport {
        horizon: max_steps,
        offender: None,
        endpoint: current.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::step;
    use crate::matrix::two_species_matrix;
    use crate::population::make_population;

    #[test]
    fn permutation_is_reversible() {
        let swap = EvolutionMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], 1.0).unwrap();
        let r =
            evolve_backward(&swap, &make_population(&[0.3, 0.7]).unwrap(), 1000, 1e-12).unwrap();
        assert_eq!(r.horizon, 1000);
        assert_eq!(r.offender, None);
    }

    #[test]
    fn fixed_point_never_breaks() {
        // rounding noise along the unstable transient grows by 1.25 per step,
        // so a float fixed point only holds for about 160 backward steps
        let m = two_species_matrix(0.1, 0.1);
        let r = evolve_backward(&m, &make_population(&[0.5, 0.5]).unwrap(), 100, 1e-12).unwrap();
        assert_eq!(r.horizon, 100);
    }

    #[test]
    fn transient_blows_up_after_seven_steps() {
        // deviation 0.1 grows by 1/0.8 per step: 0.1 * 1.25^7 < 0.5 < 0.1 * 1.25^8
        let m = two_species_matrix(0.1, 0.1);
        let phi0 = make_population(&[0.6, 0.4]).unwrap();
        let r = evolve_backward(&m, &phi0, 100, 1e-12).unwrap();
        assert_eq!(r.horizon, 7);
        assert_eq!(r.offender, Some(0));

        let mut phi = r.endpoint.clone();
        for _ in 0..r.horizon {
            phi = step(&m, &phi).unwrap();
        }
        for (a, b) in phi.iter().zip(phi0.as_slice()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = two_species_matrix(0.5, 0.5);
        let r = evolve_backward(&m, &make_population(&[0.5, 0.5]).unwrap(), 10, 1e-12);
        assert!(matches!(r, Err(DynamicsError::SingularMatrix(_))));
    }
}
