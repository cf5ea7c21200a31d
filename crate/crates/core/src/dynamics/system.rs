use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::matrix::EvolutionMatrix;
use crate::population::PopulationVector;
use crate::tolerance::CONSERVATION_TOL;

/// The surviving species: reduced matrix, their populations and original ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSystem {
    matrix: EvolutionMatrix,
    populations: PopulationVector,
    alive_ids: Vec<usize>,
    /// Number of species slots ever created; ids are drawn from `0..universe`.
    universe: usize,
}

impl ActiveSystem {
    pub fn new(
        matrix: EvolutionMatrix,
        populations: PopulationVector,
    ) -> Result<Self, DynamicsError> {
        let n = matrix.dim();
        Self::with_ids(matrix, populations, (0..n).collect(), n)
    }

    pub fn with_ids(
        matrix: EvolutionMatrix,
        populations: PopulationVector,
        alive_ids: Vec<usize>,
        universe: usize,
    ) -> Result<Self, DynamicsError> {
        if populations.len() != matrix.dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: matrix.dim(),
                got: populations.len(),
            });
        }
        if alive_ids.len() != matrix.dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: matrix.dim(),
                got: alive_ids.len(),
            });
        }
        let increasing = alive_ids.windows(2).all(|w| w[0] < w[1]);
        if !increasing || alive_ids.last().is_some_and(|&id| id >= universe) {
            return Err(DynamicsError::BadIds { universe });
        }
        Ok(Self {
            matrix,
            populations,
            alive_ids,
            universe,
        })
    }

    pub fn matrix(&self) -> &EvolutionMatrix {
        &self.matrix
    }

    pub fn populations(&self) -> &PopulationVector {
        &self.populations
    }

    pub fn alive_ids(&self) -> &[usize] {
        &self.alive_ids
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn dim(&self) -> usize {
        self.alive_ids.len()
    }

    pub fn local_index(&self, species_id: usize) -> Option<usize> {
        self.alive_ids.binary_search(&species_id).ok()
    }

    /// Populations over all `universe` slots, zero for species not alive.
    pub fn embed(&self) -> Vec<f64> {
        let mut full = vec![0.0; self.universe];
        for (&id, &p) in self.alive_ids.iter().zip(self.populations.as_slice()) {
            full[id] = p;
        }
        full
    }

    pub(crate) fn set_populations(&mut self, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.dim());
        self.populations = PopulationVector::from_raw(values);
    }
}

/// Removes an extinct species, folding its row entries back onto the donors'
/// diagonals so every surviving column still sums to one.
pub fn eliminate_species(
    system: &ActiveSystem,
    local_index: usize,
    zero_tol: f64,
) -> Result<ActiveSystem, DynamicsError> {
    let n = system.dim();
    if local_index >= n {
        return Err(DynamicsError::IndexOutOfRange {
            index: local_index,
            len: n,
        });
    }
    let value = system.populations[local_index];
    if value.abs() > zero_tol {
        return Err(DynamicsError::NotExtinct { local_index, value });
    }
    if n == 1 {
        return Err(DynamicsError::LastSpecies);
    }
    let m = system.matrix.entries();
    let keep: Vec<usize> = (0..n).filter(|&i| i != local_index).collect();
    let mut reduced = DMatrix::from_fn(n - 1, n - 1, |r, c| m[(keep[r], keep[c])]);
    for (c, &j) in keep.iter().enumerate() {
        reduced[(c, c)] += m[(local_index, j)];
    }
    let matrix = EvolutionMatrix::new(reduced, system.matrix.dt())?;
    let populations = keep.iter().map(|&i| system.populations[i]).collect();
    let alive_ids = keep.iter().map(|&i| system.alive_ids[i]).collect();
    Ok(ActiveSystem {
        matrix,
        populations: PopulationVector::from_raw(populations),
        alive_ids,
        universe: system.universe,
    })
}

/// Inserts a new species (a mutant) with id `universe`.
///
/// `couplings_in[j]` is the per-step flow from existing species `j` into the
/// newcomer and is taken off `M_jj`; `couplings_out[i]` is the newcomer's flow
/// into existing species `i`, with `self_rate` completing its column. Existing
/// populations shrink by `1 - seed_fraction` to make room.
pub fn add_species(
    system: &ActiveSystem,
    couplings_in: &[f64],
    couplings_out: &[f64],
    self_rate: f64,
    seed_fraction: f64,
) -> Result<ActiveSystem, DynamicsError> {
    let n = system.dim();
    for v in [couplings_in, couplings_out] {
        if v.len() != n {
            return Err(DynamicsError::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    let column_sum: f64 = couplings_out.iter().sum::<f64>() + self_rate;
    if !column_sum.is_finite() || (column_sum - 1.0).abs() > CONSERVATION_TOL {
        return Err(DynamicsError::BadColumnSum(column_sum));
    }
    if !(seed_fraction > 0.0 && seed_fraction < 1.0) {
        return Err(DynamicsError::BadFraction(seed_fraction));
    }
    let m = system.matrix.entries();
    let mut grown = DMatrix::zeros(n + 1, n + 1);
    grown.view_mut((0, 0), (n, n)).copy_from(m);
    for j in 0..n {
        grown[(n, j)] = couplings_in[j];
        grown[(j, j)] -= couplings_in[j];
        grown[(j, n)] = couplings_out[j];
    }
    grown[(n, n)] = self_rate;
    let matrix = EvolutionMatrix::new(grown, system.matrix.dt())?;

    let mut populations: Vec<f64> = system
        .populations
        .as_slice()
        .iter()
        .map(|p| p * (1.0 - seed_fraction))
        .collect();
    populations.push(seed_fraction);
    let mut alive_ids = system.alive_ids.clone();
    alive_ids.push(system.universe);
    Ok(ActiveSystem {
        matrix,
        populations: PopulationVector::from_raw(populations),
        alive_ids,
        universe: system.universe + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{classify_matrix, two_species_matrix, MatrixKind};
    use crate::population::make_population;
    use crate::tolerance::ToleranceConfig;
    use approx::assert_abs_diff_eq;

    fn system(m: EvolutionMatrix, phi: &[f64]) -> ActiveSystem {
        ActiveSystem::new(m, make_population(phi).unwrap()).unwrap()
    }

    #[test]
    fn eliminating_to_one_species() {
        let s = system(two_species_matrix(0.1, 0.2), &[0.0, 1.0]);
        let r = eliminate_species(&s, 0, 1e-12).unwrap();
        assert_eq!(r.matrix().rows(), vec![vec![1.0]]);
        assert_eq!(r.populations().as_slice(), &[1.0]);
        assert_eq!(r.alive_ids(), &[1]);
        assert_eq!(r.embed(), vec![0.0, 1.0]);
    }

    #[test]
    fn fold_keeps_column_sum() {
        // 1.05 + (-0.05) folded back onto the survivor's diagonal
        let s = system(two_species_matrix(0.1, -0.05), &[0.0, 1.0]);
        let r = eliminate_species(&s, 0, 1e-12).unwrap();
        assert_abs_diff_eq!(r.matrix().get(0, 0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ids_skip_eliminated_middle() {
        let m = EvolutionMatrix::from_rows(
            &[
                vec![0.8, 0.1, -0.1],
                vec![0.1, 0.7, 0.2],
                vec![0.1, 0.2, 0.9],
            ],
            1.0,
        )
        .unwrap();
        let s = system(m, &[0.5, 0.0, 0.5]);
        let r = eliminate_species(&s, 1, 1e-12).unwrap();
        assert_eq!(r.alive_ids(), &[0, 2]);
        assert_eq!(r.embed(), vec![0.5, 0.0, 0.5]);
        assert_eq!(r.local_index(2), Some(1));
        assert_eq!(r.local_index(1), None);
        let expected = [[0.9, -0.1], [0.1, 1.1]];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(r.matrix().get(i, j), expected[i][j], epsilon = 1e-15);
            }
        }
        let tol = ToleranceConfig::default();
        assert!(
            classify_matrix(r.matrix(), &tol).negative_offdiag_count
                <= classify_matrix(s.matrix(), &tol).negative_offdiag_count
        );
    }

    #[test]
    fn elimination_errors() {
        let s = system(two_species_matrix(0.1, 0.2), &[0.3, 0.7]);
        assert!(matches!(
            eliminate_species(&s, 0, 1e-12),
            Err(DynamicsError::NotExtinct { .. })
        ));
        assert!(matches!(
            eliminate_species(&s, 5, 1e-12),
            Err(DynamicsError::IndexOutOfRange { .. })
        ));
        let one = system(EvolutionMatrix::identity(1), &[1.0]);
        let zeroed = ActiveSystem::new(
            EvolutionMatrix::identity(1),
            PopulationVector::from_raw(vec![0.0]),
        )
        .unwrap();
        assert_eq!(
            eliminate_species(&zeroed, 0, 1e-12),
            Err(DynamicsError::LastSpecies)
        );
        assert!(eliminate_species(&one, 0, 1e-12).is_err());
    }

    #[test]
    fn mutant_insertion() {
        let s = system(EvolutionMatrix::identity(1), &[1.0]);
        let g = add_species(&s, &[0.1], &[0.05], 0.95, 0.01).unwrap();
        assert_eq!(g.dim(), 2);
        assert_abs_diff_eq!(g.matrix().get(0, 0), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(g.matrix().get(1, 0), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(g.matrix().get(0, 1), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(g.matrix().get(1, 1), 0.95, epsilon = 1e-15);
        assert_abs_diff_eq!(g.populations()[0], 0.99, epsilon = 1e-15);
        assert_abs_diff_eq!(g.populations()[1], 0.01, epsilon = 1e-15);
        assert_eq!(g.alive_ids(), &[0, 1]);
        assert_eq!(g.universe(), 2);

        let half = add_species(&s, &[0.0], &[0.0], 1.0, 0.5).unwrap();
        assert_eq!(half.populations().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn decoupled_insertion_stays_stochastic() {
        let s = system(two_species_matrix(0.1, 0.2), &[0.4, 0.6]);
        let g = add_species(&s, &[0.0, 0.0], &[0.0, 0.0], 1.0, 0.2).unwrap();
        let tol = ToleranceConfig::default();
        assert_eq!(
            classify_matrix(g.matrix(), &tol).kind,
            MatrixKind::Stochastic
        );
        assert_eq!(g.matrix().get(2, 0), 0.0);
        assert_eq!(g.matrix().get(0, 2), 0.0);
        assert_eq!(g.alive_ids(), &[0, 1, 2]);
    }

    #[test]
    fn insertion_errors() {
        let s = system(EvolutionMatrix::identity(1), &[1.0]);
        assert!(matches!(
            add_species(&s, &[0.1], &[0.1], 0.95, 0.1),
            Err(DynamicsError::BadColumnSum(_))
        ));
        assert_eq!(
            add_species(&s, &[0.1], &[0.05], 0.95, 1.0),
            Err(DynamicsError::BadFraction(1.0))
        );
        assert!(matches!(
            add_species(&s, &[0.1, 0.0], &[0.05], 0.95, 0.1),
            Err(DynamicsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn id_validation() {
        let m = EvolutionMatrix::identity(2);
        let p = make_population(&[0.5, 0.5]).unwrap();
        assert!(ActiveSystem::with_ids(m.clone(), p.clone(), vec![3, 1], 5).is_err());
        assert!(ActiveSystem::with_ids(m.clone(), p.clone(), vec![1, 5], 5).is_err());
        assert!(ActiveSystem::with_ids(m, p, vec![1, 4], 5).is_ok());
    }
}
