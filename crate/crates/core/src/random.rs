//! Seeded near-identity matrix fixtures.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`, which is
//! stable across platforms and releases of `rand_chacha` 0.3. Off-diagonal
//! magnitudes are `coupling_scale * u / (n - 1)` with `u` uniform on the open
//! interval `(0, 1)`, drawn column by column, top to bottom. The diagonal
//! absorbs the remainder so every column sums to one.

use nalgebra::DMatrix;
use rand::distributions::Open01;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::{EvolutionMatrix, MatrixError};

fn check_scale(scale: f64) -> Result<(), MatrixError> {
    if scale.is_finite() && scale > 0.0 && scale < 1.0 {
        Ok(())
    } else {
        Err(MatrixError::BadScale(scale))
    }
}

fn offdiag_positions(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .filter(|(i, j)| i != j)
        .collect()
}

fn assemble(n: usize, mut offdiag: impl FnMut(usize, usize) -> f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut column_total = 0.0;
        for i in (0..n).filter(|&i| i != j) {
            let v = offdiag(i, j);
            m[(i, j)] = v;
            column_total += v;
        }
        m[(j, j)] = 1.0 - column_total;
    }
    m
}

/// Strictly positive column-stochastic matrix close to the identity.
pub fn random_stochastic(
    n: usize,
    coupling_scale: f64,
    seed: u64,
) -> Result<EvolutionMatrix, MatrixError> {
    if n == 0 {
        return Err(MatrixError::BadDimension { got: 0, min: 1 });
    }
    check_scale(coupling_scale)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = coupling_scale / (n.max(2) - 1) as f64;
    let m = assemble(n, |_, _| width * rng.sample::<f64, _>(Open01));
    EvolutionMatrix::new(m, 1.0)
}

/// Near-identity matrix where `round(neg_fraction * n * (n - 1))` off-diagonal
/// entries, chosen by a seeded shuffle, are negative.
pub fn random_competitive(
    n: usize,
    coupling_scale: f64,
    neg_fraction: f64,
    seed: u64,
) -> Result<EvolutionMatrix, MatrixError> {
    if n < 2 {
        return Err(MatrixError::BadDimension { got: n, min: 2 });
    }
    check_scale(coupling_scale)?;
    if !(0.0..=1.0).contains(&neg_fraction) {
        return Err(MatrixError::BadFraction(neg_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = coupling_scale / (n - 1) as f64;
    let mut positions = offdiag_positions(n);
    let n_negative = (neg_fraction * positions.len() as f64).round() as usize;
    positions.shuffle(&mut rng);
    let mut sign = DMatrix::from_element(n, n, 1.0);
    for &(i, j) in &positions[..n_negative] {
        sign[(i, j)] = -1.0;
    }
    let m = assemble(n, |i, j| {
        sign[(i, j)] * width * rng.sample::<f64, _>(Open01)
    });
    EvolutionMatrix::new(m, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{classify_matrix, MatrixKind};
    use crate::tolerance::ToleranceConfig;

    #[test]
    fn single_species_is_trivial() {
        assert_eq!(
            random_stochastic(1, 0.3, 9).unwrap(),
            EvolutionMatrix::identity(1)
        );
    }

    #[test]
    fn stochastic_fixture_properties() {
        let tol = ToleranceConfig::default();
        let m = random_stochastic(3, 0.1, 42).unwrap();
        assert_eq!(classify_matrix(&m, &tol).kind, MatrixKind::Stochastic);
        for i in 0..3 {
            for j in 0..3 {
                assert!(m.get(i, j) > 0.0);
                if i != j {
                    assert!(m.get(i, j) <= 0.1);
                }
            }
        }
        assert_eq!(m, random_stochastic(3, 0.1, 42).unwrap());
        assert_ne!(m, random_stochastic(3, 0.1, 43).unwrap());
    }

    #[test]
    fn scale_must_be_open_unit_interval() {
        for s in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(matches!(
                random_stochastic(3, s, 1),
                Err(MatrixError::BadScale(_))
            ));
        }
        assert!(matches!(
            random_competitive(3, 0.1, 1.5, 1),
            Err(MatrixError::BadFraction(_))
        ));
        assert!(matches!(
            random_competitive(1, 0.1, 0.5, 1),
            Err(MatrixError::BadDimension { .. })
        ));
    }

    #[test]
    fn competitive_fixture_signs() {
        let tol = ToleranceConfig::default();
        let all_neg = random_competitive(2, 0.05, 1.0, 5).unwrap();
        assert!(all_neg.get(0, 1) < 0.0 && all_neg.get(1, 0) < 0.0);
        for s in all_neg.column_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        let none_neg = random_competitive(2, 0.05, 0.0, 5).unwrap();
        assert_eq!(
            classify_matrix(&none_neg, &tol).kind,
            MatrixKind::Stochastic
        );

        let half = random_competitive(4, 0.1, 0.5, 7).unwrap();
        assert_eq!(half, random_competitive(4, 0.1, 0.5, 7).unwrap());
        assert_eq!(classify_matrix(&half, &tol).negative_offdiag_count, 6);
    }
}
