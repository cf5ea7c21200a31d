//! Evolution and generator matrices with enforced column conservation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerance::{ToleranceConfig, CONSERVATION_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("matrix has no rows")]
    Empty,
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("row {row} has {len} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("column {column} sums to {sum}, expected 1")]
    BadColumnSum { column: usize, sum: f64 },
    #[error("generator column {column} sums to {sum}, expected 0")]
    BadGenerator { column: usize, sum: f64 },
    #[error("time step {0} must be positive and finite")]
    BadTimeStep(f64),
    #[error("coupling scale {0} must lie in (0, 1)")]
    BadScale(f64),
    #[error("negative fraction {0} must lie in [0, 1]")]
    BadFraction(f64),
    #[error("need at least {min} species, got {got}")]
    BadDimension { got: usize, min: usize },
}

fn check_square(entries: &DMatrix<f64>) -> Result<(), MatrixError> {
    let (rows, cols) = entries.shape();
    if rows == 0 {
        return Err(MatrixError::Empty);
    }
    if rows != cols {
        return Err(MatrixError::NotSquare { rows, cols });
    }
    for col in 0..cols {
        for row in 0..rows {
            if !entries[(row, col)].is_finite() {
                return Err(MatrixError::NonFinite { row, col });
            }
        }
    }
    Ok(())
}

fn check_dt(dt: f64) -> Result<(), MatrixError> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(MatrixError::BadTimeStep(dt))
    }
}

pub(crate) fn dmatrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, MatrixError> {
    let n = rows.len();
    if n == 0 {
        return Err(MatrixError::Empty);
    }
    let cols = rows[0].len();
    for (row, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(MatrixError::RaggedRow {
                row,
                len: r.len(),
                expected: cols,
            });
        }
    }
    Ok(DMatrix::from_fn(n, cols, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Per-step change matrix `C`; every column sums to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    entries: DMatrix<f64>,
    dt: f64,
}

impl GeneratorMatrix {
    pub fn new(entries: DMatrix<f64>, dt: f64) -> Result<Self, MatrixError> {
        check_square(&entries)?;
        check_dt(dt)?;
        for (column, col) in entries.column_iter().enumerate() {
            let sum: f64 = col.iter().sum();
            if sum.abs() > CONSERVATION_TOL {
                return Err(MatrixError::BadGenerator { column, sum });
            }
        }
        Ok(Self { entries, dt })
    }

    pub fn from_rows(rows: &[Vec<f64>], dt: f64) -> Result<Self, MatrixError> {
        Self::new(dmatrix_from_rows(rows)?, dt)
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// Square matrix `M` acting on column population vectors, with unit column sums.
///
/// Entries may be negative (competitive interactions); only the column
/// conservation law is enforced. The time step is carried as metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRecord", into = "MatrixRecord")]
pub struct EvolutionMatrix {
    entries: DMatrix<f64>,
    dt: f64,
}

#[derive(Serialize, Deserialize)]
struct MatrixRecord {
    rows: Vec<Vec<f64>>,
    dt: f64,
}

impl TryFrom<MatrixRecord> for EvolutionMatrix {
    type Error = MatrixError;

    fn try_from(r: MatrixRecord) -> Result<Self, MatrixError> {
        EvolutionMatrix::from_rows(&r.rows, r.dt)
    }
}

impl From<EvolutionMatrix> for MatrixRecord {
    fn from(m: EvolutionMatrix) -> Self {
        MatrixRecord {
            rows: m.rows(),
            dt: m.dt,
        }
    }
}

impl EvolutionMatrix {
    pub fn new(entries: DMatrix<f64>, dt: f64) -> Result<Self, MatrixError> {
        check_square(&entries)?;
        check_dt(dt)?;
        for (column, col) in entries.column_iter().enumerate() {
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > CONSERVATION_TOL {
                return Err(MatrixError::BadColumnSum { column, sum });
            }
        }
        Ok(Self { entries, dt })
    }

    /// Builds from row-major nested vectors, `rows[i][j] = M_ij`.
    pub fn from_rows(rows: &[Vec<f64>], dt: f64) -> Result<Self, MatrixError> {
        Self::new(dmatrix_from_rows(rows)?, dt)
    }

    pub fn identity(n: usize) -> Self {
        assert!(n > 0, "identity of dimension zero");
        Self {
            entries: DMatrix::identity(n, n),
            dt: 1.0,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self, MatrixError> {
        check_dt(dt)?;
        self.dt = dt;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        to_rows(&self.entries)
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.entries.column_iter().map(|c| c.iter().sum()).collect()
    }

    /// `M φ` without any sign or sum checks.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(phi);
        (&self.entries * v).iter().copied().collect()
    }

    /// The generator `C = M - I`.
    pub fn generator(&self) -> DMatrix<f64> {
        let n = self.dim();
        &self.entries - DMatrix::<f64>::identity(n, n)
    }

    pub fn negative_offdiag_count(&self, zero_tol: f64) -> usize {
        let n = self.dim();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && self.entries[(i, j)] < -zero_tol)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixKind {
    /// All entries in `[0, 1]`: an ordinary Markov chain.
    Stochastic,
    /// Some entry outside `[0, 1]`.
    Competitive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixClass {
    pub kind: MatrixKind,
    pub negative_offdiag_count: usize,
}

/// `M = I + C`.
pub fn matrix_from_generator(c: &GeneratorMatrix) -> Result<EvolutionMatrix, MatrixError> {
    let n = c.entries.nrows();
    EvolutionMatrix::new(DMatrix::identity(n, n) + &c.entries, c.dt)
}

pub fn classify_matrix(m: &EvolutionMatrix, tol: &ToleranceConfig) -> MatrixClass {
    let in_range = m
        .entries
        .iter()
        .all(|&x| x >= -tol.zero_tol && x <= 1.0 + tol.zero_tol);
    MatrixClass {
        kind: if in_range {
            MatrixKind::Stochastic
        } else {
            MatrixKind::Competitive
        },
        negative_offdiag_count: m.negative_offdiag_count(tol.zero_tol),
    }
}

/// The two-species matrix `[[1 - alpha, beta], [alpha, 1 - beta]]`.
///
/// `alpha` is the per-step flow from species 0 to species 1 and `beta` the
/// reverse flow; either may be negative.
pub fn two_species_matrix(alpha: f64, beta: f64) -> EvolutionMatrix {
    assert!(alpha.is_finite() && beta.is_finite(), "non-finite coupling");
    EvolutionMatrix {
        entries: DMatrix::from_row_slice(2, 2, &[1.0 - alpha, beta, alpha, 1.0 - beta]),
        dt: 1.0,
    }
}
