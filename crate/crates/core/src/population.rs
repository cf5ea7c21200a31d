use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerance::CONSERVATION_TOL;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PopulationError {
    #[error("population vector is empty")]
    Empty,
    #[error("population entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error("population entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("population total {0} is not positive")]
    ZeroTotal(f64),
    #[error("population total {0} differs from 1")]
    NotNormalized(f64),
}

/// A point on the probability simplex: non-negative fractions summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PopulationVector(Vec<f64>);

impl PopulationVector {
    /// Accepts `values` as-is, requiring them to already lie on the simplex.
    pub fn new(values: Vec<f64>) -> Result<Self, PopulationError> {
        check_entries(&values)?;
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > CONSERVATION_TOL {
            return Err(PopulationError::NotNormalized(total));
        }
        Ok(Self(values))
    }

    /// Wraps values produced by conservative arithmetic inside the crate.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Index<usize> for PopulationVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for PopulationVector {
    type Error = PopulationError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<PopulationVector> for Vec<f64> {
    fn from(p: PopulationVector) -> Self {
        p.0
    }
}

fn check_entries(values: &[f64]) -> Result<(), PopulationError> {
    if values.is_empty() {
        return Err(PopulationError::Empty);
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(PopulationError::NonFinite { index });
        }
        if value < 0.0 {
            return Err(PopulationError::NegativeEntry { index, value });
        }
    }
    Ok(())
}

/// Normalizes raw non-negative abundances onto the simplex.
pub fn make_population(raw: &[f64]) -> Result<PopulationVector, PopulationError> {
    check_entries(raw)?;
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(PopulationError::ZeroTotal(total));
    }
    Ok(PopulationVector(raw.iter().map(|v| v / total).collect()))
}
