use serde::{Deserialize, Serialize};

/// Hard tolerance applied when a population or matrix is constructed.
pub const CONSERVATION_TOL: f64 = 1e-12;

/// Numerical thresholds shared by the simulation and spectral routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    /// Allowed drift of a population total away from one.
    pub sum_tol: f64,
    /// Magnitudes at or below this are treated as zero.
    pub zero_tol: f64,
    /// Eigenvalues closer than this are considered coincident.
    pub eig_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            sum_tol: 1e-9,
            zero_tol: 1e-12,
            eig_tol: 1e-9,
        }
    }
}

impl ToleranceConfig {
    pub fn is_valid(&self) -> bool {
        [self.sum_tol, self.zero_tol, self.eig_tol]
            .iter()
            .all(|t| t.is_finite() && *t > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_positive() {
        assert!(ToleranceConfig::default().is_valid());
        let bad = ToleranceConfig {
            zero_tol: 0.0,
            ..Default::default()
        };
        assert!(!bad.is_valid());
    }
}
