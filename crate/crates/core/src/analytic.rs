//! Exact solution of the two-species system `[[1 - α, β], [α, 1 - β]]`.
//!
//! With `φ(0) = (a, 1 - a)` and `α + β ≠ 0`,
//!
//! ```text
//! φ(t) = (β, α) / (α + β) + λ₂ᵗ (a - β / (α + β)) (1, -1),   λ₂ = 1 - α - β
//! ```
//!
//! The signs of `α` and `β` decide the long-run behaviour: coexistence when
//! both are non-negative, extinction of one fixed species when they differ in
//! sign, and an unstable race whose winner depends on `a` when both are
//! non-positive.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{evolve, ActiveSystem, DynamicsError, SimulationConfig};
use crate::matrix::two_species_matrix;
use crate::population::make_population;
use crate::tolerance::ToleranceConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("alpha + beta = {0} is too close to zero for a closed form")]
    DegenerateParams(f64),
    #[error("initial share {0} must lie in [0, 1]")]
    BadInitial(f64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSpeciesParams {
    pub alpha: f64,
    pub beta: f64,
    /// Initial population of species 0.
    pub a: f64,
}

impl TwoSpeciesParams {
    pub fn new(alpha: f64, beta: f64, a: f64) -> Result<Self, AnalyticError> {
        if !(0.0..=1.0).contains(&a) {
            return Err(AnalyticError::BadInitial(a));
        }
        Ok(Self { alpha, beta, a })
    }

    pub fn swapped(&self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
            a: 1.0 - self.a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `α ≥ 0, β ≥ 0`: both species persist in a stable ratio.
    Coexistence,
    /// `αβ < 0`: the species receiving a negative coupling is driven to zero.
    MonotoneExtinction,
    /// `α ≤ 0, β ≤ 0`: `λ₂ > 1` and the initially favoured species takes all.
    UnstableWinnerTakesAll,
    /// `α = β = 0`: the identity; nothing evolves.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WinnerOutcome {
    Both,
    /// Index (0 or 1) of the sole survivor.
    Survivor(usize),
    /// The transient coefficient vanishes and neither species is eliminated.
    KnifeEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSolution {
    /// `1 / (α + β)`, weight of `(β, α)`.
    pub stationary_coeff: f64,
    /// `a - β / (α + β)`, weight of `(1, -1)`.
    pub transient_coeff: f64,
    pub lambda2: f64,
    alpha: f64,
    beta: f64,
}

impl ClosedFormSolution {
    pub fn new(params: &TwoSpeciesParams, zero_tol: f64) -> Result<Self, AnalyticError> {
        let TwoSpeciesParams { alpha, beta, a } = *params;
        let total = alpha + beta;
        if total.abs() <= zero_tol {
            return Err(AnalyticError::DegenerateParams(total));
        }
        Ok(Self {
            stationary_coeff: 1.0 / total,
            transient_coeff: a - beta / total,
            lambda2: 1.0 - total,
            alpha,
            beta,
        })
    }

    pub fn at(&self, t_steps: u32) -> [f64; 2] {
        let decay = match i32::try_from(t_steps) {
            Ok(t) => self.lambda2.powi(t),
            Err(_) => self.lambda2.powf(f64::from(t_steps)),
        };
        let transient = decay * self.transient_coeff;
        [
            self.stationary_coeff * self.beta + transient,
            self.stationary_coeff * self.alpha - transient,
        ]
    }
}

/// Populations after `t_steps`, unclipped: values outside `[0, 1]` mean the
/// real system would already have eliminated a species.
pub fn closed_form(params: &TwoSpeciesParams, t_steps: u32) -> Result<[f64; 2], AnalyticError> {
    Ok(ClosedFormSolution::new(params, ToleranceConfig::default().zero_tol)?.at(t_steps))
}

pub fn classify_regime(alpha: f64, beta: f64) -> Regime {
    if alpha == 0.0 && beta == 0.0 {
        Regime::Degenerate
    } else if alpha * beta < 0.0 {
        Regime::MonotoneExtinction
    } else if alpha >= 0.0 && beta >= 0.0 {
        Regime::Coexistence
    } else {
        Regime::UnstableWinnerTakesAll
    }
}

pub fn predict_winner(params: &TwoSpeciesParams) -> WinnerOutcome {
    let TwoSpeciesParams { alpha, beta, a } = *params;
    match classify_regime(alpha, beta) {
        Regime::Degenerate => WinnerOutcome::Both,
        // one-way flow on the boundary empties the donor asymptotically
        Regime::Coexistence if alpha == 0.0 => WinnerOutcome::Survivor(0),
        Regime::Coexistence if beta == 0.0 => WinnerOutcome::Survivor(1),
        Regime::Coexistence => WinnerOutcome::Both,
        // species 0 is taken from when M_01 = β < 0
        Regime::MonotoneExtinction if beta < 0.0 => WinnerOutcome::Survivor(1),
        Regime::MonotoneExtinction => WinnerOutcome::Survivor(0),
        Regime::UnstableWinnerTakesAll => {
            let transient = a - beta / (alpha + beta);
            if transient.abs() <= ToleranceConfig::default().zero_tol {
                WinnerOutcome::KnifeEdge
            } else if transient > 0.0 {
                WinnerOutcome::Survivor(0)
            } else {
                WinnerOutcome::Survivor(1)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub max_deviation: f64,
    /// Full steps compared; stops at the first elimination.
    pub compared_steps: usize,
    pub passed: bool,
}

/// Largest entrywise gap between the closed form and the simulation engine
/// over the first `steps` steps, or up to the first elimination.
pub fn crosscheck(
    params: &TwoSpeciesParams,
    steps: usize,
    tol: f64,
) -> Result<CrosscheckReport, AnalyticError> {
    let exact = ClosedFormSolution::new(params, ToleranceConfig::default().zero_tol)?;
    let start = make_population(&[params.a, 1.0 - params.a]).map_err(DynamicsError::from)?;
    let system = ActiveSystem::new(two_species_matrix(params.alpha, params.beta), start)?;
    let config = SimulationConfig {
        max_steps: steps.max(1),
        convergence_tol: 0.0,
        record_every: 1,
        ..Default::default()
    };
    let trajectory = evolve(&system, &config)?;

    let mut max_deviation: f64 = 0.0;
    let mut compared_steps = 0;
    for snap in trajectory
        .snapshots
        .iter()
        .take_while(|s| s.event.is_none())
        .filter(|s| s.step <= steps)
    {
        let expected = exact.at(snap.step as u32);
        for (got, want) in snap.populations.iter().zip(expected) {
            max_deviation = max_deviation.max((got - want).abs());
        }
        compared_steps = snap.step;
    }
    Ok(CrosscheckReport {
        max_deviation,
        compared_steps,
        passed: max_deviation <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(alpha: f64, beta: f64, a: f64) -> TwoSpeciesParams {
        TwoSpeciesParams::new(alpha, beta, a).unwrap()
    }

    #[test]
    fn stationary_start_is_constant() {
        let p = params(0.1, 0.2, 2.0 / 3.0);
        for t in [0, 1, 10, 1000] {
            let phi = closed_form(&p, t).unwrap();
            assert_abs_diff_eq!(phi[0], 2.0 / 3.0, epsilon = 1e-15);
            assert_abs_diff_eq!(phi[1], 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn closed_form_values() {
        let p = params(0.1, 0.2, 0.9);
        let phi = closed_form(&p, 0).unwrap();
        assert_abs_diff_eq!(phi[0], 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(phi[1], 0.1, epsilon = 1e-15);
        // 0.9 * 0.9 + 0.2 * 0.1
        let phi = closed_form(&p, 1).unwrap();
        assert_abs_diff_eq!(phi[0], 0.83, epsilon = 1e-15);
        assert_abs_diff_eq!(phi[1], 0.17, epsilon = 1e-15);
        assert!(matches!(
            closed_form(&params(0.0, 0.0, 0.3), 4),
            Err(AnalyticError::DegenerateParams(_))
        ));
        assert!(matches!(
            closed_form(&params(0.1, -0.1, 0.3), 4),
            Err(AnalyticError::DegenerateParams(_))
        ));
    }

    #[test]
    fn regimes() {
        assert_eq!(classify_regime(0.1, 0.2), Regime::Coexistence);
        assert_eq!(classify_regime(0.1, -0.05), Regime::MonotoneExtinction);
        assert_eq!(
            classify_regime(-0.05, -0.05),
            Regime::UnstableWinnerTakesAll
        );
        assert_eq!(classify_regime(0.0, 0.0), Regime::Degenerate);
        assert_eq!(classify_regime(0.0, 0.3), Regime::Coexistence);
        assert_eq!(classify_regime(-0.2, 0.0), Regime::UnstableWinnerTakesAll);
    }

    #[test]
    fn winners() {
        assert_eq!(predict_winner(&params(0.1, 0.2, 0.3)), WinnerOutcome::Both);
        assert_eq!(
            predict_winner(&params(0.1, -0.05, 0.5)),
            WinnerOutcome::Survivor(1)
        );
        assert_eq!(
            predict_winner(&params(-0.05, 0.1, 0.5)),
            WinnerOutcome::Survivor(0)
        );
        assert_eq!(
            predict_winner(&params(-0.05, -0.05, 0.6)),
            WinnerOutcome::Survivor(0)
        );
        assert_eq!(
            predict_winner(&params(-0.05, -0.05, 0.4)),
            WinnerOutcome::Survivor(1)
        );
        assert_eq!(
            predict_winner(&params(-0.05, -0.05, 0.5)),
            WinnerOutcome::KnifeEdge
        );
        assert_eq!(
            predict_winner(&params(0.0, 0.2, 0.5)),
            WinnerOutcome::Survivor(0)
        );
    }

    #[test]
    fn initial_share_validated() {
        assert_eq!(
            TwoSpeciesParams::new(0.1, 0.1, 1.2),
            Err(AnalyticError::BadInitial(1.2))
        );
    }

    #[test]
    fn crosscheck_agrees_with_engine() {
        let r = crosscheck(&params(0.1, 0.2, 0.9), 200, 1e-10).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.compared_steps, 200);

        let r = crosscheck(&params(0.1, -0.05, 0.5), 200, 1e-10).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.compared_steps, 7);

        let r = crosscheck(&params(0.1, 0.2, 2.0 / 3.0), 50, 1e-14).unwrap();
        assert!(r.max_deviation < 1e-14);
    }
}
