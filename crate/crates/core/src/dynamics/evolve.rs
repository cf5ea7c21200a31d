use serde::{Deserialize, Serialize};

use super::system::{add_species, eliminate_species, ActiveSystem};
use super::{crossing_fraction, DynamicsError, SimulationConfig};

/// A species reaching zero inside a step.
///
/// The crossing happens at time `step_index + fraction`, where `step_index`
/// counts full steps completed before it. `fraction` is zero only when the
/// species already sat at zero at the start of the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationEvent {
    pub step_index: usize,
    pub fraction: f64,
    pub species_id: usize,
    pub neg_offdiag_before: usize,
    pub neg_offdiag_after: usize,
}

impl EliminationEvent {
    pub fn time(&self) -> f64 {
        self.step_index as f64 + self.fraction
    }

    /// Number of (possibly partial) steps needed to reach the crossing.
    pub fn steps_to_reach(&self) -> usize {
        if self.fraction > 0.0 {
            self.step_index + 1
        } else {
            self.step_index
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionRecord {
    pub step_index: usize,
    pub species_id: usize,
    pub seed_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrajectoryEvent {
    Elimination(EliminationEvent),
    Insertion(InsertionRecord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SnapshotEvent {
    Eliminated(usize),
    Inserted(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    /// Sub-step position of an event row; zero on ordinary rows.
    pub tau: f64,
    /// Indexed by original species id, zero for species not alive.
    pub populations: Vec<f64>,
    pub event: Option<SnapshotEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    MaxSteps,
    Converged,
    AllButOneExtinct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub events: Vec<TrajectoryEvent>,
    pub terminated: Termination,
    pub steps_taken: usize,
    pub final_system: ActiveSystem,
}

impl Trajectory {
    pub fn eliminations(&self) -> impl Iterator<Item = &EliminationEvent> {
        self.events.iter().filter_map(|e| match e {
            TrajectoryEvent::Elimination(ev) => Some(ev),
            TrajectoryEvent::Insertion(_) => None,
        })
    }

    pub fn terminal_populations(&self) -> Vec<f64> {
        self.final_system.embed()
    }
}

/// A mutant introduced once `at_step` full steps have completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledInsertion {
    pub at_step: usize,
    pub couplings_in: Vec<f64>,
    pub couplings_out: Vec<f64>,
    pub self_rate: f64,
    pub seed_fraction: f64,
}

/// Forward evolution with extinction events and dimensional reduction.
pub fn evolve(
    system: &ActiveSystem,
    config: &SimulationConfig,
) -> Result<Trajectory, DynamicsError> {
    evolve_with_insertions(system, config, &[])
}

/// [`evolve`] with mutants inserted at scheduled steps.
///
/// Coupling vectors of an insertion are indexed by species id and span every
/// id issued when it fires. Inflow from extinct species is dropped; outflow
/// to extinct species stays with the newcomer, as in an elimination.
pub fn evolve_with_insertions(
    system: &ActiveSystem,
    config: &SimulationConfig,
    insertions: &[ScheduledInsertion],
) -> Result<Trajectory, DynamicsError> {
    config.validate()?;
    let zero_tol = config.tolerances.zero_tol;
    let mut pending: Vec<&ScheduledInsertion> = insertions.iter().collect();
    pending.sort_by_key(|ins| ins.at_step);
    let mut pending = pending.into_iter().peekable();

    let mut sys = system.clone();
    let mut snapshots = vec![Snapshot {
        step: 0,
        tau: 0.0,
        populations: sys.embed(),
        event: None,
    }];
    let mut events = Vec::new();
    let mut k = 0usize;
    let mut last_recorded = 0usize;

    let terminated = loop {
        while let Some(ins) = pending.next_if(|ins| ins.at_step <= k) {
            let width = sys.universe();
            for v in [&ins.couplings_in, &ins.couplings_out] {
                if v.len() != width {
                    return Err(DynamicsError::DimensionMismatch {
                        expected: width,
                        got: v.len(),
                    });
                }
            }
            let alive = sys.alive_ids();
            let couplings_in: Vec<f64> = alive.iter().map(|&id| ins.couplings_in[id]).collect();
            let couplings_out: Vec<f64> = alive.iter().map(|&id| ins.couplings_out[id]).collect();
            let orphaned: f64 = (0..width)
                .filter(|id| !alive.contains(id))
                .map(|id| ins.couplings_out[id])
                .sum();
            sys = add_species(
                &sys,
                &couplings_in,
                &couplings_out,
                ins.self_rate + orphaned,
                ins.seed_fraction,
            )?;
            let species_id = sys.universe() - 1;
            events.push(TrajectoryEvent::Insertion(InsertionRecord {
                step_index: k,
                species_id,
                seed_fraction: ins.seed_fraction,
            }));
            snapshots.push(Snapshot {
                step: k,
                tau: 0.0,
                populations: sys.embed(),
                event: Some(SnapshotEvent::Inserted(species_id)),
            });
            last_recorded = k;
        }
        if sys.dim() == 1 && pending.peek().is_none() {
            break Termination::AllButOneExtinct;
        }
        if k >= config.max_steps {
            break Termination::MaxSteps;
        }

        let before = sys.populations().as_slice().to_vec();
        let after = sys.matrix().apply(&before);

        if let Some((local, tau)) = crossing_fraction(&before, &after, zero_tol) {
            let mut at_zero: Vec<f64> = before
                .iter()
                .zip(&after)
                .map(|(b, a)| (b + tau * (a - b)).max(0.0))
                .collect();
            at_zero[local] = 0.0;
            let species_id = sys.alive_ids()[local];
            let neg_offdiag_before = sys.matrix().negative_offdiag_count(zero_tol);
            sys.set_populations(at_zero);
            sys = eliminate_species(&sys, local, zero_tol)?;
            events.push(TrajectoryEvent::Elimination(EliminationEvent {
                step_index: k,
                fraction: tau,
                species_id,
                neg_offdiag_before,
                neg_offdiag_after: sys.matrix().negative_offdiag_count(zero_tol),
            }));
            snapshots.push(Snapshot {
                step: k,
                tau,
                populations: sys.embed(),
                event: Some(SnapshotEvent::Eliminated(species_id)),
            });
            last_recorded = k;
            continue;
        }

        let accepted: Vec<f64> = after
            .iter()
            .map(|&x| if x < 0.0 && x >= -zero_tol { 0.0 } else { x })
            .collect();
        let change: f64 = accepted
            .iter()
            .zip(&before)
            .map(|(a, b)| (a - b).abs())
            .sum();
        sys.set_populations(accepted);
        k += 1;
        if k.is_multiple_of(config.record_every) {
            snapshots.push(Snapshot {
                step: k,
                tau: 0.0,
                populations: sys.embed(),
                event: None,
            });
            last_recorded = k;
        }
        if change < config.convergence_tol {
            break Termination::Converged;
        }
    };

    let last_is_current = last_recorded == k
        && snapshots
            .last()
            .is_some_and(|s| s.populations == sys.embed());
    if !last_is_current {
        snapshots.push(Snapshot {
            step: k,
            tau: 0.0,
            populations: sys.embed(),
            event: None,
        });
    }
    let width = sys.universe();
    for s in &mut snapshots {
        s.populations.resize(width, 0.0);
    }

    Ok(Trajectory {
        snapshots,
        events,
        terminated,
        steps_taken: k,
        final_system: sys,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{two_species_matrix, EvolutionMatrix};
    use crate::population::make_population;
    use approx::assert_abs_diff_eq;

    fn run(m: EvolutionMatrix, phi: &[f64], config: &SimulationConfig) -> Trajectory {
        let sys = ActiveSystem::new(m, make_population(phi).unwrap()).unwrap();
        evolve(&sys, config).unwrap()
    }

    fn assert_conserved(t: &Trajectory) {
        for s in &t.snapshots {
            let total: f64 = s.populations.iter().sum();
            assert!((total - 1.0).abs() < 1e-8, "sum {total} at step {}", s.step);
            assert!(s.populations.iter().all(|&x| x >= -1e-12));
        }
    }

    #[test]
    fn coexistence_converges_without_events() {
        let cfg = SimulationConfig {
            max_steps: 500,
            ..Default::default()
        };
        let t = run(two_species_matrix(0.1, 0.2), &[0.9, 0.1], &cfg);
        assert!(t.events.is_empty());
        assert_eq!(t.terminated, Termination::Converged);
        let end = t.terminal_populations();
        assert_abs_diff_eq!(end[0], 2.0 / 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(end[1], 1.0 / 3.0, epsilon = 1e-6);
        assert_conserved(&t);
    }

    #[test]
    fn monotone_extinction_eliminates_negative_row_species() {
        let t = run(
            two_species_matrix(0.1, -0.05),
            &[0.5, 0.5],
            &SimulationConfig::default(),
        );
        let elims: Vec<_> = t.eliminations().collect();
        assert_eq!(elims.len(), 1);
        assert_eq!(elims[0].species_id, 0);
        // brute-force iteration crosses zero 0.907 of the way through step 8
        assert_eq!(elims[0].step_index, 7);
        assert_abs_diff_eq!(elims[0].fraction, 0.9070295859676255, epsilon = 1e-9);
        assert_eq!(elims[0].neg_offdiag_before, 1);
        assert_eq!(elims[0].neg_offdiag_after, 0);
        assert_eq!(t.terminated, Termination::AllButOneExtinct);
        let end = t.terminal_populations();
        assert_eq!(end[0], 0.0);
        assert_abs_diff_eq!(end[1], 1.0, epsilon = 1e-14);
        assert_conserved(&t);
    }

    #[test]
    fn winner_depends_on_initial_split() {
        let cfg = SimulationConfig::default();
        let t = run(two_species_matrix(-0.05, -0.05), &[0.6, 0.4], &cfg);
        let e: Vec<_> = t.eliminations().collect();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].species_id, 1);
        assert_eq!(e[0].step_index, 16);
        assert_abs_diff_eq!(t.terminal_populations()[0], 1.0, epsilon = 1e-12);

        let t = run(two_species_matrix(-0.05, -0.05), &[0.4, 0.6], &cfg);
        assert_eq!(t.eliminations().next().unwrap().species_id, 0);
        assert_abs_diff_eq!(t.terminal_populations()[1], 1.0, epsilon = 1e-12);
        assert_conserved(&t);
    }

    #[test]
    fn event_row_carries_fraction() {
        let t = run(
            two_species_matrix(0.1, -0.05),
            &[0.5, 0.5],
            &SimulationConfig::default(),
        );
        let row = t.snapshots.iter().find(|s| s.event.is_some()).unwrap();
        assert_eq!(row.event, Some(SnapshotEvent::Eliminated(0)));
        assert_eq!(row.step, 7);
        assert!(row.tau > 0.9 && row.tau < 0.91);
        assert_eq!(row.populations[0], 0.0);
    }

    #[test]
    fn record_every_thins_rows_but_keeps_final() {
        let cfg = SimulationConfig {
            max_steps: 25,
            convergence_tol: 0.0,
            record_every: 10,
            ..Default::default()
        };
        let t = run(two_species_matrix(0.01, 0.02), &[0.9, 0.1], &cfg);
        let steps: Vec<usize> = t.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 10, 20, 25]);
        assert_eq!(t.terminated, Termination::MaxSteps);
    }

    #[test]
    fn single_species_stops_immediately() {
        let t = run(
            EvolutionMatrix::identity(1),
            &[1.0],
            &SimulationConfig::default(),
        );
        assert_eq!(t.terminated, Termination::AllButOneExtinct);
        assert_eq!(t.steps_taken, 0);
        assert_eq!(t.snapshots.len(), 1);
    }

    #[test]
    fn scheduled_mutant_joins_and_widens_snapshots() {
        let cfg = SimulationConfig {
            max_steps: 50,
            convergence_tol: 0.0,
            ..Default::default()
        };
        let sys = ActiveSystem::new(
            two_species_matrix(0.1, 0.2),
            make_population(&[0.5, 0.5]).unwrap(),
        )
        .unwrap();
        let mutant = ScheduledInsertion {
            at_step: 10,
            couplings_in: vec![0.01, 0.01],
            couplings_out: vec![0.0, 0.0],
            self_rate: 1.0,
            seed_fraction: 0.05,
        };
        let t = evolve_with_insertions(&sys, &cfg, &[mutant]).unwrap();
        assert!(t.snapshots.iter().all(|s| s.populations.len() == 3));
        assert_eq!(t.snapshots[0].populations[2], 0.0);
        assert!(matches!(
            t.events[0],
            TrajectoryEvent::Insertion(InsertionRecord {
                step_index: 10,
                species_id: 2,
                ..
            })
        ));
        assert!(t.terminal_populations()[2] > 0.05);
        assert_conserved(&t);
    }

    #[test]
    fn mutant_couplings_to_extinct_species_fold() {
        let cfg = SimulationConfig {
            max_steps: 30,
            convergence_tol: 0.0,
            ..Default::default()
        };
        let sys = ActiveSystem::new(
            two_species_matrix(0.1, -0.05),
            make_population(&[0.5, 0.5]).unwrap(),
        )
        .unwrap();
        let mutant = ScheduledInsertion {
            at_step: 20,
            couplings_in: vec![0.3, 0.02],
            couplings_out: vec![0.1, 0.05],
            self_rate: 0.85,
            seed_fraction: 0.1,
        };
        let t = evolve_with_insertions(&sys, &cfg, &[mutant]).unwrap();
        assert_eq!(t.final_system.alive_ids(), &[1, 2]);
        let rows = t.final_system.matrix().rows();
        assert_abs_diff_eq!(rows[0][0], 0.98, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[1][0], 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[0][1], 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[1][1], 0.95, epsilon = 1e-15);
        assert_conserved(&t);

        let short = ScheduledInsertion {
            at_step: 20,
            couplings_in: vec![0.02],
            couplings_out: vec![0.05],
            self_rate: 0.95,
            seed_fraction: 0.1,
        };
        assert!(matches!(
            evolve_with_insertions(&sys, &cfg, &[short]),
            Err(DynamicsError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }
}
