//! The `(p, μ)` phase diagram.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::probes::{
    concentration_probe, default_concentration_schedule, default_spreading_schedule, spreading_probe, ProbeRecord,
    DEFAULT_UNBOUNDED_THRESHOLD,
};
use super::solver::{minimize, SolverConfig};
use crate::error::{Error, Result};
use crate::function::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    NegativeGroundState,
    NonnegativeNoMinimizerSuspected,
    UnboundedBelowSuspected,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::NegativeGroundState => "negative_ground_state",
            Self::NonnegativeNoMinimizerSuspected => "nonnegative_no_minimizer_suspected",
            Self::UnboundedBelowSuspected => "unbounded_below_suspected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub solver: SolverConfig,
    #[serde(default = "default_eps")]
    pub energy_eps: f64,
    /// Samples per edge for the probe mesh; the solver mesh is used when absent.
    #[serde(default)]
    pub probe_samples_per_edge: Option<usize>,
    /// Largest `λ h` reached by the concentration schedule.
    #[serde(default = "default_fraction")]
    pub lambda_fraction: f64,
    #[serde(default = "default_points")]
    pub probe_points: usize,
    #[serde(default = "default_threshold")]
    pub unbounded_threshold: f64,
}

fn default_eps() -> f64 {
    super::DEFAULT_ENERGY_EPS
}
fn default_fraction() -> f64 {
    0.5
}
fn default_points() -> usize {
    16
}
fn default_threshold() -> f64 {
    DEFAULT_UNBOUNDED_THRESHOLD
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            energy_eps: default_eps(),
            probe_samples_per_edge: None,
            lambda_fraction: default_fraction(),
            probe_points: default_points(),
            unbounded_threshold: default_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseEvidence {
    pub best_start: Option<usize>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    pub concentration: Option<ProbeRecord>,
    pub spreading: Option<ProbeRecord>,
    /// Failures of individual stages of this cell.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub power: f64,
    pub mass: f64,
    pub best_energy: Option<f64>,
    pub classification: Option<Classification>,
    pub evidence: PhaseEvidence,
}

fn classify(best: Option<f64>, concentration: Option<&ProbeRecord>, eps: f64) -> Option<Classification> {
    if concentration.is_some_and(|c| c.unbounded_below_suspected) {
        return Some(Classification::UnboundedBelowSuspected);
    }
    let e = best?;
    Some(if e < -eps { Classification::NegativeGroundState } else { Classification::NonnegativeNoMinimizerSuspected })
}

fn run_cell(mesh: &Arc<Mesh>, probe_mesh: &Result<Arc<Mesh>>, config: &PhaseConfig, p: f64, mu: f64) -> PhasePoint {
    let mut ev = PhaseEvidence {
        best_start: None,
        converged: None,
        iterations: None,
        concentration: None,
        spreading: None,
        errors: Vec::new(),
    };
    let solver = SolverConfig { power: p, mass: mu, ..config.solver.clone() };
    let best = match minimize(mesh, &solver) {
        Ok(r) => {
            ev.best_start = Some(r.best_start);
            ev.converged = Some(r.converged);
            ev.iterations = Some(r.iterations);
            Some(r.breakdown.energy)
        }
        Err(e) => {
            ev.errors.push(format!("minimize: {e}"));
            None
        }
    };
    match probe_mesh {
        Ok(pm) => {
            let lambdas = default_concentration_schedule(pm, config.lambda_fraction, config.probe_points);
            match concentration_probe(pm, p, mu, &lambdas, config.unbounded_threshold) {
                Ok(r) => ev.concentration = Some(r),
                Err(e) => ev.errors.push(format!("concentration probe: {e}")),
            }
            if pm.grid().dimension() == 3 {
                let sigmas = default_spreading_schedule(pm, config.probe_points);
                match spreading_probe(pm, p, mu, &sigmas) {
                    Ok(r) => ev.spreading = Some(r),
                    Err(e) => ev.errors.push(format!("spreading probe: {e}")),
                }
            }
        }
        Err(e) => ev.errors.push(format!("probe mesh: {e}")),
    }
    PhasePoint {
        power: p,
        mass: mu,
        best_energy: best,
        classification: classify(best, ev.concentration.as_ref(), config.energy_eps),
        evidence: ev,
    }
}

/// Classify every `(p, μ)` cell, powers outermost. Failures stay in their cell.
pub fn phase_diagram(
    mesh: &Arc<Mesh>,
    powers: &[f64],
    masses: &[f64],
    config: &PhaseConfig,
) -> Result<Vec<PhasePoint>> {
    if powers.is_empty() || masses.is_empty() {
        return Err(Error::InvalidConfig("power and mass lists must be non-empty".into()));
    }
    let probe_mesh = match config.probe_samples_per_edge {
        Some(n) => Mesh::new(Arc::clone(mesh.grid_arc()), n),
        None => Ok(Arc::clone(mesh)),
    };
    let cells = powers.len() * masses.len();
    Ok(config.solver.execution.map_indexed(cells, |i| {
        run_cell(mesh, &probe_mesh, config, powers[i / masses.len()], masses[i % masses.len()])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, GridSpec, MetricGrid};
    use crate::parallel::Execution;

    fn mesh() -> Arc<Mesh> {
        let grid = MetricGrid::build(GridSpec::new(3, 1.0, 1, Boundary::Dirichlet)).unwrap();
        Mesh::new(Arc::new(grid), 2).unwrap()
    }

    fn quick() -> PhaseConfig {
        PhaseConfig {
            solver: SolverConfig { multistart: 2, max_iterations: 200, ..SolverConfig::default() },
            probe_points: 4,
            ..PhaseConfig::default()
        }
    }

    #[test]
    fn classification_priority() {
        let probe = |unbounded| ProbeRecord {
            kind: super::super::ProbeKind::Concentration,
            power: 7.0,
            mass: 1.0,
            schedule: vec![1.0],
            energies: vec![0.0],
            min_energy: 0.0,
            decreasing_tail: unbounded,
            any_negative: false,
            unbounded_below_suspected: unbounded,
        };
        assert_eq!(classify(Some(-1.0), Some(&probe(true)), 1e-10), Some(Classification::UnboundedBelowSuspected));
        assert_eq!(classify(Some(-1.0), Some(&probe(false)), 1e-10), Some(Classification::NegativeGroundState));
        assert_eq!(classify(Some(-1e-12), None, 1e-10), Some(Classification::NonnegativeNoMinimizerSuspected));
        assert_eq!(classify(None, None, 1e-10), None);
    }

    #[test]
    fn cell_order_and_in_cell_errors() {
        let cfg = quick();
        let pts = phase_diagram(&mesh(), &[3.0, 1.5], &[0.5, 1.0], &cfg).unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!((pts[1].power, pts[1].mass), (3.0, 1.0));
        assert_eq!((pts[2].power, pts[2].mass), (1.5, 0.5));
        assert!(pts[2].best_energy.is_none());
        assert!(!pts[2].evidence.errors.is_empty());
        assert!(pts[0].best_energy.is_some());
        assert!(phase_diagram(&mesh(), &[], &[1.0], &cfg).is_err());
    }

    #[test]
    fn sequential_matches_parallel() {
        let mut cfg = quick();
        let a = phase_diagram(&mesh(), &[3.0, 4.0], &[1.0], &cfg).unwrap();
        cfg.solver.execution = Execution::Sequential;
        let b = phase_diagram(&mesh(), &[3.0, 4.0], &[1.0], &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
