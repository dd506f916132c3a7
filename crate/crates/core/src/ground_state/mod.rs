//! Mass-constrained minimization of `E(f) = ½‖f'‖₂² − (1/p)‖f‖_p^p` and the
//! `(p, μ)` phase diagram built on it.

mod critical;
mod phase;
mod probes;
mod solver;

pub use critical::{estimate_critical_mass, BisectionStep, CriticalMassConfig, CriticalMassRecord};
pub use phase::{phase_diagram, Classification, PhaseConfig, PhaseEvidence, PhasePoint};
pub use probes::{
    concentration_member, concentration_probe, default_concentration_schedule, default_spreading_schedule,
    linear_schedule, spreading_member, spreading_probe, ProbeKind, ProbeRecord, DEFAULT_UNBOUNDED_THRESHOLD,
};
pub use solver::{
    initial_guess, minimize, minimize_from, GroundStateResult, InitialGuess, Metric, RunSummary, SolverConfig,
};

use crate::grid::{Boundary, GridSpec};
use crate::inequalities::{gn_critical_bound, P_CRITICAL_3D};

/// Default sign threshold: a best energy below `-DEFAULT_ENERGY_EPS` counts as negative.
pub const DEFAULT_ENERGY_EPS: f64 = 1e-10;

/// Mass below which every zero-boundary function has nonnegative energy.
///
/// With `‖f‖_p^p <= C μ^{p/2-1} ‖f'‖₂²` the energy satisfies
/// `E >= T (1 - (2/p) C μ^{p/2-1})`, which is nonnegative for
/// `μ < (p / 2C)^{1/(p/2-1)}`. Available on 3D Dirichlet grids for
/// `p ∈ [10/3, 6]` and on 1D Dirichlet grids at `p = 6` (where `C = 1`).
pub fn inequality_mass_threshold(spec: &GridSpec, p: f64) -> Option<f64> {
    if spec.boundary != Boundary::Dirichlet {
        return None;
    }
    let c = match spec.dimension {
        3 if (P_CRITICAL_3D..=6.0).contains(&p) => gn_critical_bound(spec.edge_length, p),
        1 if p == 6.0 => 1.0,
        _ => return None,
    };
    Some((p / (2.0 * c)).powf(1.0 / (0.5 * p - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_values() {
        let d3 = GridSpec::new(3, 1.0, 2, Boundary::Dirichlet);
        assert!((inequality_mass_threshold(&d3, 4.0).unwrap() - 4.0 / 192.0).abs() < 1e-15);
        // p = 6: C = 1, so μ < √3
        let t6 = inequality_mass_threshold(&d3, 6.0).unwrap();
        assert!((t6 - 3f64.sqrt()).abs() < 1e-12);
        let d1 = GridSpec::new(1, 1.0, 4, Boundary::Dirichlet);
        assert!((inequality_mass_threshold(&d1, 6.0).unwrap() - 3f64.sqrt()).abs() < 1e-12);
        assert!(inequality_mass_threshold(&d3, 3.0).is_none());
        assert!(inequality_mass_threshold(&GridSpec::new(3, 1.0, 2, Boundary::Neumann), 4.0).is_none());
    }
}
