//! Critical-mass estimation by bisection on the sign of the best energy.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::solver::{minimize, SolverConfig};
use crate::error::{Error, Result};
use crate::function::Mesh;
use crate::inequalities::P_CRITICAL_3D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalMassConfig {
    pub power: f64,
    pub bracket: [f64; 2],
    pub tolerance: f64,
    /// Sign threshold `ε_E`.
    #[serde(default = "default_eps")]
    pub energy_eps: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_eps() -> f64 {
    super::DEFAULT_ENERGY_EPS
}

fn default_max_steps() -> usize {
    60
}

impl CriticalMassConfig {
    pub fn new(power: f64, lo: f64, hi: f64, tolerance: f64) -> Self {
        Self { power, bracket: [lo, hi], tolerance, energy_eps: default_eps(), max_steps: default_max_steps() }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let p = self.power;
        if !((P_CRITICAL_3D..=6.0).contains(&p)) {
            problems.push(format!("p must lie in [10/3, 6] (got {p})"));
        }
        let [lo, hi] = self.bracket;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            problems.push(format!("bracket must satisfy 0 < lo < hi (got [{lo}, {hi}])"));
        }
        if !(self.tolerance > 0.0) {
            problems.push(format!("tolerance must be positive (got {})", self.tolerance));
        }
        if !(self.energy_eps > 0.0) {
            problems.push(format!("energy threshold must be positive (got {})", self.energy_eps));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    /// 0 and 1 are the bracket ends; bisection steps follow.
    pub step: usize,
    pub mass: f64,
    pub best_energy: f64,
    pub negative: bool,
    pub converged: bool,
    /// Bracket after this step.
    pub bracket: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalMassRecord {
    pub power: f64,
    pub estimate: f64,
    pub bracket: [f64; 2],
    pub history: Vec<BisectionStep>,
    pub anomalies: Vec<String>,
}

/// Bisect on `μ` for the predicate "best multistart energy < −ε_E".
///
/// A non-negative verdict from a solver run that did not converge cannot be
/// trusted and aborts the search.
pub fn estimate_critical_mass(
    mesh: &Arc<Mesh>,
    config: &CriticalMassConfig,
    solver: &SolverConfig,
) -> Result<CriticalMassRecord> {
    config.validate()?;
    let eps = config.energy_eps;
    let base = SolverConfig { power: config.power, stop_below: Some(-eps), ..solver.clone() };

    let evaluate = |step: usize, mass: f64| -> Result<(f64, bool, bool)> {
        let cfg = SolverConfig { mass, ..base.clone() };
        let r = minimize(mesh, &cfg)?;
        let e = r.breakdown.energy;
        let negative = e < -eps;
        if !negative && !r.converged {
            return Err(Error::BisectionNonConvergence { step, mass });
        }
        Ok((e, negative, r.converged))
    };

    let [mut lo, mut hi] = config.bracket;
    let (e_lo, n_lo, c_lo) = evaluate(0, lo)?;
    let (e_hi, n_hi, c_hi) = evaluate(1, hi)?;
    if n_lo == n_hi {
        return Err(Error::BracketNoFlip { lo, hi, predicate: n_lo });
    }
    let mut anomalies = Vec::new();
    if n_lo {
        anomalies.push(format!("predicate is true at the lower end {lo} and false at the upper end {hi}"));
    }
    let neg_at_lo = n_lo;
    let mut history = vec![
        BisectionStep { step: 0, mass: lo, best_energy: e_lo, negative: n_lo, converged: c_lo, bracket: [lo, hi] },
        BisectionStep { step: 1, mass: hi, best_energy: e_hi, negative: n_hi, converged: c_hi, bracket: [lo, hi] },
    ];

    let mut step = 2;
    while hi - lo >= config.tolerance {
        if step - 2 >= config.max_steps {
            anomalies.push(format!("step cap {} reached before the tolerance", config.max_steps));
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (e, negative, converged) = evaluate(step, mid)?;
        if negative == neg_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        history.push(BisectionStep { step, mass: mid, best_energy: e, negative, converged, bracket: [lo, hi] });
        step += 1;
    }

    let mut by_mass: Vec<&BisectionStep> = history.iter().collect();
    by_mass.sort_by(|a, b| a.mass.total_cmp(&b.mass));
    for w in by_mass.windows(2) {
        if w[0].negative && !w[1].negative {
            anomalies.push(format!("predicate not monotone: negative at mass {} but not at {}", w[0].mass, w[1].mass));
        }
    }
    Ok(CriticalMassRecord { power: config.power, estimate: 0.5 * (lo + hi), bracket: [lo, hi], history, anomalies })
}
