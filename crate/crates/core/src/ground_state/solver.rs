//! Normalized gradient flow on the mass sphere.
//!
//! Each step moves against the tangential gradient of the energy, rescales
//! back to the target mass and is accepted only if the energy does not
//! increase; the trial step length comes from a Barzilai–Borwein estimate and
//! is shrunk by the backtracking factor until acceptance. By default the direction
//! is the `H¹` gradient, which keeps the iteration count independent of `h`.

use std::path::PathBuf;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{energy_gradient_values, energy_values, mass_values, EnergyBreakdown, GraphFunction, Mesh};
use crate::grid::Boundary;
use crate::io::FunctionDocument;
use crate::parallel::Execution;
use crate::random::{boundary_window, random_zero_boundary_field, stream_rng, FieldKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum InitialGuess {
    /// Centred Gaussian of the given width (length units).
    Gaussian { width: f64 },
    /// Random positive localised field.
    Random,
    /// A function document on the same mesh.
    File { path: PathBuf },
}

/// Inner product defining the descent direction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Plain lumped `L²` gradient.
    L2,
    /// `H¹` (Sobolev) gradient, solved against `M + K` each step.
    #[default]
    H1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub power: f64,
    pub mass: f64,
    pub init: InitialGuess,
    pub seed: u64,
    pub step_size: f64,
    /// Factor in `(0, 1)` applied to the step on a rejected trial.
    pub backtrack: f64,
    pub max_iterations: usize,
    pub energy_tol: f64,
    pub gradient_tol: f64,
    pub multistart: usize,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub execution: Execution,
    /// Stop a start as soon as its energy drops below this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_below: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            power: 3.0,
            mass: 1.0,
            init: InitialGuess::Gaussian { width: 1.0 },
            seed: 0,
            step_size: 1e-3,
            backtrack: 0.5,
            max_iterations: 20_000,
            energy_tol: 1e-10,
            gradient_tol: 1e-5,
            multistart: 8,
            metric: Metric::H1,
            execution: Execution::Parallel,
            stop_below: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.power > 2.0 && self.power.is_finite()) {
            problems.push(format!("p must exceed 2 (got {})", self.power));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            problems.push(format!("mass must be positive (got {})", self.mass));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            problems.push(format!("step size must be positive (got {})", self.step_size));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            problems.push(format!("backtrack factor must lie in (0, 1) (got {})", self.backtrack));
        }
        if !(self.energy_tol > 0.0) {
            problems.push(format!("energy tolerance must be positive (got {})", self.energy_tol));
        }
        if !(self.gradient_tol > 0.0) {
            problems.push(format!("gradient tolerance must be positive (got {})", self.gradient_tol));
        }
        if self.multistart == 0 {
            problems.push("multistart must be at least 1".into());
        }
        if let InitialGuess::Gaussian { width } = self.init {
            if !(width > 0.0) {
                problems.push(format!("initial width must be positive (got {width})"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub start: usize,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateResult {
    pub minimizer: GraphFunction,
    /// Exact energy terms of the minimizer.
    pub breakdown: EnergyBreakdown,
    pub iterations: usize,
    pub converged: bool,
    pub projected_gradient_norm: f64,
    /// Largest relative deviation from the target mass over all iterates.
    pub max_mass_drift: f64,
    /// Whether every accepted step kept the energy non-increasing.
    pub monotone: bool,
    pub best_start: usize,
    pub starts: Vec<RunSummary>,
    #[serde(skip)]
    pub energy_trace: Vec<f64>,
}

fn dirichlet(mesh: &Mesh) -> bool {
    mesh.grid().spec().boundary == Boundary::Dirichlet
}

fn gaussian(mesh: &Arc<Mesh>, centre: [f64; 3], width: f64) -> Result<GraphFunction> {
    let d = mesh.grid().dimension();
    let window = dirichlet(mesh);
    GraphFunction::sample(mesh, |x| {
        let r2: f64 = (0..d).map(|k| (x[k] - centre[k]).powi(2)).sum();
        let g = (-r2 / (width * width)).exp();
        if window {
            g * boundary_window(mesh, x)
        } else {
            g
        }
    })
}

/// Start 0 follows the configured guess; starts 1 and 2 are narrow Gaussians
/// on the centre vertex and on the midpoint of the edge leaving it along x;
/// later starts alternate random localised fields (odd) and Gaussians of
/// random centre and width (even).
pub fn initial_guess(mesh: &Arc<Mesh>, config: &SolverConfig, start: usize) -> Result<GraphFunction> {
    let grid = mesh.grid();
    let half = grid.radius() as f64 * grid.edge_length();
    let random_field = |s: usize| {
        let kind = if s % 4 == 3 { FieldKind::SmoothBumps } else { FieldKind::Localised };
        let f = random_zero_boundary_field(mesh, kind, config.seed, s);
        let v = f.values().iter().map(|x| x.abs()).collect();
        GraphFunction::from_values(mesh, v)
    };
    let mut f = match (start, &config.init) {
        (0, InitialGuess::Gaussian { width }) => gaussian(mesh, [0.0; 3], *width)?,
        (0, InitialGuess::File { path }) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
            let doc: FunctionDocument = serde_json::from_str(&text)?;
            doc.into_function_on(mesh)?
        }
        (0, InitialGuess::Random) => random_field(start)?,
        (1, _) => gaussian(mesh, [0.0; 3], 0.25 * grid.edge_length())?,
        (2, _) => gaussian(mesh, [0.5 * grid.edge_length(), 0.0, 0.0], 0.25 * grid.edge_length())?,
        (s, _) if s % 2 == 1 => random_field(s)?,
        (s, _) => {
            let mut rng = stream_rng(config.seed ^ 0x5eed_6a55, s as u64);
            let mut c = [0.0; 3];
            for x in c.iter_mut().take(grid.dimension()) {
                *x = rng.gen_range(-0.5 * half..=0.5 * half);
            }
            let w = rng.gen_range(0.3..=1.0) * half.max(grid.edge_length());
            gaussian(mesh, c, w)?
        }
    };
    if dirichlet(mesh) && f.boundary_violation().is_some() {
        let mut v = f.into_values();
        for &b in grid.boundary_vertices() {
            v[b] = 0.0;
        }
        f = GraphFunction::from_values(mesh, v)?;
    }
    f.project_mass(config.mass)
}

struct Flow {
    values: Vec<f64>,
    iterations: usize,
    converged: bool,
    projected_gradient_norm: f64,
    max_mass_drift: f64,
    monotone: bool,
    trace: Vec<f64>,
}

fn mass_matvec(mesh: &Mesh, x: &[f64], out: &mut [f64]) {
    let h = mesh.h();
    out.iter_mut().for_each(|o| *o = 0.0);
    mesh.for_each_interval(|i, j| {
        out[i] += h * (2.0 * x[i] + x[j]) / 6.0;
        out[j] += h * (x[i] + 2.0 * x[j]) / 6.0;
    });
}

fn rescale(mesh: &Mesh, values: &mut [f64], target: f64) -> Result<()> {
    let m = mass_values(mesh, values);
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::ZeroFunction);
    }
    let s = (target / m).sqrt();
    values.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

/// `(M_L + K) v` with boundary rows replaced by the identity when pinned.
fn h1_matvec(mesh: &Mesh, w: &[f64], pinned: bool, v: &[f64], out: &mut [f64]) {
    let inv_h = 1.0 / mesh.h();
    for ((o, w), v) in out.iter_mut().zip(w).zip(v) {
        *o = w * v;
    }
    mesh.for_each_interval(|i, j| {
        let s = (v[j] - v[i]) * inv_h;
        out[i] -= s;
        out[j] += s;
    });
    if pinned {
        for &b in mesh.grid().boundary_vertices() {
            out[b] = v[b];
        }
    }
}

struct Workspace {
    r: Vec<f64>,
    z: Vec<f64>,
    q: Vec<f64>,
    ap: Vec<f64>,
}

/// Solve `(M_L + K) d = rhs` by Jacobi-preconditioned conjugate gradients.
/// Any iterate is a descent direction, so a loose tolerance suffices.
fn h1_solve(mesh: &Mesh, w: &[f64], diag: &[f64], pinned: bool, rhs: &[f64], d: &mut [f64], ws: &mut Workspace) {
    let n = rhs.len();
    d.iter_mut().for_each(|x| *x = 0.0);
    ws.r.copy_from_slice(rhs);
    for ((z, r), dg) in ws.z.iter_mut().zip(&ws.r).zip(diag) {
        *z = r / dg;
    }
    ws.q.copy_from_slice(&ws.z);
    let mut rz: f64 = ws.r.iter().zip(&ws.z).map(|(a, b)| a * b).sum();
    let target = 1e-20 * rz;
    for _ in 0..(4 * n).max(50) {
        if rz <= target || rz == 0.0 {
            break;
        }
        h1_matvec(mesh, w, pinned, &ws.q, &mut ws.ap);
        let qaq: f64 = ws.q.iter().zip(&ws.ap).map(|(a, b)| a * b).sum();
        if !(qaq > 0.0) {
            break;
        }
        let alpha = rz / qaq;
        for i in 0..n {
            d[i] += alpha * ws.q[i];
            ws.r[i] -= alpha * ws.ap[i];
            ws.z[i] = ws.r[i] / diag[i];
        }
        let rz_new: f64 = ws.r.iter().zip(&ws.z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            ws.q[i] = ws.z[i] + beta * ws.q[i];
        }
    }
}

fn flow(mesh: &Mesh, config: &SolverConfig, start: GraphFunction) -> Result<Flow> {
    let p = config.power;
    let mu = config.mass;
    let w = mesh.lumped_weights();
    let n = w.len();
    let mut x = start.into_values();
    rescale(mesh, &mut x, mu)?;

    let mut energy = energy_values(mesh, &x, p);
    if !energy.is_finite() {
        return Err(Error::NonFiniteEnergy { iteration: 0 });
    }

    let pinned = dirichlet(mesh);
    let diag = {
        let degree = mesh.grid().degree();
        let inv_h = 1.0 / mesh.h();
        let mut diag: Vec<f64> = w.iter().map(|w| w + 2.0 * inv_h).collect();
        for (v, d) in degree.iter().enumerate() {
            diag[v] = w[v] + *d as f64 * inv_h;
        }
        if pinned {
            for &b in mesh.grid().boundary_vertices() {
                diag[b] = 1.0;
            }
        }
        diag
    };
    let mut ws = Workspace { r: vec![0.0; n], z: vec![0.0; n], q: vec![0.0; n], ap: vec![0.0; n] };
    let mut grad = vec![0.0; n];
    let mut mx = vec![0.0; n];
    let mut res = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut prev_x = vec![0.0; n];
    let mut prev_dir = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut tau = config.step_size;
    let mut have_prev = false;
    let mut last_change = f64::INFINITY;
    let mut pg_norm = f64::INFINITY;
    let mut max_mass_drift = 0.0f64;
    let mut converged = false;
    let mut trace = vec![energy];
    let mut iterations = 0;

    while iterations < config.max_iterations {
        energy_gradient_values(mesh, &x, p, &mut grad);
        // residual of g = λ M x on the exact mass sphere, M the consistent mass matrix
        mass_matvec(mesh, &x, &mut mx);
        let lambda = grad.iter().zip(&x).map(|(g, v)| g * v).sum::<f64>() / mu;
        for i in 0..n {
            res[i] = grad[i] - lambda * mx[i];
        }
        if pinned {
            for &b in mesh.grid().boundary_vertices() {
                res[b] = 0.0;
            }
        }
        pg_norm = res.iter().zip(&w).map(|(r, w)| r * r / w).sum::<f64>().sqrt();

        if last_change < config.energy_tol * energy.abs().max(1.0) && pg_norm < config.gradient_tol {
            converged = true;
            break;
        }

        match config.metric {
            Metric::L2 => {
                for i in 0..n {
                    dir[i] = res[i] / w[i];
                }
            }
            Metric::H1 => h1_solve(mesh, &w, &diag, pinned, &res, &mut dir, &mut ws),
        }

        if have_prev {
            for i in 0..n {
                trial[i] = x[i] - prev_x[i];
            }
            let (ss, sy) = match config.metric {
                Metric::L2 => (0..n).fold((0.0, 0.0), |(ss, sy), i| {
                    let y = dir[i] - prev_dir[i];
                    (ss + w[i] * trial[i] * trial[i], sy + w[i] * trial[i] * y)
                }),
                Metric::H1 => {
                    h1_matvec(mesh, &w, pinned, &trial, &mut scratch);
                    (0..n).fold((0.0, 0.0), |(ss, sy), i| {
                        let y = dir[i] - prev_dir[i];
                        (ss + scratch[i] * trial[i], sy + scratch[i] * y)
                    })
                }
            };
            if sy > 0.0 && ss > 0.0 {
                tau = (ss / sy).clamp(1e-3 * config.step_size, 1e6 * config.step_size);
            } else {
                tau *= 2.0;
            }
        }

        let mut accepted = false;
        while tau > 1e-30 {
            for i in 0..n {
                trial[i] = x[i] - tau * dir[i];
            }
            if rescale(mesh, &mut trial, mu).is_err() {
                tau *= config.backtrack;
                continue;
            }
            let e = energy_values(mesh, &trial, p);
            if e.is_finite() && e <= energy {
                prev_x.copy_from_slice(&x);
                prev_dir.copy_from_slice(&dir);
                std::mem::swap(&mut x, &mut trial);
                last_change = energy - e;
                energy = e;
                accepted = true;
                break;
            }
            tau *= config.backtrack;
        }
        iterations += 1;
        if !accepted {
            // no descent possible at machine precision: stationary
            converged = pg_norm < config.gradient_tol;
            break;
        }
        have_prev = true;
        trace.push(energy);
        let drift = (mass_values(mesh, &x) / mu - 1.0).abs();
        max_mass_drift = max_mass_drift.max(drift);
        if let Some(t) = config.stop_below {
            if energy < t {
                break;
            }
        }
    }

    let monotone = trace.windows(2).all(|w| w[1] <= w[0]);
    Ok(Flow { values: x, iterations, converged, projected_gradient_norm: pg_norm, max_mass_drift, monotone, trace })
}

/// Run a single start of the flow from `start`.
pub fn minimize_from(mesh: &Arc<Mesh>, config: &SolverConfig, start: GraphFunction) -> Result<GroundStateResult> {
    config.validate()?;
    if start.mesh().as_ref() != mesh.as_ref() {
        return Err(Error::MeshMismatch);
    }
    let run = flow(mesh, config, start)?;
    let minimizer = GraphFunction::from_values(mesh, run.values)?;
    let breakdown = minimizer.energy(config.power)?;
    Ok(GroundStateResult {
        starts: vec![RunSummary {
            start: 0,
            energy: breakdown.energy,
            iterations: run.iterations,
            converged: run.converged,
        }],
        minimizer,
        breakdown,
        iterations: run.iterations,
        converged: run.converged,
        projected_gradient_norm: run.projected_gradient_norm,
        max_mass_drift: run.max_mass_drift,
        monotone: run.monotone,
        best_start: 0,
        energy_trace: run.trace,
    })
}

/// Multistart normalized gradient flow; keeps the lowest final energy.
pub fn minimize(mesh: &Arc<Mesh>, config: &SolverConfig) -> Result<GroundStateResult> {
    config.validate()?;
    let runs = config.execution.map_indexed(config.multistart, |s| {
        let start = initial_guess(mesh, config, s)?;
        minimize_from(mesh, config, start)
    });
    let mut results = Vec::with_capacity(runs.len());
    for r in runs {
        results.push(r?);
    }
    let starts: Vec<RunSummary> = results
        .iter()
        .enumerate()
        .map(|(s, r)| RunSummary {
            start: s,
            energy: r.breakdown.energy,
            iterations: r.iterations,
            converged: r.converged,
        })
        .collect();
    let best = (0..results.len())
        .min_by(|&a, &b| results[a].breakdown.energy.total_cmp(&results[b].breakdown.energy))
        .expect("at least one start");
    let max_mass_drift = results.iter().map(|r| r.max_mass_drift).fold(0.0, f64::max);
    let monotone = results.iter().all(|r| r.monotone);
    let mut out = results.swap_remove(best);
    out.best_start = best;
    out.starts = starts;
    out.max_mass_drift = max_mass_drift;
    out.monotone = monotone;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, MetricGrid};

    fn mesh(d: usize, r: usize, n: usize, boundary: Boundary) -> Arc<Mesh> {
        let grid = MetricGrid::build(GridSpec::new(d, 1.0, r, boundary)).unwrap();
        Mesh::new(Arc::new(grid), n).unwrap()
    }

    fn quick(p: f64, mu: f64) -> SolverConfig {
        SolverConfig { power: p, mass: mu, multistart: 3, max_iterations: 2000, ..SolverConfig::default() }
    }

    #[test]
    fn rejects_bad_configs() {
        let m = mesh(1, 2, 2, Boundary::Dirichlet);
        for cfg in [
            quick(2.0, 1.0),
            quick(1.5, 1.0),
            quick(3.0, 0.0),
            SolverConfig { backtrack: 1.0, ..quick(3.0, 1.0) },
            SolverConfig { multistart: 0, ..quick(3.0, 1.0) },
        ] {
            assert!(matches!(minimize(&m, &cfg), Err(Error::InvalidConfig(_))));
        }
        let other = mesh(1, 3, 2, Boundary::Dirichlet);
        let start = GraphFunction::sample(&other, |x| 1.0 - x[0].abs() / 3.0).unwrap();
        assert!(matches!(minimize_from(&m, &quick(3.0, 1.0), start), Err(Error::MeshMismatch)));
    }

    #[test]
    fn mass_is_kept_and_energy_never_rises() {
        let m = mesh(3, 2, 4, Boundary::Dirichlet);
        let r = minimize(&m, &quick(3.0, 1.5)).unwrap();
        assert!(r.max_mass_drift < 1e-10, "{}", r.max_mass_drift);
        assert!((r.breakdown.mass / 1.5 - 1.0).abs() < 1e-10);
        assert!(r.monotone);
        assert!(r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.minimizer.boundary_violation().is_none());
        assert_eq!(r.starts.len(), 3);
        let best = r.starts.iter().map(|s| s.energy).fold(f64::INFINITY, f64::min);
        assert_eq!(r.breakdown.energy, best);
    }

    #[test]
    fn reproducible_and_independent_of_execution() {
        let m = mesh(2, 2, 3, Boundary::Neumann);
        let mut cfg = SolverConfig { init: InitialGuess::Random, ..quick(4.0, 1.0) };
        let a = minimize(&m, &cfg).unwrap();
        let b = minimize(&m, &cfg).unwrap();
        cfg.execution = Execution::Sequential;
        let c = minimize(&m, &cfg).unwrap();
        for other in [&b, &c] {
            assert_eq!(a.minimizer, other.minimizer);
            assert_eq!(a.breakdown, other.breakdown);
            assert_eq!(a.best_start, other.best_start);
        }
    }

    #[test]
    fn both_metrics_reach_the_same_minimum() {
        let m = mesh(1, 4, 4, Boundary::Dirichlet);
        let cfg = SolverConfig { multistart: 1, max_iterations: 20_000, ..quick(4.0, 2.0) };
        let h1 = minimize(&m, &cfg).unwrap();
        let l2 = minimize(&m, &SolverConfig { metric: Metric::L2, ..cfg }).unwrap();
        assert!(h1.converged && l2.converged);
        assert!((h1.breakdown.energy - l2.breakdown.energy).abs() < 1e-8);
        assert!(h1.iterations < l2.iterations);
    }

    #[test]
    fn stop_below_ends_early() {
        let m = mesh(1, 4, 4, Boundary::Dirichlet);
        let cfg = SolverConfig { multistart: 1, ..quick(4.0, 4.0) };
        let full = minimize(&m, &cfg).unwrap();
        assert!(full.breakdown.energy < 0.0);
        let early = minimize(&m, &SolverConfig { stop_below: Some(0.0), ..cfg }).unwrap();
        assert!(early.breakdown.energy < 0.0);
        assert!(early.iterations < full.iterations);
    }
}
