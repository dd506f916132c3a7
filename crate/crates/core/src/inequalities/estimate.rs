//! Empirical lower bounds for optimal inequality constants.
//!
//! Multistart local ascent of the inequality ratio over a parametric family of
//! zero-boundary functions. Start `s` draws from its own random stream, so
//! raising the number of starts only adds candidates and the best ratio can
//! never decrease.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{InequalityForm, Verdict};
use crate::error::{Error, Result};
use crate::function::{GraphFunction, Mesh};
use crate::parallel::Execution;
use crate::random::{boundary_window, random_zero_boundary_field, stream_rng, FieldKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Random zero-boundary fields, refined by node-level ascent only.
    RandomField,
    /// `exp(-|x - c|² / w²)`; parameters: centre, log width.
    GaussianBump,
    /// `sech((s - c) / w)^{2/(p-2)}` on the x-line through the origin;
    /// parameters: offset, log width.
    LineSoliton,
    /// `Π_a (1 - ((x_a - c_a) / w_a)²)₊²`; parameters: centre, log widths.
    TensorBump,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "random" | "random_field" => Ok(Family::RandomField),
            "gaussian" | "gaussian_bump" => Ok(Family::GaussianBump),
            "soliton" | "line_soliton" => Ok(Family::LineSoliton),
            "tensor" | "tensor_bump" => Ok(Family::TensorBump),
            other => Err(Error::InvalidConfig(format!("unknown family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AscentConfig {
    pub multistart: usize,
    /// Ratio evaluations allowed per start for the parameter search.
    pub max_evals: usize,
    pub initial_step: f64,
    pub min_step: f64,
    /// Node-level perturbation steps after the parameter search.
    pub node_steps: usize,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self { multistart: 8, max_evals: 200, initial_step: 0.5, min_step: 1e-3, node_steps: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantEstimate {
    pub form: InequalityForm,
    pub power: Option<f64>,
    pub family: Family,
    /// Largest ratio found: a lower bound for the optimal constant.
    pub best_ratio: f64,
    pub provable_bound: Option<f64>,
    pub best_start: usize,
    pub evaluations: usize,
    pub witness: GraphFunction,
}

struct Problem<'a> {
    mesh: &'a Arc<Mesh>,
    form: InequalityForm,
    power: Option<f64>,
    family: Family,
}

impl Problem<'_> {
    fn ratio(&self, f: &GraphFunction) -> Option<f64> {
        let r = self.form.check(f, self.power).ok()?;
        (r.verdict != Verdict::Vacuous && r.ratio.is_finite()).then_some(r.ratio)
    }

    fn dim(&self) -> usize {
        self.mesh.grid().dimension()
    }

    fn half_width(&self) -> f64 {
        let g = self.mesh.grid();
        g.radius() as f64 * g.edge_length()
    }

    /// Parameters are centres in units of `ell` and natural-log widths.
    fn random_params(&self, rng: &mut impl Rng) -> Vec<f64> {
        let r = self.mesh.grid().radius() as f64;
        let log_lo = 0.1f64.ln();
        let log_hi = r.ln().max(log_lo + 0.5);
        let d = self.dim();
        match self.family {
            Family::RandomField => vec![],
            Family::GaussianBump => {
                let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5 * r..0.5 * r)).collect();
                v.push(rng.gen_range(log_lo..log_hi));
                v
            }
            Family::LineSoliton => vec![rng.gen_range(-0.5 * r..0.5 * r), rng.gen_range(log_lo..log_hi)],
            Family::TensorBump => {
                let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5 * r..0.5 * r)).collect();
                v.extend((0..d).map(|_| rng.gen_range(log_lo..log_hi)));
                v
            }
        }
    }

    fn clamp(&self, params: &mut [f64]) {
        let r = self.mesh.grid().radius() as f64;
        let (lo, hi) = (0.02f64.ln(), (4.0 * r).ln());
        let d = self.dim();
        let centres = match self.family {
            Family::RandomField => 0,
            Family::GaussianBump => d,
            Family::LineSoliton => 1,
            Family::TensorBump => d,
        };
        for (i, x) in params.iter_mut().enumerate() {
            *x = if i < centres { x.clamp(-r, r) } else { x.clamp(lo, hi) };
        }
    }

    fn build(&self, params: &[f64]) -> Option<GraphFunction> {
        let mesh = self.mesh;
        let ell = mesh.grid().edge_length();
        let d = self.dim();
        let f = match self.family {
            Family::RandomField => return None,
            Family::GaussianBump => {
                let w = params[d].exp() * ell;
                GraphFunction::sample(mesh, |x| {
                    let r2: f64 = (0..d).map(|k| (x[k] - params[k] * ell).powi(2)).sum();
                    (-r2 / (w * w)).exp() * boundary_window(mesh, x)
                })
            }
            Family::TensorBump => GraphFunction::sample(mesh, |x| {
                let b: f64 = (0..d)
                    .map(|k| {
                        let u = (x[k] - params[k] * ell) / (params[d + k].exp() * ell);
                        (1.0 - u * u).max(0.0).powi(2)
                    })
                    .product();
                b * boundary_window(mesh, x)
            }),
            Family::LineSoliton => {
                let grid = mesh.grid();
                let line = grid.line_through(&[0, 0, 0], 0)?;
                let kappa = match self.power {
                    Some(p) if p > 2.0 => 2.0 / (p - 2.0),
                    _ => 1.0,
                };
                let (c, w) = (params[0] * ell, params[1].exp() * ell);
                let half = self.half_width();
                let mut v = vec![0.0; mesh.node_count()];
                for &e in &line.edges {
                    for node in mesh.edge_nodes(e) {
                        let s = mesh.node_position(node)[0];
                        let sech = 1.0 / ((s - c) / w).cosh();
                        v[node] = sech.powf(kappa) * (1.0 - (s / half).powi(2)).max(0.0);
                    }
                }
                GraphFunction::from_values(mesh, v)
            }
        };
        let mut f = f.ok()?;
        if f.boundary_violation().is_some() {
            let mut v = f.into_values();
            for &b in mesh.grid().boundary_vertices() {
                v[b] = 0.0;
            }
            f = GraphFunction::from_values(mesh, v).ok()?;
        }
        Some(f)
    }
}

struct StartResult {
    ratio: Option<f64>,
    witness: Option<GraphFunction>,
    evaluations: usize,
}

fn run_start(problem: &Problem, config: &AscentConfig, seed: u64, start: usize) -> StartResult {
    let mut rng = stream_rng(seed, start as u64);
    let mut evaluations = 0usize;

    let mut best: Option<(f64, GraphFunction)> = None;

    if problem.family == Family::RandomField {
        let f = random_zero_boundary_field(problem.mesh, FieldKind::for_index(start), seed, start);
        evaluations += 1;
        if let Some(r) = problem.ratio(&f) {
            best = Some((r, f));
        }
    } else {
        let mut params = problem.random_params(&mut rng);
        let eval = |params: &[f64], evaluations: &mut usize| {
            *evaluations += 1;
            let f = problem.build(params)?;
            problem.ratio(&f).map(|r| (r, f))
        };
        let mut current = eval(&params, &mut evaluations);
        let mut step = config.initial_step;
        while step >= config.min_step && evaluations < config.max_evals {
            let mut improved = false;
            for i in 0..params.len() {
                for dir in [1.0, -1.0] {
                    if evaluations >= config.max_evals {
                        break;
                    }
                    let mut trial = params.clone();
                    trial[i] += dir * step;
                    problem.clamp(&mut trial);
                    if let Some((r, f)) = eval(&trial, &mut evaluations) {
                        if current.as_ref().is_none_or(|(c, _)| r > *c) {
                            params = trial;
                            current = Some((r, f));
                            improved = true;
                            break;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = current;
    }

    if let Some((mut ratio, f)) = best.take() {
        let mut f = f.project_mass(1.0).unwrap_or(f);
        let mut delta = 0.1;
        let boundary = problem.mesh.grid().boundary_vertices();
        for _ in 0..config.node_steps {
            let scale = delta * f.sup_norm();
            let mut v = f.values().to_vec();
            for x in v.iter_mut() {
                *x += scale * rng.gen_range(-1.0..1.0);
            }
            for &b in boundary {
                v[b] = 0.0;
            }
            evaluations += 1;
            let trial = GraphFunction::from_values(problem.mesh, v).ok().and_then(|g| g.project_mass(1.0).ok());
            match trial.and_then(|g| problem.ratio(&g).map(|r| (r, g))) {
                Some((r, g)) if r > ratio => {
                    ratio = r;
                    f = g;
                    delta = (delta * 1.2).min(1.0);
                }
                _ => delta *= 0.7,
            }
        }
        best = Some((ratio, f));
    }

    match best {
        Some((r, f)) => StartResult { ratio: Some(r), witness: Some(f), evaluations },
        None => StartResult { ratio: None, witness: None, evaluations },
    }
}

pub fn estimate_constant(
    mesh: &Arc<Mesh>,
    form: InequalityForm,
    power: Option<f64>,
    family: Family,
    config: &AscentConfig,
    seed: u64,
    exec: Execution,
) -> Result<ConstantEstimate> {
    if form.takes_power() {
        let p = power.ok_or_else(|| Error::InvalidConfig(format!("{form} needs a power p")))?;
        if !form.power_admissible(p) {
            return Err(Error::PowerOutOfRange { p, range: "admissible range of the form" });
        }
    }
    if let Some(d) = form.required_dimension() {
        let actual = mesh.grid().dimension();
        if actual != d {
            return Err(Error::WrongDimension { required: d, actual });
        }
    }
    if config.multistart == 0 {
        return Err(Error::InvalidConfig("multistart must be at least 1".into()));
    }
    let problem = Problem { mesh, form, power, family };
    let results = exec.map_indexed(config.multistart, |s| run_start(&problem, config, seed, s));

    let evaluations = results.iter().map(|r| r.evaluations).sum();
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in results.iter().enumerate() {
        if let Some(ratio) = r.ratio {
            if best.is_none_or(|(_, b)| ratio > b) {
                best = Some((i, ratio));
            }
        }
    }
    let (best_start, best_ratio) = best.ok_or(Error::BudgetExhausted)?;
    let witness = results.into_iter().nth(best_start).and_then(|r| r.witness).ok_or(Error::BudgetExhausted)?;
    let provable_bound = form.check(&witness, power).ok().and_then(|r| r.provable_bound);
    Ok(ConstantEstimate { form, power, family, best_ratio, provable_bound, best_start, evaluations, witness })
}
