//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use gridnls::ground_state::{
    concentration_probe, default_concentration_schedule, estimate_critical_mass, inequality_mass_threshold, minimize,
    phase_diagram, CriticalMassConfig, PhaseConfig, SolverConfig, DEFAULT_UNBOUNDED_THRESHOLD,
};
use gridnls::inequalities::{
    check_gn_1d, check_gn_3d, check_gn_critical, check_gn_infty, check_holder_interp, check_path_estimate,
    check_sobolev_3d, gn_critical_bound, random_path_points, InequalityReport, P_CRITICAL_3D,
};
use gridnls::random::{random_suite, random_zero_boundary_field, FieldKind};
use gridnls::{Boundary, Execution, GraphFunction, GridSpec, Mesh, MetricGrid};

const SUITE_SEED: u64 = 20240601;
const SOBOLEV_FIELDS: usize = 500;
const SOBOLEV_BUDGET: Duration = Duration::from_secs(30);
const PATH_FIELDS: usize = 50;
const PATH_POINTS: usize = 100;
const GRADIENT_FIELDS: usize = 20;
const FD_STEP: f64 = 1e-6;
const GRADIENT_TOL: f64 = 1e-6;
const ORACLE_TOL: f64 = 1e-8;
const ORDER_RANGE: (f64, f64) = (1.9, 2.1);
const SWEEP_BUDGET: Duration = Duration::from_secs(300);
const ENERGY_EPS: f64 = 1e-10;
const BISECTION_TOL: f64 = 1e-3;
const UNBOUNDED_THRESHOLD: f64 = DEFAULT_UNBOUNDED_THRESHOLD;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn mesh(d: usize, r: usize, n: usize, boundary: Boundary) -> Arc<Mesh> {
    let grid = MetricGrid::build(GridSpec::new(d, 1.0, r, boundary)).expect("valid grid");
    Mesh::new(Arc::new(grid), n).expect("valid mesh")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn count_violations(reports: impl IntoIterator<Item = InequalityReport>) -> (usize, usize, f64) {
    let (mut n, mut bad, mut worst) = (0, 0, 0.0f64);
    for r in reports {
        n += 1;
        if r.is_violated() {
            bad += 1;
        }
        if let Some(b) = r.provable_bound {
            worst = worst.max(r.ratio / b);
        }
    }
    (n, bad, worst)
}

fn sobolev_suite() -> Vec<GraphFunction> {
    random_suite(&mesh(3, 2, 8, Boundary::Dirichlet), SOBOLEV_FIELDS, SUITE_SEED, Execution::Parallel)
}

fn sobolev_soundness() -> Outcome {
    let t = Instant::now();
    let suite = sobolev_suite();
    let reports: Vec<_> =
        suite.iter().map(|f| check_sobolev_3d(f).map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    let elapsed = t.elapsed();
    let (n, bad, worst) = count_violations(reports);
    ensure(bad == 0, || format!("{bad}/{n} violations"))?;
    ensure(elapsed < SOBOLEV_BUDGET, || format!("took {elapsed:.1?}"))?;
    Ok(format!("{n} fields, 0 violations, max ratio/bound {worst:.3e}, {elapsed:.1?}"))
}

fn gn_family_soundness() -> Outcome {
    let suite = sobolev_suite();
    let mut reports = Vec::new();
    for f in &suite {
        let mut push = |r: gridnls::Result<InequalityReport>| r.map(|r| reports.push(r)).map_err(|e| e.to_string());
        for p in [2.0, 3.0, 4.0, 5.0, 6.0] {
            push(check_gn_1d(f, p))?;
        }
        push(check_gn_infty(f))?;
        for p in [2.0, P_CRITICAL_3D, 4.0, 5.0, 6.0] {
            push(check_gn_3d(f, p))?;
        }
        for p in [P_CRITICAL_3D, 4.0, 5.0, 6.0] {
            push(check_gn_critical(f, p))?;
        }
        for p in [2.5, 4.0, 5.5] {
            push(check_holder_interp(f, p))?;
        }
    }
    let (n, bad, worst) = count_violations(reports);
    ensure(bad == 0, || format!("{bad}/{n} violations"))?;
    Ok(format!("{n} checks, 0 violations, max ratio/bound {worst:.3e}"))
}

fn path_soundness() -> Outcome {
    let m = mesh(3, 2, 8, Boundary::Dirichlet);
    let suite = random_suite(&m, PATH_FIELDS, SUITE_SEED + 1, Execution::Parallel);
    let (mut points, mut bad, mut worst) = (0, 0, 0.0f64);
    for (i, f) in suite.iter().enumerate() {
        let pts = random_path_points(&m, PATH_POINTS, SUITE_SEED + 1, i as u64);
        let r = check_path_estimate(f, &pts).map_err(|e| e.to_string())?;
        points += r.points;
        bad += r.violations;
        worst = worst.max(r.max_ratio);
    }
    ensure(bad == 0, || format!("{bad}/{points} violations"))?;
    Ok(format!("{points} points on {PATH_FIELDS} fields, 0 violations, max ratio {worst:.3}"))
}

fn gradient_correctness() -> Outcome {
    let m = mesh(3, 1, 4, Boundary::Neumann);
    let mut worst = 0.0f64;
    for i in 0..GRADIENT_FIELDS {
        let base = random_zero_boundary_field(&m, FieldKind::for_index(i), SUITE_SEED + 2, i);
        let tilt = GraphFunction::sample(&m, |x| 0.3 * x[0] - 0.1 * x[2]).map_err(|e| e.to_string())?;
        let v = base.values().iter().zip(tilt.values()).map(|(a, b)| a + b).collect();
        let f = GraphFunction::from_values(&m, v).map_err(|e| e.to_string())?;
        for p in [2.5, 4.0, 6.0] {
            let g = f.energy_gradient(p).map_err(|e| e.to_string())?;
            let (mut diff, mut norm) = (0.0, 0.0);
            for k in 0..f.values().len() {
                let energy_at = |delta: f64| {
                    let mut v = f.values().to_vec();
                    v[k] += delta;
                    GraphFunction::from_values(&m, v).unwrap().energy(p).unwrap().energy
                };
                let fd = (energy_at(FD_STEP) - energy_at(-FD_STEP)) / (2.0 * FD_STEP);
                diff += (fd - g.values()[k]).powi(2);
                norm += g.values()[k].powi(2);
            }
            worst = worst.max((diff / norm).sqrt());
        }
    }
    ensure(worst < GRADIENT_TOL, || format!("max relative error {worst:.2e}"))?;
    Ok(format!("{GRADIENT_FIELDS} fields x 3 powers, max relative error {worst:.2e}"))
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for k in 1..m {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

fn gaussian(x: [f64; 3]) -> f64 {
    (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp()
}

/// Composite Simpson on every interval, ten times finer than the mesh.
fn oracle(f: &GraphFunction, p: f64) -> (f64, f64) {
    let m = f.mesh();
    let (n, h, v) = (m.samples_per_edge(), m.h(), f.values());
    let (mut lp, mut kin) = (0.0, 0.0);
    for e in 0..m.grid().edges().len() {
        for k in 1..=n {
            let (a, b) = (v[m.edge_node(e, k - 1)], v[m.edge_node(e, k)]);
            lp += simpson(|t| (a + (b - a) * t / h).abs().powf(p), 0.0, h, 10);
            let s = (b - a) / h;
            kin += simpson(|_| s * s, 0.0, h, 10);
        }
    }
    (lp, 0.5 * kin)
}

fn continuum_lp_pow(m: &Mesh, p: f64) -> f64 {
    let g = m.grid();
    g.edges()
        .iter()
        .map(|e| {
            let x0 = g.position(e.tail);
            simpson(
                |s| {
                    let mut x = x0;
                    x[e.axis] += s;
                    gaussian(x).powf(p)
                },
                0.0,
                e.length,
                2000,
            )
        })
        .sum()
}

fn oracle_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for n in [8, 16] {
        let m = mesh(3, 2, n, Boundary::Neumann);
        let f = GraphFunction::sample(&m, gaussian).map_err(|e| e.to_string())?;
        for p in [2.5, 3.0, 4.0, 6.0] {
            let (lp, kin) = oracle(&f, p);
            let norm = f.lp_norm(p).map_err(|e| e.to_string())?;
            worst = worst.max((norm - lp.powf(1.0 / p)).abs() / norm);
            let e = f.energy(p).map_err(|e| e.to_string())?.energy;
            let oe = kin - lp / p;
            worst = worst.max((e - oe).abs() / oe.abs());
        }
    }
    ensure(worst < ORACLE_TOL, || format!("max relative deviation {worst:.2e}"))?;
    let mut orders = Vec::new();
    for p in [2.0, 4.0] {
        let errs: Vec<f64> = [4, 8, 16, 32]
            .iter()
            .map(|&n| {
                let m = mesh(3, 1, n, Boundary::Neumann);
                let f = GraphFunction::sample(&m, gaussian).unwrap();
                (f.lp_norm_pow(p).unwrap() - continuum_lp_pow(&m, p)).abs()
            })
            .collect();
        orders.extend(errs.windows(2).map(|w| (w[0] / w[1]).log2()));
    }
    let ok = orders.iter().all(|o| (ORDER_RANGE.0..ORDER_RANGE.1).contains(o));
    ensure(ok, || format!("observed orders {orders:.3?}"))?;
    Ok(format!("max relative deviation {worst:.2e}, observed orders {orders:.3?}"))
}

fn item1_shadow() -> Outcome {
    let t = Instant::now();
    let m = mesh(3, 3, 8, Boundary::Neumann);
    let mut cells = Vec::new();
    for p in [2.5, 3.0] {
        for mu in [0.5, 1.0, 2.0] {
            let cfg = SolverConfig { power: p, mass: mu, ..SolverConfig::default() };
            let r = minimize(&m, &cfg).map_err(|e| e.to_string())?;
            cells.push((p, mu, r.breakdown.energy));
        }
    }
    let elapsed = t.elapsed();
    let bad: Vec<_> = cells.iter().filter(|c| c.2.is_nan() || c.2 >= 0.0).collect();
    ensure(bad.is_empty(), || format!("non-negative cells {bad:?}"))?;
    ensure(elapsed < SWEEP_BUDGET, || format!("took {elapsed:.1?}"))?;
    let worst = cells.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
    Ok(format!("6 cells negative, largest energy {worst:.4e}, {elapsed:.1?}"))
}

fn item2a_shadow() -> Outcome {
    let m = mesh(3, 2, 8, Boundary::Dirichlet);
    let spec = *m.grid().spec();
    let mu = 0.01;
    let mut lines = Vec::new();
    for p in [4.0, 5.0] {
        let threshold = inequality_mass_threshold(&spec, p).ok_or("no threshold")?;
        ensure(mu < threshold, || format!("mass {mu} above threshold {threshold}"))?;
        let cfg = SolverConfig { power: p, mass: mu, ..SolverConfig::default() };
        let r = minimize(&m, &cfg).map_err(|e| e.to_string())?;
        ensure(r.breakdown.energy >= -ENERGY_EPS, || format!("p={p}: best energy {}", r.breakdown.energy))?;
        ensure(r.starts.iter().all(|s| s.energy >= -ENERGY_EPS), || format!("p={p}: a start went negative"))?;
        // E >= T (1 - (2/p) C mu^{p/2-1}) on the minimizer
        let c = gn_critical_bound(1.0, p);
        let lower = r.breakdown.kinetic * (1.0 - 2.0 / p * c * mu.powf(0.5 * p - 1.0));
        ensure(r.breakdown.energy >= lower - 1e-12 * r.breakdown.kinetic, || format!("p={p}: below {lower}"))?;
        lines.push(format!("p={p}: E={:.3e}", r.breakdown.energy));
    }
    Ok(lines.join(", "))
}

fn crossover() -> Outcome {
    let m = mesh(3, 2, 8, Boundary::Dirichlet);
    let cfg = CriticalMassConfig::new(4.0, 1.0, 40.0, BISECTION_TOL);
    let mut estimates = Vec::new();
    for seed in [0, 7] {
        let solver = SolverConfig { seed, ..SolverConfig::default() };
        let rec = estimate_critical_mass(&m, &cfg, &solver).map_err(|e| e.to_string())?;
        let (lo, hi) = (&rec.history[0], &rec.history[1]);
        ensure(!lo.negative && hi.negative, || format!("seed {seed}: no flip at the bracket ends"))?;
        ensure(rec.bracket[1] - rec.bracket[0] <= BISECTION_TOL, || format!("seed {seed}: bracket {:?}", rec.bracket))?;
        ensure(rec.anomalies.is_empty(), || format!("seed {seed}: {:?}", rec.anomalies))?;
        estimates.push(rec.estimate);
    }
    let diff = (estimates[0] - estimates[1]).abs();
    ensure(diff <= 2.0 * BISECTION_TOL, || format!("estimates {estimates:?}"))?;
    Ok(format!("mu_4 = {:.6} (seed 0), {:.6} (seed 7)", estimates[0], estimates[1]))
}

fn unboundedness() -> Outcome {
    let m = mesh(3, 1, 512, Boundary::Dirichlet);
    let lambdas = default_concentration_schedule(&m, 0.5, 32);
    let top = lambdas.last().unwrap() * m.h();
    ensure((top - 0.5).abs() < 1e-12, || format!("schedule reaches lambda h = {top}"))?;
    let seven = concentration_probe(&m, 7.0, 1.0, &lambdas, UNBOUNDED_THRESHOLD).map_err(|e| e.to_string())?;
    let half = &seven.energies[seven.energies.len() / 2..];
    ensure(half.windows(2).all(|w| w[1] < w[0]), || "p=7 energy not decreasing over the tail".into())?;
    ensure(seven.unbounded_below_suspected && seven.min_energy < UNBOUNDED_THRESHOLD, || {
        format!("p=7 minimum {}", seven.min_energy)
    })?;
    let four = concentration_probe(&m, 4.0, 0.01, &lambdas, UNBOUNDED_THRESHOLD).map_err(|e| e.to_string())?;
    ensure(four.energies.iter().all(|&e| e >= 0.0), || format!("p=4 minimum {}", four.min_energy))?;
    Ok(format!("p=7 final {:.3e}; p=4 minimum {:.3e}", seven.min_energy, four.min_energy))
}

fn determinism() -> Outcome {
    let m = mesh(3, 1, 4, Boundary::Dirichlet);
    let mut cfg = PhaseConfig {
        solver: SolverConfig { seed: 42, multistart: 4, ..SolverConfig::default() },
        probe_samples_per_edge: Some(64),
        ..PhaseConfig::default()
    };
    let powers = [2.5, 4.0, 7.0];
    let masses = [0.01, 1.0, 20.0];
    let run = |cfg: &PhaseConfig| {
        let pts = phase_diagram(&m, &powers, &masses, cfg).map_err(|e| e.to_string())?;
        serde_json::to_string_pretty(&pts).map_err(|e| e.to_string())
    };
    let a = run(&cfg)?;
    let b = run(&cfg)?;
    cfg.solver.execution = Execution::Sequential;
    let c = run(&cfg)?;
    ensure(a == b, || "two parallel runs differ".into())?;
    ensure(a == c, || "sequential run differs".into())?;
    Ok(format!("{} cells, {} identical bytes over 3 runs", powers.len() * masses.len(), a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("sobolev soundness", sobolev_soundness),
        ("gn family soundness", gn_family_soundness),
        ("path estimate soundness", path_soundness),
        ("gradient correctness", gradient_correctness),
        ("oracle equivalence", oracle_equivalence),
        ("negative energy at subcritical powers", item1_shadow),
        ("nonnegative energy at small mass", item2a_shadow),
        ("crossover sign flip", crossover),
        ("unboundedness trend", unboundedness),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
