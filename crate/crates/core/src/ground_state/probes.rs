//! Energy along explicit mass-preserving families.
//!
//! The concentration family squeezes a fixed bump onto the positive x-axis
//! from the centre vertex, `f_λ(s) = √λ φ(λ s − 1)` with `s` the arclength
//! from the centre, so the support `(0, 2/λ)` stays inside the first edge
//! once `λ ℓ >= 2`; the spreading family widens a bump over the sup-norm ball
//! of radius `σ`. Both are rescaled to the exact target mass on
//! the mesh before the energy is taken.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{GraphFunction, Mesh};

/// Energy threshold below which a decreasing concentration trend is flagged.
pub const DEFAULT_UNBOUNDED_THRESHOLD: f64 = -1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Concentration,
    Spreading,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub kind: ProbeKind,
    pub power: f64,
    pub mass: f64,
    /// λ or σ values.
    pub schedule: Vec<f64>,
    pub energies: Vec<f64>,
    pub min_energy: f64,
    /// Strictly decreasing over the second half of the schedule.
    pub decreasing_tail: bool,
    pub any_negative: bool,
    pub unbounded_below_suspected: bool,
}

/// `(1 - r²)₊²`
fn bump(r: f64) -> f64 {
    (1.0 - r * r).max(0.0).powi(2)
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidConfig("schedule is empty".into()));
    }
    if schedule.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidConfig("schedule values must be positive".into()));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("schedule must be increasing".into()));
    }
    Ok(())
}

fn check_power_mass(p: f64, mass: f64) -> Result<()> {
    if !(p > 2.0 && p.is_finite()) {
        return Err(Error::PowerOutOfRange { p, range: "(2, inf)" });
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidMass(mass));
    }
    Ok(())
}

fn decreasing_tail(energies: &[f64]) -> bool {
    let tail = &energies[energies.len() / 2..];
    tail.len() >= 2 && tail.windows(2).all(|w| w[1] < w[0])
}

/// Member `λ` of the concentration family, before mass projection.
pub fn concentration_member(mesh: &Arc<Mesh>, lambda: f64) -> Result<GraphFunction> {
    let grid = mesh.grid();
    if lambda * grid.edge_length() < 2.0 {
        return Err(Error::InvalidConfig(format!(
            "bump at lambda = {lambda} reaches past the first edge (need lambda * ell >= 2)"
        )));
    }
    let line = grid
        .line_through(&[0, 0, 0], 0)
        .ok_or_else(|| Error::InvalidConfig("grid has no line through the origin".into()))?;
    let mut v = vec![0.0; mesh.node_count()];
    let amp = lambda.sqrt();
    for &e in &line.edges {
        for node in mesh.edge_nodes(e) {
            let s = mesh.node_position(node)[0];
            if s > 0.0 {
                v[node] = amp * bump(lambda * s - 1.0);
            }
        }
    }
    GraphFunction::from_values(mesh, v)
}

pub fn concentration_probe(
    mesh: &Arc<Mesh>,
    p: f64,
    mass: f64,
    schedule: &[f64],
    threshold: f64,
) -> Result<ProbeRecord> {
    check_power_mass(p, mass)?;
    check_schedule(schedule)?;
    let h = mesh.h();
    if let Some(&lambda) = schedule.iter().find(|&&l| l * h > 1.0) {
        return Err(Error::Resolution { value: lambda, product: lambda * h });
    }
    let energies = schedule
        .iter()
        .map(|&lambda| {
            let f = concentration_member(mesh, lambda)?.project_mass(mass)?;
            Ok(f.energy(p)?.energy)
        })
        .collect::<Result<Vec<f64>>>()?;
    let min_energy = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let decreasing = decreasing_tail(&energies);
    Ok(ProbeRecord {
        kind: ProbeKind::Concentration,
        power: p,
        mass,
        schedule: schedule.to_vec(),
        min_energy,
        decreasing_tail: decreasing,
        any_negative: min_energy < 0.0,
        unbounded_below_suspected: decreasing && energies.last().is_some_and(|&e| e < threshold),
        energies,
    })
}

/// Member `σ` of the spreading family, before mass projection.
pub fn spreading_member(mesh: &Arc<Mesh>, sigma: f64) -> Result<GraphFunction> {
    let d = mesh.grid().dimension();
    GraphFunction::sample(mesh, |x| {
        let r = x[..d].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        bump(r / sigma)
    })
}

pub fn spreading_probe(mesh: &Arc<Mesh>, p: f64, mass: f64, schedule: &[f64]) -> Result<ProbeRecord> {
    let grid = mesh.grid();
    if grid.dimension() != 3 {
        return Err(Error::WrongDimension { required: 3, actual: grid.dimension() });
    }
    check_power_mass(p, mass)?;
    check_schedule(schedule)?;
    let half = grid.radius() as f64 * grid.edge_length();
    if let Some(&sigma) = schedule.iter().find(|&&s| s > half) {
        return Err(Error::RadiusExceedsGrid { sigma, half_width: half });
    }
    let energies = schedule
        .iter()
        .map(|&sigma| {
            let f = spreading_member(mesh, sigma)?.project_mass(mass)?;
            Ok(f.energy(p)?.energy)
        })
        .collect::<Result<Vec<f64>>>()?;
    let min_energy = energies.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ProbeRecord {
        kind: ProbeKind::Spreading,
        power: p,
        mass,
        schedule: schedule.to_vec(),
        min_energy,
        decreasing_tail: decreasing_tail(&energies),
        any_negative: min_energy < 0.0,
        unbounded_below_suspected: false,
        energies,
    })
}

/// `count` values from `first` to `last`, evenly spaced.
pub fn linear_schedule(first: f64, last: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![last],
        _ => (0..count).map(|i| first + (last - first) * i as f64 / (count - 1) as f64).collect(),
    }
}

/// Concentration schedule from `λ = 2/ℓ` up to `λ h = fraction`.
pub fn default_concentration_schedule(mesh: &Mesh, fraction: f64, count: usize) -> Vec<f64> {
    let first = 2.0 / mesh.grid().edge_length();
    let top = (fraction / mesh.h()).max(first * (1.0 + 1e-9));
    linear_schedule(first, top, count)
}

/// Spreading schedule from one edge length (half the half-width when `R = 1`)
/// up to the grid half-width.
pub fn default_spreading_schedule(mesh: &Mesh, count: usize) -> Vec<f64> {
    let g = mesh.grid();
    let half = g.radius() as f64 * g.edge_length();
    let first = if half > g.edge_length() { g.edge_length() } else { 0.5 * half };
    linear_schedule(first, half, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, GridSpec, MetricGrid};

    fn mesh(d: usize, r: usize, n: usize) -> Arc<Mesh> {
        let grid = MetricGrid::build(GridSpec::new(d, 1.0, r, Boundary::Dirichlet)).unwrap();
        Mesh::new(Arc::new(grid), n).unwrap()
    }

    #[test]
    fn first_member_matches_direct_energy() {
        let m = mesh(3, 2, 16);
        let rec = concentration_probe(&m, 4.0, 0.3, &[2.0, 3.0], -1e3).unwrap();
        let base = concentration_member(&m, 2.0).unwrap().project_mass(0.3).unwrap();
        assert_eq!(rec.energies[0], base.energy(4.0).unwrap().energy);
    }

    #[test]
    fn family_mass_is_nearly_invariant_before_projection() {
        let m = mesh(3, 2, 64);
        // ∫ (1 - u²)⁴ du over [-1, 1]
        let exact = 256.0 / 315.0;
        for lambda in [2.0, 4.0, 8.0] {
            let m = concentration_member(&m, lambda).unwrap().mass();
            assert!((m / exact - 1.0).abs() < 1e-2 * (lambda / 8.0f64).powi(2), "{lambda}: {m}");
        }
    }

    #[test]
    fn resolution_and_schedule_errors() {
        let m = mesh(3, 2, 4);
        assert!(matches!(concentration_probe(&m, 4.0, 1.0, &[2.0, 5.0], -1e3), Err(Error::Resolution { .. })));
        assert!(concentration_probe(&m, 4.0, 1.0, &[1.0, 2.0], -1e3).is_err());
        assert!(concentration_probe(&m, 4.0, 1.0, &[3.0, 2.0], -1e3).is_err());
        assert!(concentration_probe(&m, 2.0, 1.0, &[2.0], -1e3).is_err());
        assert!(matches!(spreading_probe(&m, 3.0, 1.0, &[1.0, 2.5]), Err(Error::RadiusExceedsGrid { .. })));
        assert!(matches!(spreading_probe(&mesh(2, 2, 4), 3.0, 1.0, &[1.0]), Err(Error::WrongDimension { .. })));
    }

    #[test]
    fn concentration_members_vanish_at_vertices() {
        let m = mesh(3, 2, 16);
        let f = concentration_member(&m, 2.0).unwrap();
        assert!(f.values()[..m.vertex_count()].iter().all(|&v| v == 0.0));
        assert!(f.sup_norm() > 1.0);
    }

    #[test]
    fn spreading_members_vanish_on_boundary_at_full_radius() {
        let m = mesh(3, 3, 2);
        let f = spreading_member(&m, 3.0).unwrap();
        assert!(f.boundary_violation().is_none());
    }

    #[test]
    fn schedules() {
        assert_eq!(linear_schedule(1.0, 3.0, 3), vec![1.0, 2.0, 3.0]);
        let m = mesh(3, 1, 8);
        let s = default_concentration_schedule(&m, 0.5, 5);
        assert_eq!(s[0], 2.0);
        assert!((s[4] * m.h() - 0.5).abs() < 1e-12);
        assert_eq!(default_spreading_schedule(&m, 3), vec![0.5, 0.75, 1.0]);
        assert_eq!(default_spreading_schedule(&mesh(3, 3, 2), 3), vec![1.0, 2.0, 3.0]);
    }
}
