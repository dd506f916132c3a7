//! Pointwise three-path estimate behind the 3D Sobolev bound.
//!
//! For `x` on the x-edge `[h, h+1] x {j} x {k}` the value `f(x)` is reached
//! from the truncation boundary along the x-line, along the y-line through
//! `(h, j, k)` then the edge, and along the z-line through `(h, j, k)` then
//! the edge. With `A`, `B`, `C` the `L¹` norms of `f'` on those three lines
//! and `c` the norm on the edge itself,
//!
//! `|f(x)|^{3/2} <= √A (√B + √c) (√C + √c)`.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BOUND_TOLERANCE;
use crate::error::{Error, Result};
use crate::function::{GraphFunction, Mesh};
use crate::grid::Lattice;
use crate::random::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    /// An x-axis edge.
    pub edge: usize,
    /// Fraction along the edge.
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub points: usize,
    pub vacuous: usize,
    pub violations: usize,
    pub max_ratio: f64,
}

impl PathReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub fn random_path_points(mesh: &Mesh, count: usize, seed: u64, stream: u64) -> Vec<PathPoint> {
    let x_edges: Vec<usize> =
        mesh.grid().edges().iter().enumerate().filter(|(_, e)| e.axis == 0).map(|(i, _)| i).collect();
    let mut rng = stream_rng(seed, stream);
    (0..count)
        .map(|_| PathPoint { edge: x_edges[rng.gen_range(0..x_edges.len())], t: rng.gen_range(0.0..=1.0) })
        .collect()
}

pub fn check_path_estimate(f: &GraphFunction, points: &[PathPoint]) -> Result<PathReport> {
    let grid = f.mesh().grid();
    if grid.dimension() != 3 {
        return Err(Error::WrongDimension { required: 3, actual: grid.dimension() });
    }
    f.require_zero_boundary()?;

    let line_l1: HashMap<(usize, Lattice), f64> =
        grid.lines().iter().map(|l| ((l.axis, l.origin), f.line_derivative_l1(l))).collect();
    let r = grid.radius() as i64;
    let through = |c: &Lattice, axis: usize| {
        let mut origin = *c;
        origin[axis] = -r;
        line_l1[&(axis, origin)]
    };

    let mut report = PathReport { points: points.len(), vacuous: 0, violations: 0, max_ratio: 0.0 };
    for pt in points {
        let edge =
            grid.edges().get(pt.edge).ok_or_else(|| Error::InvalidConfig(format!("edge {} out of range", pt.edge)))?;
        if edge.axis != 0 {
            return Err(Error::InvalidConfig(format!("edge {} is not an x-edge", pt.edge)));
        }
        let corner = grid.vertices()[edge.tail];
        let a = through(&corner, 0);
        let b = through(&corner, 1);
        let c = through(&corner, 2);
        let cell = f.edge_derivative_l1(pt.edge);

        let left = f.value_on_edge(pt.edge, pt.t).abs().powf(1.5);
        let right = a.sqrt() * (b.sqrt() + cell.sqrt()) * (c.sqrt() + cell.sqrt());
        if left == 0.0 && right == 0.0 {
            report.vacuous += 1;
            continue;
        }
        let ratio = if right == 0.0 { f64::INFINITY } else { left / right };
        report.max_ratio = report.max_ratio.max(ratio);
        if !(ratio <= 1.0 + BOUND_TOLERANCE) {
            report.violations += 1;
        }
    }
    Ok(report)
}
