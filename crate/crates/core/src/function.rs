//! Piecewise-linear functions on a meshed grid graph.
//!
//! Each edge is split into `n` intervals of width `h = ell / n`. Node values
//! are stored once per grid vertex (shared by all incident edges) followed by
//! the `n - 1` interior nodes of every edge, so continuity at vertices holds
//! by construction. All norms below are exact for the piecewise-linear
//! interpolant.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Line, MetricGrid, MAX_DIMENSION};

#[derive(Debug, Clone)]
pub struct Mesh {
    grid: Arc<MetricGrid>,
    samples_per_edge: usize,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.samples_per_edge == other.samples_per_edge
            && (Arc::ptr_eq(&self.grid, &other.grid) || self.grid.spec() == other.grid.spec())
    }
}

impl Mesh {
    pub fn new(grid: Arc<MetricGrid>, samples_per_edge: usize) -> Result<Arc<Self>> {
        if samples_per_edge < 1 {
            return Err(Error::InvalidMesh("samples per edge must be at least 1".into()));
        }
        Ok(Arc::new(Self { grid, samples_per_edge }))
    }

    pub fn grid(&self) -> &MetricGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<MetricGrid> {
        &self.grid
    }

    pub fn samples_per_edge(&self) -> usize {
        self.samples_per_edge
    }

    /// Interval width.
    pub fn h(&self) -> f64 {
        self.grid.edge_length() / self.samples_per_edge as f64
    }

    pub fn node_count(&self) -> usize {
        self.grid.vertices().len() + self.grid.edges().len() * (self.samples_per_edge - 1)
    }

    pub fn vertex_count(&self) -> usize {
        self.grid.vertices().len()
    }

    /// Node `k` along edge `e`, with `k = 0` the tail vertex and `k = n` the head.
    pub fn edge_node(&self, edge: usize, k: usize) -> usize {
        let n = self.samples_per_edge;
        let e = &self.grid.edges()[edge];
        if k == 0 {
            e.tail
        } else if k == n {
            e.head
        } else {
            self.grid.vertices().len() + edge * (n - 1) + (k - 1)
        }
    }

    pub fn edge_nodes(&self, edge: usize) -> impl Iterator<Item = usize> + '_ {
        (0..=self.samples_per_edge).map(move |k| self.edge_node(edge, k))
    }

    /// Embedded coordinate of a mesh node.
    pub fn node_position(&self, node: usize) -> [f64; MAX_DIMENSION] {
        let nv = self.vertex_count();
        if node < nv {
            return self.grid.position(node);
        }
        let n = self.samples_per_edge;
        let edge = (node - nv) / (n - 1);
        let k = (node - nv) % (n - 1) + 1;
        let e = &self.grid.edges()[edge];
        let mut x = self.grid.position(e.tail);
        x[e.axis] += k as f64 * self.h();
        x
    }

    /// Trapezoid (lumped) quadrature weight of every node.
    pub fn lumped_weights(&self) -> Vec<f64> {
        let h = self.h();
        let mut w = vec![h; self.node_count()];
        for v in w.iter_mut().take(self.vertex_count()) {
            *v = 0.0;
        }
        for e in self.grid.edges() {
            w[e.tail] += 0.5 * h;
            w[e.head] += 0.5 * h;
        }
        w
    }

    fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.node_count() {
            return Err(Error::InvalidMesh(format!(
                "expected {} node values, got {}",
                self.node_count(),
                values.len()
            )));
        }
        Ok(())
    }

    /// Visit every interval `(left node, right node)` edge by edge.
    pub(crate) fn for_each_interval(&self, mut f: impl FnMut(usize, usize)) {
        for e in 0..self.grid.edges().len() {
            self.for_each_interval_on_edge(e, &mut f);
        }
    }

    pub(crate) fn for_each_interval_on_edge(&self, edge: usize, mut f: impl FnMut(usize, usize)) {
        let mut prev = self.edge_node(edge, 0);
        for k in 1..=self.samples_per_edge {
            let cur = self.edge_node(edge, k);
            f(prev, cur);
            prev = cur;
        }
    }
}

/// `∫_0^1 |a + (b - a) t|^p dt`, exact.
pub fn abs_pow_mean(a: f64, b: f64, p: f64) -> f64 {
    if a == b {
        return a.abs().powf(p);
    }
    if p == 2.0 {
        return (a * a + a * b + b * b) / 3.0;
    }
    if a * b <= 0.0 {
        // sign change: both halves add, no cancellation
        let (aa, bb) = (a.abs(), b.abs());
        return (aa.powf(p + 1.0) + bb.powf(p + 1.0)) / ((p + 1.0) * (aa + bb));
    }
    let m = 0.5 * (a + b);
    let r = 0.5 * (b - a) / m;
    if r.abs() < 0.125 {
        // mean of (1 + r s)^p over s in [-1, 1]: sum_k binom(p, 2k) r^2k / (2k + 1)
        let r2 = r * r;
        let mut sum = 1.0;
        let mut coeff = 1.0;
        let mut rpow = 1.0;
        let mut j = 0.0;
        for k in 1..60 {
            coeff *= (p - j) * (p - j - 1.0) / ((j + 1.0) * (j + 2.0));
            j += 2.0;
            rpow *= r2;
            let term = coeff * rpow / (2 * k + 1) as f64;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        m.abs().powf(p) * sum
    } else {
        let (aa, bb) = (a.abs(), b.abs());
        (bb.powf(p + 1.0) - aa.powf(p + 1.0)) / ((p + 1.0) * (bb - aa))
    }
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct Sum {
    hi: f64,
    lo: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.hi + x;
        if self.hi.abs() >= x.abs() {
            self.lo += (self.hi - t) + x;
        } else {
            self.lo += (x - t) + self.hi;
        }
        self.hi = t;
    }

    fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

pub(crate) fn lp_pow_values(mesh: &Mesh, values: &[f64], p: f64) -> f64 {
    let mut acc = Sum::default();
    mesh.for_each_interval(|i, j| acc.add(abs_pow_mean(values[i], values[j], p)));
    acc.value() * mesh.h()
}

pub(crate) fn mass_values(mesh: &Mesh, values: &[f64]) -> f64 {
    lp_pow_values(mesh, values, 2.0)
}

pub(crate) fn derivative_l2_sq_values(mesh: &Mesh, values: &[f64]) -> f64 {
    let mut acc = Sum::default();
    mesh.for_each_interval(|i, j| {
        let d = values[j] - values[i];
        acc.add(d * d);
    });
    acc.value() / mesh.h()
}

/// `∂/∂a ∫_0^1 |a + (b - a) t|^p dt`, exact.
///
/// Integrating by parts gives `(F(a, b) - |a|^p) / (b - a)` with `F` the
/// mean from [`abs_pow_mean`]; for nearby values of one sign a series in
/// `r = (b - a) / (a + b)` replaces the difference quotient.
pub fn abs_pow_mean_da(a: f64, b: f64, p: f64) -> f64 {
    if a == b {
        return 0.5 * p * a.abs().powf(p - 2.0) * a;
    }
    let m = 0.5 * (a + b);
    let r = 0.5 * (b - a) / m;
    if a * b > 0.0 && r.abs() < 0.125 {
        // (p/4) sgn(m) |m|^{p-1} ∫_{-1}^{1} (1 - s)(1 + r s)^{p-1} ds
        let q = p - 1.0;
        let mut sum = 2.0;
        let mut binom = 1.0;
        let mut rpow = 1.0;
        for j in 1..80 {
            binom *= (q - (j - 1) as f64) / j as f64;
            rpow *= r;
            let c = if j % 2 == 0 { 2.0 / (j + 1) as f64 } else { -2.0 / (j + 2) as f64 };
            let term = binom * rpow * c;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        0.25 * p * m.signum() * m.abs().powf(q) * sum
    } else {
        (abs_pow_mean(a, b, p) - a.abs().powf(p)) / (b - a)
    }
}

/// `T - V` accumulated interval by interval, so the two terms cancel before summation.
pub(crate) fn energy_values(mesh: &Mesh, values: &[f64], p: f64) -> f64 {
    let h = mesh.h();
    let (kin, pot) = (0.5 / h, h / p);
    let mut acc = Sum::default();
    mesh.for_each_interval(|i, j| {
        let (a, b) = (values[i], values[j]);
        acc.add(kin * (b - a) * (b - a) - pot * abs_pow_mean(a, b, p));
    });
    acc.value()
}

pub(crate) fn energy_gradient_values(mesh: &Mesh, values: &[f64], p: f64, out: &mut [f64]) {
    let h = mesh.h();
    let inv_h = 1.0 / h;
    let c = h / p;
    out.iter_mut().for_each(|o| *o = 0.0);
    mesh.for_each_interval(|i, j| {
        let (a, b) = (values[i], values[j]);
        let s = (b - a) * inv_h;
        out[i] -= s + c * abs_pow_mean_da(a, b, p);
        out[j] += s - c * abs_pow_mean_da(b, a, p);
    });
    if mesh.grid().spec().boundary == Boundary::Dirichlet {
        for &b in mesh.grid().boundary_vertices() {
            out[b] = 0.0;
        }
    }
}

fn check_power(p: f64, min: f64, strict: bool, range: &'static str) -> Result<()> {
    let ok = if strict { p > min } else { p >= min };
    if ok && p.is_finite() {
        Ok(())
    } else {
        Err(Error::PowerOutOfRange { p, range })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub power: f64,
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl GraphFunction {
    pub fn zeros(mesh: &Arc<Mesh>) -> Self {
        Self { mesh: Arc::clone(mesh), values: vec![0.0; mesh.node_count()] }
    }

    pub fn from_values(mesh: &Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        mesh.check_len(&values)?;
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { node, value });
        }
        Ok(Self { mesh: Arc::clone(mesh), values })
    }

    /// Evaluate `rule` at the embedded coordinate of every node.
    pub fn sample(mesh: &Arc<Mesh>, rule: impl Fn([f64; MAX_DIMENSION]) -> f64) -> Result<Self> {
        let values = (0..mesh.node_count()).map(|i| rule(mesh.node_position(i))).collect();
        Self::from_values(mesh, values)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { mesh: Arc::clone(&self.mesh), values: self.values.iter().map(|v| c * v).collect() }
    }

    /// Value at fraction `t` in `[0, 1]` along `edge`.
    pub fn value_on_edge(&self, edge: usize, t: f64) -> f64 {
        let n = self.mesh.samples_per_edge();
        let s = t.clamp(0.0, 1.0) * n as f64;
        let k = (s.floor() as usize).min(n - 1);
        let frac = s - k as f64;
        let a = self.values[self.mesh.edge_node(edge, k)];
        let b = self.values[self.mesh.edge_node(edge, k + 1)];
        a + (b - a) * frac
    }

    /// First boundary vertex carrying a nonzero value.
    pub fn boundary_violation(&self) -> Option<(usize, f64)> {
        self.mesh.grid().boundary_vertices().iter().map(|&v| (v, self.values[v])).find(|&(_, x)| x != 0.0)
    }

    pub fn require_zero_boundary(&self) -> Result<()> {
        match self.boundary_violation() {
            Some((vertex, value)) => Err(Error::BoundaryViolation { vertex, value }),
            None => Ok(()),
        }
    }

    /// `∫_G |f|^p`, the p-th power of the L^p norm.
    pub fn lp_norm_pow(&self, p: f64) -> Result<f64> {
        check_power(p, 1.0, false, "[1, inf)")?;
        Ok(lp_pow_values(&self.mesh, &self.values, p))
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        Ok(self.lp_norm_pow(p)?.powf(1.0 / p))
    }

    pub fn mass(&self) -> f64 {
        mass_values(&self.mesh, &self.values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn derivative_l2_sq(&self) -> f64 {
        derivative_l2_sq_values(&self.mesh, &self.values)
    }

    pub fn derivative_l1(&self) -> f64 {
        let mut acc = 0.0;
        self.mesh.for_each_interval(|i, j| acc += (self.values[j] - self.values[i]).abs());
        acc
    }

    pub fn edge_derivative_l1(&self, edge: usize) -> f64 {
        let mut acc = 0.0;
        self.mesh.for_each_interval_on_edge(edge, |i, j| acc += (self.values[j] - self.values[i]).abs());
        acc
    }

    pub fn line_derivative_l1(&self, line: &Line) -> f64 {
        line.edges.iter().map(|&e| self.edge_derivative_l1(e)).sum()
    }

    pub fn energy(&self, p: f64) -> Result<EnergyBreakdown> {
        check_power(p, 2.0, true, "(2, inf)")?;
        let kinetic = 0.5 * self.derivative_l2_sq();
        let potential = lp_pow_values(&self.mesh, &self.values, p) / p;
        Ok(EnergyBreakdown { power: p, mass: self.mass(), kinetic, potential, energy: kinetic - potential })
    }

    pub fn project_mass(&self, target: f64) -> Result<Self> {
        if !(target.is_finite() && target > 0.0) {
            return Err(Error::InvalidMass(target));
        }
        let mass = self.mass();
        if mass <= 0.0 {
            return Err(Error::ZeroFunction);
        }
        Ok(self.scaled((target / mass).sqrt()))
    }

    /// Gradient of [`GraphFunction::energy`] with respect to node values.
    /// Entries at boundary vertices vanish under a Dirichlet boundary.
    pub fn energy_gradient(&self, p: f64) -> Result<Self> {
        check_power(p, 2.0, true, "(2, inf)")?;
        let mut out = vec![0.0; self.values.len()];
        energy_gradient_values(&self.mesh, &self.values, p, &mut out);
        Ok(Self { mesh: Arc::clone(&self.mesh), values: out })
    }
}
