//! Truncated cubic grid graphs in dimension 1, 2 or 3.
//!
//! Lattice points run over `-R..=R` on every axis and are indexed
//! lexicographically (first axis slowest). Edges are enumerated vertex by
//! vertex in that order, then by axis, always pointing in the positive axis
//! direction. Each axis-parallel straight line of the truncated grid is a
//! `Line` holding its `2R` edges in increasing coordinate order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIMENSION: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Values at truncation-face vertices are pinned to zero.
    Dirichlet,
    /// Free boundary.
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dimension: usize,
    pub edge_length: f64,
    pub radius: usize,
    pub boundary: Boundary,
}

impl GridSpec {
    pub fn new(dimension: usize, edge_length: f64, radius: usize, boundary: Boundary) -> Self {
        Self { dimension, edge_length, radius, boundary }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_DIMENSION).contains(&self.dimension) {
            return Err(Error::InvalidGrid(format!("dimension must be 1, 2 or 3, got {}", self.dimension)));
        }
        if !(self.edge_length.is_finite() && self.edge_length > 0.0) {
            return Err(Error::InvalidGrid(format!("edge length must be positive, got {}", self.edge_length)));
        }
        if self.radius < 1 {
            return Err(Error::InvalidGrid("radius must be at least 1".into()));
        }
        Ok(())
    }

    /// Points per axis, `2R + 1`.
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn expected_vertex_count(&self) -> usize {
        self.side().pow(self.dimension as u32)
    }

    pub fn expected_edge_count(&self) -> usize {
        self.dimension * 2 * self.radius * self.side().pow(self.dimension as u32 - 1)
    }
}

/// Lattice coordinates; components beyond the grid dimension are zero.
pub type Lattice = [i64; MAX_DIMENSION];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub axis: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub axis: usize,
    /// Lattice coordinates of the line's first vertex.
    pub origin: Lattice,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricGrid {
    spec: GridSpec,
    vertices: Vec<Lattice>,
    edges: Vec<Edge>,
    lines: Vec<Line>,
    boundary_vertices: Vec<usize>,
}

impl MetricGrid {
    pub fn build(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.dimension;
        let r = spec.radius as i64;
        let side = spec.side();

        let vertices: Vec<Lattice> = (0..spec.expected_vertex_count())
            .map(|mut idx| {
                let mut c = [0i64; MAX_DIMENSION];
                for axis in (0..d).rev() {
                    c[axis] = (idx % side) as i64 - r;
                    idx /= side;
                }
                c
            })
            .collect();

        let strides = strides(d, side);
        let mut edges = Vec::with_capacity(spec.expected_edge_count());
        for (v, c) in vertices.iter().enumerate() {
            for axis in 0..d {
                if c[axis] < r {
                    edges.push(Edge { tail: v, head: v + strides[axis], axis, length: spec.edge_length });
                }
            }
        }

        // Edge leaving vertex `v` along `axis`, for line assembly.
        let mut outgoing = vec![usize::MAX; vertices.len() * MAX_DIMENSION];
        for (e, edge) in edges.iter().enumerate() {
            outgoing[edge.tail * MAX_DIMENSION + edge.axis] = e;
        }

        let mut lines = Vec::new();
        for axis in 0..d {
            for (v, c) in vertices.iter().enumerate() {
                if c[axis] != -r {
                    continue;
                }
                let mut line_edges = Vec::with_capacity(2 * spec.radius);
                let mut cur = v;
                for _ in 0..2 * spec.radius {
                    let e = outgoing[cur * MAX_DIMENSION + axis];
                    line_edges.push(e);
                    cur = edges[e].head;
                }
                lines.push(Line { axis, origin: *c, edges: line_edges });
            }
        }

        let boundary_vertices =
            vertices.iter().enumerate().filter(|(_, c)| c[..d].iter().any(|x| x.abs() == r)).map(|(v, _)| v).collect();

        Ok(Self { spec, vertices, edges, lines, boundary_vertices })
    }

    /// Assemble a grid from raw parts without checking invariants; pair with
    /// [`MetricGrid::validate`].
    pub fn from_parts(
        spec: GridSpec,
        vertices: Vec<Lattice>,
        edges: Vec<Edge>,
        lines: Vec<Line>,
        boundary_vertices: Vec<usize>,
    ) -> Self {
        Self { spec, vertices, edges, lines, boundary_vertices }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension
    }

    pub fn edge_length(&self) -> f64 {
        self.spec.edge_length
    }

    pub fn radius(&self) -> usize {
        self.spec.radius
    }

    pub fn vertices(&self) -> &[Lattice] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn is_boundary(&self, vertex: usize) -> bool {
        let r = self.spec.radius as i64;
        self.vertices[vertex][..self.spec.dimension].iter().any(|x| x.abs() == r)
    }

    /// Index of the vertex at lattice point `c`, if it lies in the truncation.
    pub fn vertex_index(&self, c: &Lattice) -> Option<usize> {
        let r = self.spec.radius as i64;
        let side = self.spec.side();
        let mut idx = 0usize;
        for &x in &c[..self.spec.dimension] {
            if x.abs() > r {
                return None;
            }
            idx = idx * side + (x + r) as usize;
        }
        Some(idx)
    }

    /// Embedded position of a vertex in R^d.
    pub fn position(&self, vertex: usize) -> [f64; MAX_DIMENSION] {
        let c = self.vertices[vertex];
        let l = self.spec.edge_length;
        [c[0] as f64 * l, c[1] as f64 * l, c[2] as f64 * l]
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn line_decomposition(&self, axis: usize) -> Result<Vec<&Line>> {
        if axis >= self.spec.dimension {
            return Err(Error::AxisOutOfRange { axis, dimension: self.spec.dimension });
        }
        Ok(self.lines.iter().filter(|l| l.axis == axis).collect())
    }

    /// The line along `axis` through lattice point `c`.
    pub fn line_through(&self, c: &Lattice, axis: usize) -> Option<&Line> {
        if axis >= self.spec.dimension {
            return None;
        }
        let mut origin = *c;
        origin[axis] = -(self.spec.radius as i64);
        self.lines.iter().find(|l| l.axis == axis && l.origin == origin)
    }

    pub fn degree(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.vertices.len()];
        for e in &self.edges {
            if e.tail < deg.len() {
                deg[e.tail] += 1;
            }
            if e.head < deg.len() {
                deg[e.head] += 1;
            }
        }
        deg
    }

    pub fn validate(&self) -> ValidationReport {
        let spec = &self.spec;
        let mut checks = Vec::new();
        let mut push = |name: &str, passed: bool, detail: String| {
            checks.push(Check { name: name.to_string(), passed, detail });
        };

        if let Err(e) = spec.validate() {
            push("spec valid", false, e.to_string());
            return ValidationReport { checks };
        }
        push("spec valid", true, String::new());

        let nv = spec.expected_vertex_count();
        push("vertex count", self.vertices.len() == nv, format!("expected {nv}, found {}", self.vertices.len()));

        let ne = spec.expected_edge_count();
        push("edge count", self.edges.len() == ne, format!("expected {ne}, found {}", self.edges.len()));

        let dangling =
            self.edges.iter().filter(|e| e.tail >= self.vertices.len() || e.head >= self.vertices.len()).count();
        push("edge endpoints exist", dangling == 0, format!("{dangling} dangling edges"));

        let unit = self
            .edges
            .iter()
            .filter(|e| {
                if e.tail >= self.vertices.len() || e.head >= self.vertices.len() {
                    return true;
                }
                let (a, b) = (self.vertices[e.tail], self.vertices[e.head]);
                let step = (0..MAX_DIMENSION).all(|k| if k == e.axis { b[k] - a[k] == 1 } else { b[k] == a[k] });
                !step
            })
            .count();
        push("edges join lattice neighbours", unit == 0, format!("{unit} edges are not unit steps"));

        let tol = 1e-12 * spec.edge_length;
        let bad_len = self.edges.iter().filter(|e| (e.length - spec.edge_length).abs() > tol).count();
        push("edges have length ell", bad_len == 0, format!("{bad_len} edges differ from {}", spec.edge_length));

        let deg = self.degree();
        let bad_deg =
            (0..self.vertices.len()).filter(|&v| !self.is_boundary(v) && deg[v] != 2 * spec.dimension).count();
        push(
            "interior degree 2d",
            bad_deg == 0,
            format!("{bad_deg} interior vertices with degree != {}", 2 * spec.dimension),
        );

        let mut seen = vec![0usize; self.edges.len()];
        let mut out_of_range = 0usize;
        let mut wrong_len = 0usize;
        let mut wrong_axis = 0usize;
        for line in &self.lines {
            if line.edges.len() != 2 * spec.radius {
                wrong_len += 1;
            }
            for &e in &line.edges {
                match seen.get_mut(e) {
                    Some(c) => {
                        *c += 1;
                        if self.edges[e].axis != line.axis {
                            wrong_axis += 1;
                        }
                    }
                    None => out_of_range += 1,
                }
            }
        }
        let uncovered = seen.iter().filter(|&&c| c == 0).count();
        let duplicated = seen.iter().filter(|&&c| c > 1).count();
        let expected_lines = spec.dimension * spec.side().pow(spec.dimension as u32 - 1);
        let ok = uncovered == 0
            && duplicated == 0
            && out_of_range == 0
            && wrong_len == 0
            && wrong_axis == 0
            && self.lines.len() == expected_lines;
        push(
            "lines partition edges",
            ok,
            format!(
                "{} lines (expected {expected_lines}); uncovered {uncovered}, duplicated {duplicated}, \
                 unknown {out_of_range}, wrong length {wrong_len}, wrong axis {wrong_axis}",
                self.lines.len()
            ),
        );

        let expected_boundary: Vec<usize> = (0..self.vertices.len()).filter(|&v| self.is_boundary(v)).collect();
        push(
            "boundary vertices",
            expected_boundary == self.boundary_vertices,
            format!("expected {}, found {}", expected_boundary.len(), self.boundary_vertices.len()),
        );

        ValidationReport { checks }
    }
}

fn strides(d: usize, side: usize) -> [usize; MAX_DIMENSION] {
    let mut s = [0usize; MAX_DIMENSION];
    let mut acc = 1;
    for axis in (0..d).rev() {
        s[axis] = acc;
        acc *= side;
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn grid(d: usize, ell: f64, r: usize) -> MetricGrid {
        MetricGrid::build(GridSpec::new(d, ell, r, Boundary::Neumann)).unwrap()
    }

    /// Count unit-step neighbour pairs of the lattice cube directly.
    fn brute_edge_count(d: usize, r: i64) -> usize {
        let range: Vec<i64> = (-r..=r).collect();
        let mut pts: Vec<Vec<i64>> = vec![vec![]];
        for _ in 0..d {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    range.iter().map(move |&x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        let set: HashSet<Vec<i64>> = pts.iter().cloned().collect();
        let mut count = 0;
        for p in &pts {
            for q in &pts {
                let diff: i64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
                if diff == 1 && p < q {
                    count += 1;
                }
            }
        }
        assert_eq!(set.len(), pts.len());
        count
    }

    #[test]
    fn counts_small_examples() {
        let g = grid(3, 1.0, 1);
        assert_eq!(g.vertices().len(), 27);
        assert_eq!(g.edges().len(), 54);

        let g = grid(1, 1.0, 2);
        assert_eq!(g.vertices().len(), 5);
        assert_eq!(g.edges().len(), 4);
        assert_eq!(g.lines().len(), 1);

        let g = grid(2, 0.5, 2);
        assert_eq!(g.vertices().len(), 25);
        assert_eq!(g.edges().len(), 40);
        assert!(g.edges().iter().all(|e| e.length == 0.5));
    }

    #[test]
    fn edge_count_matches_enumeration() {
        for d in 1..=3 {
            for r in 1..=4 {
                let g = grid(d, 1.0, r);
                assert_eq!(g.edges().len(), brute_edge_count(d, r as i64), "d={d} r={r}");
                assert_eq!(g.edges().len(), g.spec().expected_edge_count());
            }
        }
    }

    #[test]
    fn line_decomposition_examples() {
        let g = grid(3, 1.0, 1);
        let lines = g.line_decomposition(0).unwrap();
        assert_eq!(lines.len(), 9);
        assert!(lines.iter().all(|l| l.edges.len() == 2));

        let g = grid(1, 1.0, 3);
        let lines = g.line_decomposition(0).unwrap();
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].edges.len(), 6);

        let g = grid(2, 1.0, 2);
        let lines = g.line_decomposition(1).unwrap();
        assert_eq!(lines.len(), 5);
        assert!(lines.iter().all(|l| l.edges.len() == 4));

        assert!(matches!(g.line_decomposition(2), Err(Error::AxisOutOfRange { axis: 2, dimension: 2 })));
    }

    #[test]
    fn lines_partition_edges_exhaustively() {
        for d in 1..=3 {
            for r in 1..=4 {
                let g = grid(d, 1.0, r);
                let mut hits = vec![0; g.edges().len()];
                for axis in 0..d {
                    for line in g.line_decomposition(axis).unwrap() {
                        // consecutive edges chain head to tail
                        for w in line.edges.windows(2) {
                            assert_eq!(g.edges()[w[0]].head, g.edges()[w[1]].tail);
                        }
                        for &e in &line.edges {
                            hits[e] += 1;
                        }
                    }
                }
                assert!(hits.iter().all(|&h| h == 1), "d={d} r={r}");
            }
        }
    }

    #[test]
    fn build_is_deterministic() {
        let spec = GridSpec::new(3, 0.7, 2, Boundary::Dirichlet);
        assert_eq!(MetricGrid::build(spec).unwrap(), MetricGrid::build(spec).unwrap());
    }

    #[test]
    fn lexicographic_vertex_order() {
        let g = grid(2, 1.0, 1);
        assert_eq!(g.vertices()[0], [-1, -1, 0]);
        assert_eq!(g.vertices()[1], [-1, 0, 0]);
        assert_eq!(g.vertices()[3], [0, -1, 0]);
        for (v, c) in g.vertices().iter().enumerate() {
            assert_eq!(g.vertex_index(c), Some(v));
        }
        assert_eq!(g.vertex_index(&[2, 0, 0]), None);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(MetricGrid::build(GridSpec::new(0, 1.0, 1, Boundary::Neumann)).is_err());
        assert!(MetricGrid::build(GridSpec::new(4, 1.0, 1, Boundary::Neumann)).is_err());
        assert!(MetricGrid::build(GridSpec::new(3, 0.0, 1, Boundary::Neumann)).is_err());
        assert!(MetricGrid::build(GridSpec::new(3, -1.0, 1, Boundary::Neumann)).is_err());
        assert!(MetricGrid::build(GridSpec::new(3, 1.0, 0, Boundary::Neumann)).is_err());
    }

    #[test]
    fn validate_well_formed() {
        for d in 1..=3 {
            let report = grid(d, 1.0, 2).validate();
            assert!(report.all_passed(), "{:?}", report.failed());
        }
    }

    #[test]
    fn validate_deleted_edge() {
        let mut g = grid(3, 1.0, 2);
        g.edges.remove(17);
        let report = g.validate();
        assert!(report.failed().contains(&"lines partition edges"));
    }

    #[test]
    fn validate_perturbed_length() {
        let mut g = grid(3, 1.0, 2);
        g.edges[5].length = 1.01;
        let report = g.validate();
        assert_eq!(report.failed(), vec!["edges have length ell"]);
    }

    #[test]
    fn interior_degree() {
        let g = grid(3, 1.0, 2);
        let deg = g.degree();
        let centre = g.vertex_index(&[0, 0, 0]).unwrap();
        assert_eq!(deg[centre], 6);
        let corner = g.vertex_index(&[2, 2, 2]).unwrap();
        assert_eq!(deg[corner], 3);
        assert_eq!(g.boundary_vertices().len(), 125 - 27);
    }
}
