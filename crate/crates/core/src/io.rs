//! Versioned JSON documents for grids and functions.

use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::function::{GraphFunction, Mesh};
use crate::grid::{Edge, GridSpec, Line, MetricGrid};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub tail: usize,
    pub head: usize,
    pub axis: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    pub axis: usize,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDocument {
    pub schema_version: u32,
    pub spec: GridSpec,
    /// Lattice coordinates, `dimension` entries each.
    pub vertices: Vec<Vec<i64>>,
    pub edges: Vec<EdgeRecord>,
    pub lines: Vec<LineRecord>,
    pub boundary_vertices: Vec<usize>,
}

impl GridDocument {
    pub fn from_grid(grid: &MetricGrid) -> Self {
        let d = grid.dimension();
        Self {
            schema_version: SCHEMA_VERSION,
            spec: *grid.spec(),
            vertices: grid.vertices().iter().map(|c| c[..d].to_vec()).collect(),
            edges: grid
                .edges()
                .iter()
                .map(|e| EdgeRecord { tail: e.tail, head: e.head, axis: e.axis, length: e.length })
                .collect(),
            lines: grid.lines().iter().map(|l| LineRecord { axis: l.axis, edges: l.edges.clone() }).collect(),
            boundary_vertices: grid.boundary_vertices().to_vec(),
        }
    }

    /// Rebuild the grid as stored, without checking invariants.
    pub fn into_grid(self) -> Result<MetricGrid> {
        check_version(self.schema_version)?;
        let vertices = self
            .vertices
            .iter()
            .map(|c| {
                let mut out = [0i64; 3];
                for (o, x) in out.iter_mut().zip(c) {
                    *o = *x;
                }
                out
            })
            .collect::<Vec<_>>();
        let lines = self
            .lines
            .into_iter()
            .map(|l| {
                let origin = l
                    .edges
                    .first()
                    .and_then(|&e| self.edges.get(e))
                    .and_then(|e| vertices.get(e.tail).copied())
                    .unwrap_or_default();
                Line { axis: l.axis, origin, edges: l.edges }
            })
            .collect();
        let edges = self
            .edges
            .into_iter()
            .map(|e| Edge { tail: e.tail, head: e.head, axis: e.axis, length: e.length })
            .collect();
        Ok(MetricGrid::from_parts(self.spec, vertices, edges, lines, self.boundary_vertices))
    }
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::InvalidConfig(format!("unsupported schema version {v} (expected {SCHEMA_VERSION})")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshDescriptor {
    pub grid: GridSpec,
    pub samples_per_edge: usize,
}

/// A function in deterministic node order: grid vertices first, then the
/// interior nodes of each edge in edge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDocument {
    pub schema_version: u32,
    pub mesh: MeshDescriptor,
    pub values: Vec<f64>,
}

impl FunctionDocument {
    pub fn from_function(f: &GraphFunction) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            mesh: MeshDescriptor { grid: *f.mesh().grid().spec(), samples_per_edge: f.mesh().samples_per_edge() },
            values: f.values().to_vec(),
        }
    }

    pub fn into_function(self) -> Result<GraphFunction> {
        check_version(self.schema_version)?;
        let grid = MetricGrid::build(self.mesh.grid)?;
        let mesh = Mesh::new(Arc::new(grid), self.mesh.samples_per_edge)?;
        GraphFunction::from_values(&mesh, self.values)
    }

    /// Load onto an existing mesh, which must match the stored descriptor.
    pub fn into_function_on(self, mesh: &Arc<Mesh>) -> Result<GraphFunction> {
        check_version(self.schema_version)?;
        if self.mesh.grid != *mesh.grid().spec() || self.mesh.samples_per_edge != mesh.samples_per_edge() {
            return Err(Error::MeshMismatch);
        }
        GraphFunction::from_values(mesh, self.values)
    }
}

impl Serialize for GraphFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FunctionDocument::from_function(self).serialize(s)
    }
}

/// One row per node: embedded coordinates (`dimension` columns) and value.
pub fn function_rows(f: &GraphFunction) -> Vec<(Vec<f64>, f64)> {
    let d = f.mesh().grid().dimension();
    (0..f.values().len()).map(|i| (f.mesh().node_position(i)[..d].to_vec(), f.values()[i])).collect()
}
