//! Reproducible random fields vanishing on the truncation boundary.
//!
//! Field `index` of a suite is drawn from its own ChaCha stream, so a suite of
//! `2n` fields extends the suite of `n` fields with the same seed.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::function::{GraphFunction, Mesh};
use crate::grid::MAX_DIMENSION;
use crate::parallel::Execution;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// Independent uniform values on every node.
    WhiteNoise,
    /// A few signed Gaussian bumps of random width.
    SmoothBumps,
    /// Noise supported on a handful of edges.
    Sparse,
    /// One positive Gaussian, possibly narrower than an edge.
    Localised,
}

impl FieldKind {
    pub const ALL: [FieldKind; 4] =
        [FieldKind::WhiteNoise, FieldKind::SmoothBumps, FieldKind::Sparse, FieldKind::Localised];

    pub fn for_index(index: usize) -> Self {
        Self::ALL[index % Self::ALL.len()]
    }
}

/// Product of `1 - (x_a / (R ell))^2` over the active axes; exactly zero on
/// the truncation faces.
pub fn boundary_window(mesh: &Mesh, x: [f64; MAX_DIMENSION]) -> f64 {
    let grid = mesh.grid();
    let half = grid.radius() as f64 * grid.edge_length();
    x[..grid.dimension()].iter().map(|&c| 1.0 - (c / half).powi(2)).product::<f64>().max(0.0)
}

pub fn random_zero_boundary_field(mesh: &Arc<Mesh>, kind: FieldKind, seed: u64, index: usize) -> GraphFunction {
    let mut rng = stream_rng(seed, index as u64);
    let grid = mesh.grid();
    let d = grid.dimension();
    let half = grid.radius() as f64 * grid.edge_length();
    let n_nodes = mesh.node_count();

    let random_point = |rng: &mut ChaCha8Rng| {
        let mut c = [0.0; MAX_DIMENSION];
        for x in c.iter_mut().take(d) {
            *x = rng.gen_range(-half..half);
        }
        c
    };

    let mut values = match kind {
        FieldKind::WhiteNoise => (0..n_nodes).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        FieldKind::SmoothBumps => {
            let k = rng.gen_range(1..=4);
            let bumps: Vec<_> = (0..k)
                .map(|_| {
                    let c = random_point(&mut rng);
                    let w = rng.gen_range(0.2..1.5) * grid.edge_length();
                    let a: f64 = rng.gen_range(-1.0..1.0);
                    (c, w, a)
                })
                .collect();
            (0..n_nodes)
                .map(|i| {
                    let x = mesh.node_position(i);
                    let s: f64 = bumps
                        .iter()
                        .map(|(c, w, a)| {
                            let r2: f64 = (0..d).map(|k| (x[k] - c[k]).powi(2)).sum();
                            a * (-r2 / (w * w)).exp()
                        })
                        .sum();
                    s * boundary_window(mesh, x)
                })
                .collect()
        }
        FieldKind::Sparse => {
            let mut v = vec![0.0; n_nodes];
            let n_edges = grid.edges().len();
            let picks = rng.gen_range(1..=3.min(n_edges));
            for _ in 0..picks {
                let e = rng.gen_range(0..n_edges);
                for node in mesh.edge_nodes(e) {
                    v[node] = rng.gen_range(-1.0..1.0);
                }
            }
            v
        }
        FieldKind::Localised => {
            let c = random_point(&mut rng);
            let w = rng.gen_range(0.05..1.0) * grid.edge_length();
            (0..n_nodes)
                .map(|i| {
                    let x = mesh.node_position(i);
                    let r2: f64 = (0..d).map(|k| (x[k] - c[k]).powi(2)).sum();
                    (-r2 / (w * w)).exp() * boundary_window(mesh, x)
                })
                .collect()
        }
    };
    for &b in grid.boundary_vertices() {
        values[b] = 0.0;
    }
    GraphFunction::from_values(mesh, values).expect("random field values are finite")
}

/// `count` fields cycling through every [`FieldKind`].
pub fn random_suite(mesh: &Arc<Mesh>, count: usize, seed: u64, exec: Execution) -> Vec<GraphFunction> {
    exec.map_indexed(count, |i| random_zero_boundary_field(mesh, FieldKind::for_index(i), seed, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, GridSpec, MetricGrid};

    #[test]
    fn fields_vanish_on_boundary_and_are_reproducible() {
        let grid = MetricGrid::build(GridSpec::new(3, 1.0, 2, Boundary::Dirichlet)).unwrap();
        let mesh = Mesh::new(Arc::new(grid), 4).unwrap();
        let a = random_suite(&mesh, 12, 9, Execution::Parallel);
        let b = random_suite(&mesh, 24, 9, Execution::Sequential);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x, y);
            assert!(x.boundary_violation().is_none());
        }
        assert!(a.iter().all(|f| f.sup_norm() > 0.0));
    }
}
