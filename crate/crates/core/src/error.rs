use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid spec: {0}")]
    InvalidGrid(String),

    #[error("axis {axis} out of range for a {dimension}-dimensional grid")]
    AxisOutOfRange { axis: usize, dimension: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("non-finite value {value} at node {node}")]
    NonFinite { node: usize, value: f64 },

    #[error("exponent p = {p} outside admissible range {range}")]
    PowerOutOfRange { p: f64, range: &'static str },

    #[error("function is nonzero at boundary vertex {vertex} (value {value})")]
    BoundaryViolation { vertex: usize, value: f64 },

    #[error("operation requires a {required}-dimensional grid, got dimension {actual}")]
    WrongDimension { required: usize, actual: usize },

    #[error("cannot project the zero function onto a mass sphere")]
    ZeroFunction,

    #[error("mass must be positive, got {0}")]
    InvalidMass(f64),

    #[error("function belongs to a different mesh")]
    MeshMismatch,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite energy at iteration {iteration}")]
    NonFiniteEnergy { iteration: usize },

    #[error("schedule value {value} under-resolves the mesh (value * h = {product} > 1)")]
    Resolution { value: f64, product: f64 },

    #[error("spreading radius {sigma} exceeds the grid half-width {half_width}")]
    RadiusExceedsGrid { sigma: f64, half_width: f64 },

    #[error("bracket [{lo}, {hi}] does not straddle a sign change (both predicates {predicate})")]
    BracketNoFlip { lo: f64, hi: f64, predicate: bool },

    #[error("solver did not converge at bisection step {step} (mass {mass})")]
    BisectionNonConvergence { step: usize, mass: f64 },

    #[error("no valid evaluation within the ascent budget")]
    BudgetExhausted,

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}
