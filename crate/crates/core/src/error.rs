use thiserror::Error;

/// What went wrong, independent of where.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErrorKind {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("non-manifold: face {face:?} has {count} cofaces (simplex {simplex})")]
    NonManifold {
        face: Vec<usize>,
        count: usize,
        simplex: usize,
    },
    #[error("non-orientable: simplex {simplex} induces the same orientation on face {face:?} as a neighbour")]
    NonOrientable { face: Vec<usize>, simplex: usize },
    #[error("degenerate simplex {simplex} (volume {volume:e})")]
    Degenerate { simplex: usize, volume: f64 },
    #[error("patch is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("empty boundary")]
    EmptyBoundary,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("degree {degree} out of range for this operation (n = {n})")]
    Degree { degree: usize, n: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("scaffold projection did not converge (|F| = {residual:e})")]
    Projection { residual: f64 },
    #[error("scaffold is not symplectic at the sample point (pairing {pairing:e})")]
    NotSymplectic { pairing: f64 },
    #[error("scaffold conditions failed: {0}")]
    ScaffoldConditions(String),
    #[error(
        "ambiguous kernel: singular value gap {gap:e} below the required factor; refine the mesh"
    )]
    AmbiguousKernel { gap: f64 },
    #[error("problem not solvable: {0}")]
    Solvability(String),
    #[error("zero volume")]
    ZeroVolume,
    #[error("base patch is not special Lagrangian (residual {residual:e})")]
    NotSpecialLagrangian { residual: f64 },
    #[error("normal field violates its constraints: {0}")]
    Constraint(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("linearization rank collapse")]
    RankCollapse,
    #[error("first Betti number is {b1}; the scaffold deformation requires b1 = 0")]
    NonzeroBetti { b1: usize },
    #[error("continuation failed at t = {t_failed} (last good t = {t_good}): {message}")]
    Continuation {
        t_good: f64,
        t_failed: f64,
        message: String,
    },
    #[error("integrator did not converge at step {step}")]
    Integrator { step: usize },
    #[error("point left the chart")]
    OutsideChart,
    #[error("resolution {0} is too low")]
    Resolution(usize),
}

/// Error carrying the module and operation that raised it.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{module}::{op}: {kind}")]
pub struct Error {
    pub module: &'static str,
    pub op: &'static str,
    pub kind: ErrorKind,
}

impl Error {
    pub fn new(module: &'static str, op: &'static str, kind: ErrorKind) -> Self {
        Error { module, op, kind }
    }

    /// Validation failures (bad input) as opposed to solver failures.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self.kind,
            ErrorKind::Projection { .. }
                | ErrorKind::NoConvergence { .. }
                | ErrorKind::RankCollapse
                | ErrorKind::Continuation { .. }
                | ErrorKind::Integrator { .. }
                | ErrorKind::AmbiguousKernel { .. }
                | ErrorKind::OutsideChart
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Shorthand used by every module: `err("mesh", "load_mesh", kind)`.
pub(crate) fn err<T>(module: &'static str, op: &'static str, kind: ErrorKind) -> Result<T> {
    Err(Error::new(module, op, kind))
}
