//! Kinetic streamlined-upwind Petrov-Galerkin (KSUPG) finite element solver
//! for hyperbolic conservation laws.
//!
//! The library covers 1D/2D inviscid Burgers and compressible Euler equations
//! on linear line (L2), bilinear quadrilateral (Q4) and linear triangle (T3)
//! meshes. Upwind stabilization comes from half-range moments of a Maxwellian
//! velocity distribution, so the stabilized diffusion coefficients are
//! erf/exponential split fluxes rather than an ad-hoc intrinsic time scale.
//!
//! Modules:
//! - [`mesh`]: structured and unstructured mesh construction
//! - [`fem`]: shape functions, quadrature, element matrices, sparse assembly
//! - [`sparse`]: compressed sparse row matrices
//! - [`kinetic`]: Maxwellian moment closures, flux Jacobians, implicit
//!   decomposition matrices, and a velocity-space quadrature oracle
//! - [`linalg`]: BiCGSTAB and block expansion of scalar operators
//! - [`solver`]: explicit/implicit time stepping with shock capturing
//! - [`analysis`]: spectral stability and matrix diagnostics
//! - [`cases`]: benchmark case registry, exact solutions, CSV/VTK output

pub mod analysis;
pub mod cases;
pub mod fem;
pub mod kinetic;
pub mod linalg;
pub mod mesh;
pub mod solver;
pub mod sparse;

pub use sparse::CsrMatrix;

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("degenerate element {0}")]
    DegenerateElement(usize),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("linear solver failure: {0}")]
    LinearSolverFailure(String),
    #[error("steady iteration did not converge: residue {residue} after {steps} steps")]
    NonConvergence { residue: f64, steps: usize },
    #[error("bad bracket: {0}")]
    BadBracket(String),
    #[error("matrix size {0} exceeds dense-path limit {1}")]
    SizeLimit(usize, usize),
    #[error("singular matrix: {0}")]
    SingularMatrix(String),
    #[error("missing boundary tag: {0}")]
    MissingTag(String),
    #[error("no shock detected in window")]
    NoShockDetected,
    #[error("vacuum formation in Riemann problem")]
    VacuumFormation,
    #[error("detached shock: no attached solution for M={mach}, deflection={deflection_deg} deg")]
    DetachedShock { mach: f64, deflection_deg: f64 },
    #[error("unknown case: {0}")]
    UnknownCase(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
