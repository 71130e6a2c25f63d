use thiserror::Error;

use crate::algebra::C64;
use crate::geometry::EgoroffMetric;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the dressing library.
#[derive(Debug, Error)]
pub enum Error {
    /// Spanning columns are (numerically) linearly dependent.
    #[error("spanning columns are rank deficient (sigma_min {sigma_min:e} <= {threshold:e})")]
    RankDeficient { sigma_min: f64, threshold: f64 },

    /// A linear solve hit a pivot below tolerance.
    #[error("matrix is singular to working precision (pivot ratio {0:e})")]
    Singular(f64),

    /// A matrix handed in as a projection failed idempotency or self-adjointness.
    #[error("invalid projection: {0}")]
    InvalidProjection(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("λ = {lambda} lies within {tol:e} of the pole {pole}")]
    AtPole { lambda: C64, pole: C64, tol: f64 },

    #[error("pole collision: {0}")]
    PoleCollision(String),

    #[error("invalid loop factor: {0}")]
    InvalidFactor(String),

    #[error("u_{axis} = {value} lies outside the profile domain [{min}, {max}]")]
    OutOfDomain { axis: usize, value: f64, min: f64, max: f64 },

    #[error("invalid seed: {0}")]
    InvalidSeed(String),

    /// Accumulated h left the positive cone. The metric is still returned so
    /// that β and the diagnostics remain usable.
    #[error("accumulated h is not positive at {count} grid points (min Re h = {min:e})")]
    NonPositive {
        count: usize,
        min: f64,
        metric: Box<EgoroffMetric>,
    },

    /// Im π is not orthogonal to h(0).
    #[error("spherical condition violated: |π h(0)| = {0:e}; Im π must be orthogonal to h(0)")]
    SphericalViolation(f64),

    #[error("spherical dressing needs a spherical frame: {0}")]
    NotSpherical(String),

    #[error("X(u, 0) is not real: max |Im X| = {0:e}")]
    NonReal(f64),

    #[error("chart component {chart} nearly vanishes (|Y| = {modulus:e})")]
    ChartSingular { chart: usize, modulus: f64 },

    #[error("integration step too large: observed order {0:.3} < 3")]
    StepTooLarge(f64),

    #[error("projection drift {0:e} exceeds the per-step limit 1e-6")]
    ProjectionDrift(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("adaptive quadrature failed to reach {tol:e} on [{a}, {b}]")]
    Quadrature { a: f64, b: f64, tol: f64 },
}
