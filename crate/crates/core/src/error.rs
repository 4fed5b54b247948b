use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum EdgeError {
    #[error("domain wall is singular at ({x}, {y})")]
    SingularPoint { x: f64, y: f64 },

    #[error("transversality violated: |grad kappa| = {gradient_norm:.3e} below floor {floor:.3e} at ({x}, {y})")]
    Transversality {
        x: f64,
        y: f64,
        gradient_norm: f64,
        floor: f64,
    },

    #[error("projection onto the interface did not converge from ({x}, {y}); last residual {residual:.3e}")]
    ProjectionFailed { x: f64, y: f64, residual: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid under-resolved: {0}")]
    Resolution(String),

    #[error("Krylov solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    KrylovDivergence { iterations: usize, residual: f64 },

    #[error("norm drift {drift:.3e} exceeds limit {limit:.3e} at t = {time}")]
    NormDrift { drift: f64, limit: f64, time: f64 },

    #[error("time {t} outside trajectory range [0, {t_end}]")]
    OutsideTrajectory { t: f64, t_end: f64 },

    #[error("solvability residual {residual:.3e} above tolerance at t = {time}")]
    Solvability { residual: f64, time: f64 },

    #[error("Hermite truncation unhealthy: top bands carry {fraction:.3e} of the norm")]
    Truncation { fraction: f64 },

    #[error("fit needs at least {needed} valid rows, got {got}")]
    FitDegenerate { needed: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("bad snapshot file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EdgeError>;
