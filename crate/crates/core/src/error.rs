use thiserror::Error;

/// Errors raised by the geometric kernels and the checks built on them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("metric is singular at chart point {point:?}")]
    SingularMetric { point: Vec<f64> },

    #[error("vector is not unit length (|u|_g = {norm})")]
    NotUnit { norm: f64 },

    #[error("vector is not normal to the submanifold (tangential component {residual:e})")]
    NotNormal { residual: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("embedding differential is rank deficient at parameter {param:?}")]
    RankDeficient { param: Vec<f64> },

    #[error("focal singularity at t = {t}: |det J| below threshold")]
    FocalSingularity { t: f64 },

    #[error("integrator step size collapsed at t = {t}")]
    StepCollapse { t: f64 },

    #[error("ray at base parameter {base:?}, normal coefficients {fiber:?} failed: {source}")]
    RayFailed {
        base: Vec<f64>,
        fiber: Vec<f64>,
        #[source]
        source: Box<GeomError>,
    },
}

pub type Result<T> = std::result::Result<T, GeomError>;
