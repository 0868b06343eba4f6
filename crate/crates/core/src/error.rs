use thiserror::Error;

use crate::geometry::ConfigTag;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("direction is not a finite unit vector (norm {norm})")]
    InvalidDirection { norm: f64 },

    #[error("point is not on the conic x^2 + y^2 + z^2 = 0 (relative residual {residual:e})")]
    NotOnConic { residual: f64 },

    #[error("homogeneous coordinates are all zero")]
    ZeroVector,

    #[error("configuration classification is ambiguous at this tolerance: {strict:?} vs {loose:?}")]
    ToleranceAmbiguity { strict: ConfigTag, loose: ConfigTag },

    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),

    #[error("configuration is not planar")]
    NotPlanar,

    #[error("fewer than three distinct values in cross-ratio tuple")]
    DegenerateTuple,

    #[error("three or more points of the 5-tuple coincide")]
    NotInU,

    #[error("no coordinate assignment satisfies the M5 quadrics")]
    CalibrationFailure,

    #[error("three points lie on a line parallel to the projection direction")]
    DegenerateDirection,

    #[error("all camera forms vanish at this parameter")]
    DegenerateParameter,

    #[error("degree methods disagree: exact gcd gives {exact}, hyperplane root count gives {root_count}")]
    DegreeInconsistency { exact: String, root_count: String },

    #[error("fiber search over L{i}{j} found {count} distinct non-antipodal axes")]
    AmbiguousFiber { i: usize, j: usize, count: usize },

    #[error("direction data is inconsistent (best residual {residual:e})")]
    InconsistentDirections { residual: f64 },

    #[error("lines are parallel")]
    ParallelLines,

    #[error("camera is constant: all points are collinear")]
    ConstantCamera,

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("parse error: {0}")]
    Parse(String),
}
