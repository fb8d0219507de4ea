use thiserror::Error;

/// Every failure the lab can report. The CLI maps these to exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("metric family is not minimal: sup |Tr(g^-1 d_s g)| at s=0 is {sup:.3e}")]
    NonMinimal { sup: f64 },
    #[error("metric is not positive definite at ({x:.4}, {y:.4}, s={s:.4})")]
    NotSpd { x: f64, y: f64, s: f64 },
    #[error("boundary data norm {norm:.3e} exceeds the admissible bound {bound:.3e}")]
    InadmissibleData { norm: f64, bound: f64 },
    #[error("Newton iteration diverged after {iterations} steps (residual {residual:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("stability operator is (nearly) singular: smallest eigenvalue {eigenvalue:.3e}")]
    EigenvalueObstruction { eigenvalue: f64 },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("field has non-negligible mass {mass:.3e} in the cutoff margin")]
    SupportViolation { mass: f64 },
    #[error(
        "grid spacing {spacing:.3e} does not resolve the oscillation (need <= {required:.3e})"
    )]
    UnderResolved { spacing: f64, required: f64 },
    #[error("Neumann series contraction ratio {ratio:.3} is not below 0.9")]
    SeriesDiverging { ratio: f64 },
    #[error("degree {degree} is too low for {iterates} expansion iterates")]
    DegreeTooLow { degree: usize, iterates: usize },
    #[error("fit is ill conditioned (condition number {condition:.3e})")]
    FitIllConditioned { condition: f64 },
    #[error("conformal-factor recovery needs a calibration run")]
    CalibrationMissing,
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI: 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigInvalid(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }

    /// Stable short name for structured error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonMinimal { .. } => "NonMinimal",
            Error::NotSpd { .. } => "NotSPD",
            Error::InadmissibleData { .. } => "InadmissibleData",
            Error::NewtonDiverged { .. } => "NewtonDiverged",
            Error::EigenvalueObstruction { .. } => "EigenvalueObstruction",
            Error::Factorization(_) => "Factorization",
            Error::SupportViolation { .. } => "SupportViolation",
            Error::UnderResolved { .. } => "UnderResolved",
            Error::SeriesDiverging { .. } => "SeriesDiverging",
            Error::DegreeTooLow { .. } => "DegreeTooLow",
            Error::FitIllConditioned { .. } => "FitIllConditioned",
            Error::CalibrationMissing => "CalibrationMissing",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::Io(_) => "Io",
        }
    }
}
