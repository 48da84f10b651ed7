use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("PoleEvaluation: z is within {distance:e} of pole {index}")]
    PoleEvaluation { index: usize, distance: f64 },
    #[error("DegenerateResidue: |2 lambda| = {abs_two_lambda:e} below tolerance")]
    DegenerateResidue { abs_two_lambda: f64 },
    #[error("InconsistentRow: row12 = 0 but row11 is not +/- lambda")]
    InconsistentRow,
    #[error("ClearanceViolation: segment {segment} passes {distance:e} from pole {pole}")]
    ClearanceViolation { segment: usize, pole: usize, distance: f64 },
    #[error("StepUnderflow: step fell below {min_step:e} at s = {at}")]
    StepUnderflow { at: f64, min_step: f64 },
    #[error("PointCollision: points {i} and {j} are {distance:e} apart")]
    PointCollision { i: usize, j: usize, distance: f64 },
    #[error("DegenerateInfinity: residue at infinity is not diagonalizable with distinct eigenvalues")]
    DegenerateInfinity,
    #[error("DegenerateConfiguration: {0}")]
    DegenerateConfiguration(String),
    #[error("ChartMismatch: momentum is near neither +lambda nor -lambda at pole {index}")]
    ChartMismatch { index: usize },
    #[error("SingularLinearSystem: condition number {cond:e}")]
    SingularLinearSystem { cond: f64 },
    #[error("ResidueMismatch at point {index}: {detail}")]
    ResidueMismatch { index: usize, detail: String },
    #[error("NonInvariantDirection at apparent point {index}: obstruction {obstruction:e}")]
    NonInvariantDirection { index: usize, obstruction: f64 },
    #[error("NumericalNoise: Richardson mismatch {relative:e}")]
    NumericalNoise { relative: f64 },
    #[error("ResidueCheckFailed: {0}")]
    ResidueCheckFailed(String),
    #[error("UndefinedCrossRatio: three or more points coincide")]
    UndefinedCrossRatio,
    #[error("DegeneratePoles: poles {i} and {j} coincide")]
    DegeneratePoles { i: usize, j: usize },
    #[error("NonTrivialBundle: {0}")]
    NonTrivialBundle(String),
    #[error("root finding did not converge")]
    RootFinding,
}

impl Error {
    /// Short machine-readable name of the failure kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::PoleEvaluation { .. } => "PoleEvaluation",
            Error::DegenerateResidue { .. } => "DegenerateResidue",
            Error::InconsistentRow => "InconsistentRow",
            Error::ClearanceViolation { .. } => "ClearanceViolation",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::PointCollision { .. } => "PointCollision",
            Error::DegenerateInfinity => "DegenerateInfinity",
            Error::DegenerateConfiguration(_) => "DegenerateConfiguration",
            Error::ChartMismatch { .. } => "ChartMismatch",
            Error::SingularLinearSystem { .. } => "SingularLinearSystem",
            Error::ResidueMismatch { .. } => "ResidueMismatch",
            Error::NonInvariantDirection { .. } => "NonInvariantDirection",
            Error::NumericalNoise { .. } => "NumericalNoise",
            Error::ResidueCheckFailed(_) => "ResidueCheckFailed",
            Error::UndefinedCrossRatio => "UndefinedCrossRatio",
            Error::DegeneratePoles { .. } => "DegeneratePoles",
            Error::NonTrivialBundle(_) => "NonTrivialBundle",
            Error::RootFinding => "RootFinding",
        }
    }

    /// Whether the failure is a validation/input problem (as opposed to a
    /// numerical one).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::InconsistentRow | Error::DegeneratePoles { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
