use alloc::string::String;

pub type Result<T> = core::result::Result<T, LabError>;

/// Every failure mode the probes can report. Guard trips (support, overflow,
/// CFL, non-finite values) are distinct variants so drivers can map them to
/// their own exit codes.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabError {
    #[error("grid too small: nt = {nt}, nx = {nx} (need at least 5 points per axis)")]
    GridTooSmall { nt: usize, nx: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("region does not intersect the grid")]
    EmptyRegion,
    #[error("transition band has zero width")]
    DegenerateBand,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("time support reaches within 10% of the grid edge")]
    SupportTooWide,
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("insufficient sweep: {got} samples, need at least {need}")]
    InsufficientSweep { got: usize, need: usize },
    #[error("numerical overflow: {0}")]
    NumericalOverflow(String),
    #[error("CFL violation: dt/dx = {ratio} exceeds {limit}")]
    CflViolation { ratio: f64, limit: f64 },
    #[error("non-finite value detected at time step {step}")]
    NonFiniteDetected { step: usize },
    #[error("level mismatch: relation starts at {expected} but previous one ends at {found}")]
    LevelMismatch { expected: f64, found: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("degenerate observation: observation norm vanishes while the target norm does not")]
    DegenerateObservation,
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),
}

impl LabError {
    /// Short machine-readable name, used in driver summaries.
    pub fn guard_name(&self) -> &'static str {
        match self {
            LabError::GridTooSmall { .. } => "GridTooSmall",
            LabError::InvalidGrid(_) => "InvalidGrid",
            LabError::GridMismatch => "GridMismatch",
            LabError::EmptyRegion => "EmptyRegion",
            LabError::DegenerateBand => "DegenerateBand",
            LabError::InvalidParameter(_) => "InvalidParameter",
            LabError::SupportTooWide => "SupportTooWide",
            LabError::SupportViolation(_) => "SupportViolation",
            LabError::InsufficientSweep { .. } => "InsufficientSweep",
            LabError::NumericalOverflow(_) => "NumericalOverflow",
            LabError::CflViolation { .. } => "CflViolation",
            LabError::NonFiniteDetected { .. } => "NonFiniteDetected",
            LabError::LevelMismatch { .. } => "LevelMismatch",
            LabError::PreconditionViolated(_) => "PreconditionViolated",
            LabError::DegenerateObservation => "DegenerateObservation",
            LabError::InvalidRecipe(_) => "InvalidRecipe",
        }
    }

    /// True for configuration/validation problems as opposed to numerical
    /// guards tripping during a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            LabError::InvalidGrid(_)
                | LabError::GridTooSmall { .. }
                | LabError::InvalidParameter(_)
                | LabError::InvalidRecipe(_)
                | LabError::InsufficientSweep { .. }
                | LabError::DegenerateBand
                | LabError::PreconditionViolated(_)
                | LabError::LevelMismatch { .. }
        )
    }
}
