use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("photon number not conserved: input carries {input} photons, output {output}")]
    PhotonNumberMismatch { input: usize, output: usize },

    #[error("mode count mismatch: expected {expected}, got {actual}")]
    ModeMismatch { expected: usize, actual: usize },

    #[error("matrix is not unitary (max |U^dagger U - I| = {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("duplicate phase mode {0}")]
    DuplicateMode(usize),

    #[error("no phase value supplied for mode {mode} ({role})")]
    MissingPhase { mode: usize, role: &'static str },

    #[error("degenerate fringe pattern: constant Fourier term is zero")]
    DegeneratePattern,

    #[error("visibility bound is undefined for the vacuum outcome")]
    VacuumOutcome,

    #[error("outcome {0} has no tabulated closed-form fringe")]
    Untabulated(String),

    #[error("coherent-state truncation at {truncation} photons leaves tail mass {tail:e}")]
    Truncation { truncation: usize, tail: f64 },

    #[error("posterior vanishes on the whole grid: outcome is impossible")]
    ImpossibleOutcome,

    #[error("posterior grid size {0} must be a power of two >= 1024")]
    GridSize(usize),

    #[error("invalid protocol configuration: {0}")]
    Protocol(String),

    #[error("Fisher matrix is singular; unidentifiable direction {direction:?} (eigenvalue {eigenvalue:e})")]
    SingularFisher { direction: Vec<f64>, eigenvalue: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
