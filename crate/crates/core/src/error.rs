use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |A - A^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate factor (norm {norm:e}) in state `{label}`")]
    DegenerateFactor { label: String, norm: f64 },

    #[error("duplicate state label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown state label `{0}`")]
    UnknownLabel(String),

    #[error("party index {party} out of range for {parties} parties")]
    PartyOutOfRange { party: usize, parties: usize },

    #[error("state set is not mutually orthogonal: |<{first}|{second}>| = {magnitude:e}")]
    NotOrthogonal {
        first: String,
        second: String,
        magnitude: f64,
    },

    #[error("pair is orthogonal (|<alpha|beta>| = {0:e})")]
    OrthogonalPair(f64),

    #[error("assignment has length {found}, base set has {expected} states")]
    AssignmentLength { expected: usize, found: usize },

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("no surviving outcome: {0}")]
    NoSurvivingOutcome(String),

    #[error("random measurement generator failed after {0} attempts")]
    SingularGenerator(usize),

    #[error("invalid completion: {0}")]
    InvalidCompletion(String),

    #[error("malformed protocol tree: {0}")]
    MalformedProtocol(String),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("certificate subject {expected} does not match state set hash {found}")]
    HashMismatch { expected: String, found: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
