use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows} rows, row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: relative defect {defect:.3e}")]
    NotHermitian { defect: f64 },

    #[error("eig failure: Jacobi sweeps did not converge (off-diagonal norm {off_norm:.3e})")]
    EigFailure { off_norm: f64 },

    #[error("dimension {dim} exceeds the supported maximum of {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("not positive definite: minimum eigenvalue {min_eig:.3e}")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("not PSD: effect {label:?} has minimum eigenvalue {min_eig:.3e}")]
    NotPsd { label: String, min_eig: f64 },

    #[error("effect {label:?} has operator norm {norm:.6} > 1")]
    EffectTooLarge { label: String, norm: f64 },

    #[error("completeness violated: ||sum - I||_F = {deficit:.6e}")]
    CompletenessViolated { deficit: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),

    #[error("empty POVM: at least one outcome is required")]
    Empty,

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("not a probability vector: {0}")]
    NotProbability(String),

    #[error("invalid Markov matrix: {0}")]
    InvalidMarkov(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    #[error("vanishing outcome {label:?}: pivotal probability {prob:.3e}")]
    VanishingOutcome { label: String, prob: f64 },

    #[error("tolerance ambiguity: {member:?} deviates from group representative {representative:?} by {deviation:.3e} (limit {limit:.3e})")]
    ToleranceAmbiguity {
        member: String,
        representative: String,
        deviation: f64,
        limit: f64,
    },

    #[error("ambiguous matching: {label:?} matches non-equivalent partners {first:?} and {second:?}")]
    AmbiguousMatching {
        label: String,
        first: String,
        second: String,
    },

    #[error("solver stalled after {iterations} pivots")]
    SolverStalled { iterations: usize },

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("invalid instrument: {0}")]
    InvalidInstrument(String),

    #[error("invalid tolerance {name}: {value}")]
    InvalidTolerance { name: &'static str, value: f64 },

    #[error("schema violation: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors that signal tolerance sensitivity rather than bad input.
    pub fn is_ambiguity(&self) -> bool {
        matches!(self, Error::ToleranceAmbiguity { .. } | Error::AmbiguousMatching { .. })
    }
}
