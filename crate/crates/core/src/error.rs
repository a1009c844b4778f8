use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the configured cap of {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("density matrix has trace {trace}")]
    BadTrace { trace: f64 },

    #[error("density matrix has negative eigenvalue {eigenvalue:e}")]
    NotPositive { eigenvalue: f64 },

    #[error("invalid subsystem index {index} for {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },

    #[error("logical bit string has length {found}, register holds {expected} logical qubits")]
    LengthMismatch { expected: usize, found: usize },

    #[error("state has left the decoherence-free subspace (permanence {permanence:e})")]
    EmptySubspace { permanence: f64 },

    #[error("layout error: {0}")]
    Layout(String),

    #[error("Fock truncation violated: top-level population {population:e}")]
    TruncationViolation { population: f64 },

    #[error("spin-motion closure failed: residual entanglement {residual:e}")]
    Closure { residual: f64 },

    #[error("incomplete tomography settings: {0}")]
    Coverage(String),

    #[error("reconstruction system is singular")]
    Conditioning,

    #[error("invalid probability {value:e}")]
    InvalidProbability { value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for violations of a numerical contract (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::TruncationViolation { .. }
                | Error::Closure { .. }
                | Error::Conditioning
                | Error::NotUnitary { .. }
                | Error::EmptySubspace { .. }
        )
    }
}
