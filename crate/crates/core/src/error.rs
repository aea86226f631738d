use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n_qubits}-qubit system")]
    WireOutOfRange { index: usize, n_qubits: usize },
    #[error("gate wires must be distinct, got {0:?}")]
    DuplicateWires(Vec<usize>),
    #[error("expected {expected} parameters, got {actual}")]
    ParamLength { expected: usize, actual: usize },
    #[error("parameter reference {index} exceeds parameter count {n_params}")]
    ParamIndex { index: usize, n_params: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("density matrix trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("density matrix has negative eigenvalue {0:e}")]
    NotPositive(f64),
    #[error("probabilities must be nonnegative and sum to 1 (sum {0})")]
    BadProbabilities(f64),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("gate {0} entangles qubits and cannot act on a product state")]
    EntanglingOnProduct(String),
    #[error("state is entangled (qubit {qubit} purity {purity}); use amplitude decoding")]
    NotProduct { qubit: usize, purity: f64 },
    #[error("feature {index} = {value} outside [0, 1]")]
    FeatureRange { index: usize, value: f64 },
    #[error("cannot amplitude-embed the zero vector")]
    ZeroVector,
    #[error("registers overlap or are malformed: {0}")]
    RegisterOverlap(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("prior {0} outside [0, 1]")]
    PriorRange(f64),
    #[error("{path}: bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{path}: file truncated ({detail})")]
    Truncated { path: PathBuf, detail: String },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("{path}:{line}: {detail}")]
    Parse {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("no samples left after filtering for classes {0:?}")]
    EmptySelection(Vec<u8>),
    #[error("label {0} not present in dataset")]
    MissingLabel(u8),
    #[error("image dimensions {width}x{height} must be even for downsampling")]
    OddDimensions { width: usize, height: usize },
    #[error("requested {k} components, but at most {max} are available")]
    ComponentCount { k: usize, max: usize },
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("unsupported container version {0}")]
    Version(u16),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
