use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("label column `{0}` not found")]
    MissingLabel(String),
    #[error("unrecognized label value `{value}` (accepted encodings: 0/1, no/yes, false/true)")]
    BadLabel { value: String },
    #[error("dataset is empty after removing rows with missing values")]
    EmptyDataset,
    #[error("schema error: {0}")]
    Schema(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("dataset contains a single class; both churners and non-churners are required")]
    SingleClass,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("leaf {leaf} receives no rows")]
    EmptyLeaf { leaf: usize },
    #[error("incomplete beta evaluation failed to converge (a={a}, b={b}, x={x})")]
    IncompleteBeta { a: f64, b: f64, x: f64 },
    #[error("empty sample")]
    EmptySample,
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
