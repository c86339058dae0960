use thiserror::Error;

pub type Result<T, E = IcpError> = std::result::Result<T, E>;

/// Errors raised anywhere in the ICP pipeline.
///
/// Every variant maps to a stable machine-readable code via [`IcpError::code`],
/// which the command-line front end reports in its error JSON.
#[derive(Debug, Error)]
pub enum IcpError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid p-value table: {0}")]
    InvalidTable(String),

    #[error("design matrix for set {set} is rank deficient")]
    RankDeficient { set: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("only one environment label found in column `{0}`; at least two are required")]
    SingleEnvironment(String),

    #[error("column `{column}` row {row}: value `{value}` is not numeric (dummy-code categorical predictors)")]
    NonNumeric { column: String, row: usize, value: String },

    #[error("column `{column}` row {row}: non-finite value")]
    NonFinite { column: String, row: usize },

    #[error("closed testing oracle refuses m = {0} (limit is 12)")]
    OracleTooLarge(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl IcpError {
    pub fn code(&self) -> &'static str {
        match self {
            IcpError::Config(_) => "CONFIG",
            IcpError::InvalidTable(_) => "INVALID_TABLE",
            IcpError::RankDeficient { .. } => "RANK_DEFICIENT",
            IcpError::InsufficientData(_) => "INSUFFICIENT_DATA",
            IcpError::Domain(_) => "DOMAIN",
            IcpError::MissingColumn(_) => "MISSING_COLUMN",
            IcpError::SingleEnvironment(_) => "SINGLE_ENVIRONMENT",
            IcpError::NonNumeric { .. } => "NON_NUMERIC",
            IcpError::NonFinite { .. } => "NON_FINITE",
            IcpError::OracleTooLarge(_) => "ORACLE_TOO_LARGE",
            IcpError::Io(_) => "IO",
            IcpError::Csv(_) => "CSV",
            IcpError::Json(_) => "JSON",
        }
    }
}
