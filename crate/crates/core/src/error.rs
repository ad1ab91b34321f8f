use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid skew-normal parameters: {0}")]
    InvalidParams(String),

    #[error("probability {0} is outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("root finder did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid death series: {0}")]
    InvalidSeries(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("no posterior draws")]
    EmptyDraws,

    #[error("degenerate draws: parameter {0} has zero variance")]
    DegenerateDraws(String),

    #[error("empty input")]
    EmptyInput,

    #[error("log density is not finite at the initial point of chain {chain}")]
    NonFiniteInit { chain: usize },

    #[error("chain {chain}: {divergent} of {total} post-warmup transitions diverged")]
    AllDivergent {
        chain: usize,
        divergent: usize,
        total: usize,
    },

    #[error("insufficient draws for diagnostics: {0}")]
    InsufficientDraws(String),

    #[error("could not draw a positive beta from the prior after {0} attempts")]
    PriorSampling(usize),

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },

    #[error("country `{0}` not found")]
    CountryNotFound(String),

    #[error("no deaths recorded for `{0}`")]
    NoDeaths(String),

    #[error("no population figure for `{0}`")]
    MissingPopulation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
