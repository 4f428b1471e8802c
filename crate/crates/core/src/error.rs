use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error(
        "component {component} has zero median absolute deviation; supply its scale explicitly"
    )]
    DegenerateScale { component: usize },

    #[error("index out of range: {0}")]
    Index(String),

    #[error("window ({start}, {end}] is shorter than the minimum length {min_len}")]
    InfeasibleWindow {
        start: usize,
        end: usize,
        min_len: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("{0} is outside the open interval (0, 1)")]
    Domain(f64),
}

impl Error {
    /// True for failures caused by floating-point behaviour rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::Calibration(_))
    }
}
