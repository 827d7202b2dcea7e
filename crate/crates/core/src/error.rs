use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is outside the valid range {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("bandwidth l = {l} must be smaller than the sample size n = {n}")]
    Bandwidth { l: usize, n: usize },

    #[error("degenerate variance: long-run variance estimate is zero")]
    DegenerateVariance,

    #[error(
        "truncation infeasible: tail bound {eps_tail:e} needs more than {cap} coefficients \
         (tail standard deviation at the cap is {tail_at_cap:e})"
    )]
    TruncationInfeasible {
        eps_tail: f64,
        cap: usize,
        tail_at_cap: f64,
    },

    #[error("invalid innovation model: {0}")]
    InvalidModel(String),

    #[error("grid size {0} must be a power of two")]
    GridSize(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corrupt or unreadable {what} {path:?}: {reason}")]
    Format {
        what: &'static str,
        path: PathBuf,
        reason: String,
    },

    #[error("quantile table not found: {0:?}")]
    MissingTable(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, range: &'static str) -> Self {
        Error::Domain { name, value, range }
    }
}
