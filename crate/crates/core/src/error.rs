use std::io;

use thiserror::Error;

use crate::cnf::ParseError;
use crate::solver::ExternalError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("no solutions: formula is unsatisfiable")]
    NoSolutions,

    #[error("need at least {needed} distinct solutions, found {found}")]
    TooFewSolutions { needed: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty delta pool")]
    EmptyPool,

    #[error(transparent)]
    External(#[from] ExternalError),

    #[error("malformed suite file, line {line}: {reason}")]
    SuiteFormat { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::LengthMismatch { expected, actual })
        }
    }
}
