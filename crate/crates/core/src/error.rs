// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the wave-generation library.
///
/// Non-convergence of an iteration is not an error; it is reported through
/// [`crate::petviashvili::Outcome`] on the returned trace.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("operator definition error: {0}")]
    Operator(String),
    #[error("iteration breakdown: {0}")]
    Breakdown(String),
    #[error("singular linear operator: {0}")]
    Singular(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
