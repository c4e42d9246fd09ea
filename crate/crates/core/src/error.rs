use std::io;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("unreadable header: {0}")]
    Header(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("empty day {0}: no quotes inside the market window")]
    EmptyDay(NaiveDate),

    #[error("no days shared by the return and sign series")]
    NoOverlap,

    #[error("no defined seconds to average over")]
    NoDefinedSeconds,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("lag grids differ between curves")]
    LagGridMismatch,

    #[error("unsupported parameters: {0}")]
    Unsupported(String),
}
