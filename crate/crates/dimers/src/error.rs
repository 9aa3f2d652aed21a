use thiserror::Error;

/// Broad failure class, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Infeasible,
    Tolerance,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("no dimer cover")]
    NoDimerCover,
    #[error("untileable")]
    Untileable,
    #[error("flip unavailable")]
    FlipUnavailable,
    #[error("slope infeasible")]
    SlopeInfeasible,
    #[error("no invariant measure")]
    NoInvariantMeasure,
    #[error("no spanning surface")]
    NoSpanningSurface,
    #[error("non-Harnack Q / ambiguous branch at ({0}, {1})")]
    AmbiguousBranch(f64, f64),
    #[error("not a perfect matching: {0}")]
    NotPerfect(String),
    #[error("overlapping edges in query")]
    OverlappingEdges,
    #[error("not a cycle: {0}")]
    NotACycle(String),
    #[error("height not single-valued: {0}")]
    NotSingleValued(String),
    #[error("phasing does not give a real determinant modulus")]
    BadPhasing,
    #[error("tolerance failure: {0}")]
    Tolerance(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Malformed(_)
            | Error::NotPerfect(_)
            | Error::OverlappingEdges
            | Error::NotACycle(_)
            | Error::BadPhasing => ErrorKind::Input,
            Error::NoDimerCover
            | Error::Untileable
            | Error::FlipUnavailable
            | Error::SlopeInfeasible
            | Error::NoInvariantMeasure
            | Error::NoSpanningSurface
            | Error::NotSingleValued(_) => ErrorKind::Infeasible,
            Error::AmbiguousBranch(..) | Error::Tolerance(_) => ErrorKind::Tolerance,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
