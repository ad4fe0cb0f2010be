use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("time {t} outside the scenario interval [{t_i}, {t_f}]")]
    TimeRange { t: f64, t_i: f64, t_f: f64 },

    /// The weak value is undefined because the selections are (numerically)
    /// orthogonal.
    #[error("pre- and post-selection orthogonal at t = {t} (|overlap| = {overlap:e})")]
    OrthogonalSelection { t: f64, overlap: f64 },

    /// No outcome of the decomposition can lead to a successful post-selection.
    #[error("no outcome at t = {t} is compatible with the post-selection")]
    ImpossibleHistory { t: f64 },

    #[error("spectrum error: {0}")]
    Spectrum(String),

    #[error("no trial out of {total_trials} passed the post-selection")]
    EmptyEnsemble { total_trials: u64 },

    #[error("pointer grid error: {0}")]
    Grid(String),

    #[error("validation error: {0}")]
    Validation(String),
}

impl Error {
    /// Stable error name, used on diagnostic streams.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "DimensionError",
            Error::Numerical(_) => "NumericalError",
            Error::TimeRange { .. } => "TimeRangeError",
            Error::OrthogonalSelection { .. } => "OrthogonalSelectionError",
            Error::ImpossibleHistory { .. } => "ImpossibleHistoryError",
            Error::Spectrum(_) => "SpectrumError",
            Error::EmptyEnsemble { .. } => "EmptyEnsembleError",
            Error::Grid(_) => "GridError",
            Error::Validation(_) => "ValidationError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
