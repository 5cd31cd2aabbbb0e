use alloc::boxed::Box;
use core::fmt;

use crate::solver::MinimaReport;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor argument violated its invariant.
    InvalidParameter(&'static str),
    /// The stationarity denominator vanished; no finite coupling makes `xi` stationary.
    DegenerateDenominator { xi: f64 },
    /// A cavity variable `Y_j` left `[-sqrt 2, sqrt 2]` (or its open interior for gradients).
    Domain { index: usize, value: f64 },
    /// Fewer than half of the multi-start descents converged. The best report is kept.
    ConvergenceFailure(Box<MinimaReport>),
    /// Order classification disagreed between refinement levels.
    Unresolved,
    /// Power-law samples span less than the required number of decades.
    InsufficientRange { decades: f64 },
    /// Best achievable log-log fit quality is too low.
    BadFit { r_squared: f64 },
    /// Too few samples for a power-law fit.
    TooFewSamples { got: usize, need: usize },
    /// The exact-diagonalisation ground energy moved when the photon cutoff was raised.
    CutoffNotConverged { cutoff: usize, change: f64 },
    /// The exact-diagonalisation basis is larger than the configured guard.
    DimensionGuard { dimension: usize, limit: usize },
    /// The iterative eigensolver did not reach its residual target.
    EigenNotConverged { residual: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::DegenerateDenominator { xi } => {
                write!(f, "stationarity denominator vanishes at xi = {xi}")
            }
            Error::Domain { index, value } => {
                write!(f, "cavity variable Y[{index}] = {value} outside its domain")
            }
            Error::ConvergenceFailure(report) => write!(
                f,
                "only {:.0}% of {} multi-start descents converged",
                100.0 * report.converged_fraction,
                report.n_starts
            ),
            Error::Unresolved => write!(f, "transition order differs between refinement levels"),
            Error::InsufficientRange { decades } => {
                write!(f, "samples span {decades:.2} decades above nu_c, need 1.5")
            }
            Error::BadFit { r_squared } => write!(f, "best power-law fit has r^2 = {r_squared}"),
            Error::TooFewSamples { got, need } => {
                write!(f, "{got} samples given, at least {need} required")
            }
            Error::CutoffNotConverged { cutoff, change } => write!(
                f,
                "ground energy changed by {change:e} when raising the photon cutoff from {cutoff}"
            ),
            Error::DimensionGuard { dimension, limit } => {
                write!(f, "basis dimension {dimension} exceeds the limit {limit}")
            }
            Error::EigenNotConverged { residual } => {
                write!(f, "eigensolver stalled with residual {residual:e}")
            }
        }
    }
}

impl core::error::Error for Error {}
