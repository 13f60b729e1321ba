use thiserror::Error;

use crate::geometry::CylCoord;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("chart is degenerate at this point; canonical coordinates {canonical:?} applied")]
    DegenerateChart { canonical: CylCoord },
    #[error("operator is singular at the chart boundary (r = {r})")]
    SingularAtBoundary { r: f64 },
    #[error("quadrature did not converge: estimate {value}, error {abs_err}")]
    QuadratureNotConverged { value: f64, abs_err: f64 },
    #[error("series truncation cap exceeded: {0}")]
    TruncationCap(String),
    #[error("exponent {exponent} exceeds the representable range")]
    OverflowGuard { exponent: f64 },
    #[error("integrand tail does not decay fast enough (r = {r}, t = {t})")]
    SlowDecay { t: f64, r: f64 },
    #[error("root is not bracketed on [-pi, pi]")]
    NoBracket,
    #[error("curvature factor {0} is not positive")]
    NegativeCurvatureTerm(f64),
    #[error("Green function has a pole at the identity")]
    PoleAtOrigin,
}

impl Error {
    /// True for numerical convergence failures as opposed to bad inputs.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNotConverged { .. }
                | Error::TruncationCap(_)
                | Error::SlowDecay { .. }
                | Error::OverflowGuard { .. }
                | Error::NegativeCurvatureTerm(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {v}")))
    }
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}
