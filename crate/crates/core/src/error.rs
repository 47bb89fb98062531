use thiserror::Error;

use crate::lattice::Site;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coin at {site} is not unitary (residual {residual:.3e})")]
    NonUnitaryCoin { site: Site, residual: f64 },

    #[error("coin site {site} lies outside the box of half-width {m0}")]
    SiteOutsideBox { site: Site, m0: i64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("phase {lambda} violates the quantization condition (mismatch {mismatch:.3e})")]
    QuantizationViolation { lambda: f64, mismatch: f64 },

    #[error("determinant (near) zero at kappa = {re} + {im}i")]
    NearZeroDeterminant { re: f64, im: f64 },

    #[error("winding failure: {0}")]
    Winding(String),

    #[error("root with Im kappa = {im:.3e} above the real axis")]
    UpperHalfRoot { im: f64 },

    #[error("pinned row violated at {site}: {detail}")]
    PinnedRow { site: Site, detail: String },

    #[error("eigen-solver failure: {0}")]
    EigenSolver(String),

    #[error("spectral parameter too close to a pole: {0}")]
    NearPole(String),

    #[error("loops overlap: {0}")]
    OverlappingLoops(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

impl Error {
    /// Errors caused by bad user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NonUnitaryCoin { .. }
                | Error::SiteOutsideBox { .. }
                | Error::InvalidParameter(_)
                | Error::PinnedRow { .. }
                | Error::OverlappingLoops(_)
                | Error::QuantizationViolation { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonUnitaryCoin { .. } => "non_unitary_coin",
            Error::SiteOutsideBox { .. } => "site_outside_box",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Malformed(_) => "malformed_input",
            Error::QuantizationViolation { .. } => "quantization_violation",
            Error::NearZeroDeterminant { .. } => "near_zero_determinant",
            Error::Winding(_) => "winding_failure",
            Error::UpperHalfRoot { .. } => "upper_half_root",
            Error::PinnedRow { .. } => "pinned_row",
            Error::EigenSolver(_) => "eigen_solver",
            Error::NearPole(_) => "near_pole",
            Error::OverlappingLoops(_) => "overlapping_loops",
            Error::Quadrature(_) => "quadrature",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
