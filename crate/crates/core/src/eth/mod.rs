//! Diagonal and off-diagonal diagnostics of observables in energy eigenstates.

pub mod cumulants;
pub mod diagonal;
pub mod elements;
pub mod offdiag;
pub mod spectral;

pub use cumulants::{microcanonical_coefficients, trace_moments, MicrocanonicalCoefficients};
pub use diagonal::{diag_distribution, diag_fluctuation_point, diag_fluctuation_scaling, DiagonalSeries};
pub use elements::{diagonal_elements, hs_prefactor, matrix_elements, EigenSector, MatrixElementSet};
pub use offdiag::{offdiag_distribution, OffdiagWindow};
pub use spectral::{rho_omega_check, OmegaBins, SpectralAccumulator, SpectralFunction, SpectralKind, SpectralSet};
