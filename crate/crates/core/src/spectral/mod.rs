//! Frequency-domain machinery: eigendecomposition of the drift matrix,
//! transfer function, model spectral density, periodogram and Welch
//! estimates, and the Whittle log-likelihood.

mod density;
mod eigen;
mod periodogram;
mod whittle;

pub use density::{spectral_density, transfer_element, ConditionSpectrum};
pub use eigen::{eigen_decompose, EigenDecomp, DEGENERACY_TOL};
pub use periodogram::{
    periodogram, welch_psd, SpectralData, WelchEstimate, WELCH_OVERLAP, WELCH_SEGMENT,
};
pub use whittle::{condition_loglik, whittle_loglik, whittle_loglik_unchecked};
