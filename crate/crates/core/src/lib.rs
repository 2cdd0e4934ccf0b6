//! Estimating the number of common factors in large N×T panels.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectrum`]: panels, population spectra and sample covariance eigenvalues.
//! - [`rmt_kernel`]: the limiting spectral law (companion Stieltjes transform,
//!   support, spike maps) and the bias terms used to correct noise estimates.
//! - [`noise`]: noise-variance estimators, including the bias-corrected one.
//! - [`criteria`]: the PCA objective, penalties and the `PC` / `PC*` criteria.
//! - [`simulate`]: data-generating processes and Monte Carlo drivers.

pub mod criteria;
pub mod error;
pub mod noise;
pub mod rmt_kernel;
pub mod simulate;
pub mod spectrum;

pub use criteria::{
    choose_m0, pc_original, pc_star, pca_objective, penalty, Criterion, CriterionReport,
    FactorBasis, M0Mode, Penalty,
};
pub use error::{FactorError, Result};
pub use noise::{
    sigma2_kn, sigma2_median, sigma2_mle, sigma2_passemier, sigma2_star, sigma2_us, NoiseCorrector,
    NoiseEstimate, NoiseMethod,
};
pub use rmt_kernel::{
    bias_b, find_support, mu_x, spike_forward, spike_inverse, stieltjes_companion, Contour,
    SpectralLaw, SupportInterval,
};
pub use spectrum::{
    sample_spectrum, BulkAtom, EigenSpectrum, FourthMomentSpec, NoiseSpectrum, PanelData,
    SpectrumSpec, Spike,
};
