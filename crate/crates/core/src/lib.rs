//! Locally adaptive confidence bands for probability densities.
//!
//! The crate is `no_std` (it needs `alloc`) and holds the pure numerical
//! pieces of the procedure:
//!
//! * [`kernel`]: compactly supported kernels with certified metadata,
//!   plus convolution and bias oracles against piecewise analytic functions.
//! * [`calibration`]: every sample-size dependent constant (dyadic bandwidth
//!   grid, mesh width, undersmoothing shift, Gumbel normalizers).
//! * [`density`]: closed-form test densities (Weierstraß composites, tents,
//!   perturbed hypotheses) with samplers, exponent oracles and KL divergence.
//! * [`holder`]: grid estimates of the modified Hölder norm.
//! * [`estimator`]: sample splitting and kernel density estimates on the mesh.
//! * [`selector`]: the localized Lepski rule and undersmoothed cell bandwidths.
//! * [`band`]: the piecewise-constant confidence band and coverage queries.
//!
//! IO, file formats, Monte Carlo drivers and the command line live in the
//! companion `locband` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod band;
pub mod calibration;
pub mod density;
pub mod error;
pub mod estimator;
pub mod holder;
pub mod kernel;
pub mod piecewise;
pub(crate) mod math;
pub mod quadrature;
pub mod selector;
pub mod weierstrass;

pub use calibration::{
    band_halfwidth_quantile, derive_plan, gumbel_quantile, normalizers, optimal_bandwidth,
    CalibrationPlan, Mode, PlanParams,
};
pub use band::{band_at, build_band, covers_truth, reference_global_band, BandCell, ConfidenceBand};
pub use density::{AnalyticDensity, PieceKind, Variant};
pub use error::{Error, Result};
pub use estimator::{build_kde_table, kde_at, split_sample, Half, KdeTable, SplitSample};
pub use kernel::{convolve_at, kernel_moment, sup_abs_bias, Kernel};
pub use selector::{admissible_set, select_profile, theoretical_window, BandwidthProfile};
pub use weierstrass::WeierstrassSpec;
