//! Numerically certified Gaussian approximations of factorized
//! log-concave densities on the line.
//!
//! The crate provides two approximation schemes, an adaptive quadrature
//! oracle that measures the true moments they are judged against, and a
//! family of inequality certificates whose claimed constants are verified
//! on a grid before any bound is trusted:
//!
//! * expectation propagation ([`ep`]): per-site Gaussian factors refined by
//!   damped moment matching until every hybrid shares the global moments;
//! * the canonical Gaussian approximation ([`cga`]): curvature fit at the
//!   potential's minimizer;
//! * moment and concentration inequalities ([`certificates`]) with slack
//!   bookkeeping;
//! * scaling sweeps ([`scaling`]) that fit observed error decay rates
//!   against the predicted powers of the site count.
//!
//! Everything numeric is generic over the scalar type through [`Scalar`];
//! the `*64` aliases fix `f64` for ordinary use.

// Guards written as `!(x > 0)` are deliberate: they treat NaN as a failure
// alongside the out-of-range values, where `x <= 0` would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod cga;
pub mod ep;
pub mod error;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod scaling;

pub use certificates::{
    brascamp_lieb_even, cga_leading_error, excess_kl, extension_suite,
    hybrid_extension_inputs, hybrid_precision_consistency, numeric_tolerance,
    target_extension_inputs, theorem_suite, vinv_decomposition, BoundCertificate, ExcessKl,
    VinvDecomposition,
};
pub use cga::{cga_approx, default_x0, find_mode, CgaResult};
pub use ep::{
    cavity, fixed_point_diagnostics, hybrid_moments, solve_fixed_point, update_site, EpOptions,
    EpState, FixedPoint, FixedPointDiagnostics, InitPolicy, NaturalGaussian,
};
pub use error::{Error, Result};
pub use model::{
    certify_constants, measure_constants, parse_problem, problem_to_json, Domain,
    MeasuredConstants, RegularityConstants, Site, SiteFamily, SiteSpec, Target,
};
pub use oracle::{moments, tail_mass_bound, GridSpec, MomentSummary};
pub use scalar::Scalar;
pub use scaling::{
    check_family_slopes, fit_rate, make_family, power_of_two_ns, run_sweep, write_csv,
    FamilyKind, RateFit, SlopeCheck, SweepRecord,
};

/// [`Target`] over `f64`.
pub type Target64 = Target<f64>;
/// [`Site`] over `f64`.
pub type Site64 = Site<f64>;
/// [`MomentSummary`] over `f64`.
pub type MomentSummary64 = MomentSummary<f64>;
/// [`GridSpec`] over `f64`.
pub type GridSpec64 = GridSpec<f64>;
/// [`NaturalGaussian`] over `f64`.
pub type NaturalGaussian64 = NaturalGaussian<f64>;
/// [`FixedPoint`] over `f64`.
pub type FixedPoint64 = FixedPoint<f64>;
/// [`CgaResult`] over `f64`.
pub type CgaResult64 = CgaResult<f64>;
/// [`RegularityConstants`] over `f64`.
pub type RegularityConstants64 = RegularityConstants<f64>;
