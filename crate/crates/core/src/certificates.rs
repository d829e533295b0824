//! Inequality certificates with explicit slack bookkeeping.
//!
//! Every bound this crate claims about a strongly log-concave density is
//! represented as a [`BoundCertificate`]: a measured left-hand side, the
//! bound evaluated from certified constants on the right, and the slack
//! between them. A certificate *holds* when the slack is no more negative
//! than a relative round-off allowance; nothing here ever clips or repairs
//! a failing bound.
//!
//! This is deliberately a concrete `f64` module: certificates are the
//! reporting layer, and keeping them monomorphic makes serialized output
//! independent of the scalar type used by the solvers.

use serde::Serialize;

use crate::cga::CgaResult;
use crate::ep::{FixedPoint, NaturalGaussian};
use crate::error::{Error, Result};
use crate::model::{RegularityConstants, Site, Target};
use crate::oracle::MomentSummary;

/// Round-off allowance for deciding whether a bound holds: absolute 1e-9
/// for small bounds, relative 1e-9 for large ones.
pub fn numeric_tolerance(rhs: f64) -> f64 {
    1e-9 * rhs.abs().max(1.0)
}

/// One verified inequality: `lhs <= rhs` up to [`numeric_tolerance`].
#[derive(Clone, Debug, Serialize)]
pub struct BoundCertificate {
    /// Stable identifier, e.g. `"EXT.m2inv"`.
    pub id: String,
    /// What the inequality says, in words.
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; negative means the bound is violated by that much.
    pub slack: f64,
    pub holds: bool,
}

impl BoundCertificate {
    pub fn new(id: &str, anchor: &str, lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        BoundCertificate {
            id: id.to_owned(),
            anchor: anchor.to_owned(),
            lhs,
            rhs,
            slack,
            holds: slack >= -numeric_tolerance(rhs),
        }
    }
}

/// Even-moment bounds for a density whose potential has curvature at least
/// `floor` everywhere: the centered moments of order 2, 4, 6 are bounded by
/// those of the Gaussian with precision `floor`.
pub fn brascamp_lieb_even(m: &MomentSummary<f64>, floor: f64) -> Vec<BoundCertificate> {
    let b = floor;
    vec![
        BoundCertificate::new(
            "BL.even.k1",
            "variance of a log-concave density is at most the inverse curvature floor",
            m.m2,
            1.0 / b,
        ),
        BoundCertificate::new(
            "BL.even.k2",
            "4th centered moment is at most the gaussian value 3/floor^2",
            m.m4,
            3.0 / (b * b),
        ),
        BoundCertificate::new(
            "BL.even.k3",
            "6th centered moment is at most the gaussian value 15/floor^3",
            m.m6,
            15.0 / (b * b * b),
        ),
    ]
}

/// The nine first- and second-order consequences of strong log-concavity
/// that tie measured moments to potential derivatives at the mean.
///
/// `derivs` holds the total potential's derivatives of orders 1..=4 at the
/// measured mean, and `totals` the certified constants of that same total
/// potential (floor and ceilings of the full sum, not per-site values).
pub fn extension_suite(
    m: &MomentSummary<f64>,
    derivs: [f64; 4],
    totals: &RegularityConstants<f64>,
) -> Vec<BoundCertificate> {
    let [d1, d2, d3, d4] = derivs;
    let b = totals.beta_m;
    let (k3, k4, k5, k6) = (totals.k3, totals.k4, totals.k5, totals.k6);
    let b2 = b * b;
    let b3 = b2 * b;
    let b4 = b2 * b2;
    vec![
        BoundCertificate::new(
            "EXT.phiprime",
            "potential gradient at the mean is at most K3/(2 beta)",
            d1.abs(),
            k3 / (2.0 * b),
        ),
        BoundCertificate::new(
            "EXT.m3ratio",
            "skewness ratio m3/m2 is at most 2 K3/beta^2",
            (m.m3 / m.m2).abs(),
            2.0 * k3 / b2,
        ),
        BoundCertificate::new(
            "EXT.m5ratio",
            "5th-to-2nd moment ratio is at most 17 K3/beta^3",
            (m.m5 / m.m2).abs(),
            17.0 * k3 / b3,
        ),
        BoundCertificate::new(
            "EXT.m2inv",
            "inverse variance equals curvature at the mean to first order",
            (1.0 / m.m2 - d2).abs(),
            k3 * k3 / b2 + k4 / (2.0 * b),
        ),
        BoundCertificate::new(
            "EXT.m2prod",
            "variance times curvature at the mean equals 1 to first order",
            (d2 * m.m2 - 1.0).abs(),
            k3 * k3 / b3 + k4 / (2.0 * b2),
        ),
        BoundCertificate::new(
            "EXT.m3exp",
            "stationarity combination of the 3rd moment is second-order small",
            (d2 * m.m3 + d1 * m.m2 + d3 * m.m4 / 2.0).abs(),
            (17.0 / 6.0) * k3 * k4 / b4 + (5.0 / 8.0) * k5 / b3,
        ),
        BoundCertificate::new(
            "EXT.m4exp",
            "4th moment matches the gaussian relation m4 phi'' = 3 m2 to first order",
            (d2 * m.m4 - 3.0 * m.m2).abs(),
            (19.0 / 2.0) * k3 * k3 / b4 + (5.0 / 2.0) * k4 / b3,
        ),
        BoundCertificate::new(
            "EXT.order2mean",
            "gradient plus half 3rd-derivative times variance is second-order small",
            (d1 + d3 * m.m2 / 2.0).abs(),
            k3 * k4 / (3.0 * b3) + k5 / (8.0 * b2),
        ),
        BoundCertificate::new(
            "EXT.order2prec",
            "inverse variance minus its order-2 expansion in potential derivatives",
            (1.0 / m.m2 - d2 - d3 * m.m3 / (2.0 * m.m2) - d4 * m.m4 / (6.0 * m.m2)).abs(),
            (17.0 / 24.0) * k3 * k5 / b3 + k6 / (8.0 * b2),
        ),
    ]
}

/// Derivatives and totals needed by [`extension_suite`] for a whole target,
/// evaluated at `mean`. Fails for uncertified targets.
pub fn target_extension_inputs(
    target: &Target<f64>,
    mean: f64,
) -> Result<([f64; 4], RegularityConstants<f64>)> {
    let totals = target
        .pooled_constants()
        .ok_or(Error::UncertifiedConstants {
            suite: "moment-derivative bounds",
        })?;
    let derivs = [
        target.log_phi_deriv(mean, 1)?,
        target.log_phi_deriv(mean, 2)?,
        target.log_phi_deriv(mean, 3)?,
        target.log_phi_deriv(mean, 4)?,
    ];
    Ok((derivs, totals))
}

/// Derivatives and totals needed by [`extension_suite`] for one hybrid:
/// the site plus a Gaussian cavity. The cavity adds `cav.beta` to the
/// curvature floor and to the second derivative, shifts the gradient by
/// `cav.beta x - cav.r`, and leaves all higher derivatives and ceilings
/// untouched.
pub fn hybrid_extension_inputs(
    site: &Site<f64>,
    cav: &NaturalGaussian<f64>,
    mean: f64,
) -> Result<([f64; 4], RegularityConstants<f64>)> {
    let mut consts = site
        .claimed_constants()
        .ok_or(Error::UncertifiedConstants {
            suite: "moment-derivative bounds",
        })?;
    consts.beta_m += cav.beta;
    let derivs = [
        site.log_phi_deriv(mean, 1)? + cav.beta * mean - cav.r,
        site.log_phi_deriv(mean, 2)? + cav.beta,
        site.log_phi_deriv(mean, 3)?,
        site.log_phi_deriv(mean, 4)?,
    ];
    Ok((derivs, consts))
}

/// Bounds tying the true mean, the fixed-point mean, and the mode of an
/// `n`-site product whose sites share the per-site constants `per_site`.
///
/// Fails with an uncertified-constants error when `per_site` is `None`
/// (for example any target containing gamma sites, which claim no
/// derivative ceilings).
pub fn theorem_suite(
    target_m: &MomentSummary<f64>,
    fp: &FixedPoint<f64>,
    cga: &CgaResult<f64>,
    per_site: Option<RegularityConstants<f64>>,
    n: usize,
) -> Result<Vec<BoundCertificate>> {
    let c = per_site.ok_or(Error::UncertifiedConstants {
        suite: "fixed-point accuracy bounds",
    })?;
    let nf = n as f64;
    let b = c.beta_m;
    let b2 = b * b;
    Ok(vec![
        BoundCertificate::new(
            "THM.mean_mode",
            "true mean sits within K3/(2 n beta^2) of the mode",
            (target_m.mean - cga.x_star).abs(),
            c.k3 / (2.0 * nf * b2),
        ),
        BoundCertificate::new(
            "THM.epmean_mode",
            "fixed-point mean sits within K3/(2 n beta^2) of the mode",
            (fp.mu_ep - cga.x_star).abs(),
            c.k3 / (2.0 * nf * b2),
        ),
        BoundCertificate::new(
            "THM.prec_cga",
            "true inverse variance is close to curvature at the mode",
            (1.0 / target_m.m2 - cga.beta_star).abs(),
            2.0 * c.k3 * c.k3 / b2 + c.k4 / (2.0 * b),
        ),
        BoundCertificate::new(
            "THM.mean_triangle",
            "true mean and fixed-point mean differ by at most K3/(n beta^2)",
            (target_m.mean - fp.mu_ep).abs(),
            c.k3 / (nf * b2),
        ),
    ])
}

/// At the fixed point each site's Gaussian precision tracks the site's own
/// curvature at the fixed-point mean, up to second-order constants plus a
/// small cushion for fixed-point and quadrature residuals.
pub fn hybrid_precision_consistency(
    target: &Target<f64>,
    fp: &FixedPoint<f64>,
    per_site: Option<RegularityConstants<f64>>,
) -> Result<BoundCertificate> {
    let c = per_site.ok_or(Error::UncertifiedConstants {
        suite: "fixed-point accuracy bounds",
    })?;
    let n = target.n() as f64;
    let mut lhs: f64 = 0.0;
    for (site, q) in target.sites().iter().zip(fp.state.site_approx()) {
        let curv = site.log_phi_deriv(fp.mu_ep, 2)?;
        lhs = lhs.max((q.beta - curv).abs());
    }
    let b = c.beta_m;
    let rhs = 2.0 * c.k3 * c.k3 / (n * n * b * b) + c.k4 / (2.0 * n * b) + 1e-9;
    Ok(BoundCertificate::new(
        "THM.hybrid_prec",
        "every site precision tracks that site's curvature at the fixed-point mean",
        lhs,
        rhs,
    ))
}

/// Kullback-Leibler divergence from the Gaussian with moments
/// `(mean, var)` to the Gaussian with moments `(approx_mean, approx_var)`,
/// in closed form, next to its small-perturbation quadratic surrogate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExcessKl {
    /// `(v/va - 1 - ln(v/va))/2 + (mu - mua)^2/(2 va)`.
    pub exact: f64,
    /// `((v - va)/va)^2/4 + (mu - mua)^2/(2 va)`.
    pub quadratic: f64,
}

/// See [`ExcessKl`]. Both variances must be positive.
pub fn excess_kl(mean: f64, var: f64, approx_mean: f64, approx_var: f64) -> Result<ExcessKl> {
    if !(var > 0.0) || !(approx_var > 0.0) {
        return Err(Error::NonPositiveVariance);
    }
    let ratio = var / approx_var;
    let mean_term = (mean - approx_mean).powi(2) / (2.0 * approx_var);
    let rel = (var - approx_var) / approx_var;
    Ok(ExcessKl {
        exact: 0.5 * (ratio - 1.0 - ratio.ln()) + mean_term,
        quadratic: 0.25 * rel * rel + mean_term,
    })
}

/// Leading coefficient of the mode-fit mean error: the mean of a density
/// with potential `phi_p` sits at roughly `x* - phi_p'''(mu)/(2 phi_p''(mu)^2)`,
/// so this value per unit `1/n` predicts how fast the mode approximation
/// converges, and where it degenerates (symmetric targets make it vanish).
pub fn cga_leading_error(target: &Target<f64>, mu: f64) -> Result<f64> {
    let d2 = target.log_phi_deriv(mu, 2)?;
    let d3 = target.log_phi_deriv(mu, 3)?;
    Ok(-0.5 * d3 / (d2 * d2))
}

/// Expansion of both inverse variances in potential derivatives, exposing
/// why the fixed point beats the mode fit: the two expansions differ first
/// in their 3rd-moment terms.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VinvDecomposition {
    /// `[phi''(mu), phi'''(mu) m3/(2 v), phi''''(mu) m4/(6 v)]` for the
    /// true moments.
    pub target_terms: [f64; 3],
    /// `1/v` minus the sum of `target_terms`.
    pub target_residual: f64,
    /// Same expansion at the fixed point, with the 3rd-moment term summed
    /// from per-site hybrid moments and the 4th-moment term in its
    /// gaussianized form `phi'''' v/2`.
    pub ep_terms: [f64; 3],
    /// `1/v_ep` minus the sum of `ep_terms`.
    pub ep_residual: f64,
    /// Difference of the two 3rd-moment terms; the dominant gap.
    pub m3_mismatch: f64,
}

/// See [`VinvDecomposition`].
pub fn vinv_decomposition(
    target: &Target<f64>,
    fp: &FixedPoint<f64>,
    target_m: &MomentSummary<f64>,
) -> Result<VinvDecomposition> {
    let mu = target_m.mean;
    let v = target_m.m2;
    let target_terms = [
        target.log_phi_deriv(mu, 2)?,
        target.log_phi_deriv(mu, 3)? * target_m.m3 / (2.0 * v),
        target.log_phi_deriv(mu, 4)? * target_m.m4 / (6.0 * v),
    ];
    let target_residual = 1.0 / v - target_terms.iter().sum::<f64>();

    let mu_ep = fp.mu_ep;
    let v_ep = fp.v_ep;
    let mut site_m3_term = 0.0;
    for (site, h) in target.sites().iter().zip(&fp.hybrid_moments) {
        site_m3_term += site.log_phi_deriv(mu_ep, 3)? * h.m3 / (2.0 * v_ep);
    }
    let ep_terms = [
        target.log_phi_deriv(mu_ep, 2)?,
        site_m3_term,
        target.log_phi_deriv(mu_ep, 4)? * v_ep / 2.0,
    ];
    let ep_residual = 1.0 / v_ep - ep_terms.iter().sum::<f64>();

    Ok(VinvDecomposition {
        target_terms,
        target_residual,
        ep_terms,
        ep_residual,
        m3_mismatch: target_terms[1] - ep_terms[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cga::{default_x0, find_mode};
    use crate::ep::{solve_fixed_point, EpOptions};
    use crate::model::Site;
    use crate::oracle::{moments, GridSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(hint: f64) -> GridSpec<f64> {
        GridSpec::new(hint).with_points(1 << 17)
    }

    fn gaussian_summary(center: f64, precision: f64) -> MomentSummary<f64> {
        let site = Site::gaussian(center, precision).unwrap();
        let psi = move |x: f64| site.log_phi_deriv(x, 0).unwrap();
        moments(psi, precision, &spec(center)).unwrap()
    }

    #[test]
    fn even_moment_bounds_are_tight_for_the_matching_gaussian() {
        let m = gaussian_summary(0.4, 2.0);
        for cert in brascamp_lieb_even(&m, 2.0) {
            assert!(cert.holds, "{}: slack {}", cert.id, cert.slack);
            // The gaussian saturates every even-moment bound.
            assert_abs_diff_eq!(cert.slack, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn even_moment_bounds_are_loose_for_a_sharper_density() {
        // Density has precision 2 beta but we only claim beta: the variance
        // bound is slack by exactly 1/(2 beta).
        let beta = 1.5;
        let m = gaussian_summary(0.0, 2.0 * beta);
        let certs = brascamp_lieb_even(&m, beta);
        assert!(certs.iter().all(|c| c.holds));
        assert_abs_diff_eq!(certs[0].slack, 1.0 / (2.0 * beta), epsilon = 1e-10);
    }

    #[test]
    fn extension_suite_lhs_vanishes_for_gaussians() {
        let precision = 1.7;
        let m = gaussian_summary(-0.3, precision);
        let site = Site::gaussian(-0.3, precision).unwrap();
        let target = Target::new(vec![site]).unwrap();
        let (derivs, totals) = target_extension_inputs(&target, m.mean).unwrap();
        for cert in extension_suite(&m, derivs, &totals) {
            assert!(cert.holds, "{}: slack {}", cert.id, cert.slack);
            assert!(
                cert.lhs.abs() < 1e-8,
                "{}: gaussian lhs should vanish, got {}",
                cert.id,
                cert.lhs
            );
        }
    }

    #[test]
    fn extension_suite_holds_on_a_skewed_single_site() {
        let site = Site::logcosh(0.3, 1.0, 0.5).unwrap();
        let target = Target::new(vec![site]).unwrap();
        let psi = move |x: f64| site.log_phi_deriv(x, 0).unwrap();
        let m = moments(psi, 1.0, &spec(0.3)).unwrap();
        assert_abs_diff_eq!(m.mean, 0.3, epsilon = 1e-10);
        assert_abs_diff_eq!(m.m2, 0.754506119555287, epsilon = 1e-9);

        let (derivs, totals) = target_extension_inputs(&target, m.mean).unwrap();
        let certs = extension_suite(&m, derivs, &totals);
        assert_eq!(certs.len(), 9);
        for cert in &certs {
            assert!(cert.holds, "{}: slack {}", cert.id, cert.slack);
        }
        // Frozen lhs values for two representative bounds.
        let by_id = |id: &str| certs.iter().find(|c| c.id == id).unwrap();
        assert_abs_diff_eq!(by_id("EXT.m2inv").lhs, 0.1746297026863, epsilon = 1e-9);
        assert_abs_diff_eq!(by_id("EXT.order2prec").lhs, 0.2213088974892, epsilon = 1e-9);
    }

    #[test]
    fn uncertified_sites_cannot_enter_the_extension_suite() {
        let target = Target::new(vec![Site::gamma(3.0, 2.0).unwrap()]).unwrap();
        assert!(matches!(
            target_extension_inputs(&target, 1.0),
            Err(Error::UncertifiedConstants { .. })
        ));
    }

    fn four_site_target() -> Target<f64> {
        let sites: Vec<Site<f64>> = [-1.0, 0.0, 0.5, 2.0]
            .iter()
            .map(|&c| Site::logcosh(c, 1.0, 0.5).unwrap())
            .collect();
        Target::new(sites).unwrap()
    }

    #[test]
    fn theorem_suite_holds_on_the_four_site_problem() {
        let target = four_site_target();
        let psi = |x: f64| target.log_phi_deriv(x, 0).unwrap();
        let m = moments(psi, 4.0, &spec(0.375)).unwrap();
        let fp = solve_fixed_point(&target, &EpOptions::default(), &spec(0.375)).unwrap();
        let mode = find_mode(&target, default_x0(&target), 1e-12, 100).unwrap();
        let certs =
            theorem_suite(&m, &fp, &mode, target.per_site_constants(), target.n()).unwrap();
        assert_eq!(certs.len(), 4);
        for cert in &certs {
            assert!(cert.holds, "{}: slack {}", cert.id, cert.slack);
            assert!(cert.lhs > 0.0);
        }

        let hp = hybrid_precision_consistency(&target, &fp, target.per_site_constants()).unwrap();
        assert!(hp.holds, "hybrid precision slack {}", hp.slack);
    }

    #[test]
    fn theorem_suite_lhs_vanishes_for_gaussians() {
        let target = Target::new(vec![
            Site::gaussian(0.2, 1.0).unwrap(),
            Site::gaussian(-0.4, 3.0).unwrap(),
        ])
        .unwrap();
        let psi = |x: f64| target.log_phi_deriv(x, 0).unwrap();
        let m = moments(psi, 4.0, &spec(0.0)).unwrap();
        let opts = EpOptions {
            damping: 1.0,
            ..EpOptions::default()
        };
        let fp = solve_fixed_point(&target, &opts, &spec(0.0)).unwrap();
        let mode = find_mode(&target, 0.0, 1e-12, 100).unwrap();
        let certs =
            theorem_suite(&m, &fp, &mode, target.per_site_constants(), target.n()).unwrap();
        for cert in &certs {
            assert!(cert.holds);
            assert!(cert.lhs < 1e-9, "{}: lhs {}", cert.id, cert.lhs);
        }
    }

    #[test]
    fn theorem_suite_refuses_gamma_targets() {
        let sites: Vec<Site<f64>> = (0..4).map(|_| Site::gamma(3.0, 2.0).unwrap()).collect();
        let target = Target::new(sites).unwrap();
        let psi = |x: f64| target.log_phi_deriv(x, 0).unwrap();
        let mode = find_mode(&target, 1.0, 1e-12, 100).unwrap();
        let grid = spec(mode.x_star).with_lower_bound(Some(0.0));
        let m = moments(psi, mode.beta_star, &grid).unwrap();
        let fp = solve_fixed_point(&target, &EpOptions::default(), &grid).unwrap();
        assert!(matches!(
            theorem_suite(&m, &fp, &mode, target.per_site_constants(), target.n()),
            Err(Error::UncertifiedConstants { .. })
        ));
    }

    #[test]
    fn excess_kl_is_zero_iff_moments_match() {
        let kl = excess_kl(0.7, 1.3, 0.7, 1.3).unwrap();
        assert_eq!(kl.exact, 0.0);
        assert_eq!(kl.quadratic, 0.0);

        // Frozen reference at variance ratio 1.1, equal means.
        let kl = excess_kl(0.0, 1.1, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(kl.exact, 2.344910097838e-3, epsilon = 1e-13);
        assert_abs_diff_eq!(kl.quadratic, 2.5e-3, epsilon = 1e-15);

        assert!(matches!(
            excess_kl(0.0, -1.0, 0.0, 1.0),
            Err(Error::NonPositiveVariance)
        ));
    }

    #[test]
    fn excess_kl_matches_direct_quadrature() {
        // KL between two gaussians integrated numerically must match the
        // closed form on randomly drawn moment pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mu: f64 = rng.gen_range(-2.0..2.0);
            let v: f64 = rng.gen_range(0.2..3.0);
            let mua: f64 = mu + rng.gen_range(-0.5..0.5);
            let va: f64 = v * rng.gen_range(0.7..1.4);
            let exact = excess_kl(mu, v, mua, va).unwrap().exact;

            let sd = v.sqrt().max(va.sqrt());
            let (lo, hi) = (mu - 15.0 * sd, mu + 15.0 * sd);
            let steps = 400_000usize;
            let h = (hi - lo) / steps as f64;
            let mut sum = 0.0;
            for k in 0..=steps {
                let x = lo + k as f64 * h;
                let lp = -0.5 * (x - mu).powi(2) / v - 0.5 * (2.0 * std::f64::consts::PI * v).ln();
                let lq =
                    -0.5 * (x - mua).powi(2) / va - 0.5 * (2.0 * std::f64::consts::PI * va).ln();
                let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
                sum += w * lp.exp() * (lp - lq);
            }
            let numeric = sum * h;
            assert_abs_diff_eq!(exact, numeric, epsilon = 1e-9);
        }
    }

    proptest! {
        #[test]
        fn excess_kl_is_nonnegative(
            mu in -5.0f64..5.0,
            dv in -4.0f64..4.0,
            v in 1e-2f64..1e2,
            va in 1e-2f64..1e2,
        ) {
            let kl = excess_kl(mu, v, mu + dv, va).unwrap();
            prop_assert!(kl.exact >= 0.0);
            prop_assert!(kl.quadratic >= 0.0);
            prop_assert!(kl.exact.is_finite());
        }

        #[test]
        fn quadratic_surrogate_matches_exact_kl_for_small_gaps(
            mu in -1.0f64..1.0,
            eps in -1e-4f64..1e-4,
        ) {
            let v = 1.0;
            let kl = excess_kl(mu, v, mu, v * (1.0 + eps)).unwrap();
            // Both are ~eps^2/4; they agree to o(eps^2).
            prop_assert!((kl.exact - kl.quadratic).abs() <= 1e-3 * kl.quadratic + 1e-18);
        }
    }

    #[test]
    fn leading_error_coefficient_signs_and_symmetry() {
        // Symmetric target: coefficient vanishes at the center.
        let sym = Target::new(vec![Site::logcosh(0.0, 1.0, 1.0).unwrap()]).unwrap();
        assert_abs_diff_eq!(cga_leading_error(&sym, 0.0).unwrap(), 0.0, epsilon = 1e-15);

        // Gamma target: phi''' = -2(A-1)/x^3 < 0, so the coefficient is
        // positive (the mean lies right of the mode) and equals 1/(n b) at
        // the mode up to higher order.
        let n = 10usize;
        let sites: Vec<Site<f64>> = (0..n).map(|_| Site::gamma(3.1, 2.0).unwrap()).collect();
        let gamma = Target::new(sites).unwrap();
        let x_star = 21.0 / 20.0;
        let coeff = cga_leading_error(&gamma, x_star).unwrap();
        // Closed form: A = n(a-1), coefficient = x*/A... derived directly:
        // phi'' = A/x^2, phi''' = -2A/x^3 => coeff = x/A.
        assert_abs_diff_eq!(coeff, x_star / 21.0, epsilon = 1e-12);
    }

    #[test]
    fn vinv_decomposition_collapses_for_gaussians() {
        let target = Target::new(vec![
            Site::gaussian(0.2, 1.0).unwrap(),
            Site::gaussian(-0.4, 3.0).unwrap(),
        ])
        .unwrap();
        let psi = |x: f64| target.log_phi_deriv(x, 0).unwrap();
        let m = moments(psi, 4.0, &spec(0.0)).unwrap();
        let fp = solve_fixed_point(&target, &EpOptions::default(), &spec(0.0)).unwrap();
        let d = vinv_decomposition(&target, &fp, &m).unwrap();
        assert_abs_diff_eq!(d.target_terms[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.target_terms[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.target_terms[2], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.target_residual, 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(d.ep_residual, 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(d.m3_mismatch, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn third_moment_mismatch_dominates_fourth_for_a_skewed_product() {
        // On a skewed 16-site product, the gap between the two expansions
        // is carried by the 3rd-moment terms, not the 4th-moment terms.
        let sites: Vec<Site<f64>> = (0..16)
            .map(|i| {
                if i % 4 != 3 {
                    Site::logcosh(0.0, 1.0, 1.8).unwrap()
                } else {
                    Site::logcosh(7.5, 1.0, 0.0).unwrap()
                }
            })
            .collect();
        let target = Target::new(sites).unwrap();
        let hint = target.precision_weighted_center();
        let psi = |x: f64| target.log_phi_deriv(x, 0).unwrap();
        let m = moments(psi, 16.0, &spec(hint)).unwrap();
        let fp = solve_fixed_point(
            &target,
            &EpOptions::default(),
            &GridSpec::new(hint).with_points(1 << 12),
        )
        .unwrap();
        assert!(fp.converged);
        let d = vinv_decomposition(&target, &fp, &m).unwrap();
        let gap3 = d.m3_mismatch.abs();
        let gap4 = (d.target_terms[2] - d.ep_terms[2]).abs();
        assert!(
            gap3 >= gap4,
            "3rd-moment gap {gap3} should dominate 4th-moment gap {gap4}"
        );
        assert!(gap3 > 0.0);
    }
}
