//! Gaussian expectation propagation in natural parameters.
//!
//! The global approximation `q(x) ∝ exp(r x - beta x^2 / 2)` is an exact
//! componentwise sum of per-site approximations. One update replaces site
//! `i`'s contribution by the moment-matched Gaussian of the *hybrid*
//! density `h_i ∝ q_{-i} f_i` (cavity times true site), with optional
//! damping. A fixed point is reached when a full sweep no longer moves any
//! natural parameter; there, every hybrid shares the global mean and
//! variance, which is the property all downstream certificates build on.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Site, Target};
use crate::oracle::{moments, GridSpec, MomentSummary};
use crate::scalar::{fmax, lit, Scalar};

/// A Gaussian factor `exp(r x - beta x^2 / 2)` in natural parameters.
///
/// `beta = 0` encodes a flat (improper) factor, which is a legitimate cavity
/// for single-site targets and during early sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NaturalGaussian<F> {
    pub r: F,
    pub beta: F,
}

impl<F: Scalar> NaturalGaussian<F> {
    pub fn flat() -> Self {
        NaturalGaussian {
            r: F::zero(),
            beta: F::zero(),
        }
    }

    /// Mean `r / beta`; only meaningful for proper factors.
    pub fn mean(&self) -> F {
        self.r / self.beta
    }

    /// Variance `1 / beta`; only meaningful for proper factors.
    pub fn variance(&self) -> F {
        F::one() / self.beta
    }

    pub fn is_proper(&self) -> bool {
        self.beta > F::zero()
    }
}

/// Initialization policy for [`solve_fixed_point`].
///
/// The single built-in policy starts each site at its claimed curvature
/// floor (1.0 when the site claims none), centered at the site's central
/// location: `beta_i = beta_m`, `r_i = beta_i * center`. Starting below the
/// floor is pointless because fixed-point site precisions never fall below
/// it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InitPolicy {
    #[default]
    CurvatureFloorAtCenter,
}

/// Knobs for the fixed-point iteration.
#[derive(Clone, Copy, Debug)]
pub struct EpOptions<F> {
    /// Step fraction in (0, 1]; 1 is the undamped textbook update.
    pub damping: F,
    /// Sweep-level convergence threshold on natural-parameter changes.
    pub fp_tol: F,
    pub max_sweeps: usize,
    pub init: InitPolicy,
}

impl<F: Scalar> Default for EpOptions<F> {
    fn default() -> Self {
        EpOptions {
            damping: lit(0.8),
            fp_tol: lit(1e-10),
            max_sweeps: 500,
            init: InitPolicy::default(),
        }
    }
}

/// The mutable state of an EP run: per-site factors plus their exact sum.
#[derive(Clone, Debug)]
pub struct EpState<F> {
    site_approx: Vec<NaturalGaussian<F>>,
    global: NaturalGaussian<F>,
    iteration: usize,
    last_max_delta: F,
}

impl<F: Scalar> EpState<F> {
    /// Fresh state per the initialization policy.
    pub fn initialized(target: &Target<F>, _policy: InitPolicy) -> Self {
        let site_approx: Vec<NaturalGaussian<F>> = target
            .sites()
            .iter()
            .map(|site| {
                let beta = match site.claimed_constants() {
                    Some(c) => c.beta_m,
                    None => F::one(),
                };
                NaturalGaussian {
                    r: beta * site.center(),
                    beta,
                }
            })
            .collect();
        let mut state = EpState {
            site_approx,
            global: NaturalGaussian::flat(),
            iteration: 0,
            last_max_delta: F::infinity(),
        };
        state.reaccumulate_global();
        state
    }

    pub fn site_approx(&self) -> &[NaturalGaussian<F>] {
        &self.site_approx
    }

    pub fn global(&self) -> NaturalGaussian<F> {
        self.global
    }

    /// Completed sweeps.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Largest natural-parameter change seen in the most recent sweep.
    pub fn last_max_delta(&self) -> F {
        self.last_max_delta
    }

    /// Restores `global = sum_i site_approx[i]` by a fixed-order fold, so the
    /// invariant holds exactly rather than drifting through incremental
    /// add/subtract round-off.
    fn reaccumulate_global(&mut self) {
        let mut r = F::zero();
        let mut beta = F::zero();
        for s in &self.site_approx {
            r += s.r;
            beta += s.beta;
        }
        self.global = NaturalGaussian { r, beta };
    }
}

/// A finished EP run.
#[derive(Clone, Debug)]
pub struct FixedPoint<F> {
    pub state: EpState<F>,
    pub mu_ep: F,
    pub v_ep: F,
    /// Moments of every hybrid at the final state.
    pub hybrid_moments: Vec<MomentSummary<F>>,
    pub converged: bool,
    pub sweeps_used: usize,
}

/// Health report of a converged fixed point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FixedPointDiagnostics<F> {
    /// `max_i |hybrid mean - mu_ep|`.
    pub max_mean_gap: F,
    /// `max_i |hybrid variance - v_ep|`.
    pub max_var_gap: F,
    pub min_site_beta: F,
    /// Whether `min_i beta_i >= beta_m - 1e-9`.
    pub beta_floor_ok: bool,
}

/// The cavity `q_{-i}`: the global factor with site `i` divided out, which
/// in natural parameters is a componentwise subtraction.
pub fn cavity<F: Scalar>(state: &EpState<F>, i: usize) -> NaturalGaussian<F> {
    let s = state.site_approx[i];
    NaturalGaussian {
        r: state.global.r - s.r,
        beta: state.global.beta - s.beta,
    }
}

/// Oracle moments of the hybrid `h_i(x) ∝ exp(-phi_i(x)) * exp(cav.r x - cav.beta x^2/2)`.
///
/// The curvature floor handed to the oracle is the site's claimed floor plus
/// the cavity precision; if that total is not positive the hybrid cannot be
/// integrated against a Gaussian-tail window and the iteration has left the
/// trust region.
pub fn hybrid_moments<F: Scalar>(
    cav: &NaturalGaussian<F>,
    site: &Site<F>,
    spec: &GridSpec<F>,
) -> Result<MomentSummary<F>> {
    let site_floor = site.curvature_floor();
    let floor = site_floor + cav.beta;
    if !(floor > F::zero()) {
        return Err(Error::Divergence {
            reason: format!(
                "hybrid curvature floor {} is not positive",
                floor.to_f64().unwrap_or(f64::NAN)
            ),
        });
    }
    // Window hint: precision-weighted blend of cavity mean and site center.
    let w = if site_floor > F::zero() { site_floor } else { F::one() };
    let hint = (cav.r + w * site.center()) / fmax(cav.beta + w, lit(1e-9));
    let cav_r = cav.r;
    let cav_beta = cav.beta;
    let psi = move |x: F| {
        // The window is clamped to the site domain below, so in-window
        // evaluation cannot fail; mapping a failure to NaN makes any gap in
        // that reasoning surface as a loud quadrature error.
        site.log_phi_deriv(x, 0).unwrap_or_else(|_| F::nan())
            + lit::<F>(0.5) * cav_beta * x * x
            - cav_r * x
    };
    let grid = spec
        .with_hint(hint)
        .with_lower_bound(site.domain().lower_bound());
    moments(psi, floor, &grid)
}

/// One damped moment-matching update of site `i`, returning the new state.
///
/// The moment-matched target parameters are `r* = mu_h / v_h - cav.r` and
/// `beta* = 1/v_h - cav.beta`; damping interpolates between old and target
/// parameters, and the global factor is re-accumulated exactly.
pub fn update_site<F: Scalar>(
    state: &EpState<F>,
    site: &Site<F>,
    i: usize,
    damping: F,
    spec: &GridSpec<F>,
) -> Result<EpState<F>> {
    let mut next = state.clone();
    update_in_place(&mut next, site, i, damping, spec)?;
    Ok(next)
}

/// In-place version of [`update_site`]; returns the larger of the two
/// natural-parameter changes.
fn update_in_place<F: Scalar>(
    state: &mut EpState<F>,
    site: &Site<F>,
    i: usize,
    damping: F,
    spec: &GridSpec<F>,
) -> Result<F> {
    assert!(
        damping > F::zero() && damping <= F::one(),
        "damping must lie in (0, 1]"
    );
    let cav = cavity(state, i);
    let m = hybrid_moments(&cav, site, spec)?;
    if !(m.m2 > F::zero()) {
        return Err(Error::NumericalFailure { site: i });
    }
    let r_star = m.mean / m.m2 - cav.r;
    let beta_star = F::one() / m.m2 - cav.beta;
    let old = state.site_approx[i];
    let keep = F::one() - damping;
    let new = NaturalGaussian {
        r: keep * old.r + damping * r_star,
        beta: keep * old.beta + damping * beta_star,
    };
    state.site_approx[i] = new;
    state.reaccumulate_global();
    if !(state.global.beta > F::zero()) {
        return Err(Error::Divergence {
            reason: format!(
                "global precision {} is not positive after updating site {i}",
                state.global.beta.to_f64().unwrap_or(f64::NAN)
            ),
        });
    }
    Ok(fmax((new.r - old.r).abs(), (new.beta - old.beta).abs()))
}

/// Runs sequential cyclic sweeps until the largest natural-parameter change
/// in a sweep drops below `fp_tol` or the sweep budget is exhausted.
///
/// Non-convergence is reported through the `converged` flag, not an error;
/// divergence (improper global or hybrid) is an error. The returned fixed
/// point carries freshly computed hybrid moments for the final state.
pub fn solve_fixed_point<F: Scalar>(
    target: &Target<F>,
    opts: &EpOptions<F>,
    spec: &GridSpec<F>,
) -> Result<FixedPoint<F>> {
    let n = target.n();
    let mut state = EpState::initialized(target, opts.init);
    let mut converged = false;
    let mut sweeps_used = 0;
    while sweeps_used < opts.max_sweeps {
        let mut delta = F::zero();
        for i in 0..n {
            let site_delta = update_in_place(&mut state, &target.sites()[i], i, opts.damping, spec)?;
            delta = fmax(delta, site_delta);
        }
        state.last_max_delta = delta;
        state.iteration += 1;
        sweeps_used += 1;
        if delta < opts.fp_tol {
            converged = true;
            break;
        }
    }
    let global = state.global;
    let mu_ep = global.mean();
    let v_ep = global.variance();
    let mut hybrid = Vec::with_capacity(n);
    for i in 0..n {
        let cav = cavity(&state, i);
        hybrid.push(hybrid_moments(&cav, &target.sites()[i], spec)?);
    }
    Ok(FixedPoint {
        state,
        mu_ep,
        v_ep,
        hybrid_moments: hybrid,
        converged,
        sweeps_used,
    })
}

/// Summarizes how tightly the fixed point satisfies its defining properties.
pub fn fixed_point_diagnostics<F: Scalar>(
    fp: &FixedPoint<F>,
    beta_m: F,
) -> Result<FixedPointDiagnostics<F>> {
    if !fp.converged {
        return Err(Error::NotConverged {
            op: "fixed_point_diagnostics",
        });
    }
    let mut max_mean_gap = F::zero();
    let mut max_var_gap = F::zero();
    for h in &fp.hybrid_moments {
        max_mean_gap = fmax(max_mean_gap, (h.mean - fp.mu_ep).abs());
        max_var_gap = fmax(max_var_gap, (h.m2 - fp.v_ep).abs());
    }
    let min_site_beta = fp
        .state
        .site_approx()
        .iter()
        .map(|s| s.beta)
        .fold(F::infinity(), |a, b| if b < a { b } else { a });
    Ok(FixedPointDiagnostics {
        max_mean_gap,
        max_var_gap,
        min_site_beta,
        beta_floor_ok: min_site_beta >= beta_m - lit(1e-9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Site;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn sweep_spec() -> GridSpec<f64> {
        GridSpec::new(0.0).with_points(1 << 12)
    }

    fn state_with(params: &[(f64, f64)]) -> EpState<f64> {
        let mut state = EpState {
            site_approx: params
                .iter()
                .map(|&(r, beta)| NaturalGaussian { r, beta })
                .collect(),
            global: NaturalGaussian::flat(),
            iteration: 0,
            last_max_delta: f64::INFINITY,
        };
        state.reaccumulate_global();
        state
    }

    #[test]
    fn cavity_is_componentwise_subtraction() {
        let state = state_with(&[(1.0, 1.0), (2.0, 3.0)]);
        assert_eq!(cavity(&state, 0), NaturalGaussian { r: 2.0, beta: 3.0 });

        let single = state_with(&[(0.7, 1.3)]);
        assert_eq!(cavity(&single, 0), NaturalGaussian::flat());

        let equal = state_with(&[(1.0, 1.0); 3]);
        assert_eq!(cavity(&equal, 1), NaturalGaussian { r: 2.0, beta: 2.0 });
    }

    #[test]
    fn gaussian_hybrid_matches_closed_form() {
        let site = Site::gaussian(0.5, 2.0).unwrap();
        let cav = NaturalGaussian { r: 0.8, beta: 1.5 };
        let m = hybrid_moments(&cav, &site, &sweep_spec()).unwrap();
        let total_beta = 2.0 + 1.5;
        let mean = (2.0 * 0.5 + 0.8) / total_beta;
        assert_abs_diff_eq!(m.mean, mean, epsilon = 1e-12);
        assert_relative_eq!(m.m2, 1.0 / total_beta, max_relative = 1e-12);
    }

    #[test]
    fn flat_cavity_reproduces_the_site_itself() {
        let site = Site::gaussian(1.0, 2.0).unwrap();
        let m = hybrid_moments(&NaturalGaussian::flat(), &site, &sweep_spec()).unwrap();
        assert_abs_diff_eq!(m.mean, 1.0, epsilon = 1e-12);
        assert_relative_eq!(m.m2, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn logcosh_hybrid_agrees_across_resolutions() {
        let site = Site::logcosh(0.0, 1.0, 0.5).unwrap();
        let cav = NaturalGaussian { r: 0.3, beta: 2.0 };
        let coarse = hybrid_moments(&cav, &site, &sweep_spec()).unwrap();
        let fine = hybrid_moments(&cav, &site, &GridSpec::new(0.0).with_points(1 << 17)).unwrap();
        assert_abs_diff_eq!(coarse.mean, fine.mean, epsilon = 1e-9);
        assert_abs_diff_eq!(coarse.m2, fine.m2, epsilon = 1e-9);
        // Frozen reference for this hybrid.
        assert_abs_diff_eq!(fine.mean, 0.088198061268191, epsilon = 1e-9);
        assert_abs_diff_eq!(fine.m2, 0.294099731867561, epsilon = 1e-9);
    }

    #[test]
    fn negative_total_floor_is_divergence() {
        let site = Site::logcosh(0.0, 1.0, 0.5).unwrap();
        let cav = NaturalGaussian { r: 0.0, beta: -2.0 };
        assert!(matches!(
            hybrid_moments(&cav, &site, &sweep_spec()),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn update_matches_straight_line_reimplementation() {
        // The update formula recomputed inline from the same oracle output
        // must agree with what update_site stores.
        let sites: Vec<Site<f64>> = [-1.0, 0.0, 0.5, 2.0]
            .iter()
            .map(|&c| Site::logcosh(c, 1.0, 0.5).unwrap())
            .collect();
        let target = Target::new(sites.clone()).unwrap();
        let state = EpState::initialized(&target, InitPolicy::default());
        let damping = 0.5;
        let i = 0;

        let cav = cavity(&state, i);
        let m = hybrid_moments(&cav, &sites[i], &sweep_spec()).unwrap();
        let r_star = m.mean / m.m2 - cav.r;
        let beta_star = 1.0 / m.m2 - cav.beta;
        let expect_r = 0.5 * state.site_approx()[i].r + 0.5 * r_star;
        let expect_beta = 0.5 * state.site_approx()[i].beta + 0.5 * beta_star;

        let next = update_site(&state, &sites[i], i, damping, &sweep_spec()).unwrap();
        assert_abs_diff_eq!(next.site_approx()[i].r, expect_r, epsilon = 1e-14);
        assert_abs_diff_eq!(next.site_approx()[i].beta, expect_beta, epsilon = 1e-14);
        // Global stays the exact componentwise sum.
        let sum_r: f64 = next.site_approx().iter().map(|s| s.r).sum();
        assert_eq!(next.global().r, sum_r);
    }

    #[test]
    fn gaussian_fixed_point_is_reached_in_one_sweep() {
        let sites: Vec<Site<f64>> = vec![
            Site::gaussian(-1.0, 0.5).unwrap(),
            Site::gaussian(0.3, 2.0).unwrap(),
            Site::gaussian(1.7, 1.2).unwrap(),
        ];
        let target = Target::new(sites.clone()).unwrap();
        let beta_total: f64 = 0.5 + 2.0 + 1.2;
        let mean_exact = (-0.5 + 2.0 * 0.3 + 1.2 * 1.7) / beta_total;

        let opts = EpOptions {
            damping: 1.0,
            ..EpOptions::default()
        };
        let fp = solve_fixed_point(&target, &opts, &sweep_spec()).unwrap();
        assert!(fp.converged);
        assert!(fp.sweeps_used <= 2, "sweeps_used = {}", fp.sweeps_used);
        assert_abs_diff_eq!(fp.mu_ep, mean_exact, epsilon = 1e-12);
        assert_relative_eq!(fp.v_ep, 1.0 / beta_total, max_relative = 1e-12);
        // Each site approximation equals its factor in natural parameters.
        for (s, site) in fp.state.site_approx().iter().zip(&sites) {
            let (c, p) = match *site.family() {
                crate::model::SiteFamily::Gaussian { center, precision } => (center, precision),
                _ => unreachable!(),
            };
            assert_abs_diff_eq!(s.beta, p, epsilon = 1e-12);
            assert_abs_diff_eq!(s.r, p * c, epsilon = 1e-12);
        }
    }

    #[test]
    fn undamped_update_is_idempotent_at_an_exact_fixed_point() {
        // An all-gaussian state q_i = f_i is an exact fixed point; one more
        // undamped update must not move it beyond quadrature round-off.
        let site = Site::gaussian(0.4, 1.5).unwrap();
        let target = Target::new(vec![site, Site::gaussian(-0.2, 0.7).unwrap()]).unwrap();
        let opts = EpOptions {
            damping: 1.0,
            ..EpOptions::default()
        };
        let fp = solve_fixed_point(&target, &opts, &sweep_spec()).unwrap();
        let before = fp.state.site_approx()[0];
        let next = update_site(&fp.state, &target.sites()[0], 0, 1.0, &sweep_spec()).unwrap();
        let after = next.site_approx()[0];
        assert_abs_diff_eq!(before.r, after.r, epsilon = 1e-12);
        assert_abs_diff_eq!(before.beta, after.beta, epsilon = 1e-12);
    }

    #[test]
    fn single_site_ep_recovers_site_moments() {
        let site = Site::logcosh(0.7, 1.3, 0.4).unwrap();
        let target = Target::new(vec![site]).unwrap();
        let fp = solve_fixed_point(&target, &EpOptions::default(), &sweep_spec()).unwrap();
        assert!(fp.converged);
        // Frozen oracle values for this site's own density.
        assert_abs_diff_eq!(fp.mu_ep, 0.7, epsilon = 1e-10);
        assert_abs_diff_eq!(fp.v_ep, 0.635710176152453, epsilon = 1e-9);
    }

    #[test]
    fn four_site_fixed_point_properties() {
        let sites: Vec<Site<f64>> = [-1.0, 0.0, 0.5, 2.0]
            .iter()
            .map(|&c| Site::logcosh(c, 1.0, 0.5).unwrap())
            .collect();
        let target = Target::new(sites).unwrap();
        let fp = solve_fixed_point(&target, &EpOptions::default(), &sweep_spec()).unwrap();
        assert!(fp.converged);

        // All hybrids share the global mean and variance.
        let diag = fixed_point_diagnostics(&fp, 1.0).unwrap();
        assert!(diag.max_mean_gap <= 1e-8, "mean gap {}", diag.max_mean_gap);
        assert!(diag.max_var_gap <= 1e-8, "var gap {}", diag.max_var_gap);

        // Site precisions respect the curvature floor.
        assert!(diag.beta_floor_ok);
        assert!(diag.min_site_beta >= 1.0 - 1e-9);

        // Cancellation identity: sum_i (beta_{-i} mu_ep - r_{-i}) vanishes.
        let mut lhs = 0.0;
        let mut scale = 0.0;
        for i in 0..fp.state.site_approx().len() {
            let cav = cavity(&fp.state, i);
            lhs += cav.beta * fp.mu_ep - cav.r;
            scale += cav.r.abs();
        }
        assert!(lhs.abs() <= 1e-10 * scale.max(1.0), "identity residual {lhs}");

        // Near-idempotence: an undamped update at the converged state moves
        // parameters by no more than the convergence tolerance allows.
        let next = update_site(&fp.state, &target.sites()[1], 1, 1.0, &sweep_spec()).unwrap();
        let d = (next.site_approx()[1].r - fp.state.site_approx()[1].r).abs();
        assert!(d <= 1e-9, "residual update {d}");
    }

    #[test]
    fn diagnostics_require_convergence() {
        let site = Site::logcosh(0.0, 1.0, 1.0).unwrap();
        let target = Target::new(vec![site; 4]).unwrap();
        let opts = EpOptions {
            max_sweeps: 1,
            ..EpOptions::default()
        };
        let fp = solve_fixed_point(&target, &opts, &sweep_spec()).unwrap();
        assert!(!fp.converged);
        assert!(matches!(
            fixed_point_diagnostics(&fp, 1.0),
            Err(Error::NotConverged { .. })
        ));
    }
}
