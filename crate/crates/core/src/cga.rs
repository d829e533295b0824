//! Canonical Gaussian approximation: a Laplace-style fit at the mode.
//!
//! For a strongly log-concave target `p ∝ exp(-phi)` the approximation is
//! the Gaussian with mean at the minimizer `x*` of `phi` and precision
//! `phi''(x*)`. Strong convexity makes the minimizer unique and lets a
//! damped Newton iteration find it with a quadratic tail.

use serde::Serialize;

use crate::ep::NaturalGaussian;
use crate::error::{Error, Result};
use crate::model::Target;
use crate::scalar::{lit, Scalar};

/// Default gradient threshold for declaring the mode found.
pub const DEFAULT_NEWTON_TOL: f64 = 1e-12;
/// Default Newton iteration budget.
pub const DEFAULT_NEWTON_ITERS: usize = 100;
/// Most halvings tried per step before accepting the shrunken step anyway.
const MAX_HALVINGS: usize = 60;

/// Result of a mode search.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CgaResult<F> {
    /// Minimizer of the total potential.
    pub x_star: F,
    /// Curvature of the total potential at the minimizer.
    pub beta_star: F,
    /// Newton iterations consumed before the gradient test passed.
    pub newton_iters: usize,
    /// Gradient magnitude at acceptance.
    pub final_gradient: F,
}

/// Damped Newton minimization of the target potential from `x0`.
///
/// Each step is halved (up to 60 times) while it would leave the domain or
/// increase the potential beyond rounding noise; with strong convexity the
/// full step is accepted near the mode and convergence there is quadratic.
/// An iterate whose Newton step falls below one ulp of `x` is returned as
/// converged at whatever gradient it achieved, since no representable point
/// improves on it. `x0` must lie in the target domain. Exceeding `max_iters`
/// without meeting `tol` is a mode-search failure carrying the last iterate
/// and gradient.
pub fn find_mode<F: Scalar>(
    target: &Target<F>,
    x0: F,
    tol: F,
    max_iters: usize,
) -> Result<CgaResult<F>> {
    find_mode_traced(target, x0, tol, max_iters).map(|(result, _)| result)
}

/// [`find_mode`] plus the gradient magnitude at every iterate, for
/// convergence-rate inspection in tests.
fn find_mode_traced<F: Scalar>(
    target: &Target<F>,
    x0: F,
    tol: F,
    max_iters: usize,
) -> Result<(CgaResult<F>, Vec<F>)> {
    let domain = target.domain();
    if !domain.contains(x0) {
        return Err(Error::DomainViolation {
            x: x0.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut x = x0;
    let mut history = Vec::new();
    let mut g = F::zero();
    for iter in 0..max_iters {
        g = target.log_phi_deriv(x, 1)?;
        history.push(g.abs());
        if g.abs() <= tol {
            let result = CgaResult {
                x_star: x,
                beta_star: target.log_phi_deriv(x, 2)?,
                newton_iters: iter,
                final_gradient: g.abs(),
            };
            return Ok((result, history));
        }
        let h = target.log_phi_deriv(x, 2)?;
        let step = g / h;
        // A step below one ulp of x cannot move the iterate; the gradient is
        // then at its floating-point floor, so report convergence there.
        if step.abs() <= lit::<F>(4.0) * F::epsilon() * (F::one() + x.abs()) {
            let result = CgaResult {
                x_star: x,
                beta_star: h,
                newton_iters: iter,
                final_gradient: g.abs(),
            };
            return Ok((result, history));
        }
        let phi_x = target.log_phi_deriv(x, 0)?;
        // The potential is a sum of site terms, so two points straddling the
        // mode can differ by accumulated rounding alone. Accepting within
        // that noise keeps backtracking from stalling on a basin that is
        // flat to machine precision.
        let noise = lit::<F>(32.0) * F::epsilon() * phi_x.abs().max(F::one());
        let mut t = F::one();
        let mut x_next = x - step;
        for _ in 0..MAX_HALVINGS {
            if domain.contains(x_next) && target.log_phi_deriv(x_next, 0)? <= phi_x + noise {
                break;
            }
            t *= lit(0.5);
            x_next = x - t * step;
        }
        x = x_next;
    }
    Err(Error::ModeSearchFailed {
        last_x: x.to_f64().unwrap_or(f64::NAN),
        last_gradient: g.to_f64().unwrap_or(f64::NAN),
        iters: max_iters,
    })
}

/// The canonical Gaussian approximation as a natural-parameter factor:
/// `beta = phi''(x*)`, `r = beta * x*`.
pub fn cga_approx<F: Scalar>(target: &Target<F>, x0: F) -> Result<NaturalGaussian<F>> {
    let mode = find_mode(target, x0, lit(DEFAULT_NEWTON_TOL), DEFAULT_NEWTON_ITERS)?;
    Ok(NaturalGaussian {
        r: mode.beta_star * mode.x_star,
        beta: mode.beta_star,
    })
}

/// Default starting point: the precision-weighted blend of site centers.
pub fn default_x0<F: Scalar>(target: &Target<F>) -> F {
    target.precision_weighted_center()
}
