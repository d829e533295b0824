//! Ground-truth moments of 1-D densities by deterministic quadrature.
//!
//! Everything downstream (EP updates, certificates, rate fits) consumes the
//! output of [`moments`]: log-normalizer, mean, and centered moments up to
//! order six of a density given as `x -> psi(x)` with `p(x) ∝ exp(-psi(x))`.
//! The integration window is sized by a curvature floor: a density whose
//! log-function has `psi'' >= floor` everywhere has sub-Gaussian tails with
//! scale `1/sqrt(floor)`, so `center +- half_width_sigmas/sqrt(floor)`
//! captures all but a provably negligible tail (see [`tail_mass_bound`]).
//!
//! The grid is refined by repeated doubling until the mean and variance
//! stabilize to the requested relative tolerance. Trapezoid sums converge
//! spectrally for smooth integrands that decay to zero at both window ends,
//! which is exactly the situation here, so the first doubling usually
//! confirms convergence.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{fmax, lit, Scalar};

/// Quadrature window and refinement policy.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridSpec<F> {
    /// Initial guess for the window center; the mode scan below corrects it.
    pub center_hint: F,
    /// Window half-width in curvature-floor standard deviations.
    pub half_width_sigmas: F,
    /// Base number of grid intervals; a power of two, at least 2^10.
    pub points: usize,
    /// Relative change in mean and variance at which refinement stops.
    pub refinement_tolerance: F,
    /// Hard lower edge of the support (half-line densities), if any.
    pub lower_bound: Option<F>,
}

impl<F: Scalar> GridSpec<F> {
    pub fn new(center_hint: F) -> Self {
        GridSpec {
            center_hint,
            half_width_sigmas: lit(12.0),
            points: 1 << 17,
            refinement_tolerance: lit(1e-12),
            lower_bound: None,
        }
    }

    pub fn with_hint(mut self, center_hint: F) -> Self {
        self.center_hint = center_hint;
        self
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    pub fn with_half_width(mut self, half_width_sigmas: F) -> Self {
        self.half_width_sigmas = half_width_sigmas;
        self
    }

    pub fn with_tolerance(mut self, refinement_tolerance: F) -> Self {
        self.refinement_tolerance = refinement_tolerance;
        self
    }

    pub fn with_lower_bound(mut self, lower_bound: Option<F>) -> Self {
        self.lower_bound = lower_bound;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.points < (1 << 10) || !self.points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points must be a power of two >= 1024, got {}",
                self.points
            )));
        }
        if !(self.half_width_sigmas > F::zero()) || !(self.refinement_tolerance > F::zero()) {
            return Err(Error::InvalidGrid(
                "half width and refinement tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Normalizer, mean, and centered moments of one density.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentSummary<F> {
    /// `log integral exp(-psi)`.
    pub log_z: F,
    pub mean: F,
    /// Variance (second centered moment).
    pub m2: F,
    pub m3: F,
    pub m4: F,
    pub m5: F,
    pub m6: F,
}

const SCAN_POINTS: usize = 1024;
const SCAN_ATTEMPTS: usize = 8;
const GOLDEN_ITERS: usize = 80;
const MAX_REFINEMENTS: usize = 6;

/// Computes the moments of `p(x) ∝ exp(-logdensity(x))`.
///
/// `curvature_floor` must be a positive lower bound on the log-density's
/// curvature (or at least a sound scale for it); it sizes the integration
/// window. The window is first centered on the density's mode, found by a
/// coarse scan plus golden-section refinement, entirely derivative-free.
pub fn moments<F: Scalar>(
    logdensity: impl Fn(F) -> F,
    curvature_floor: F,
    spec: &GridSpec<F>,
) -> Result<MomentSummary<F>> {
    spec.validate()?;
    if !(curvature_floor > F::zero()) || !curvature_floor.is_finite() {
        return Err(Error::InvalidGrid(
            "curvature floor must be positive and finite".into(),
        ));
    }
    let eval = |x: F| -> Result<F> {
        let v = logdensity(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteLogDensity {
                x: x.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(v)
    };

    let half_width = spec.half_width_sigmas / curvature_floor.sqrt();
    let clamp_lo = |lo: F, hi: F| -> F {
        match spec.lower_bound {
            Some(lb) => fmax(lo, lb + lit::<F>(1e-9) * (hi - lo)),
            None => lo,
        }
    };

    // Mode scan: coarse argmin of psi, re-centering the window when the
    // minimum lands on an edge (the hint may be far off).
    let mut lo = clamp_lo(spec.center_hint - half_width, spec.center_hint + half_width);
    let mut hi = spec.center_hint + half_width;
    let mut best_idx = 0usize;
    let mut scan_lo = lo;
    let mut scan_step = (hi - lo) / lit::<F>(SCAN_POINTS as f64);
    for _ in 0..SCAN_ATTEMPTS {
        scan_lo = lo;
        scan_step = (hi - lo) / lit::<F>(SCAN_POINTS as f64);
        let mut best = F::infinity();
        best_idx = 0;
        for i in 0..=SCAN_POINTS {
            let v = eval(scan_lo + scan_step * lit::<F>(i as f64))?;
            if v < best {
                best = v;
                best_idx = i;
            }
        }
        if best_idx > 0 && best_idx < SCAN_POINTS {
            break;
        }
        let width = hi - lo;
        let shift = lit::<F>(0.75) * width;
        if best_idx == 0 {
            lo -= shift;
            hi -= shift;
        } else {
            lo += shift;
            hi += shift;
        }
        lo = clamp_lo(lo, hi);
    }

    // Golden-section refinement between the scan neighbors of the minimum.
    let mut a = scan_lo + scan_step * lit::<F>(best_idx.saturating_sub(1) as f64);
    let mut b = scan_lo + scan_step * lit::<F>(best_idx.min(SCAN_POINTS - 1) as f64 + 1.0);
    let ratio = lit::<F>((5.0f64.sqrt() - 1.0) / 2.0);
    for _ in 0..GOLDEN_ITERS {
        let c1 = b - ratio * (b - a);
        let c2 = a + ratio * (b - a);
        if eval(c1)? < eval(c2)? {
            b = c2;
        } else {
            a = c1;
        }
    }
    let mode = (a + b) * lit::<F>(0.5);

    // Final window, centered at the mode.
    let hi = mode + half_width;
    let lo = clamp_lo(mode - half_width, hi);

    let mut prev: Option<(F, F)> = None;
    let mut last_delta = F::infinity();
    let mut intervals = spec.points;
    for _ in 0..=MAX_REFINEMENTS {
        let summary = integrate_level(&eval, lo, hi, intervals)?;
        if let Some((prev_mean, prev_m2)) = prev {
            let scale = fmax(summary.mean.abs(), summary.m2.sqrt());
            let d_mean = (summary.mean - prev_mean).abs() / scale;
            let d_m2 = (summary.m2 - prev_m2).abs() / prev_m2.abs();
            last_delta = fmax(d_mean, d_m2);
            if d_mean < spec.refinement_tolerance && d_m2 < spec.refinement_tolerance {
                return Ok(summary);
            }
        }
        prev = Some((summary.mean, summary.m2));
        intervals *= 2;
    }
    Err(Error::QuadratureAccuracy {
        refinements: MAX_REFINEMENTS,
        last_delta: last_delta.to_f64().unwrap_or(f64::NAN),
    })
}

/// One trapezoid pass over `intervals + 1` equally spaced nodes.
fn integrate_level<F: Scalar>(
    eval: &impl Fn(F) -> Result<F>,
    lo: F,
    hi: F,
    intervals: usize,
) -> Result<MomentSummary<F>> {
    let h = (hi - lo) / lit::<F>(intervals as f64);
    let node = |i: usize| lo + h * lit::<F>(i as f64);

    let mut weights = Vec::with_capacity(intervals + 1);
    let mut psi_min = F::infinity();
    for i in 0..=intervals {
        let v = eval(node(i))?;
        if v < psi_min {
            psi_min = v;
        }
        weights.push(v);
    }
    // Convert stored psi values into trapezoid-weighted densities
    // exp(-(psi - psi_min)); endpoints count half.
    let half = lit::<F>(0.5);
    let mut z = F::zero();
    let mut zx = F::zero();
    for (i, slot) in weights.iter_mut().enumerate() {
        let mut w = (-(*slot - psi_min)).exp();
        if i == 0 || i == intervals {
            w = half * w;
        }
        *slot = w;
        z += w;
        zx += w * node(i);
    }
    if !(z > F::zero()) {
        return Err(Error::QuadratureAccuracy {
            refinements: 0,
            last_delta: f64::NAN,
        });
    }
    let mean = zx / z;

    let mut zc = [F::zero(); 5];
    for (i, &w) in weights.iter().enumerate() {
        let d = node(i) - mean;
        let d2 = d * d;
        let d3 = d2 * d;
        zc[0] += w * d2;
        zc[1] += w * d3;
        zc[2] += w * d2 * d2;
        zc[3] += w * d2 * d3;
        zc[4] += w * d3 * d3;
    }
    Ok(MomentSummary {
        log_z: -psi_min + (z * h).ln(),
        mean,
        m2: zc[0] / z,
        m3: zc[1] / z,
        m4: zc[2] / z,
        m5: zc[3] / z,
        m6: zc[4] / z,
    })
}

/// Conservative bound on the probability mass outside a window of
/// `half_width_sigmas` floor-standard-deviations: the Gaussian tail mass
/// `2 * (1 - Phi(half_width_sigmas))`. Densities meeting the curvature floor
/// have lighter tails than that Gaussian, so their truncated mass is smaller.
pub fn tail_mass_bound<F: Scalar>(curvature_floor: F, half_width_sigmas: F) -> F {
    // The value is scale-free: the floor fixes the sigma unit but cancels
    // from the standardized tail.
    let _ = curvature_floor;
    let hw = half_width_sigmas.to_f64().expect("half width fits in f64");
    lit(statrs::function::erf::erfc(hw / std::f64::consts::SQRT_2))
}
