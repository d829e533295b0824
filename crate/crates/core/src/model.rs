//! Site families, targets, and regularity-constant certification.
//!
//! A *site* is one factor `f_i(x) = exp(-phi_i(x))` of a factorized target
//! density `p(x) = prod_i f_i(x)`. Each family supplies closed-form
//! derivatives of its log-function `phi_i` up to order six; nothing in the
//! production path ever differentiates numerically. Certified families also
//! claim *regularity constants*: a curvature floor `beta_m <= phi''` and
//! global ceilings `K_d >= |phi^(d)|` for `d = 3..6`. Every inequality
//! certificate downstream consumes these constants, so [`certify_constants`]
//! exists to check the claims against dense-grid evidence before anything
//! else trusts them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::GridSpec;
use crate::scalar::{fmax, lit, Scalar};

/// Exact supremum of |d^3/du^3 log cosh(u)|, attained at tanh(u) = 1/sqrt(3).
/// The value is 4*sqrt(3)/9.
const LOGCOSH_K3_UNIT: f64 = 0.769_800_358_919_501;
/// Exact supremum of |d^5/du^5 log cosh(u)|, attained where
/// tanh^2(u) = (15 - sqrt(105))/30.
const LOGCOSH_K5_UNIT: f64 = 4.085_885_502_969_656;

/// Curvature floor and derivative ceilings of one log-function.
///
/// `beta_m` bounds `phi''` from below everywhere on the domain; `k3..k6`
/// bound `|phi'''|..|phi^(6)|` from above.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegularityConstants<F> {
    pub beta_m: F,
    pub k3: F,
    pub k4: F,
    pub k5: F,
    pub k6: F,
}

impl<F: Scalar> RegularityConstants<F> {
    /// The ceiling for derivative order `d` (3..=6).
    pub fn k(&self, d: usize) -> F {
        match d {
            3 => self.k3,
            4 => self.k4,
            5 => self.k5,
            6 => self.k6,
            _ => panic!("derivative ceiling defined for orders 3..=6, got {d}"),
        }
    }

    /// Constants of a product of `n` sites each satisfying these bounds:
    /// the floor and all ceilings scale by `n`.
    pub fn pooled(&self, n: usize) -> Self {
        let nf = lit::<F>(n as f64);
        RegularityConstants {
            beta_m: self.beta_m * nf,
            k3: self.k3 * nf,
            k4: self.k4 * nf,
            k5: self.k5 * nf,
            k6: self.k6 * nf,
        }
    }
}

/// Support of a site's log-function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    /// The whole real line.
    RealLine,
    /// Strictly positive reals.
    PositiveHalfLine,
}

impl Domain {
    pub fn contains<F: Scalar>(self, x: F) -> bool {
        match self {
            Domain::RealLine => true,
            Domain::PositiveHalfLine => x > F::zero(),
        }
    }

    /// Lower boundary used to clamp integration windows, if any.
    pub fn lower_bound<F: Scalar>(self) -> Option<F> {
        match self {
            Domain::RealLine => None,
            Domain::PositiveHalfLine => Some(F::zero()),
        }
    }
}

/// Parameters of one site family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SiteFamily<F> {
    /// `phi(x) = precision/2 * (x - center)^2`.
    Gaussian { center: F, precision: F },
    /// `phi(x) = beta/2 * (x - center)^2 + amplitude * log cosh(x - center)`.
    ///
    /// Strongly log-concave with globally bounded derivatives of orders
    /// 3..6, which makes it the workhorse certified family.
    LogCosh { center: F, beta: F, amplitude: F },
    /// `phi(x) = rate*x - (shape - 1)*ln x` on `x > 0`.
    ///
    /// A deliberate stress family: its curvature decays like `1/x^2`, so it
    /// admits no global curvature floor and carries no claimed constants.
    Gamma { shape: F, rate: F },
}

/// One factor of the target density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Site<F> {
    family: SiteFamily<F>,
}

impl<F: Scalar> Site<F> {
    pub fn gaussian(center: F, precision: F) -> Result<Self> {
        if !(precision > F::zero()) || !center.is_finite() || !precision.is_finite() {
            return Err(Error::InvalidProblem(
                "gaussian site needs finite center and precision > 0".into(),
            ));
        }
        Ok(Site {
            family: SiteFamily::Gaussian { center, precision },
        })
    }

    pub fn logcosh(center: F, beta: F, amplitude: F) -> Result<Self> {
        let finite = center.is_finite() && beta.is_finite() && amplitude.is_finite();
        if !finite || !(beta > F::zero()) || amplitude < F::zero() {
            return Err(Error::InvalidProblem(
                "logcosh site needs finite parameters, beta > 0, amplitude >= 0".into(),
            ));
        }
        Ok(Site {
            family: SiteFamily::LogCosh {
                center,
                beta,
                amplitude,
            },
        })
    }

    pub fn gamma(shape: F, rate: F) -> Result<Self> {
        if !(shape > F::one()) || !(rate > F::zero()) {
            return Err(Error::InvalidProblem(
                "gamma site needs shape > 1 and rate > 0".into(),
            ));
        }
        Ok(Site {
            family: SiteFamily::Gamma { shape, rate },
        })
    }

    pub fn family(&self) -> &SiteFamily<F> {
        &self.family
    }

    pub fn domain(&self) -> Domain {
        match self.family {
            SiteFamily::Gamma { .. } => Domain::PositiveHalfLine,
            _ => Domain::RealLine,
        }
    }

    /// A representative central location: the center parameter for
    /// whole-line families, the mode `(shape-1)/rate` for the gamma family.
    /// Used to seed EP initialization and window hints.
    pub fn center(&self) -> F {
        match self.family {
            SiteFamily::Gaussian { center, .. } => center,
            SiteFamily::LogCosh { center, .. } => center,
            SiteFamily::Gamma { shape, rate } => (shape - F::one()) / rate,
        }
    }

    /// The constants this family claims, if it claims any.
    ///
    /// Gaussian: floor = precision, all ceilings zero. LogCosh: floor =
    /// `beta`; the ceilings are the amplitude times the exact suprema of the
    /// unit log-cosh derivatives (4*sqrt(3)/9, 2, ~4.0859, 16). Gamma claims
    /// nothing.
    pub fn claimed_constants(&self) -> Option<RegularityConstants<F>> {
        match self.family {
            SiteFamily::Gaussian { precision, .. } => Some(RegularityConstants {
                beta_m: precision,
                k3: F::zero(),
                k4: F::zero(),
                k5: F::zero(),
                k6: F::zero(),
            }),
            SiteFamily::LogCosh {
                beta, amplitude, ..
            } => Some(RegularityConstants {
                beta_m: beta,
                k3: amplitude * lit(LOGCOSH_K3_UNIT),
                k4: amplitude * lit(2.0),
                k5: amplitude * lit(LOGCOSH_K5_UNIT),
                k6: amplitude * lit(16.0),
            }),
            SiteFamily::Gamma { .. } => None,
        }
    }

    /// Claimed curvature floor, or zero for uncertified families.
    pub fn curvature_floor(&self) -> F {
        self.claimed_constants()
            .map(|c| c.beta_m)
            .unwrap_or_else(F::zero)
    }

    /// `phi^(order)(x)` for `order` in 0..=6, from closed-form expressions.
    pub fn log_phi_deriv(&self, x: F, order: usize) -> Result<F> {
        assert!(order <= 6, "derivative order must be 0..=6, got {order}");
        if !self.domain().contains(x) {
            return Err(Error::DomainViolation {
                x: x.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(match self.family {
            SiteFamily::Gaussian { center, precision } => {
                let u = x - center;
                match order {
                    0 => lit::<F>(0.5) * precision * u * u,
                    1 => precision * u,
                    2 => precision,
                    _ => F::zero(),
                }
            }
            SiteFamily::LogCosh {
                center,
                beta,
                amplitude,
            } => {
                let u = x - center;
                let a = amplitude;
                let two = lit::<F>(2.0);
                match order {
                    // log cosh(u) = |u| + log(1 + exp(-2|u|)) - log 2, which
                    // stays finite for large |u| where cosh overflows.
                    0 => {
                        let au = u.abs();
                        let softplus = (-two * au).exp().ln_1p();
                        lit::<F>(0.5) * beta * u * u + a * (au + softplus - lit::<F>(core::f64::consts::LN_2))
                    }
                    1 => beta * u + a * u.tanh(),
                    _ => {
                        let t = u.tanh();
                        let s = F::one() - t * t;
                        match order {
                            2 => beta + a * s,
                            3 => -two * a * t * s,
                            4 => -two * a * s * (s - two * t * t),
                            5 => -lit::<F>(8.0) * a * t * s * (t * t - two * s),
                            _ => {
                                -lit::<F>(8.0)
                                    * a
                                    * s
                                    * (lit::<F>(11.0) * s * t * t
                                        - two * s * s
                                        - two * t * t * t * t)
                            }
                        }
                    }
                }
            }
            SiteFamily::Gamma { shape, rate } => {
                let am1 = shape - F::one();
                match order {
                    0 => rate * x - am1 * x.ln(),
                    1 => rate - am1 / x,
                    d => {
                        // phi^(d) = (-1)^d (d-1)! (shape-1) / x^d
                        let mut factorial = F::one();
                        for j in 1..d {
                            factorial *= lit::<F>(j as f64);
                        }
                        let sign = if d % 2 == 0 { F::one() } else { -F::one() };
                        sign * factorial * am1 / x.powi(d as i32)
                    }
                }
            }
        })
    }
}

/// Raw grid extrema of one site's derivatives: the evidence against which
/// claimed constants are judged.
#[derive(Clone, Copy, Debug)]
pub struct MeasuredConstants<F> {
    /// Minimum of `phi''` over the grid and its location.
    pub beta_m: (F, F),
    /// Maximum of `|phi^(d)|` for d = 3..6 and their locations.
    pub k: [(F, F); 4],
}

/// Scans a dense grid over the site's effective support and records the
/// extrema of its derivatives.
///
/// Whole-line sites are scanned over center +- `half_width_sigmas / sqrt(floor)`
/// uniformly; the gamma site over `[mode/100, mode*100]` log-uniformly (its
/// derivatives are monotone in `x`, so the interesting action is near zero).
pub fn measure_constants<F: Scalar>(site: &Site<F>, grid: &GridSpec<F>) -> Result<MeasuredConstants<F>> {
    let points = grid.points;
    if points < 100_000 {
        return Err(Error::InvalidGrid(format!(
            "constant certification needs at least 1e5 grid points, got {points}"
        )));
    }
    let eval_at = |x: F| -> Result<[F; 5]> {
        Ok([
            site.log_phi_deriv(x, 2)?,
            site.log_phi_deriv(x, 3)?.abs(),
            site.log_phi_deriv(x, 4)?.abs(),
            site.log_phi_deriv(x, 5)?.abs(),
            site.log_phi_deriv(x, 6)?.abs(),
        ])
    };

    let mut min2 = (F::infinity(), F::zero());
    let mut kmax = [(F::zero(), F::zero()); 4];
    let mut visit = |x: F| -> Result<()> {
        let v = eval_at(x)?;
        if v[0] < min2.0 {
            min2 = (v[0], x);
        }
        for d in 0..4 {
            if v[d + 1] > kmax[d].0 {
                kmax[d] = (v[d + 1], x);
            }
        }
        Ok(())
    };

    match site.domain() {
        Domain::RealLine => {
            let floor = fmax(site.curvature_floor(), lit(1e-12));
            let half = grid.half_width_sigmas / floor.sqrt();
            let center = site.center();
            let step = lit::<F>(2.0) * half / lit::<F>((points - 1) as f64);
            for i in 0..points {
                visit(center - half + step * lit::<F>(i as f64))?;
            }
        }
        Domain::PositiveHalfLine => {
            let mode = site.center();
            let lo = (mode / lit::<F>(100.0)).ln();
            let hi = (mode * lit::<F>(100.0)).ln();
            let step = (hi - lo) / lit::<F>((points - 1) as f64);
            for i in 0..points {
                visit((lo + step * lit::<F>(i as f64)).exp())?;
            }
        }
    }
    Ok(MeasuredConstants {
        beta_m: min2,
        k: kmax,
    })
}

/// Checks a site's claimed constants against dense-grid evidence and returns
/// the certified values.
///
/// The claims must be valid bounds for the raw grid extrema (floor below the
/// measured minimum, ceilings above the measured maxima, up to float
/// round-off). The returned constants are the claims, tightened where the
/// margined grid evidence (0.95 x minimum, 1.05 x maxima, the margins
/// absorbing grid discretization) is sharper than a loose claim. Sites
/// without claims cannot be certified.
pub fn certify_constants<F: Scalar>(
    site: &Site<F>,
    grid: &GridSpec<F>,
) -> Result<RegularityConstants<F>> {
    let claimed = site
        .claimed_constants()
        .ok_or(Error::UncertifiedConstants {
            suite: "constant certification",
        })?;
    let measured = measure_constants(site, grid)?;
    certify_against(&claimed, &measured)
}

/// The claim-versus-evidence comparison at the heart of [`certify_constants`],
/// split out so the rejection paths are directly testable.
fn certify_against<F: Scalar>(
    claimed: &RegularityConstants<F>,
    measured: &MeasuredConstants<F>,
) -> Result<RegularityConstants<F>> {
    let round_off = |v: F| lit::<F>(1e-12) * fmax(F::one(), v.abs());
    let (min2, witness2) = measured.beta_m;
    if claimed.beta_m > min2 + round_off(min2) {
        return Err(Error::CertificationFailed {
            name: "beta_m",
            claimed: claimed.beta_m.to_f64().unwrap_or(f64::NAN),
            measured: min2.to_f64().unwrap_or(f64::NAN),
            witness: witness2.to_f64().unwrap_or(f64::NAN),
        });
    }
    const NAMES: [&str; 4] = ["k3", "k4", "k5", "k6"];
    for (d, (&(maxd, witness), name)) in measured.k.iter().zip(NAMES).enumerate() {
        if claimed.k(d + 3) < maxd - round_off(maxd) {
            return Err(Error::CertificationFailed {
                name,
                claimed: claimed.k(d + 3).to_f64().unwrap_or(f64::NAN),
                measured: maxd.to_f64().unwrap_or(f64::NAN),
                witness: witness.to_f64().unwrap_or(f64::NAN),
            });
        }
    }

    let margin_lo = lit::<F>(0.95);
    let margin_hi = lit::<F>(1.05);
    let tighten_k = |claim: F, grid_max: F| {
        if claim > margin_hi * grid_max {
            margin_hi * grid_max
        } else {
            claim
        }
    };
    Ok(RegularityConstants {
        beta_m: fmax(claimed.beta_m, margin_lo * min2),
        k3: tighten_k(claimed.k3, measured.k[0].0),
        k4: tighten_k(claimed.k4, measured.k[1].0),
        k5: tighten_k(claimed.k5, measured.k[2].0),
        k6: tighten_k(claimed.k6, measured.k[3].0),
    })
}

/// A factorized target density `p(x) ∝ exp(-sum_i phi_i(x))`.
#[derive(Clone, Debug)]
pub struct Target<F> {
    sites: Vec<Site<F>>,
}

impl<F: Scalar> Target<F> {
    /// Builds a target from its sites. All sites must share one domain and
    /// there must be at least one.
    pub fn new(sites: Vec<Site<F>>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidProblem("a target needs at least one site".into()));
        }
        let domain = sites[0].domain();
        if sites.iter().any(|s| s.domain() != domain) {
            return Err(Error::InvalidProblem(
                "all sites must share a common domain".into(),
            ));
        }
        Ok(Target { sites })
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Site<F>] {
        &self.sites
    }

    pub fn domain(&self) -> Domain {
        self.sites[0].domain()
    }

    /// `phi_p^(order)(x) = sum_i phi_i^(order)(x)`, summed in site order so
    /// the result is reproducible to the last bit.
    pub fn log_phi_deriv(&self, x: F, order: usize) -> Result<F> {
        let mut total = F::zero();
        for site in &self.sites {
            total += site.log_phi_deriv(x, order)?;
        }
        Ok(total)
    }

    /// Per-site constants valid for *every* site: the smallest claimed floor
    /// and the largest claimed ceilings. `None` if any site is uncertified.
    pub fn per_site_constants(&self) -> Option<RegularityConstants<F>> {
        let mut iter = self.sites.iter().map(|s| s.claimed_constants());
        let mut acc = iter.next()??;
        for c in iter {
            let c = c?;
            acc.beta_m = if c.beta_m < acc.beta_m { c.beta_m } else { acc.beta_m };
            acc.k3 = fmax(acc.k3, c.k3);
            acc.k4 = fmax(acc.k4, c.k4);
            acc.k5 = fmax(acc.k5, c.k5);
            acc.k6 = fmax(acc.k6, c.k6);
        }
        Some(acc)
    }

    /// Constants of the pooled log-function `phi_p`: per-site values scaled
    /// by `n`. `None` if any site is uncertified.
    pub fn pooled_constants(&self) -> Option<RegularityConstants<F>> {
        Some(self.per_site_constants()?.pooled(self.n()))
    }

    /// Precision-weighted average of site centers; uncertified sites weigh in
    /// with unit weight. The standard initial point for mode search and
    /// window hints.
    pub fn precision_weighted_center(&self) -> F {
        let mut num = F::zero();
        let mut den = F::zero();
        for site in &self.sites {
            let w = match site.claimed_constants() {
                Some(c) => c.beta_m,
                None => F::one(),
            };
            num += w * site.center();
            den += w;
        }
        num / den
    }
}

/// Serialized form of one site, as stored in problem files.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum SiteSpec {
    Gaussian { center: f64, precision: f64 },
    LogCosh { center: f64, beta: f64, amplitude: f64 },
    Gamma { shape: f64, rate: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
struct ProblemSpec {
    sites: Vec<SiteSpec>,
}

/// Parses a problem document, e.g.
/// `{"sites":[{"family":"logcosh","center":0.0,"beta":1.0,"amplitude":0.5}]}`.
pub fn parse_problem<F: Scalar>(json: &str) -> Result<Target<F>> {
    let spec: ProblemSpec =
        serde_json::from_str(json).map_err(|e| Error::InvalidProblem(e.to_string()))?;
    let sites = spec
        .sites
        .iter()
        .map(|s| match *s {
            SiteSpec::Gaussian { center, precision } => {
                Site::gaussian(lit(center), lit(precision))
            }
            SiteSpec::LogCosh {
                center,
                beta,
                amplitude,
            } => Site::logcosh(lit(center), lit(beta), lit(amplitude)),
            SiteSpec::Gamma { shape, rate } => Site::gamma(lit(shape), lit(rate)),
        })
        .collect::<Result<Vec<_>>>()?;
    Target::new(sites)
}

/// Serializes a target back into the problem-document format.
pub fn problem_to_json<F: Scalar>(target: &Target<F>) -> String {
    let to_f64 = |v: F| v.to_f64().expect("scalar convertible to f64");
    let sites = target
        .sites()
        .iter()
        .map(|s| match *s.family() {
            SiteFamily::Gaussian { center, precision } => SiteSpec::Gaussian {
                center: to_f64(center),
                precision: to_f64(precision),
            },
            SiteFamily::LogCosh {
                center,
                beta,
                amplitude,
            } => SiteSpec::LogCosh {
                center: to_f64(center),
                beta: to_f64(beta),
                amplitude: to_f64(amplitude),
            },
            SiteFamily::Gamma { shape, rate } => SiteSpec::Gamma {
                shape: to_f64(shape),
                rate: to_f64(rate),
            },
        })
        .collect();
    serde_json::to_string_pretty(&ProblemSpec { sites }).expect("problem spec serializes")
}
