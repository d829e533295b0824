//! Cross-checks the fixed-point solver against an independent brute-force
//! implementation: plain trapezoid sums on one huge fixed grid, undamped
//! sequential updates, no adaptive machinery shared with the library.

use approx::assert_abs_diff_eq;
use epcert::{solve_fixed_point, EpOptions, GridSpec, Site, Target};

fn canonical_target() -> Target<f64> {
    let sites: Vec<Site<f64>> = [-1.0, 0.0, 0.5, 2.0]
        .iter()
        .map(|&c| Site::logcosh(c, 1.0, 0.5).unwrap())
        .collect();
    Target::new(sites).unwrap()
}

/// Mean and variance of `exp(-psi)` by trapezoid on `[lo, hi]` with `n`
/// uniform intervals. Deliberately naive.
fn dense_mean_var(psi: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let h = (hi - lo) / n as f64;
    let values: Vec<f64> = (0..=n).map(|k| psi(lo + k as f64 * h)).collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut z = 0.0;
    let mut zx = 0.0;
    for (k, &v) in values.iter().enumerate() {
        let w = (min - v).exp() * if k == 0 || k == n { 0.5 } else { 1.0 };
        let x = lo + k as f64 * h;
        z += w;
        zx += w * x;
    }
    let mean = zx / z;
    let mut zc = 0.0;
    for (k, &v) in values.iter().enumerate() {
        let w = (min - v).exp() * if k == 0 || k == n { 0.5 } else { 1.0 };
        let d = lo + k as f64 * h - mean;
        zc += w * d * d;
    }
    (mean, zc / z)
}

/// Undamped sequential moment matching on a fixed 2^20-interval grid,
/// capped at 10^4 cycles, stopping when no natural parameter moves by more
/// than 1e-13.
fn brute_force_fixed_point(target: &Target<f64>) -> (Vec<(f64, f64)>, f64, f64) {
    let n = target.n();
    let mut r: Vec<f64> = target.sites().iter().map(|s| s.center()).collect();
    let mut b: Vec<f64> = vec![1.0; n];
    let (lo, hi) = (-16.0, 18.0);
    let points = 1 << 20;
    for _ in 0..10_000 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let cav_r: f64 = r.iter().sum::<f64>() - r[i];
            let cav_b: f64 = b.iter().sum::<f64>() - b[i];
            let site = &target.sites()[i];
            let psi =
                |x: f64| site.log_phi_deriv(x, 0).unwrap() + 0.5 * cav_b * x * x - cav_r * x;
            let (mh, vh) = dense_mean_var(psi, lo, hi, points);
            let r_new = mh / vh - cav_r;
            let b_new = 1.0 / vh - cav_b;
            delta = delta.max((r_new - r[i]).abs()).max((b_new - b[i]).abs());
            r[i] = r_new;
            b[i] = b_new;
        }
        if delta < 1e-13 {
            break;
        }
    }
    let bt: f64 = b.iter().sum();
    let rt: f64 = r.iter().sum();
    let params = r.iter().cloned().zip(b.iter().cloned()).collect();
    (params, rt / bt, 1.0 / bt)
}

#[test]
fn solver_agrees_with_brute_force() {
    let target = canonical_target();
    let fp = solve_fixed_point(
        &target,
        &EpOptions::default(),
        &GridSpec::new(0.375).with_points(1 << 12),
    )
    .unwrap();
    assert!(fp.converged);

    let (params, mu_bf, v_bf) = brute_force_fixed_point(&target);
    assert_abs_diff_eq!(fp.mu_ep, mu_bf, epsilon = 1e-8);
    assert_abs_diff_eq!(fp.v_ep, v_bf, epsilon = 1e-8);
    for ((r, b), q) in params.iter().zip(fp.state.site_approx()) {
        assert_abs_diff_eq!(q.r, r, epsilon = 1e-6);
        assert_abs_diff_eq!(q.beta, b, epsilon = 1e-6);
    }
}

#[test]
fn solver_matches_frozen_reference_values() {
    let target = canonical_target();
    let fp = solve_fixed_point(
        &target,
        &EpOptions::default(),
        &GridSpec::new(0.375).with_points(1 << 12),
    )
    .unwrap();
    assert_abs_diff_eq!(fp.mu_ep, 0.360453072518, epsilon = 1e-9);
    assert_abs_diff_eq!(fp.v_ep, 0.198245435907, epsilon = 1e-9);
}

#[test]
fn fixed_point_is_damping_invariant() {
    let target = canonical_target();
    let spec = GridSpec::new(0.375).with_points(1 << 12);
    let heavy = solve_fixed_point(
        &target,
        &EpOptions {
            damping: 0.5,
            ..EpOptions::default()
        },
        &spec,
    )
    .unwrap();
    let light = solve_fixed_point(&target, &EpOptions::default(), &spec).unwrap();
    assert!(heavy.converged && light.converged);
    assert_abs_diff_eq!(heavy.mu_ep, light.mu_ep, epsilon = 1e-8);
    assert_abs_diff_eq!(heavy.v_ep, light.v_ep, epsilon = 1e-8);
    assert!(heavy.sweeps_used > light.sweeps_used);
}
