//! Command-line front end for the certified EP/CGA toolkit.
//!
//! Subcommands:
//! - `run`: solve one problem end to end (oracle, fixed point, mode fit),
//!   evaluate every applicable certificate, and emit a JSON report.
//! - `sweep`: run a family across n, write the per-n error table as CSV and
//!   the fitted convergence rates as JSON.
//! - `certify`: oracle plus certificate suites only, no fixed-point solve.
//! - `report`: pretty-print a previously written JSON report.
//!
//! Exit codes: 0 success, 1 at least one certificate violated, 2 unusable
//! input (bad problem file, unknown family, bad flags), 3 solver failure
//! (divergence, non-convergence, mode search or quadrature breakdown).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use epcert::ep::cavity;
use epcert::{
    brascamp_lieb_even, certify_constants, check_family_slopes, default_x0, excess_kl,
    extension_suite, find_mode, fixed_point_diagnostics, hybrid_extension_inputs,
    hybrid_precision_consistency, moments, parse_problem, power_of_two_ns, run_sweep,
    solve_fixed_point, target_extension_inputs, theorem_suite, write_csv, BoundCertificate,
    EpOptions, Error, FamilyKind, FixedPoint, GridSpec, MomentSummary, Target,
};

const CONSTANT_SCAN_POINTS: usize = 1 << 17;

#[derive(Parser)]
#[command(
    name = "epcert",
    version,
    about = "Expectation-propagation and Gaussian mode fits with certified error bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: SolverFlags,
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Fraction of each moment-matched update applied per sweep, in (0, 1].
    #[arg(long, global = true)]
    damping: Option<f64>,

    /// Convergence threshold on natural-parameter changes per sweep.
    #[arg(long, global = true)]
    fp_tol: Option<f64>,

    /// Sweep budget before the solver reports non-convergence.
    #[arg(long, global = true)]
    max_sweeps: Option<usize>,

    /// Quadrature grid resolution (power of two). Falls back to the
    /// EPCERT_QUAD_POINTS environment variable, then the built-in default.
    #[arg(long, global = true)]
    quad_points: Option<usize>,

    /// Half-width of the integration window in curvature-floor sigmas.
    #[arg(long, global = true)]
    half_width: Option<f64>,

    /// Seed for randomized families.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and certify every applicable bound.
    Run(RunArgs),
    /// Sweep a family over n and fit convergence rates.
    Sweep(SweepArgs),
    /// Evaluate oracle moments and certificate suites without running EP.
    Certify(CertifyArgs),
    /// Pretty-print a JSON report written by `run` or `certify`.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON problem file: {"sites": [{"family": ...}, ...]}.
    problem_file: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Family name: logcosh_replicated, logcosh_random, gamma, or gaussian.
    family: String,
    /// Largest n; the sweep visits powers of two from 4 up to this value.
    #[arg(long, default_value_t = 512)]
    n_max: usize,
    /// CSV output path (default: <family>_sweep.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rate-fit JSON output path (default: <family>_fits.json).
    #[arg(long)]
    fits: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// JSON problem file: {"sites": [{"family": ...}, ...]}.
    problem_file: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// A JSON report produced by `run` or `certify`.
    report_file: PathBuf,
}

fn main() -> ExitCode {
    // Die quietly when a downstream pager closes the pipe, like cat does;
    // the runtime's default turns EPIPE into a panic with a backtrace.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(&args, &cli.flags),
        Command::Sweep(args) => cmd_sweep(&args, &cli.flags),
        Command::Certify(args) => cmd_certify(&args, &cli.flags),
        Command::Report(args) => cmd_report(&args),
    };
    ExitCode::from(code)
}

/// Maps a library error to the process exit code.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidProblem(_) | Error::InvalidGrid(_) => 2,
        Error::CertificationFailed { .. } => 1,
        _ => 3,
    }
}

fn fail(e: &Error) -> u8 {
    eprintln!("error: {e}");
    exit_code_for(e)
}

fn ep_options(flags: &SolverFlags) -> EpOptions<f64> {
    let mut opts = EpOptions::default();
    if let Some(d) = flags.damping {
        opts.damping = d;
    }
    if let Some(t) = flags.fp_tol {
        opts.fp_tol = t;
    }
    if let Some(m) = flags.max_sweeps {
        opts.max_sweeps = m;
    }
    opts
}

/// Grid resolution precedence: --quad-points flag, then EPCERT_QUAD_POINTS,
/// then the built-in default.
fn grid_spec(flags: &SolverFlags, hint: f64) -> Result<GridSpec<f64>, u8> {
    let mut spec = GridSpec::new(hint);
    let points = match flags.quad_points {
        Some(p) => Some(p),
        None => match std::env::var("EPCERT_QUAD_POINTS") {
            Ok(raw) => match raw.parse::<usize>() {
                Ok(p) => Some(p),
                Err(_) => {
                    eprintln!("error: EPCERT_QUAD_POINTS is not a valid point count: {raw:?}");
                    return Err(2);
                }
            },
            Err(_) => None,
        },
    };
    if let Some(points) = points {
        spec = spec.with_points(points);
    }
    if let Some(hw) = flags.half_width {
        spec = spec.with_half_width(hw);
    }
    Ok(spec)
}

fn load_target(path: &PathBuf) -> Result<Target<f64>, u8> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        2u8
    })?;
    parse_problem::<f64>(&text).map_err(|e| fail(&e))
}

#[derive(Serialize)]
struct TargetOut {
    sites: usize,
    families: Vec<String>,
    domain: String,
    certified_constants: bool,
}

fn target_out(target: &Target<f64>) -> TargetOut {
    let mut families: Vec<String> = Vec::new();
    for site in target.sites() {
        let name = match site.family() {
            epcert::SiteFamily::Gaussian { .. } => "gaussian",
            epcert::SiteFamily::LogCosh { .. } => "logcosh",
            epcert::SiteFamily::Gamma { .. } => "gamma",
        };
        if !families.iter().any(|f| f == name) {
            families.push(name.to_string());
        }
    }
    TargetOut {
        sites: target.sites().len(),
        families,
        domain: match target.domain() {
            epcert::Domain::RealLine => "real line".to_string(),
            epcert::Domain::PositiveHalfLine => "positive half-line".to_string(),
        },
        certified_constants: target.pooled_constants().is_some(),
    }
}

#[derive(Serialize)]
struct MomentsOut {
    log_z: f64,
    mean: f64,
    variance: f64,
    m3: f64,
    m4: f64,
    m5: f64,
    m6: f64,
}

impl From<&MomentSummary<f64>> for MomentsOut {
    fn from(m: &MomentSummary<f64>) -> Self {
        MomentsOut {
            log_z: m.log_z,
            mean: m.mean,
            variance: m.m2,
            m3: m.m3,
            m4: m.m4,
            m5: m.m5,
            m6: m.m6,
        }
    }
}

#[derive(Serialize)]
struct CertOut {
    scope: String,
    id: String,
    anchor: String,
    lhs: f64,
    rhs: f64,
    slack: f64,
    holds: bool,
}

fn cert_rows(scope: &str, certs: &[BoundCertificate], into: &mut Vec<CertOut>) {
    for c in certs {
        into.push(CertOut {
            scope: scope.to_string(),
            id: c.id.clone(),
            anchor: c.anchor.clone(),
            lhs: c.lhs,
            rhs: c.rhs,
            slack: c.slack,
            holds: c.holds,
        });
    }
}

#[derive(Serialize)]
struct KlOut {
    exact: f64,
    quadratic: f64,
}

/// Certificates shared by `run` and `certify`: even-moment bounds and the
/// moment-derivative suite on the target density, when constants exist.
fn target_suites(
    target: &Target<f64>,
    tm: &MomentSummary<f64>,
    rows: &mut Vec<CertOut>,
    warnings: &mut Vec<String>,
) -> Result<(), u8> {
    match target.pooled_constants() {
        Some(pooled) => {
            cert_rows("target", &brascamp_lieb_even(tm, pooled.beta_m), rows);
            let (derivs, totals) =
                target_extension_inputs(target, tm.mean).map_err(|e| fail(&e))?;
            cert_rows("target", &extension_suite(tm, derivs, &totals), rows);
        }
        None => {
            warnings.push(
                "even-moment and moment-derivative suites skipped: \
                 no certified curvature floor for this target"
                    .to_string(),
            );
        }
    }
    Ok(())
}

fn cmd_run(args: &RunArgs, flags: &SolverFlags) -> u8 {
    let target = match load_target(&args.problem_file) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let n = target.sites().len();
    let opts = ep_options(flags);

    // Mode fit first: it supplies a curvature scale and a hint even when the
    // sites claim no constants.
    let mode = match find_mode(&target, default_x0(&target), 1e-12, 100) {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };
    let pooled = target.pooled_constants();
    let floor = pooled.as_ref().map(|c| c.beta_m).unwrap_or(mode.beta_star);
    let spec = match grid_spec(flags, mode.x_star) {
        Ok(s) => s.with_lower_bound(target.domain().lower_bound()),
        Err(code) => return code,
    };

    let psi = |x: f64| target.log_phi_deriv(x, 0).unwrap_or(f64::NAN);
    let tm = match moments(psi, floor, &spec) {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };

    let fp: FixedPoint<f64> = match solve_fixed_point(&target, &opts, &spec) {
        Ok(fp) => fp,
        Err(e) => return fail(&e),
    };
    if !fp.converged {
        eprintln!(
            "error: fixed point did not converge within {} sweeps (last delta {:.3e})",
            fp.sweeps_used,
            fp.state.last_max_delta()
        );
        return 3;
    }

    let mut rows: Vec<CertOut> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    if let Err(code) = target_suites(&target, &tm, &mut rows, &mut warnings) {
        return code;
    }

    match theorem_suite(&tm, &fp, &mode, target.per_site_constants(), n) {
        Ok(certs) => cert_rows("target", &certs, &mut rows),
        Err(Error::UncertifiedConstants { suite }) => {
            warnings.push(format!("{suite} not applicable: sites carry no certified constants"));
        }
        Err(e) => return fail(&e),
    }
    match hybrid_precision_consistency(&target, &fp, target.per_site_constants()) {
        Ok(cert) => cert_rows("target", std::slice::from_ref(&cert), &mut rows),
        Err(Error::UncertifiedConstants { .. }) => {}
        Err(e) => return fail(&e),
    }

    let mut skipped_hybrids = 0usize;
    for i in 0..n {
        let cav = cavity(&fp.state, i);
        let h = &fp.hybrid_moments[i];
        let site = &target.sites()[i];
        let scope = format!("hybrid[{i}]");
        let hybrid_floor = site.curvature_floor() + cav.beta;
        if hybrid_floor > 0.0 {
            cert_rows(&scope, &brascamp_lieb_even(h, hybrid_floor), &mut rows);
        } else {
            skipped_hybrids += 1;
        }
        match hybrid_extension_inputs(site, &cav, h.mean) {
            Ok((derivs, consts)) => {
                cert_rows(&scope, &extension_suite(h, derivs, &consts), &mut rows);
            }
            Err(Error::UncertifiedConstants { .. }) => skipped_hybrids += 1,
            Err(e) => return fail(&e),
        }
    }
    if skipped_hybrids > 0 {
        warnings.push(format!(
            "{skipped_hybrids} hybrid suite(s) skipped: site claims no usable constants"
        ));
    }

    let kl_ep = match excess_kl(tm.mean, tm.m2, fp.mu_ep, fp.v_ep) {
        Ok(k) => k,
        Err(e) => return fail(&e),
    };
    let kl_cga = match excess_kl(tm.mean, tm.m2, mode.x_star, 1.0 / mode.beta_star) {
        Ok(k) => k,
        Err(e) => return fail(&e),
    };

    let diag = match fixed_point_diagnostics(&fp, floor) {
        Ok(d) => d,
        Err(e) => return fail(&e),
    };

    let all_hold = rows.iter().all(|c| c.holds);
    let report = json!({
        "target": target_out(&target),
        "oracle": MomentsOut::from(&tm),
        "fixed_point": {
            "mean": fp.mu_ep,
            "variance": fp.v_ep,
            "converged": fp.converged,
            "sweeps_used": fp.sweeps_used,
            "max_hybrid_mean_gap": diag.max_mean_gap,
            "max_hybrid_variance_gap": diag.max_var_gap,
            "min_site_precision": diag.min_site_beta,
        },
        "mode_fit": {
            "x_star": mode.x_star,
            "beta_star": mode.beta_star,
            "newton_iters": mode.newton_iters,
            "final_gradient": mode.final_gradient,
        },
        "certificates": rows,
        "excess_kl": {
            "fixed_point": KlOut { exact: kl_ep.exact, quadratic: kl_ep.quadratic },
            "mode_fit": KlOut { exact: kl_cga.exact, quadratic: kl_cga.quadratic },
        },
        "warnings": warnings,
        "all_hold": all_hold,
    });

    if let Err(code) = emit_json(&report, args.out.as_ref()) {
        return code;
    }
    if all_hold {
        0
    } else {
        1
    }
}

fn cmd_certify(args: &CertifyArgs, flags: &SolverFlags) -> u8 {
    let target = match load_target(&args.problem_file) {
        Ok(t) => t,
        Err(code) => return code,
    };

    let mode = match find_mode(&target, default_x0(&target), 1e-12, 100) {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };
    let pooled = target.pooled_constants();
    let floor = pooled.as_ref().map(|c| c.beta_m).unwrap_or(mode.beta_star);
    let spec = match grid_spec(flags, mode.x_star) {
        Ok(s) => s.with_lower_bound(target.domain().lower_bound()),
        Err(code) => return code,
    };

    let psi = |x: f64| target.log_phi_deriv(x, 0).unwrap_or(f64::NAN);
    let tm = match moments(psi, floor, &spec) {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };

    let mut rows: Vec<CertOut> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    if let Err(code) = target_suites(&target, &tm, &mut rows, &mut warnings) {
        return code;
    }
    if pooled.is_none() {
        warnings.push(
            "fixed-point accuracy suites not applicable without certified constants".to_string(),
        );
    }

    // Check each site's claimed constants against dense-grid extrema. A
    // refuted claim shows up as a failed row; an absent claim as a warning.
    let scan = spec.with_points(spec.points.max(CONSTANT_SCAN_POINTS));
    for (i, site) in target.sites().iter().enumerate() {
        match certify_constants(site, &scan) {
            Ok(_) => rows.push(CertOut {
                scope: format!("site[{i}]"),
                id: "CONST.claims".to_string(),
                anchor: "claimed curvature floor and derivative ceilings hold on a dense grid"
                    .to_string(),
                lhs: 0.0,
                rhs: 0.0,
                slack: 0.0,
                holds: true,
            }),
            Err(Error::UncertifiedConstants { .. }) => {
                warnings.push(format!("site[{i}]: no claimed constants to certify"));
            }
            Err(Error::CertificationFailed {
                name,
                claimed,
                measured,
                witness,
            }) => rows.push(CertOut {
                scope: format!("site[{i}]"),
                id: format!("CONST.{name}"),
                anchor: format!(
                    "claimed {name} = {claimed} refuted by measured {measured} at x = {witness}"
                ),
                lhs: measured,
                rhs: claimed,
                slack: claimed - measured,
                holds: false,
            }),
            Err(e) => return fail(&e),
        }
    }

    let all_hold = rows.iter().all(|c| c.holds);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let report = json!({
        "target": target_out(&target),
        "oracle": MomentsOut::from(&tm),
        "mode_fit": {
            "x_star": mode.x_star,
            "beta_star": mode.beta_star,
            "newton_iters": mode.newton_iters,
            "final_gradient": mode.final_gradient,
        },
        "certificates": rows,
        "warnings": warnings,
        "all_hold": all_hold,
    });
    if let Err(code) = emit_json(&report, args.out.as_ref()) {
        return code;
    }
    if all_hold {
        0
    } else {
        1
    }
}

fn cmd_sweep(args: &SweepArgs, flags: &SolverFlags) -> u8 {
    let kind: FamilyKind = match args.family.parse() {
        Ok(k) => k,
        Err(e) => return fail(&e),
    };
    let ns = power_of_two_ns(args.n_max);
    let opts = ep_options(flags);
    let spec = match grid_spec(flags, 0.0) {
        Ok(s) => s,
        Err(code) => return code,
    };

    let records = match run_sweep(kind, &ns, flags.seed, &opts, &spec) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };

    let csv_path = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{kind}_sweep.csv")));
    if let Err(e) = fs::write(&csv_path, write_csv(&records)) {
        eprintln!("error: cannot write {}: {e}", csv_path.display());
        return 2;
    }

    let checks = match check_family_slopes(kind, &records) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let all_ok = checks.iter().all(|c| c.ok);

    let fits_path = args
        .fits
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{kind}_fits.json")));
    let fits = json!({
        "family": kind.to_string(),
        "seed": flags.seed,
        "n_list": records.iter().map(|r| r.n).collect::<Vec<_>>(),
        "checks": checks.iter().map(|c| json!({
            "column": c.column,
            "slope": c.fit.slope,
            "intercept": c.fit.intercept,
            "r_squared": c.fit.r_squared,
            "n_min_used": c.fit.n_min_used,
            "requirement": c.requirement,
            "ok": c.ok,
        })).collect::<Vec<_>>(),
        "all_ok": all_ok,
    });
    let rendered = serde_json::to_string_pretty(&fits).expect("fit serialization");
    if let Err(e) = fs::write(&fits_path, rendered + "\n") {
        eprintln!("error: cannot write {}: {e}", fits_path.display());
        return 2;
    }

    println!(
        "{}: {} records -> {} and {}",
        kind,
        records.len(),
        csv_path.display(),
        fits_path.display()
    );
    for c in &checks {
        println!(
            "  [{}] {}: slope {:.4} (r2 {:.4}) vs '{}'",
            if c.ok { "ok" } else { "VIOLATED" },
            c.column,
            c.fit.slope,
            c.fit.r_squared,
            c.requirement
        );
    }
    if checks.is_empty() {
        println!("  no slope assertions declared for this family");
    }
    if all_ok {
        0
    } else {
        1
    }
}

fn emit_json(report: &Value, out: Option<&PathBuf>) -> Result<(), u8> {
    let rendered = serde_json::to_string_pretty(report).expect("report serialization");
    match out {
        Some(path) => fs::write(path, rendered + "\n").map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            2u8
        }),
        None => {
            println!("{rendered}");
            Ok(())
        }
    }
}

fn cmd_report(args: &ReportArgs) -> u8 {
    let text = match fs::read_to_string(&args.report_file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.report_file.display());
            return 2;
        }
    };
    let value: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: not a JSON report: {e}");
            return 2;
        }
    };
    render_report(&value);
    0
}

fn field<'a>(value: &'a Value, key: &str) -> Option<&'a Value> {
    value.get(key).filter(|v| !v.is_null())
}

fn num(value: &Value, key: &str) -> f64 {
    value.get(key).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

fn render_report(v: &Value) {
    if let Some(t) = field(v, "target") {
        let families = t
            .get("families")
            .and_then(Value::as_array)
            .map(|a| {
                a.iter()
                    .filter_map(Value::as_str)
                    .collect::<Vec<_>>()
                    .join(", ")
            })
            .unwrap_or_default();
        println!(
            "target: {} site(s) [{}], domain: {}, certified constants: {}",
            t.get("sites").and_then(Value::as_u64).unwrap_or(0),
            families,
            t.get("domain").and_then(Value::as_str).unwrap_or("?"),
            t.get("certified_constants")
                .and_then(Value::as_bool)
                .unwrap_or(false)
        );
    }
    if let Some(o) = field(v, "oracle") {
        println!(
            "oracle:      mean {:+.12e}  variance {:.12e}",
            num(o, "mean"),
            num(o, "variance")
        );
        println!(
            "             m3 {:+.6e}  m4 {:.6e}  m5 {:+.6e}  m6 {:.6e}",
            num(o, "m3"),
            num(o, "m4"),
            num(o, "m5"),
            num(o, "m6")
        );
    }
    if let Some(f) = field(v, "fixed_point") {
        println!(
            "fixed point: mean {:+.12e}  variance {:.12e}  ({} sweeps, converged: {})",
            num(f, "mean"),
            num(f, "variance"),
            f.get("sweeps_used").and_then(Value::as_u64).unwrap_or(0),
            f.get("converged").and_then(Value::as_bool).unwrap_or(false)
        );
    }
    if let Some(m) = field(v, "mode_fit") {
        println!(
            "mode fit:    x* {:+.12e}  curvature {:.12e}  ({} Newton iters, |grad| {:.2e})",
            num(m, "x_star"),
            num(m, "beta_star"),
            m.get("newton_iters").and_then(Value::as_u64).unwrap_or(0),
            num(m, "final_gradient")
        );
    }
    if let Some(kl) = field(v, "excess_kl") {
        if let (Some(ep), Some(cga)) = (field(kl, "fixed_point"), field(kl, "mode_fit")) {
            println!(
                "excess KL:   fixed point {:.6e} (quadratic {:.6e}); mode fit {:.6e} (quadratic {:.6e})",
                num(ep, "exact"),
                num(ep, "quadratic"),
                num(cga, "exact"),
                num(cga, "quadratic")
            );
        }
    }
    if let Some(rows) = field(v, "certificates").and_then(Value::as_array) {
        let held = rows
            .iter()
            .filter(|r| r.get("holds").and_then(Value::as_bool).unwrap_or(false))
            .count();
        println!("certificates ({held}/{} hold):", rows.len());
        for r in rows {
            println!(
                "  [{}] {:<11} {:<14} lhs {:+.6e}  rhs {:+.6e}  slack {:+.3e}",
                if r.get("holds").and_then(Value::as_bool).unwrap_or(false) {
                    "ok"
                } else {
                    "VIOLATED"
                },
                r.get("scope").and_then(Value::as_str).unwrap_or("?"),
                r.get("id").and_then(Value::as_str).unwrap_or("?"),
                num(r, "lhs"),
                num(r, "rhs"),
                num(r, "slack")
            );
        }
    }
    if let Some(warnings) = field(v, "warnings").and_then(Value::as_array) {
        for w in warnings {
            if let Some(text) = w.as_str() {
                println!("warning: {text}");
            }
        }
    }
    if let Some(all) = field(v, "all_hold").and_then(Value::as_bool) {
        println!(
            "verdict: {}",
            if all {
                "all certificates hold"
            } else {
                "at least one certificate VIOLATED"
            }
        );
    }
}
