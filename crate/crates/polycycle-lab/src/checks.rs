//! Runnable invariant suites, one per subsystem. The CLI exposes them
//! through `--check`; the test suites reuse them. Each check states the
//! property it probes and reports an observation string for the log.

use crate::certify::{certify_estimates, GridSpec};
use crate::config::THConfig;
use crate::error::Result;
use crate::invariant::{assign_k, assign_k_brute, frequencies, invariant_vector, phi_of};
use crate::model::MapFamily;
use crate::rectify::{rectify_contracting_inverse_u, rectify_u, RectifyingChart};
use crate::rotation::{
    orbit_frequency, predicted_limit, rational_orbit_count, CircleInterval, EndpointKind,
    Prediction, RotationProblem,
};
use crate::spark::{solve_spark, spark_sequence, th_sparks, SparkProblem};

/// One property probed on concrete data.
#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl PropertyCheck {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        PropertyCheck { name, pass, detail }
    }
}

/// Model-contract checks: certification, additive exactness, derivative
/// consistency against central differences, and monotone eps-dependence.
pub fn model_checks(model: &dyn MapFamily, grid: &GridSpec) -> Result<Vec<PropertyCheck>> {
    let mut out = Vec::new();
    let cert = certify_estimates(model, grid)?;
    out.push(PropertyCheck::new(
        "estimate-certificate",
        cert.pass,
        format!(
            "c = {:.6}, C = {:.6}, grid {} points{}{}",
            cert.c,
            cert.big_c,
            cert.grid_size,
            if cert.deps_exempt { "; eps-independent exemption for the D_eps bounds" } else { "" },
            if cert.iterates_checked { "" } else { "; iterate checks skipped (Lambda >= 1)" },
        ),
    ));

    // central-difference consistency of dx
    let delta = model.delta();
    let mut worst = 0.0f64;
    let mut ok = true;
    for i in 1..=24 {
        let x = delta * 0.9 * (0.7f64).powi(i);
        let eps = 0.5 * x * if model.eps_independent() { 0.0 } else { 1.0 };
        let h = 1e-7 * x;
        let num = (model.eval(eps, x + h) - model.eval(eps, x - h)) / (2.0 * h);
        let ana = model.dx(eps, x);
        let rel = ((num - ana) / ana).abs();
        worst = worst.max(rel);
        ok = ok && rel < 1e-5;
    }
    out.push(PropertyCheck::new(
        "dx-central-difference",
        ok,
        format!("worst relative deviation {worst:.3e}"),
    ));

    // strict monotone dependence on eps of the n-iterates
    let mut mono_ok = true;
    if !model.eps_independent() {
        let x = delta * 0.4;
        for n in 1..=3usize {
            let mut prev = f64::NEG_INFINITY;
            for j in 0..6 {
                let eps = x * (j as f64) / 8.0;
                let mut y = x;
                let mut alive = true;
                for _ in 0..n {
                    y = model.eval(eps, y);
                    if !(y > 0.0 && y < delta) {
                        alive = false;
                        break;
                    }
                }
                if !alive {
                    break;
                }
                mono_ok = mono_ok && y > prev;
                prev = y;
            }
        }
    }
    out.push(PropertyCheck::new(
        "monotone-in-eps",
        mono_ok,
        "iterates strictly increase with eps".to_string(),
    ));
    Ok(out)
}

/// Rectifier checks on one model (either exponent side).
pub fn rectifier_checks(model: &dyn MapFamily, tol: f64) -> Result<Vec<PropertyCheck>> {
    let mut out = Vec::new();
    let forward = model.lambda() > 1.0;
    let chart = RectifyingChart::build(model, tol)?;

    let us: Vec<f64> = (1..=8).map(|i| -(model.delta() * 0.5f64.powi(2 * i)).ln()).collect();

    // conjugacy residual at sampled points
    let mut worst = 0.0f64;
    for &u in &us {
        let r = {
            let u_image = model.step_u(f64::INFINITY, u);
            let xi_x = chart.eval_u(u)?;
            let xi_dx = chart.eval_u(u_image)?;
            (xi_dx - xi_x - chart.ln_lambda).abs()
        };
        worst = worst.max(r);
    }
    out.push(PropertyCheck::new(
        "conjugacy-residual",
        worst < 10.0 * tol,
        format!("worst residual {worst:.3e} against bound {:.3e}", 10.0 * tol),
    ));

    // normalization: |xi(x) - ln(-ln x)| * (-ln x) bounded, no growth trend
    let mut products = Vec::new();
    for &u in &us {
        let xi = chart.eval_u(u)?;
        products.push((xi - u.ln()).abs() * u);
    }
    let head = products[..products.len() / 2].iter().cloned().fold(0.0, f64::max);
    let tail = products[products.len() / 2..].iter().cloned().fold(0.0, f64::max);
    let bounded = tail <= head.max(1e-9) * 1.5;
    out.push(PropertyCheck::new(
        "normalization-rate",
        bounded,
        format!("|xi - lnln| * (-ln x): head max {head:.3e}, tail max {tail:.3e}"),
    ));

    // uniqueness probe: a coarser tolerance must land within itself
    let u_probe = us[2];
    let coarse_tol = (tol * 1e3).min(1e-4);
    let (coarse, fine) = if forward {
        (rectify_u(model, u_probe, coarse_tol)?, rectify_u(model, u_probe, tol)?)
    } else {
        (
            rectify_contracting_inverse_u(model, u_probe, coarse_tol)?,
            rectify_contracting_inverse_u(model, u_probe, tol)?,
        )
    };
    out.push(PropertyCheck::new(
        "tolerance-uniqueness",
        (coarse - fine).abs() <= coarse_tol,
        format!("difference {:.3e} within {coarse_tol:.3e}", (coarse - fine).abs()),
    ));

    // orbit shift equivariance over 20 steps
    let mut u = us[0];
    let xi0 = chart.eval_u(u)?;
    let mut equivariant = true;
    let mut worst_shift = 0.0f64;
    for k in 1..=20 {
        if forward {
            u = model.step_u(f64::INFINITY, u);
        } else {
            u = crate::rectify::invert_step_u(model, u)?;
        }
        let xi_k = chart.eval_u(u)?;
        let shift = if forward { chart.ln_lambda } else { -chart.ln_lambda };
        let dev = (xi_k - xi0 - k as f64 * shift).abs();
        worst_shift = worst_shift.max(dev);
        equivariant = equivariant && dev < (k as f64) * tol * 10.0 + 1e-9;
    }
    out.push(PropertyCheck::new(
        "orbit-shift-equivariance",
        equivariant,
        format!("worst deviation {worst_shift:.3e} over 20 steps"),
    ));

    Ok(out)
}

/// Sparkler checks on an (implicitly affine-or-perturbed) Lambda < 1 model
/// with a constant target.
pub fn sparkler_checks(
    model: &dyn MapFamily,
    p0: f64,
    n_lo: u32,
    n_hi: u32,
    tol: f64,
) -> Result<Vec<PropertyCheck>> {
    let mut out = Vec::new();
    let target = move |_: f64| p0;
    let problem = SparkProblem::new(model, &target)?;

    // unique sign change: the bracketing objective crosses zero once over a
    // wide xi window
    let n_probe = n_lo.max(2);
    let root = solve_spark(&problem, n_probe, tol)?;
    let mut changes = 0;
    let mut prev_above: Option<bool> = None;
    for i in 0..32 {
        let xi = root.xi - 4.0 + 8.0 * (i as f64) / 31.0;
        let above = probe_above(&problem, n_probe, xi);
        if let (Some(p), Some(a)) = (prev_above, above) {
            if p != a {
                changes += 1;
            }
        }
        if above.is_some() {
            prev_above = above;
        }
    }
    out.push(PropertyCheck::new(
        "unique-sign-change",
        changes == 1,
        format!("{changes} sign changes across the probe window"),
    ));

    let points = spark_sequence(&problem, n_lo..=n_hi, tol)?;

    // xi strictly increases with increments near -ln Lambda
    let step = -model.lambda().ln();
    let mut increments_ok = true;
    let mut worst_inc = 0.0f64;
    for w in points.windows(2) {
        let inc = w[1].xi - w[0].xi;
        worst_inc = worst_inc.max((inc - step).abs());
        increments_ok = increments_ok && inc > 0.0;
    }
    out.push(PropertyCheck::new(
        "xi-increments",
        increments_ok && worst_inc < 1e-3,
        format!("worst |increment - (-ln Lambda)| = {worst_inc:.3e}"),
    ));

    // residuals tend to zero
    let first = points.first().unwrap().residual.abs();
    let last = points.last().unwrap().residual.abs();
    out.push(PropertyCheck::new(
        "residual-decay",
        last <= first.max(10.0 * tol),
        format!("|residual| from {first:.3e} to {last:.3e}"),
    ));

    // perturbation sandwich at a representable root: the solved root stays
    // consistent with the unperturbed closed orbit
    let slope = fit_slope(&points);
    out.push(PropertyCheck::new(
        "asymptotic-slope",
        (slope - step).abs() < 1e-4,
        format!("least-squares slope {slope:.9} vs -ln Lambda = {step:.9}"),
    ));

    Ok(out)
}

fn probe_above(problem: &SparkProblem<'_>, n: u32, xi: f64) -> Option<bool> {
    crate::spark::connection_above(problem, n, xi).ok()
}

/// Least-squares slope of xi against n over the latter half of the points.
fn fit_slope(points: &[crate::spark::SparkPoint]) -> f64 {
    let half = &points[points.len() / 2..];
    let n = half.len() as f64;
    let mean_x: f64 = half.iter().map(|p| p.n as f64).sum::<f64>() / n;
    let mean_y: f64 = half.iter().map(|p| p.xi).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for p in half {
        let dx = p.n as f64 - mean_x;
        num += dx * (p.xi - mean_y);
        den += dx * dx;
    }
    num / den
}

/// Scenario pipeline checks: interleaving certificate, invariant-sum
/// identity, mass conservation of the frequencies, translation invariance,
/// and the regime-appropriate frequency verdicts.
pub fn th_checks(config: &THConfig, depth: u32, tol: f64) -> Result<Vec<PropertyCheck>> {
    let mut out = Vec::new();
    let table = th_sparks(config, depth, 1e-10)?;

    let mut order_ok = true;
    for w in table.eps.windows(2) {
        if w[0].m >= table.m0 && w[1].m >= table.m0 && w[0].xi >= w[1].xi {
            order_ok = false;
        }
    }
    out.push(PropertyCheck::new(
        "interleaving-beyond-m0",
        order_ok,
        format!("certified from m0 = {}", table.m0),
    ));

    let iv = invariant_vector(config)?;
    let sum: f64 = iv.phi_k.iter().sum();
    out.push(PropertyCheck::new(
        "phi-sum",
        (sum - iv.phi).abs() < 1e-12,
        format!("sum Phi_k = {sum:.15}, phi = {:.15}", iv.phi),
    ));

    let shifted = invariant_vector(&config.translated(0.037))?;
    let translation_ok = iv
        .phi_k
        .iter()
        .zip(&shifted.phi_k)
        .all(|(a, b)| (a - b).abs() < 1e-12);
    out.push(PropertyCheck::new(
        "translation-invariance",
        translation_ok,
        "Phi unchanged under a common chart shift".to_string(),
    ));

    let assignments = assign_k(&table)?;
    let brute_depth = (depth as usize).min(2_000);
    let brute = {
        let mut shallow = table.clone();
        shallow.iota.truncate(brute_depth);
        assign_k_brute(&shallow)?
    };
    let routes_agree = assignments[..brute_depth] == brute[..];
    out.push(PropertyCheck::new(
        "assignment-dual-route",
        routes_agree,
        format!("binary search equals exhaustive scan on {brute_depth} entries"),
    ));

    let report = frequencies(config, &assignments, depth, tol)?;
    out.push(PropertyCheck::new(
        "frequency-mass",
        report.counts.iter().sum::<u64>() == depth as u64,
        "every interior entry assigned exactly one arc".to_string(),
    ));
    let verdict_name: &'static str = if report.rational.is_some() {
        "rational-frequency-bounds"
    } else {
        "irrational-frequency-limit"
    };
    let all_ok = report.verdict.iter().all(|&v| v);
    let worst = report
        .psi
        .iter()
        .zip(&report.predicted)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    out.push(PropertyCheck::new(
        verdict_name,
        all_ok,
        format!("worst |psi - predicted| = {worst:.3e} at depth {depth}"),
    ));

    out.push(PropertyCheck::new(
        "phi-value",
        phi_of(config).is_finite() && phi_of(config) > 0.0,
        format!("phi = {:.12}", phi_of(config)),
    ));
    Ok(out)
}

/// Rotation checks on a drift-free problem.
pub fn rotation_checks(
    c: f64,
    rho: f64,
    j: CircleInterval,
    kind: EndpointKind,
    depth: u64,
) -> Result<Vec<PropertyCheck>> {
    let mut out = Vec::new();
    let problem = RotationProblem::constant(c, rho, j, kind);
    let trace = orbit_frequency(&problem, depth)?;
    let trace2 = orbit_frequency(&problem, depth)?;
    out.push(PropertyCheck::new(
        "deterministic-recount",
        trace.count(depth) == trace2.count(depth),
        format!("count = {}", trace.count(depth)),
    ));

    // sandwich property under interval inflation
    let len = j.length();
    let d = (0.1 * len).min(0.01);
    let shrunk = CircleInterval::new(j.a + d, j.b - d);
    let grown = CircleInterval::new(j.a - d, j.b + d);
    let c_shrunk = orbit_frequency(&RotationProblem::constant(c, rho, shrunk, kind), depth)?
        .count(depth);
    let c_grown =
        orbit_frequency(&RotationProblem::constant(c, rho, grown, kind), depth)?.count(depth);
    out.push(PropertyCheck::new(
        "interval-sandwich",
        c_shrunk <= trace.count(depth) && trace.count(depth) <= c_grown,
        format!("{c_shrunk} <= {} <= {c_grown}", trace.count(depth)),
    ));

    match predicted_limit(rho, j, crate::invariant::Q_MAX_DEFAULT) {
        Prediction::Exact(limit) => {
            let psi = trace.psi(depth);
            out.push(PropertyCheck::new(
                "irrational-equidistribution",
                (psi - limit).abs() < 0.01 + 3.0 / (depth as f64).sqrt(),
                format!("psi = {psi:.6} vs |J| = {limit:.6}"),
            ));
        }
        Prediction::Bounds { q } => {
            let liminf = trace.liminf_est();
            let limsup = trace.limsup_est();
            let lower = -1.0 / q as f64 + limsup <= len + 1e-12;
            let upper = len <= 1.0 / q as f64 + liminf + 1e-12;
            out.push(PropertyCheck::new(
                "rational-frequency-bounds",
                lower && upper,
                format!("q = {q}, tail extrema [{liminf:.6}, {limsup:.6}], |J| = {len:.6}"),
            ));
            // exhaust one period against the guaranteed bracket
            if let Some(r) = crate::ratio::detect_rational(rho, crate::invariant::Q_MAX_DEFAULT, 1e-12)
            {
                let ok = rational_orbit_count(c, r.p, r.q, j, kind).is_ok();
                out.push(PropertyCheck::new(
                    "rational-period-bracket",
                    ok,
                    format!("one period of p/q = {}/{}", r.p, r.q),
                ));
            }
        }
    }
    Ok(out)
}
