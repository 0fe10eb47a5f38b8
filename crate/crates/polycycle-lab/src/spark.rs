//! Sparkling-connection roots: solve Delta_eps^n(eps) = P(eps) for eps_n,
//! generate the interleaved interior/exterior sequences of a scenario, and
//! measure their deviation from the predicted linear asymptotics on the
//! log-log scale.
//!
//! Root-finding is bisection on the xi = ln(-ln eps) scale: the objective
//! spans hundreds of orders of magnitude in eps, bisection in xi is
//! scale-free, and strict monotonicity of eps -> Delta_eps^n(eps) makes the
//! sign bracket certain. eps values that underflow doubles are carried as
//! their xi-value; models evaluate on the u-scale throughout.

use rayon::prelude::*;

use crate::config::THConfig;
use crate::error::{Error, Result};
use crate::model::MapFamily;
use crate::rectify::rectify_contracting_inverse_u;
use crate::report::fmt_g17;
use crate::scale::{LogLogCoord, NEG_LOG_MAX};

/// A connection problem: a contracting-exponent family and a smooth target.
pub struct SparkProblem<'a> {
    model: &'a dyn MapFamily,
    target: &'a (dyn Fn(f64) -> f64 + Sync),
    p0: f64,
}

impl<'a> SparkProblem<'a> {
    /// Validates the exponent, the target value at 0, and that P(0) lies in
    /// the attraction basin of 0 under the inverted map.
    pub fn new(model: &'a dyn MapFamily, target: &'a (dyn Fn(f64) -> f64 + Sync)) -> Result<Self> {
        if !(model.lambda() > 0.0 && model.lambda() < 1.0) {
            return Err(Error::config(format!(
                "sparkler needs Lambda in (0, 1), got {}",
                model.lambda()
            )));
        }
        let p0 = target(0.0);
        if !(p0 > 0.0 && p0 < model.delta()) {
            return Err(Error::config(format!(
                "P(0) = {p0} must lie in (0, {})",
                model.delta()
            )));
        }
        // basin check: inverse iterates of P(0) must run off to 0 (u grows)
        let mut u = -p0.ln();
        let u_start = u;
        for _ in 0..8 {
            let next = crate::rectify::invert_step_u(model, u)?;
            if !(next > u) {
                return Err(Error::config(format!(
                    "P(0) = {p0} is not attracted to 0 under the inverted map"
                )));
            }
            u = next;
        }
        if !(u > 1.5 * u_start) {
            return Err(Error::config(format!(
                "P(0) = {p0} shows no contraction to 0 under the inverted map"
            )));
        }
        Ok(SparkProblem { model, target, p0 })
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn model(&self) -> &dyn MapFamily {
        self.model
    }
}

enum Sign {
    /// Delta_eps^n(eps) > P(eps)
    Above,
    /// Delta_eps^n(eps) < P(eps)
    Below,
}

fn objective_sign(problem: &SparkProblem<'_>, n: u32, xi: f64) -> Result<Sign> {
    let model = problem.model;
    let u_delta = -model.delta().ln();
    let u_eps = xi.exp();
    if !(u_eps > u_delta) {
        return Err(Error::domain(format!(
            "eps must stay below delta: xi = {xi} puts eps outside (0, {})",
            model.delta()
        )));
    }
    let eps = if u_eps > NEG_LOG_MAX { 0.0 } else { (-u_eps).exp() };
    let p_val = (problem.target)(eps);
    if !(p_val > 0.0 && p_val < model.delta()) {
        return Err(Error::config(format!(
            "P(eps) = {p_val} left (0, {}) at eps = {eps:e}",
            model.delta()
        )));
    }
    let u_p = -p_val.ln();

    let mut u = u_eps;
    let mut monotone = true;
    for step in 1..=n {
        let next = model.step_u(u_eps, u);
        if !next.is_finite() {
            return Err(Error::domain(format!(
                "map left (0, 1) at iterate {step} of the connection orbit"
            )));
        }
        monotone = monotone && next < u;
        if next <= u_delta {
            // the orbit reached delta; when it got there monotonically the
            // remaining iterates only grow, so the objective sign is certain
            if monotone {
                return Ok(Sign::Above);
            }
            return Err(Error::EscapedDomain { step: step as usize, delta: model.delta() });
        }
        u = next;
    }
    // Delta^n(eps) > P(eps) iff u < u_p (orders reverse on the u-scale)
    if u < u_p {
        Ok(Sign::Above)
    } else {
        Ok(Sign::Below)
    }
}

/// Sign probe of the bracketing objective at xi = ln(-ln eps): true when
/// Delta_eps^n(eps) > P(eps).
pub fn connection_above(problem: &SparkProblem<'_>, n: u32, xi: f64) -> Result<bool> {
    Ok(matches!(objective_sign(problem, n, xi)?, Sign::Above))
}

/// Smallest n at which the connection equation brackets a root. Uniqueness
/// holds only "for n large enough" without an effective bound, so the
/// threshold is measured per problem rather than asserted.
pub fn min_bracketed_n(problem: &SparkProblem<'_>, tol: f64, n_cap: u32) -> Result<u32> {
    for n in 1..=n_cap {
        match solve_spark(problem, n, tol) {
            Ok(_) => return Ok(n),
            Err(Error::NoBracket { .. }) | Err(Error::EscapedDomain { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoBracket { n: n_cap })
}

/// Solve Delta_eps^n(eps) = P(eps); returns eps_n on the log-log scale with
/// the final bisection bracket certified to within `tol` on the xi-scale.
///
/// ```
/// use polycycle_lab::{solve_spark, PowerLawModel, SparkProblem};
///
/// // Delta_eps(x) = sqrt(x) + eps, target 1/4, one turn:
/// // sqrt(eps) + eps = 1/4 has the root ((sqrt 2 - 1) / 2)^2
/// let map = PowerLawModel::new(1.0, 0.5, 0.0, 1.0, true, 0.5).unwrap();
/// let target = |_eps: f64| 0.25;
/// let problem = SparkProblem::new(&map, &target).unwrap();
/// let root = solve_spark(&problem, 1, 1e-12).unwrap();
/// let eps_1 = root.to_x().finite().unwrap();
/// assert!((eps_1.sqrt() + eps_1 - 0.25).abs() < 1e-12);
/// ```
pub fn solve_spark(problem: &SparkProblem<'_>, n: u32, tol: f64) -> Result<LogLogCoord> {
    if n == 0 {
        return Err(Error::domain("n >= 1 is required (n = 0 is a fixed-point equation)"));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let model = problem.model;
    // asymptotic prediction centers the initial bracket
    let xi_hat = -(n as f64) * model.lambda().ln() + (-problem.p0.ln()).ln();
    if xi_hat.exp() > 1e300 {
        return Err(Error::domain(format!(
            "n = {n} puts the root beyond the neg-log range (predicted xi = {xi_hat:.1})"
        )));
    }
    let xi_floor = (-model.delta().ln()).ln() + 1e-9;

    let mut half = 1.0f64;
    let mut lo = (xi_hat - half).max(xi_floor);
    let mut hi = xi_hat + half;
    let mut sign_lo = objective_sign(problem, n, lo)?;
    let mut sign_hi = objective_sign(problem, n, hi)?;
    let mut widenings = 0;
    loop {
        match (&sign_lo, &sign_hi) {
            (Sign::Above, Sign::Below) => break,
            _ => {
                widenings += 1;
                if widenings > 16 {
                    return Err(Error::NoBracket { n });
                }
                half *= 2.0;
                if !matches!(sign_lo, Sign::Above) {
                    let new_lo = (xi_hat - half).max(xi_floor);
                    if new_lo < lo {
                        lo = new_lo;
                        sign_lo = objective_sign(problem, n, lo)?;
                    } else if matches!(sign_lo, Sign::Below) && lo <= xi_floor + 1e-9 {
                        // even eps just under delta cannot reach P within n steps
                        return Err(Error::NoBracket { n });
                    }
                }
                if !matches!(sign_hi, Sign::Below) {
                    hi = xi_hat + half;
                    sign_hi = objective_sign(problem, n, hi)?;
                }
            }
        }
    }

    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket at floating-point resolution
        }
        match objective_sign(problem, n, mid)? {
            Sign::Above => lo = mid,
            Sign::Below => hi = mid,
        }
    }
    Ok(LogLogCoord::new(0.5 * (lo + hi)))
}

/// One solved root with its deviation from the linear asymptotic.
#[derive(Debug, Clone, Copy)]
pub struct SparkPoint {
    pub n: u32,
    pub xi: f64,
    /// xi + n ln Lambda - xi(P(0)), which must tend to 0.
    pub residual: f64,
}

/// Solve the root for every n in the range and report residuals against
/// -n ln Lambda + xi(P(0)), with xi the chart of the inverted unperturbed map.
pub fn spark_sequence(
    problem: &SparkProblem<'_>,
    n_range: std::ops::RangeInclusive<u32>,
    tol: f64,
) -> Result<Vec<SparkPoint>> {
    if n_range.is_empty() {
        return Err(Error::domain("empty n range"));
    }
    let chart_tol = (0.1 * tol).min(1e-12);
    let xi_p0 = rectify_contracting_inverse_u(problem.model, -problem.p0.ln(), chart_tol)?;
    let ln_lambda = problem.model.lambda().ln();

    let ns: Vec<u32> = n_range.collect();
    ns.par_iter()
        .map(|&n| {
            let root = solve_spark(problem, n, tol)?;
            Ok(SparkPoint {
                n,
                xi: root.xi,
                residual: root.xi + (n as f64) * ln_lambda - xi_p0,
            })
        })
        .collect()
}

/// Interior-sequence entry: the root for n turns, on the xi-scale.
#[derive(Debug, Clone, Copy)]
pub struct IotaEntry {
    pub n: u32,
    pub xi: f64,
    pub residual: f64,
}

/// Exterior-sequence entry for arc point k after m turns.
#[derive(Debug, Clone, Copy)]
pub struct EpsEntry {
    pub k: u16,
    pub m: u32,
    pub xi: f64,
    pub residual: f64,
}

/// The interleaved connection sequences of one scenario, on the xi-scale.
#[derive(Debug, Clone)]
pub struct SparkTable {
    pub ln_lambda_e: f64,
    pub minus_ln_lambda_i: f64,
    pub n_arcs: u16,
    /// Interior entries, ascending n.
    pub iota: Vec<IotaEntry>,
    /// Exterior entries in traversal order: m ascending, k ascending within m.
    pub eps: Vec<EpsEntry>,
    /// Smallest m from which the interleaving order holds for all stored
    /// deeper m.
    pub m0: u32,
}

impl SparkTable {
    /// Strict interleaving check over the stored traversal: within each m
    /// the entries must be xi-increasing in k, and the last entry of band m
    /// must precede the first entry of band m+1.
    fn compute_m0(eps: &[EpsEntry], m_lo: u32) -> u32 {
        let mut worst_violation: Option<u32> = None;
        for w in eps.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.xi >= b.xi {
                // a violation at the boundary taints the earlier band
                let m = a.m.min(b.m);
                worst_violation = Some(worst_violation.map_or(m, |v| v.max(m)));
            }
        }
        match worst_violation {
            None => m_lo,
            Some(m) => m + 1,
        }
    }

    /// CSV serialization: side (iota|eps), k, n_or_m, xi_value, residual.
    /// Iota rows carry k = 0. Records are ordered by (side, k, index).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("side,k,n_or_m,xi_value,residual\n");
        for e in &self.iota {
            out.push_str(&format!(
                "iota,0,{},{},{}\n",
                e.n,
                fmt_g17(e.xi),
                fmt_g17(e.residual)
            ));
        }
        let mut by_k: Vec<&EpsEntry> = self.eps.iter().collect();
        by_k.sort_by_key(|e| (e.k, e.m));
        for e in by_k {
            out.push_str(&format!(
                "eps,{},{},{},{}\n",
                e.k,
                e.m,
                fmt_g17(e.xi),
                fmt_g17(e.residual)
            ));
        }
        out
    }
}

/// Generate the interior and exterior sequences of a scenario to the given
/// interior depth.
///
/// In synthetic mode the chart values are prescribed and the o(1) terms are
/// injected as r q^j; in model mode every entry is a solved root. The
/// exterior side is generated deep enough that every interior entry has an
/// exterior neighbor above it, which the arc-assignment step requires.
pub fn th_sparks(config: &THConfig, depth: u32, tol: f64) -> Result<SparkTable> {
    if depth < 1 {
        return Err(Error::config("depth must be at least 1"));
    }
    let ln_e = config.ln_lambda_e();
    let step_i = config.minus_ln_lambda_i();
    let n_arcs = config.n_arcs() as u16;

    match &config.models {
        None => {
            let pert = config.perturbation;
            let perturb = |j: u32| -> f64 {
                match pert {
                    Some(p) => p.r * p.q.powi(j as i32),
                    None => 0.0,
                }
            };
            let iota: Vec<IotaEntry> = (1..=depth)
                .map(|n| {
                    let r = perturb(n);
                    IotaEntry { n, xi: config.xi_i() + (n as f64) * step_i + r, residual: r }
                })
                .collect();
            let xi_iota_max = iota.last().unwrap().xi;
            let xi_e_min = config.xi_e()[0];
            let m_needed = ((xi_iota_max - xi_e_min) / ln_e).ceil() as u32 + 1;
            let m_max = depth.max(m_needed);

            let mut eps = Vec::with_capacity(m_max as usize * config.n_arcs());
            for m in 1..=m_max {
                let r = perturb(m);
                for (idx, &xi_ek) in config.xi_e().iter().enumerate() {
                    eps.push(EpsEntry {
                        k: (idx + 1) as u16,
                        m,
                        xi: xi_ek + (m as f64) * ln_e + r,
                        residual: r,
                    });
                }
            }
            let m0 = SparkTable::compute_m0(&eps, 1);
            Ok(SparkTable {
                ln_lambda_e: ln_e,
                minus_ln_lambda_i: step_i,
                n_arcs,
                iota,
                eps,
                m0,
            })
        }
        Some(att) => {
            // depth guard: predicted xi must stay inside the neg-log range
            let xi_deepest = config.xi_i() + (depth as f64) * step_i;
            if xi_deepest.exp() > 1e300 {
                return Err(Error::config(format!(
                    "depth {depth} exceeds the neg-log range in model mode"
                )));
            }
            let p_i = move |_: f64| att.x_i;
            let interior = SparkProblem::new(&att.interior, &p_i)?;
            let xi_i_chart = rectify_contracting_inverse_u(&att.interior, -att.x_i.ln(), 1e-12)?;
            let iota: Vec<IotaEntry> = (1..=depth)
                .into_par_iter()
                .map(|n| {
                    let root = solve_spark(&interior, n, tol)?;
                    Ok(IotaEntry {
                        n,
                        xi: root.xi,
                        residual: root.xi - (n as f64) * step_i - xi_i_chart,
                    })
                })
                .collect::<Result<_>>()?;

            let xi_iota_max = iota.last().unwrap().xi;
            let xi_e_min = config.xi_e()[0];
            let m_needed = ((xi_iota_max - xi_e_min) / ln_e).ceil() as u32 + 1;
            let m_max = depth.max(m_needed);
            if (config.xi_e()[config.n_arcs() - 1] + (m_max as f64) * ln_e).exp() > 1e300 {
                return Err(Error::config(format!(
                    "exterior depth {m_max} exceeds the neg-log range in model mode"
                )));
            }

            let mut jobs: Vec<(u16, u32, f64, f64)> = Vec::new();
            for (idx, &x_ek) in att.x_e.iter().enumerate() {
                let xi_ek_chart =
                    rectify_contracting_inverse_u(&att.exterior, -x_ek.ln(), 1e-12)?;
                for m in 1..=m_max {
                    jobs.push(((idx + 1) as u16, m, x_ek, xi_ek_chart));
                }
            }
            let mut eps: Vec<EpsEntry> = jobs
                .par_iter()
                .map(|&(k, m, x_ek, xi_chart)| {
                    let p_e = move |_: f64| x_ek;
                    let exterior = SparkProblem::new(&att.exterior, &p_e)?;
                    let root = solve_spark(&exterior, m, tol)?;
                    Ok(EpsEntry {
                        k,
                        m,
                        xi: root.xi,
                        residual: root.xi - (m as f64) * ln_e - xi_chart,
                    })
                })
                .collect::<Result<_>>()?;
            eps.sort_by_key(|e| (e.m, e.k));
            let m0 = SparkTable::compute_m0(&eps, 1);
            Ok(SparkTable {
                ln_lambda_e: ln_e,
                minus_ln_lambda_i: step_i,
                n_arcs,
                iota,
                eps,
                m0,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Perturbation;
    use crate::model::PowerLawModel;

    fn sqrt_additive() -> PowerLawModel {
        PowerLawModel::new(1.0, 0.5, 0.0, 1.0, true, 0.5).unwrap()
    }

    fn pure_half() -> PowerLawModel {
        PowerLawModel::pure(1.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn closed_form_pure_power_root() {
        // eps only enters as the initial condition: Delta_0^n(eps) = eps^(Lambda^n),
        // so ln(-ln eps_3) = 3 ln 2 + ln(ln 4); frozen with mpmath
        let model = pure_half();
        let p = |_: f64| 0.25;
        let problem = SparkProblem::new(&model, &p).unwrap();
        let root = solve_spark(&problem, 3, 1e-12).unwrap();
        assert!((root.xi - 2.406_075_801_658_117).abs() < 1e-11, "xi = {}", root.xi);
        // representable: eps_3 ~ 1.5e-5
        let eps3 = root.to_x().finite().unwrap();
        assert!((eps3.powf(1.0 / 8.0) - 0.25).abs() < 1e-7);
    }

    #[test]
    fn quadratic_closed_form_root() {
        // sqrt(eps) + eps = 1/4 has the root ((sqrt 2 - 1)/2)^2
        let model = sqrt_additive();
        let p = |_: f64| 0.25;
        let problem = SparkProblem::new(&model, &p).unwrap();
        let root = solve_spark(&problem, 1, 1e-12).unwrap();
        let expect = 0.042_893_218_813_452_475f64;
        assert!((root.xi - (-(expect.ln())).ln()).abs() < 1e-11);
    }

    #[test]
    fn bracketing_threshold_is_measured() {
        // a target close to delta needs no depth at all; the measured
        // threshold is small but the call reports it instead of assuming it
        let model = sqrt_additive();
        let p = |_: f64| 0.4;
        let problem = SparkProblem::new(&model, &p).unwrap();
        let n_min = min_bracketed_n(&problem, 1e-10, 50).unwrap();
        assert!(n_min >= 1);
        assert!(solve_spark(&problem, n_min, 1e-10).is_ok());
    }

    #[test]
    fn n_zero_rejected() {
        let model = pure_half();
        let p = |_: f64| 0.25;
        let problem = SparkProblem::new(&model, &p).unwrap();
        assert!(matches!(solve_spark(&problem, 0, 1e-10), Err(Error::Domain(_))));
    }

    #[test]
    fn target_outside_basin_rejected() {
        let model = pure_half();
        let p = |_: f64| 0.7; // >= delta
        assert!(SparkProblem::new(&model, &p).is_err());
    }

    #[test]
    fn sub_representable_roots_stay_exact() {
        // closed form holds to n = 50: xi_n = n ln 2 + ln(ln 4)
        let model = pure_half();
        let p = |_: f64| 0.25;
        let problem = SparkProblem::new(&model, &p).unwrap();
        let ln4 = 4.0f64.ln();
        for &n in &[10u32, 25, 50] {
            let root = solve_spark(&problem, n, 1e-12).unwrap();
            let expect = (n as f64) * 2.0f64.ln() + ln4.ln();
            assert!((root.xi - expect).abs() < 1e-10, "n = {n}");
            if n >= 25 {
                assert!(root.to_x().is_underflow());
            }
        }
    }

    #[test]
    fn sequence_residuals_vanish_for_closed_form() {
        let model = pure_half();
        let p = |_: f64| 0.25;
        let problem = SparkProblem::new(&model, &p).unwrap();
        let points = spark_sequence(&problem, 1..=30, 1e-12).unwrap();
        for pt in &points {
            assert!(pt.residual.abs() < 1e-10, "n = {}: {}", pt.n, pt.residual);
        }
        // xi strictly increases with increments -> ln 2
        for w in points.windows(2) {
            let inc = w[1].xi - w[0].xi;
            assert!((inc - 2.0f64.ln()).abs() < 1e-3);
        }
    }

    #[test]
    fn perturbed_sequence_residuals_decay() {
        let model = sqrt_additive();
        let p = |_: f64| 0.25;
        let problem = SparkProblem::new(&model, &p).unwrap();
        let points = spark_sequence(&problem, 2..=12, 1e-12).unwrap();
        // residuals shrink fast for the additive sqrt family
        let first = points.first().unwrap().residual.abs();
        let last = points.last().unwrap().residual.abs();
        assert!(first > 1e-9, "first residual unexpectedly tiny: {first}");
        assert!(last < 1e-9, "last residual too large: {last}");
    }

    #[test]
    fn perturbation_sandwich_at_roots() {
        // at the solved root: 0 < Delta_eps^n(eps_n) - Delta_0^n(eps_n)
        //                       < eps_n^(1 - Lambda'), Lambda' = 3/4,
        // hence Delta_0^n(eps_n) lands on P(0) up to that margin.
        // Restricted to n where the difference is resolvable in doubles.
        let model = sqrt_additive();
        let p = |_: f64| 0.25;
        let problem = SparkProblem::new(&model, &p).unwrap();
        let lambda_prime = 0.75;
        for n in 1..=5u32 {
            let eps = solve_spark(&problem, n, 1e-13)
                .unwrap()
                .to_x()
                .finite()
                .unwrap();
            let mut with_eps = eps;
            let mut without = eps;
            for _ in 0..n {
                with_eps = model.eval(eps, with_eps);
                without = model.eval(0.0, without);
            }
            let diff = with_eps - without;
            let bound = eps.powf(1.0 - lambda_prime);
            assert!(diff > 0.0, "n = {n}: difference not positive: {diff:e}");
            assert!(diff < bound, "n = {n}: {diff:e} >= {bound:e}");
            // the unperturbed orbit lands on P(0) within the same margin
            assert!((without - 0.25).abs() < bound, "n = {n}");
        }
    }

    #[test]
    fn synthetic_table_reference() {
        // zero perturbation: iota xi = 0.3 + n ln 2, eps xi = m ln 1.25 + {0, 0.1}
        let cfg = THConfig::new(0.5, 1.25, vec![0.0, 0.1], 0.3).unwrap();
        let table = th_sparks(&cfg, 100, 1e-10).unwrap();
        assert_eq!(table.m0, 1);
        let ln2 = 2.0f64.ln();
        let ln125 = 1.25f64.ln();
        for e in table.iota.iter().take(5) {
            assert!((e.xi - (0.3 + e.n as f64 * ln2)).abs() < 1e-12);
            assert_eq!(e.residual, 0.0);
        }
        for e in table.eps.iter().take(6) {
            let base = if e.k == 1 { 0.0 } else { 0.1 };
            assert!((e.xi - (base + e.m as f64 * ln125)).abs() < 1e-12);
        }
        // exterior side covers the deepest interior entry
        assert!(table.eps.last().unwrap().xi >= table.iota.last().unwrap().xi);
    }

    #[test]
    fn synthetic_interleaving_with_decaying_perturbation() {
        let cfg = THConfig::new(0.5, 1.25, vec![0.0, 0.1], 0.3)
            .unwrap()
            .with_perturbation(Perturbation { r: 1.0, q: 0.5 })
            .unwrap();
        let table = th_sparks(&cfg, 50, 1e-10).unwrap();
        // r = 1.0 breaks the order early; it must recover at a finite m0
        assert!(table.m0 > 1, "m0 = {}", table.m0);
        // recheck the certificate by brute force
        for w in table.eps.windows(2) {
            if w[0].m >= table.m0 && w[1].m >= table.m0 {
                assert!(w[0].xi < w[1].xi);
            }
        }
    }

    #[test]
    fn decreasing_sequences_on_x_scale() {
        let cfg = THConfig::new(0.5, 1.25, vec![0.0, 0.1], 0.3).unwrap();
        let table = th_sparks(&cfg, 40, 1e-10).unwrap();
        // xi increasing means the underlying eps/iota values strictly decrease
        for w in table.iota.windows(2) {
            assert!(w[0].xi < w[1].xi);
        }
        for k in 1..=2u16 {
            let band: Vec<f64> =
                table.eps.iter().filter(|e| e.k == k).map(|e| e.xi).collect();
            for w in band.windows(2) {
                assert!(w[0] < w[1]);
            }
        }
    }

    #[test]
    fn model_mode_matches_synthetic_from_closed_form_charts() {
        // two pure-power families: charts are exactly ln(-ln x), so the
        // synthetic table built from those chart values must agree
        let json = r#"{
            "Lambda_i": 0.5, "Lambda_e": 2.0,
            "models": {
                "interior": {"kind": "power_law", "C": 1.0, "Lambda": 0.5, "delta": 0.5},
                "exterior": {"kind": "power_law", "C": 1.0, "Lambda": 0.5, "delta": 0.5},
                "x_I": 0.1,
                "x_E": [0.2, 0.05]
            }
        }"#;
        let spec: crate::config::THConfigSpec = serde_json::from_str(json).unwrap();
        let cfg = THConfig::from_spec(&spec).unwrap();
        let model_table = th_sparks(&cfg, 12, 1e-12).unwrap();

        let synthetic_cfg = THConfig::new(
            0.5,
            2.0,
            cfg.xi_e().to_vec(),
            cfg.xi_i(),
        )
        .unwrap();
        let synth_table = th_sparks(&synthetic_cfg, 12, 1e-12).unwrap();

        for (a, b) in model_table.iota.iter().zip(&synth_table.iota) {
            assert!((a.xi - b.xi).abs() < 1e-8, "n = {}: {} vs {}", a.n, a.xi, b.xi);
        }
        for (a, b) in model_table.eps.iter().zip(&synth_table.eps) {
            assert_eq!((a.k, a.m), (b.k, b.m));
            assert!((a.xi - b.xi).abs() < 1e-8, "k={} m={}", a.k, a.m);
        }
    }

    #[test]
    fn csv_shape() {
        let cfg = THConfig::new(0.5, 1.25, vec![0.0, 0.1], 0.3).unwrap();
        let table = th_sparks(&cfg, 3, 1e-10).unwrap();
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "side,k,n_or_m,xi_value,residual");
        let first = lines.next().unwrap();
        assert!(first.starts_with("iota,0,1,"));
        assert_eq!(first.split(',').count(), 5);
    }
}
