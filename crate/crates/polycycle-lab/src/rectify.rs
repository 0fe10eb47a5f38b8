//! Rectifying charts: the unique continuous xi with xi(Delta(x)) = xi(x) + ln Lambda
//! and xi(x) = ln(-ln x) + O(1/(-ln x)).
//!
//! For an expanding-exponent map (Lambda > 1, contracting to 0) the chart is
//! the limit of xi_n(x) = ln(-ln Delta^n(x)) - n ln Lambda. For Lambda < 1
//! families the same machinery runs on the numerically inverted map, whose
//! exponent is 1/Lambda.
//!
//! All iteration happens on the u = -ln x scale. The increment constant of
//! the tail bound is not known a priori for user models; it is estimated
//! online as the running max of |xi_{n+1} - xi_n| * (-ln Delta^n(x)) and the
//! geometric-series tail bound uses this estimate times a safety factor.

use crate::error::{Error, Result};
use crate::model::MapFamily;

/// Tuning knobs for the chart limit. The defaults match the documented
/// contract: step budget 10_000, measured-constant safety factor 2.
#[derive(Debug, Clone, Copy)]
pub struct RectifyOptions {
    pub step_budget: usize,
    pub safety: f64,
    pub min_steps: usize,
}

impl Default for RectifyOptions {
    fn default() -> Self {
        RectifyOptions { step_budget: 10_000, safety: 2.0, min_steps: 4 }
    }
}

struct LimitOutcome {
    xi: f64,
    tail_constant: f64,
}

/// Shared limit loop. `stepper` advances u one step of the contracting-to-0
/// dynamic (u strictly grows in the convergence regime); `lambda_big` > 1 is
/// its exponent; `max_u` caps the faithful evaluation depth.
fn rectify_loop(
    stepper: &dyn Fn(f64) -> Result<f64>,
    lambda_big: f64,
    max_u: f64,
    u0: f64,
    tol: f64,
    opts: &RectifyOptions,
) -> Result<LimitOutcome> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let ln_l = lambda_big.ln();
    let sqrt_l = lambda_big.sqrt();
    let geo = sqrt_l / (sqrt_l - 1.0);

    let mut u = u0;
    let mut xi = u0.ln();
    let mut c_meas = 0.0f64;
    let mut shrink_streak = 0usize;

    for n in 0..opts.step_budget {
        if u > max_u {
            let achieved = opts.safety * c_meas * geo / u;
            return Err(Error::PrecisionExhausted { achieved });
        }
        let u_next = stepper(u)?;
        if !(u_next.is_finite() && u_next > 0.0) {
            return Err(Error::NonContracting { steps: n + 1 });
        }
        let xi_next = u_next.ln() - ((n + 1) as f64) * ln_l;
        c_meas = c_meas.max((xi_next - xi).abs() * u);

        let tail = opts.safety * c_meas * geo / u_next;
        let geometric_regime =
            u_next >= sqrt_l * u && u_next * ln_l >= 2.0 * opts.safety * c_meas;
        if n + 1 >= opts.min_steps && geometric_regime && tail < tol {
            return Ok(LimitOutcome { xi: xi_next, tail_constant: c_meas });
        }

        if u_next <= u {
            shrink_streak += 1;
            if shrink_streak >= 64 {
                return Err(Error::NonContracting { steps: n + 1 });
            }
        } else {
            shrink_streak = 0;
        }
        u = u_next;
        xi = xi_next;
    }
    Err(Error::NonContracting { steps: opts.step_budget })
}

/// Chart value xi(x) for a map with Lambda > 1, from u = -ln x.
pub fn rectify_u(map: &dyn MapFamily, u: f64, tol: f64) -> Result<f64> {
    rectify_u_with(map, u, tol, &RectifyOptions::default()).map(|o| o.xi)
}

fn rectify_u_with(
    map: &dyn MapFamily,
    u: f64,
    tol: f64,
    opts: &RectifyOptions,
) -> Result<LimitOutcome> {
    if !(map.lambda() > 1.0) {
        return Err(Error::domain(format!(
            "rectify needs Lambda > 1, got {}; use rectify_contracting_inverse",
            map.lambda()
        )));
    }
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::domain(format!("u = -ln x must be positive, got {u}")));
    }
    let stepper = |w: f64| Ok(map.step_u(f64::INFINITY, w));
    rectify_loop(&stepper, map.lambda(), map.max_u(), u, tol, opts)
}

/// Chart value xi(x) for a map with Lambda > 1.
///
/// ```
/// use polycycle_lab::{rectify, PowerLawModel};
///
/// // Delta(x) = 2 x^2 is conjugate to xi -> xi + ln 2 in the chart
/// // xi(x) = ln(-ln x - ln 2)
/// let map = PowerLawModel::pure(2.0, 2.0, 0.45).unwrap();
/// let xi = rectify(&map, 0.1, 1e-11).unwrap();
/// let expect = (-(0.1f64).ln() - 2.0f64.ln()).ln();
/// assert!((xi - expect).abs() < 1e-10);
/// ```
pub fn rectify(map: &dyn MapFamily, x: f64, tol: f64) -> Result<f64> {
    check_chart_domain(map, x)?;
    rectify_u(map, -x.ln(), tol)
}

/// Chart for a contracting-exponent family (Lambda < 1): runs the limit on
/// the numerically inverted map (exponent 1/Lambda). The resulting chart
/// satisfies xi(Delta(x)) = xi(x) + ln Lambda with ln Lambda < 0.
pub fn rectify_contracting_inverse(map: &dyn MapFamily, x: f64, tol: f64) -> Result<f64> {
    check_chart_domain(map, x)?;
    rectify_contracting_inverse_u(map, -x.ln(), tol)
}

/// u-scale entry point of [`rectify_contracting_inverse`].
pub fn rectify_contracting_inverse_u(map: &dyn MapFamily, u: f64, tol: f64) -> Result<f64> {
    rectify_contracting_inverse_u_with(map, u, tol, &RectifyOptions::default()).map(|o| o.xi)
}

fn rectify_contracting_inverse_u_with(
    map: &dyn MapFamily,
    u: f64,
    tol: f64,
    opts: &RectifyOptions,
) -> Result<LimitOutcome> {
    if !(map.lambda() < 1.0) {
        return Err(Error::domain(format!(
            "inverse route needs Lambda < 1, got {}; use rectify",
            map.lambda()
        )));
    }
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::domain(format!("u = -ln x must be positive, got {u}")));
    }
    let stepper = |w: f64| invert_step_u(map, w);
    rectify_loop(&stepper, 1.0 / map.lambda(), map.max_u(), u, tol, opts)
}

/// Solve step_u(w) = target for w by monotone bisection on the u-scale,
/// unless the model provides a closed-form inverse.
pub(crate) fn invert_step_u(map: &dyn MapFamily, target: f64) -> Result<f64> {
    if let Some(w) = map.inverse_step_u(target) {
        return Ok(w);
    }
    let lambda = map.lambda();
    let f = |w: f64| map.step_u(f64::INFINITY, w) - target;

    let center = target / lambda;
    let mut half = (0.1 * center.abs()).max(2.0);
    let mut lo = (center - half).max(f64::MIN_POSITIVE);
    let mut hi = center + half;
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    let mut tries = 0;
    // widen until f(lo) < 0 < f(hi); f is increasing in w
    while !(f_lo < 0.0 && f_hi > 0.0) {
        tries += 1;
        if tries > 60 || !f_lo.is_finite() || !f_hi.is_finite() {
            return Err(Error::InversionFailure { target_u: target });
        }
        half *= 2.0;
        if f_lo >= 0.0 {
            lo = (center - half).max(f64::MIN_POSITIVE);
            f_lo = f(lo);
        }
        if f_hi <= 0.0 {
            hi = center + half;
            f_hi = f(hi);
        }
    }
    for _ in 0..200 {
        if hi - lo <= 4e-16 * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if !fm.is_finite() {
            return Err(Error::InversionFailure { target_u: target });
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_chart_domain(map: &dyn MapFamily, x: f64) -> Result<()> {
    if !(x > 0.0 && x < map.delta()) {
        return Err(Error::domain(format!(
            "x must lie in (0, {}), got {x}",
            map.delta()
        )));
    }
    Ok(())
}

/// A built chart: immutable, shareable, evaluates xi at any admissible point.
pub struct RectifyingChart<'a> {
    map: &'a dyn MapFamily,
    inverse_route: bool,
    /// The conjugacy shift: ln Lambda of the source map (negative on the
    /// inverse route).
    pub ln_lambda: f64,
    /// Measured increment constant from the build probe (the C of the
    /// geometric tail bound).
    pub tail_constant: f64,
    pub tol: f64,
}

impl<'a> RectifyingChart<'a> {
    /// Build a chart for `map`, choosing the route from its exponent.
    /// Probes one deep point to record the measured tail constant.
    pub fn build(map: &'a dyn MapFamily, tol: f64) -> Result<Self> {
        let lambda = map.lambda();
        if lambda == 1.0 {
            return Err(Error::domain("Lambda = 1 has no rectifying chart of this form"));
        }
        let inverse_route = lambda < 1.0;
        let u_probe = -(map.delta() * 1e-3).ln();
        let opts = RectifyOptions::default();
        let outcome = if inverse_route {
            rectify_contracting_inverse_u_with(map, u_probe, tol, &opts)?
        } else {
            rectify_u_with(map, u_probe, tol, &opts)?
        };
        Ok(RectifyingChart {
            map,
            inverse_route,
            ln_lambda: lambda.ln(),
            tail_constant: outcome.tail_constant,
            tol,
        })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        check_chart_domain(self.map, x)?;
        self.eval_u(-x.ln())
    }

    pub fn eval_u(&self, u: f64) -> Result<f64> {
        if self.inverse_route {
            rectify_contracting_inverse_u(self.map, u, self.tol)
        } else {
            rectify_u(self.map, u, self.tol)
        }
    }

    /// |xi(Delta(x)) - xi(x) - ln Lambda|.
    pub fn residual(&self, x: f64) -> Result<f64> {
        chart_residual(self, x)
    }
}

/// Conjugacy defect of a chart at x: |xi(Delta(x)) - xi(x) - ln Lambda|.
/// Both x and Delta(x) must lie in the chart domain.
pub fn chart_residual(chart: &RectifyingChart<'_>, x: f64) -> Result<f64> {
    check_chart_domain(chart.map, x)?;
    let u = -x.ln();
    let u_image = chart.map.step_u(f64::INFINITY, u);
    if !(u_image.is_finite() && u_image > 0.0) {
        return Err(Error::domain(format!("Delta(x) left (0, 1) at x = {x}")));
    }
    let xi_x = chart.eval_u(u)?;
    let xi_dx = chart.eval_u(u_image)?;
    Ok((xi_dx - xi_x - chart.ln_lambda).abs())
}

/// Closed-form chart for the affine-in-u family Delta(x) = C x^Lambda:
/// xi(x) = ln(-ln x + ln C / (1 - Lambda)), valid on either side of
/// Lambda = 1 wherever the argument is positive.
pub fn affine_chart_u(c_mult: f64, lambda: f64, u: f64) -> Option<f64> {
    let shifted = u + c_mult.ln() / (1.0 - lambda);
    if shifted > 0.0 {
        Some(shifted.ln())
    } else {
        None
    }
}
