//! One-dimensional map families Delta_eps(x) on (0, delta), evaluated on the
//! x-scale where representable and on the u = -ln x scale everywhere else.
//!
//! The downstream machinery (rectifier, sparkler) only consumes the contract
//! certified by [`crate::certify::certify_estimates`]: Delta_eps(x) behaves
//! like x^Lambda up to bounded multiplicative constants, with a controlled
//! eps-derivative. Any model satisfying that contract exercises the full
//! pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scale::NEG_LOG_MAX;

/// A parametrized map family Delta_eps(x) on (0, delta).
///
/// `step_u` is the workhorse: the whole pipeline iterates on the u = -ln x
/// scale, so a model that wants to run at depth (sub-representable x or eps)
/// must provide an exact u-scale form and report `max_u` = infinity.
pub trait MapFamily: Sync {
    /// Power-law exponent Lambda. Lambda < 1 for sparkler use, Lambda > 1
    /// for rectifier use.
    fn lambda(&self) -> f64;

    /// Domain radius delta in (0, 1).
    fn delta(&self) -> f64;

    /// Raw map value Delta_eps(x). No domain checks; see [`eval_map`].
    fn eval(&self, eps: f64, x: f64) -> f64;

    /// Partial derivative with respect to x.
    fn dx(&self, eps: f64, x: f64) -> f64;

    /// Partial derivative with respect to eps.
    fn deps(&self, eps: f64, x: f64) -> f64;

    /// u-scale action: given u_eps = -ln eps (INFINITY encodes eps = 0) and
    /// u = -ln x, return -ln Delta_eps(x).
    ///
    /// A non-finite or non-positive result means the image left (0, 1).
    /// The default route goes through `eval` and is only faithful while x
    /// and eps are representable.
    fn step_u(&self, u_eps: f64, u: f64) -> f64 {
        let eps = if u_eps > NEG_LOG_MAX { 0.0 } else { (-u_eps).exp() };
        -self.eval(eps, (-u).exp()).ln()
    }

    /// Largest u this model evaluates faithfully. Models with an exact
    /// u-scale `step_u` return infinity.
    fn max_u(&self) -> f64 {
        NEG_LOG_MAX
    }

    /// Closed-form u-scale inverse of the eps = 0 map, when available:
    /// given w = -ln Delta_0(x), return u = -ln x.
    fn inverse_step_u(&self, _w: f64) -> Option<f64> {
        None
    }

    /// True when Delta_eps does not depend on eps at all (eps enters only as
    /// an initial condition downstream). Such models are exempt from the
    /// D_eps bounds of the certification contract.
    fn eps_independent(&self) -> bool {
        false
    }
}

/// Checked evaluation of Delta_eps(x) inside the angle 0 <= eps <= x < delta.
pub fn eval_map(model: &dyn MapFamily, eps: f64, x: f64) -> Result<f64> {
    check_angle(model, eps, x)?;
    let y = model.eval(eps, x);
    if y > 0.0 && y.is_finite() {
        Ok(y)
    } else {
        Err(Error::domain(format!(
            "map image must be positive, got Delta_{eps}({x}) = {y}"
        )))
    }
}

/// n-fold iterate Delta_eps^n(x); n = 0 returns x. Every intermediate
/// iterate must remain inside (0, delta).
pub fn iterate_map(model: &dyn MapFamily, eps: f64, x: f64, n: usize) -> Result<f64> {
    check_angle(model, eps, x)?;
    let delta = model.delta();
    let mut y = x;
    for step in 1..=n {
        y = model.eval(eps, y);
        if !(y > 0.0 && y < delta && y.is_finite()) {
            return Err(Error::EscapedDomain { step, delta });
        }
    }
    Ok(y)
}

fn check_angle(model: &dyn MapFamily, eps: f64, x: f64) -> Result<()> {
    if !(eps >= 0.0) {
        return Err(Error::domain(format!("eps must be >= 0, got {eps}")));
    }
    if !(x > 0.0 && x < model.delta()) {
        return Err(Error::domain(format!(
            "x must lie in (0, {}), got {x}",
            model.delta()
        )));
    }
    if eps > x {
        return Err(Error::domain(format!(
            "outside the angle eps <= x: eps = {eps}, x = {x}"
        )));
    }
    Ok(())
}

/// Concrete testbed family Delta_eps(x) = C x^Lambda (1 + a x^beta) + eps
/// (the eps term only when `additive_eps`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawModel {
    pub c_mult: f64,
    pub lambda: f64,
    pub a: f64,
    pub beta: f64,
    pub additive_eps: bool,
    pub delta: f64,
}

impl PowerLawModel {
    pub fn new(
        c_mult: f64,
        lambda: f64,
        a: f64,
        beta: f64,
        additive_eps: bool,
        delta: f64,
    ) -> Result<Self> {
        if !(c_mult > 0.0 && c_mult.is_finite()) {
            return Err(Error::config(format!("C must be positive, got {c_mult}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::config(format!("Lambda must be positive, got {lambda}")));
        }
        if !(beta > 0.0) {
            return Err(Error::config(format!("beta must be positive, got {beta}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::config(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(PowerLawModel { c_mult, lambda, a, beta, additive_eps, delta })
    }

    /// Pure power Delta(x) = C x^Lambda without an eps term.
    pub fn pure(c_mult: f64, lambda: f64, delta: f64) -> Result<Self> {
        Self::new(c_mult, lambda, 0.0, 1.0, false, delta)
    }

    /// ln(1 + a x^beta) evaluated as ln1p(a exp(-beta u)).
    fn ln_correction(&self, u: f64) -> f64 {
        if self.a == 0.0 {
            0.0
        } else {
            (self.a * (-self.beta * u).exp()).ln_1p()
        }
    }
}

impl MapFamily for PowerLawModel {
    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn delta(&self) -> f64 {
        self.delta
    }

    fn eval(&self, eps: f64, x: f64) -> f64 {
        let core = self.c_mult * x.powf(self.lambda) * (1.0 + self.a * x.powf(self.beta));
        if self.additive_eps {
            core + eps
        } else {
            core
        }
    }

    fn dx(&self, _eps: f64, x: f64) -> f64 {
        let xb = x.powf(self.beta);
        self.c_mult
            * x.powf(self.lambda - 1.0)
            * (self.lambda * (1.0 + self.a * xb) + self.a * self.beta * xb)
    }

    fn deps(&self, _eps: f64, _x: f64) -> f64 {
        if self.additive_eps {
            1.0
        } else {
            0.0
        }
    }

    fn step_u(&self, u_eps: f64, u: f64) -> f64 {
        // -ln of C x^Lambda (1 + a x^beta), exact affine form in u
        let core = self.lambda * u - self.c_mult.ln() - self.ln_correction(u);
        if !self.additive_eps || u_eps == f64::INFINITY {
            return core;
        }
        // -ln(exp(-core) + exp(-u_eps)) without leaving the u-scale
        let lo = core.min(u_eps);
        let gap = (core - u_eps).abs();
        lo - (-gap).exp().ln_1p()
    }

    fn max_u(&self) -> f64 {
        f64::INFINITY
    }

    fn inverse_step_u(&self, w: f64) -> Option<f64> {
        if self.a == 0.0 {
            Some((w + self.c_mult.ln()) / self.lambda)
        } else {
            None
        }
    }

    fn eps_independent(&self) -> bool {
        !self.additive_eps
    }
}

fn default_beta() -> f64 {
    1.0
}

/// JSON model specification.
///
/// `{"kind": "power_law", "C": 1.0, "Lambda": 0.5, "a": 0.0, "beta": 1.0,
///   "additive_eps": true, "delta": 0.5}`
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ModelSpec {
    #[serde(rename = "power_law")]
    PowerLaw {
        #[serde(rename = "C")]
        c: f64,
        #[serde(rename = "Lambda")]
        lambda: f64,
        #[serde(default)]
        a: f64,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        additive_eps: bool,
        delta: f64,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<PowerLawModel> {
        match *self {
            ModelSpec::PowerLaw { c, lambda, a, beta, additive_eps, delta } => {
                PowerLawModel::new(c, lambda, a, beta, additive_eps, delta)
            }
        }
    }

    pub fn of(model: &PowerLawModel) -> Self {
        ModelSpec::PowerLaw {
            c: model.c_mult,
            lambda: model.lambda,
            a: model.a,
            beta: model.beta,
            additive_eps: model.additive_eps,
            delta: model.delta,
        }
    }
}

/// The models the crate ships with, exercised wholesale by the certification
/// suite. Names are stable identifiers used in reports.
pub fn shipped_models() -> Vec<(&'static str, PowerLawModel)> {
    vec![
        // sparkler workhorse: Delta_eps(x) = sqrt(x) + eps
        ("sqrt-additive", PowerLawModel::new(1.0, 0.5, 0.0, 1.0, true, 0.5).unwrap()),
        // perturbed sparkler model
        ("sqrt-perturbed", PowerLawModel::new(1.0, 0.5, 0.1, 1.0, true, 0.5).unwrap()),
        // eps-independent pure power (eps enters only as an initial condition)
        ("pure-power-half", PowerLawModel::pure(1.0, 0.5, 0.5).unwrap()),
        // rectifier testbed: Delta(x) = 2 x^2, contracting to 0 below x = 1/2
        ("double-square", PowerLawModel::pure(2.0, 2.0, 0.45).unwrap()),
        // perturbed rectifier testbed
        ("square-perturbed", PowerLawModel::new(1.5, 2.0, 0.1, 1.0, false, 0.4).unwrap()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt_model() -> PowerLawModel {
        PowerLawModel::new(1.0, 0.5, 0.0, 1.0, true, 0.5).unwrap()
    }

    #[test]
    fn eval_reference_points() {
        let m = sqrt_model();
        assert_eq!(eval_map(&m, 0.0, 0.25).unwrap(), 0.5);
        assert!((eval_map(&m, 0.01, 0.25).unwrap() - 0.51).abs() < 1e-15);

        let double = PowerLawModel::pure(2.0, 2.0, 0.45).unwrap();
        assert!((eval_map(&double, 0.0, 0.1).unwrap() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_outside_the_angle() {
        let m = sqrt_model();
        assert!(matches!(eval_map(&m, 0.3, 0.25), Err(Error::Domain(_))));
        assert!(matches!(eval_map(&m, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(eval_map(&m, 0.0, 0.6), Err(Error::Domain(_))));
        assert!(matches!(eval_map(&m, -0.1, 0.25), Err(Error::Domain(_))));
    }

    #[test]
    fn iterate_closed_forms() {
        // pure power Lambda = 1/2: Delta_0^3(x) = x^(1/8)
        let m = PowerLawModel::pure(1.0, 0.5, 0.5).unwrap();
        let x = 2.0f64.powi(-16);
        assert!((iterate_map(&m, 0.0, x, 3).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(iterate_map(&m, 0.0, 0.1, 0).unwrap(), 0.1);

        // Lambda = 2, C = 1: Delta^4(x) = x^16; delta large enough to hold 0.5
        let sq = PowerLawModel::pure(1.0, 2.0, 0.6).unwrap();
        let got = iterate_map(&sq, 0.0, 0.5, 4).unwrap();
        assert!((got - 0.5f64.powi(16)).abs() < 1e-19);
        assert!((got - 1.52587890625e-5).abs() < 1e-17);
    }

    #[test]
    fn iterate_names_first_escape() {
        // sqrt iterates grow: from 0.4 the first iterate 0.632... leaves (0, 0.5)
        let m = sqrt_model();
        match iterate_map(&m, 0.0, 0.4, 3) {
            Err(Error::EscapedDomain { step, .. }) => assert_eq!(step, 1),
            other => panic!("expected EscapedDomain, got {other:?}"),
        }
    }

    #[test]
    fn step_u_matches_eval_when_representable() {
        let m = PowerLawModel::new(1.3, 0.5, 0.08, 0.7, true, 0.5).unwrap();
        for &x in &[1e-8, 1e-4, 0.01, 0.2] {
            for &eps in &[0.0f64, x * 0.5, x] {
                let u_eps = if eps == 0.0 { f64::INFINITY } else { -eps.ln() };
                let direct = -m.eval(eps, x).ln();
                let stepped = m.step_u(u_eps, -x.ln());
                assert!(
                    (direct - stepped).abs() <= 1e-13 * direct.abs().max(1.0),
                    "x={x} eps={eps}: {direct} vs {stepped}"
                );
            }
        }
    }

    #[test]
    fn step_u_handles_sub_representable_eps() {
        let m = sqrt_model();
        // eps with u_eps = 1e6 is far below double range; orbit from x = eps
        let u_eps = 1e6;
        let mut u = u_eps;
        for _ in 0..12 {
            u = m.step_u(u_eps, u);
        }
        // after 12 halvings the sqrt term dominates: u ~ u_eps / 2^12
        assert!((u - u_eps / 4096.0).abs() < 1.0);
    }

    #[test]
    fn additive_difference_is_exactly_eps() {
        let m = sqrt_model();
        for &x in &[0.01, 0.1, 0.3] {
            for &eps in &[1e-6, 1e-3, 0.01] {
                // the formula difference is eps; the computed one is off by
                // at most the rounding of a single addition
                let diff = m.eval(eps, x) - m.eval(0.0, x);
                assert!((diff - eps).abs() <= f64::EPSILON * m.eval(0.0, x));
                assert_eq!(m.deps(eps, x), 1.0);
            }
        }
    }

    #[test]
    fn model_spec_round_trip() {
        let json = r#"{"kind": "power_law", "C": 1.5, "Lambda": 0.5, "a": 0.1,
                       "beta": 1.0, "additive_eps": true, "delta": 0.5}"#;
        let spec: ModelSpec = serde_json::from_str(json).unwrap();
        let model = spec.build().unwrap();
        assert_eq!(model.c_mult, 1.5);
        assert_eq!(model.lambda, 0.5);
        assert!(model.additive_eps);
        let spec2: ModelSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, spec2);
    }

    #[test]
    fn model_spec_defaults_and_validation() {
        let spec: ModelSpec =
            serde_json::from_str(r#"{"kind": "power_law", "C": 1.0, "Lambda": 2.0, "delta": 0.4}"#)
                .unwrap();
        let model = spec.build().unwrap();
        assert_eq!(model.a, 0.0);
        assert_eq!(model.beta, 1.0);
        assert!(!model.additive_eps);
        assert!(model.eps_independent());

        assert!(PowerLawModel::new(-1.0, 0.5, 0.0, 1.0, true, 0.5).is_err());
        assert!(PowerLawModel::new(1.0, 0.0, 0.0, 1.0, true, 0.5).is_err());
        assert!(PowerLawModel::new(1.0, 0.5, 0.0, 1.0, true, 1.5).is_err());
    }
}
