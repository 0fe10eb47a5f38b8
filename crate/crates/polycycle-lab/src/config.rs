//! Scenario configuration: saddle exponents, marked chart values on the
//! cross-section, and optional concrete map attachments.
//!
//! A scenario is described either synthetically (chart values prescribed, an
//! injected decaying perturbation standing in for the o(1) terms) or by
//! attaching concrete map families from which the chart values are derived.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MapFamily, ModelSpec, PowerLawModel};
use crate::rectify::rectify_contracting_inverse_u;

/// Injected stand-in for the o(1) terms of the synthetic sequences:
/// entry j receives r * q^j.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Perturbation {
    pub r: f64,
    pub q: f64,
}

/// Concrete map attachments for model mode. Both families are the unified
/// contracting-exponent maps of the two connection cases: `interior` is the
/// loop map (exponent Lambda_i < 1), `exterior` is the inverse polycycle map
/// (exponent 1/Lambda_e < 1). Targets are cross-section points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelAttachmentSpec {
    pub interior: ModelSpec,
    pub exterior: ModelSpec,
    #[serde(rename = "x_I")]
    pub x_i: f64,
    #[serde(rename = "x_E")]
    pub x_e: Vec<f64>,
}

/// Raw JSON shape of a scenario configuration. Exactly one of
/// (lambda, mu) or (Lambda_i, Lambda_e) fixes the exponents.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct THConfigSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(rename = "Lambda_i", default, skip_serializing_if = "Option::is_none")]
    pub lambda_i: Option<f64>,
    #[serde(rename = "Lambda_e", default, skip_serializing_if = "Option::is_none")]
    pub lambda_e: Option<f64>,
    #[serde(rename = "xi_E", default, skip_serializing_if = "Option::is_none")]
    pub xi_e: Option<Vec<f64>>,
    #[serde(rename = "xi_I", default, skip_serializing_if = "Option::is_none")]
    pub xi_i: Option<f64>,
    #[serde(rename = "xi_I_list", default, skip_serializing_if = "Option::is_none")]
    pub xi_i_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub models: Option<ModelAttachmentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
}

/// Built model attachments.
#[derive(Debug, Clone)]
pub struct ModelAttachments {
    pub interior: PowerLawModel,
    pub exterior: PowerLawModel,
    pub x_i: f64,
    pub x_e: Vec<f64>,
}

/// Validated scenario: exponents Lambda_i < 1 < Lambda_e, marked chart
/// values in fundamental-domain order, optional attachments.
#[derive(Debug, Clone)]
pub struct THConfig {
    lambda_i: f64,
    lambda_e: f64,
    xi_e: Vec<f64>,
    xi_i: f64,
    xi_i_list: Option<Vec<f64>>,
    pub perturbation: Option<Perturbation>,
    pub models: Option<ModelAttachments>,
}

impl THConfig {
    /// Synthetic scenario from exponents and chart values.
    pub fn new(lambda_i: f64, lambda_e: f64, xi_e: Vec<f64>, xi_i: f64) -> Result<Self> {
        let cfg = THConfig {
            lambda_i,
            lambda_e,
            xi_e,
            xi_i,
            xi_i_list: None,
            perturbation: None,
            models: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// From saddle characteristic numbers: Lambda_i = lambda, Lambda_e = lambda^2 mu.
    pub fn from_lambda_mu(lambda: f64, mu: f64, xi_e: Vec<f64>, xi_i: f64) -> Result<Self> {
        if !(lambda > 0.0 && mu > 0.0) {
            return Err(Error::config(format!(
                "characteristic numbers must be positive, got lambda = {lambda}, mu = {mu}"
            )));
        }
        Self::new(lambda, lambda * lambda * mu, xi_e, xi_i)
    }

    /// Canonicalize raw circle positions into a valid configuration: the
    /// first entry is the distinguished point and anchors the fundamental
    /// window [xi_1, xi_1 + ln Lambda_e); the rest are reduced into it and
    /// sorted.
    pub fn from_circle_points(
        lambda_i: f64,
        lambda_e: f64,
        raw_xi_e: &[f64],
        xi_i: f64,
    ) -> Result<Self> {
        if raw_xi_e.is_empty() {
            return Err(Error::config("need at least one exterior point"));
        }
        let ln_e = lambda_e.ln();
        if !(ln_e > 0.0) {
            return Err(Error::config(format!("Lambda_e must exceed 1, got {lambda_e}")));
        }
        let anchor = raw_xi_e[0];
        let mut rest: Vec<f64> = raw_xi_e[1..]
            .iter()
            .map(|&v| {
                anchor
                    + crate::scale::circle_reduce(v - anchor, ln_e)
                        .expect("circumference validated positive")
            })
            .collect();
        rest.sort_by(f64::total_cmp);
        let mut xi_e = Vec::with_capacity(raw_xi_e.len());
        xi_e.push(anchor);
        xi_e.extend(rest);
        Self::new(lambda_i, lambda_e, xi_e, xi_i)
    }

    pub fn with_perturbation(mut self, perturbation: Perturbation) -> Result<Self> {
        if !(perturbation.q.abs() < 1.0) {
            return Err(Error::config(format!(
                "perturbation decay must satisfy |q| < 1, got {}",
                perturbation.q
            )));
        }
        self.perturbation = Some(perturbation);
        Ok(self)
    }

    pub fn with_interior_points(mut self, xi_i_list: Vec<f64>) -> Result<Self> {
        self.xi_i_list = Some(xi_i_list);
        self.validate()?;
        Ok(self)
    }

    /// Build from the JSON shape, deriving chart values from attached models
    /// when chart values are not given directly.
    pub fn from_spec(spec: &THConfigSpec) -> Result<Self> {
        let (lambda_i, lambda_e) = match (spec.lambda, spec.mu, spec.lambda_i, spec.lambda_e) {
            (Some(l), Some(m), None, None) => {
                if !(l > 0.0 && m > 0.0) {
                    return Err(Error::config("lambda and mu must be positive"));
                }
                (l, l * l * m)
            }
            (None, None, Some(li), Some(le)) => (li, le),
            (None, None, None, None) => {
                return Err(Error::config(
                    "missing exponents: give (lambda, mu) or (Lambda_i, Lambda_e)",
                ))
            }
            (Some(_), None, None, None) => return Err(Error::config("missing field \"mu\"")),
            (None, Some(_), None, None) => return Err(Error::config("missing field \"lambda\"")),
            (None, None, Some(_), None) => {
                return Err(Error::config("missing field \"Lambda_e\""))
            }
            (None, None, None, Some(_)) => {
                return Err(Error::config("missing field \"Lambda_i\""))
            }
            _ => {
                return Err(Error::config(
                    "give exactly one of (lambda, mu) or (Lambda_i, Lambda_e)",
                ))
            }
        };

        let models = match &spec.models {
            None => None,
            Some(att) => {
                let interior = att.interior.build()?;
                let exterior = att.exterior.build()?;
                Some(ModelAttachments {
                    interior,
                    exterior,
                    x_i: att.x_i,
                    x_e: att.x_e.clone(),
                })
            }
        };

        let (xi_e, xi_i) = match (&models, &spec.xi_e, spec.xi_i) {
            (None, Some(xe), Some(xi)) => (xe.clone(), xi),
            (None, _, _) => {
                return Err(Error::config(
                    "synthetic configuration needs both xi_E and xi_I",
                ))
            }
            (Some(att), given_xe, given_xi) => {
                let (derived_xe, derived_xi) = derive_chart_values(att, lambda_i, lambda_e)?;
                if let Some(xe) = given_xe {
                    check_consistent_list("xi_E", xe, &derived_xe)?;
                }
                if let Some(xi) = given_xi {
                    check_consistent("xi_I", xi, derived_xi)?;
                }
                (derived_xe, derived_xi)
            }
        };

        let cfg = THConfig {
            lambda_i,
            lambda_e,
            xi_e,
            xi_i,
            xi_i_list: spec.xi_i_list.clone(),
            perturbation: spec.perturbation,
            models,
        };
        if let Some(p) = cfg.perturbation {
            if !(p.q.abs() < 1.0) {
                return Err(Error::config(format!(
                    "perturbation decay must satisfy |q| < 1, got {}",
                    p.q
                )));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda_i > 0.0 && self.lambda_i < 1.0) {
            return Err(Error::config(format!(
                "Lambda_i must lie in (0, 1), got {}",
                self.lambda_i
            )));
        }
        if !(self.lambda_e > 1.0 && self.lambda_e.is_finite()) {
            return Err(Error::config(format!(
                "Lambda_e must exceed 1, got {}",
                self.lambda_e
            )));
        }
        if self.xi_e.is_empty() {
            return Err(Error::config("xi_E must contain at least one value"));
        }
        let ln_e = self.lambda_e.ln();
        for w in self.xi_e.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::config(format!(
                    "xi_E must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let first = self.xi_e[0];
        let last = *self.xi_e.last().unwrap();
        if !(last < first + ln_e) {
            return Err(Error::config(format!(
                "xi_E must fit one fundamental domain: need xi_E[N] < xi_E[1] + ln Lambda_e, \
                 got {last} >= {first} + {ln_e}"
            )));
        }
        if let Some(list) = &self.xi_i_list {
            if list.is_empty() {
                return Err(Error::config("xi_I_list must be nonempty when given"));
            }
            let ln_i = -self.lambda_i.ln();
            for w in list.windows(2) {
                if !(w[0] < w[1]) {
                    return Err(Error::config(
                        "xi_I_list must be strictly increasing",
                    ));
                }
            }
            if !(list[list.len() - 1] < list[0] + ln_i) {
                return Err(Error::config(
                    "xi_I_list must fit one interior fundamental domain",
                ));
            }
        }
        if let Some(att) = &self.models {
            if att.x_e.len() != self.xi_e.len() {
                return Err(Error::config(format!(
                    "x_E has {} entries but xi_E has {}",
                    att.x_e.len(),
                    self.xi_e.len()
                )));
            }
            let li = att.interior.lambda();
            if (li - self.lambda_i).abs() > 1e-12 {
                return Err(Error::config(format!(
                    "interior model exponent {li} does not match Lambda_i = {}",
                    self.lambda_i
                )));
            }
            let le = 1.0 / att.exterior.lambda();
            if (le - self.lambda_e).abs() > 1e-9 * self.lambda_e {
                return Err(Error::config(format!(
                    "exterior model exponent gives Lambda_e = {le}, config says {}",
                    self.lambda_e
                )));
            }
        }
        Ok(())
    }

    pub fn lambda_i(&self) -> f64 {
        self.lambda_i
    }

    pub fn lambda_e(&self) -> f64 {
        self.lambda_e
    }

    /// ln Lambda_e, the circumference of the exterior quotient circle.
    pub fn ln_lambda_e(&self) -> f64 {
        self.lambda_e.ln()
    }

    /// -ln Lambda_i, the rotation step of the interior sequence.
    pub fn minus_ln_lambda_i(&self) -> f64 {
        -self.lambda_i.ln()
    }

    /// Number of exterior arcs N.
    pub fn n_arcs(&self) -> usize {
        self.xi_e.len()
    }

    pub fn xi_e(&self) -> &[f64] {
        &self.xi_e
    }

    pub fn xi_i(&self) -> f64 {
        self.xi_i
    }

    /// Interior marked points for the projective invariant; defaults to the
    /// single point xi_I.
    pub fn xi_i_points(&self) -> Vec<f64> {
        match &self.xi_i_list {
            Some(list) => list.clone(),
            None => vec![self.xi_i],
        }
    }

    /// Shift every exterior chart value (and the interior ones) by t.
    /// The invariant vector must not change under this. Model attachments
    /// are dropped: the shifted values are synthetic by construction.
    pub fn translated(&self, t: f64) -> THConfig {
        let mut out = self.clone();
        for v in &mut out.xi_e {
            *v += t;
        }
        out.xi_i += t;
        if let Some(list) = &mut out.xi_i_list {
            for v in list {
                *v += t;
            }
        }
        out.models = None;
        out
    }
}

/// Chart values of the attached models' targets: the exterior chart of the
/// unified (inverted) polycycle map at each x_E, the interior chart at x_I.
fn derive_chart_values(
    att: &ModelAttachments,
    lambda_i: f64,
    lambda_e: f64,
) -> Result<(Vec<f64>, f64)> {
    let tol = 1e-12;
    if (att.interior.lambda() - lambda_i).abs() > 1e-12 {
        return Err(Error::config(
            "interior model exponent does not match Lambda_i",
        ));
    }
    if (1.0 / att.exterior.lambda() - lambda_e).abs() > 1e-9 * lambda_e {
        return Err(Error::config(
            "exterior model exponent does not match Lambda_e",
        ));
    }
    let xi_i = rectify_contracting_inverse_u(&att.interior, -att.x_i.ln(), tol)?;
    let mut xi_e = Vec::with_capacity(att.x_e.len());
    for &x in &att.x_e {
        if !(x > 0.0 && x < att.exterior.delta()) {
            return Err(Error::config(format!(
                "exterior target {x} outside (0, {})",
                att.exterior.delta()
            )));
        }
        xi_e.push(rectify_contracting_inverse_u(&att.exterior, -x.ln(), tol)?);
    }
    Ok((xi_e, xi_i))
}

fn check_consistent(name: &str, given: f64, derived: f64) -> Result<()> {
    if (given - derived).abs() > 1e-6 {
        return Err(Error::config(format!(
            "{name} = {given} conflicts with the model-derived value {derived}"
        )));
    }
    Ok(())
}

fn check_consistent_list(name: &str, given: &[f64], derived: &[f64]) -> Result<()> {
    if given.len() != derived.len() {
        return Err(Error::config(format!(
            "{name} has {} entries but the models derive {}",
            given.len(),
            derived.len()
        )));
    }
    for (g, d) in given.iter().zip(derived) {
        check_consistent(name, *g, *d)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_mu_form() {
        // lambda = 0.5, mu = 5: Lambda_i = 0.5, Lambda_e = 1.25
        let cfg = THConfig::from_lambda_mu(0.5, 5.0, vec![0.0, 0.1], 0.3).unwrap();
        assert!((cfg.lambda_i() - 0.5).abs() < 1e-15);
        assert!((cfg.lambda_e() - 1.25).abs() < 1e-15);
        assert_eq!(cfg.n_arcs(), 2);
    }

    #[test]
    fn window_ordering_enforced() {
        assert!(THConfig::new(0.5, 1.25, vec![0.1, 0.0], 0.3).is_err());
        assert!(THConfig::new(0.5, 1.25, vec![0.0, 0.3], 0.3).is_err()); // 0.3 > ln 1.25
        assert!(THConfig::new(0.5, 1.25, vec![], 0.3).is_err());
        assert!(THConfig::new(1.5, 1.25, vec![0.0], 0.3).is_err());
        assert!(THConfig::new(0.5, 0.8, vec![0.0], 0.3).is_err());
    }

    #[test]
    fn circle_canonicalization() {
        let ln_e = 1.25f64.ln();
        // second point given one full turn up: reduces to the same circle point
        let a = THConfig::from_circle_points(0.5, 1.25, &[0.0, 0.1 + ln_e], 0.3).unwrap();
        let b = THConfig::new(0.5, 1.25, vec![0.0, 0.1], 0.3).unwrap();
        for (x, y) in a.xi_e().iter().zip(b.xi_e()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let json = r#"{
            "Lambda_i": 0.5, "Lambda_e": 1.25,
            "xi_E": [0.0, 0.1], "xi_I": 0.3,
            "perturbation": {"r": 0.05, "q": 0.9}
        }"#;
        let spec: THConfigSpec = serde_json::from_str(json).unwrap();
        let cfg = THConfig::from_spec(&spec).unwrap();
        assert_eq!(cfg.n_arcs(), 2);
        assert!(cfg.perturbation.is_some());
    }

    #[test]
    fn spec_rejects_mixed_exponent_forms() {
        let json = r#"{"lambda": 0.5, "mu": 5.0, "Lambda_i": 0.5, "Lambda_e": 1.25,
                       "xi_E": [0.0], "xi_I": 0.3}"#;
        let spec: THConfigSpec = serde_json::from_str(json).unwrap();
        assert!(THConfig::from_spec(&spec).is_err());
    }

    #[test]
    fn model_mode_derives_chart_values() {
        let json = r#"{
            "Lambda_i": 0.5, "Lambda_e": 2.0,
            "models": {
                "interior": {"kind": "power_law", "C": 1.0, "Lambda": 0.5, "delta": 0.5},
                "exterior": {"kind": "power_law", "C": 1.0, "Lambda": 0.5, "delta": 0.5},
                "x_I": 0.1,
                "x_E": [0.2, 0.05]
            }
        }"#;
        let spec: THConfigSpec = serde_json::from_str(json).unwrap();
        let cfg = THConfig::from_spec(&spec).unwrap();
        // pure-power charts are exactly ln(-ln x)
        assert!((cfg.xi_i() - (-(0.1f64).ln()).ln()).abs() < 1e-10);
        assert!((cfg.xi_e()[0] - (-(0.2f64).ln()).ln()).abs() < 1e-10);
        assert!((cfg.xi_e()[1] - (-(0.05f64).ln()).ln()).abs() < 1e-10);
    }
}
