//! JSON input shapes for the subcommands. Scenario and model schemas come
//! from the library; the wrappers here add sampling ranges and targets.

use serde::Deserialize;

use polycycle_lab::{EndpointKind, ModelSpec, Perturbation};

/// Input of `rectify`: a model plus an optional x sampling range.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectifyInput {
    pub model: ModelSpec,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_count() -> usize {
    20
}

/// Input of `sparkle`: a contracting family, a constant target, and the
/// first index of the solved range (the last one is --depth).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparkleInput {
    pub model: ModelSpec,
    pub p0: f64,
    #[serde(default = "default_n_min")]
    pub n_min: u32,
}

fn default_n_min() -> u32 {
    1
}

/// Input of `rotate`: phase, rotation number (directly or as p/q), target
/// interval, optional geometric drift and interval convergence.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotateInput {
    pub c: f64,
    pub rho: Option<f64>,
    pub p: Option<i64>,
    pub q: Option<u64>,
    #[serde(rename = "J")]
    pub j: IntervalInput,
    #[serde(default = "default_kind")]
    pub kind: EndpointKind,
    pub drift: Option<Perturbation>,
    pub j_shrink: Option<Perturbation>,
    #[serde(default = "default_decay_from")]
    pub decay_from: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalInput {
    pub a: f64,
    pub b: f64,
}

fn default_kind() -> EndpointKind {
    EndpointKind::Closed
}

fn default_decay_from() -> u64 {
    100
}

impl RotateInput {
    pub fn rotation_number(&self) -> anyhow::Result<f64> {
        match (self.rho, self.p, self.q) {
            (Some(r), None, None) => Ok(r),
            (None, Some(p), Some(q)) if q > 0 => Ok(p as f64 / q as f64),
            _ => anyhow::bail!("give either rho or the pair (p, q) with q > 0"),
        }
    }
}

/// Input of `certify`: a model plus optional grid overrides.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyInput {
    pub model: ModelSpec,
    #[serde(default)]
    pub grid: GridOverrides,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    pub x_min: Option<f64>,
    pub x_per_decade: Option<usize>,
    pub eps_per_x: Option<usize>,
    pub iterate_depth: Option<usize>,
    pub lambda_prime: Option<f64>,
}

impl GridOverrides {
    pub fn apply(&self, mut grid: polycycle_lab::GridSpec) -> polycycle_lab::GridSpec {
        if self.x_min.is_some() {
            grid.x_min = self.x_min;
        }
        if let Some(v) = self.x_per_decade {
            grid.x_per_decade = v;
        }
        if let Some(v) = self.eps_per_x {
            grid.eps_per_x = v;
        }
        if let Some(v) = self.iterate_depth {
            grid.iterate_depth = v;
        }
        if self.lambda_prime.is_some() {
            grid.lambda_prime = self.lambda_prime;
        }
        grid
    }
}
