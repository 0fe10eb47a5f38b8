//! Visit frequencies of sequences close to rotation orbits, with exact
//! integer counting: x_n = c + n rho + o(1) on the unit circle against a
//! converging sequence of target intervals.
//!
//! Irrational rho equidistributes, so the frequency tends to the interval
//! length. Rational rho = p/q gives a periodic orbit and only a two-sided
//! bound: -1/q + limsup psi <= |J| <= 1/q + liminf psi.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratio::detect_rational;
use crate::scale::circle_reduce;

/// Which endpoints of an interval belong to it. Ties at floating-point-equal
/// endpoints resolve by the declared kind; there is no epsilon fudging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    Open,
    Closed,
    /// (a, b]
    HalfOpenLeft,
    /// [a, b)
    HalfOpenRight,
}

impl EndpointKind {
    fn closed_left(self) -> bool {
        matches!(self, EndpointKind::Closed | EndpointKind::HalfOpenRight)
    }

    fn closed_right(self) -> bool {
        matches!(self, EndpointKind::Closed | EndpointKind::HalfOpenLeft)
    }
}

/// An interval on the circle R/Z given by raw endpoints a, b. If b - a >= 1
/// the interval is the whole circle; otherwise it runs from a to b in the
/// positive direction (possibly wrapping through 0).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CircleInterval {
    pub a: f64,
    pub b: f64,
}

impl CircleInterval {
    pub fn new(a: f64, b: f64) -> Self {
        CircleInterval { a, b }
    }

    pub fn is_full(&self) -> bool {
        self.b - self.a >= 1.0
    }

    pub fn length(&self) -> f64 {
        if self.is_full() {
            1.0
        } else {
            circle_reduce(self.b - self.a, 1.0).unwrap()
        }
    }

    /// Membership of the circle point x, honoring the endpoint kind exactly.
    pub fn contains(&self, x: f64, kind: EndpointKind) -> bool {
        if self.is_full() {
            return true;
        }
        let len = circle_reduce(self.b - self.a, 1.0).unwrap();
        let t = circle_reduce(x - self.a, 1.0).unwrap();
        if t == 0.0 {
            // on the left endpoint; a degenerate interval keeps only its
            // closed singleton
            return if len == 0.0 { kind == EndpointKind::Closed } else { kind.closed_left() };
        }
        if t == len {
            return kind.closed_right();
        }
        t < len
    }

    /// Hausdorff-style distance between the endpoint pairs, on the circle.
    pub fn endpoint_distance(&self, other: &CircleInterval) -> f64 {
        let d = |x: f64, y: f64| {
            let r = circle_reduce(x - y, 1.0).unwrap();
            r.min(1.0 - r)
        };
        d(self.a, other.a).max(d(self.b, other.b))
    }
}

/// A sequence close to a rotation orbit, tested against converging intervals.
pub struct RotationProblem<'a> {
    /// Initial phase on R/Z.
    pub c: f64,
    /// Rotation number.
    pub rho: f64,
    /// The o(1) term; must tend to 0. None means zero drift.
    pub drift: Option<&'a (dyn Fn(u64) -> f64 + Sync)>,
    /// Limit interval J.
    pub j_limit: CircleInterval,
    /// The converging interval sequence J_n; None means constantly J.
    pub j_seq: Option<&'a (dyn Fn(u64) -> CircleInterval + Sync)>,
    pub endpoint_kind: EndpointKind,
    /// Index beyond which the drift and interval convergence are sampled.
    pub decay_from: u64,
}

impl<'a> RotationProblem<'a> {
    /// Drift-free problem with a constant target interval.
    pub fn constant(c: f64, rho: f64, j: CircleInterval, kind: EndpointKind) -> RotationProblem<'static> {
        RotationProblem {
            c,
            rho,
            drift: None,
            j_limit: j,
            j_seq: None,
            endpoint_kind: kind,
            decay_from: 1,
        }
    }

    fn drift_at(&self, n: u64) -> f64 {
        self.drift.map_or(0.0, |f| f(n))
    }

    fn interval_at(&self, n: u64) -> CircleInterval {
        self.j_seq.map_or(self.j_limit, |f| f(n))
    }

    /// Sanity checks on the o(1) structure: |drift| below 0.01 on sampled
    /// tail indices and interval endpoints converging to the limit.
    pub fn validate(&self) -> Result<()> {
        let n0 = self.decay_from.max(1);
        for &mult in &[1u64, 2, 10, 100] {
            let n = n0.saturating_mul(mult);
            let d = self.drift_at(n);
            if !(d.abs() < 0.01) {
                return Err(Error::config(format!(
                    "drift({n}) = {d} does not look like o(1) beyond N0 = {n0}"
                )));
            }
            let dist = self.interval_at(n).endpoint_distance(&self.j_limit);
            if !(dist < 0.05) {
                return Err(Error::config(format!(
                    "J_seq({n}) stays {dist} away from the limit interval"
                )));
            }
        }
        Ok(())
    }
}

/// Running visit frequencies with exact integer counts.
#[derive(Debug, Clone)]
pub struct FrequencyTrace {
    cumulative: Vec<u32>,
}

impl FrequencyTrace {
    pub fn len(&self) -> u64 {
        self.cumulative.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    /// Hit count among indices 1..=n.
    pub fn count(&self, n: u64) -> u64 {
        if n == 0 {
            0
        } else {
            self.cumulative[(n - 1) as usize] as u64
        }
    }

    /// psi_n = count(n) / n.
    pub fn psi(&self, n: u64) -> f64 {
        self.count(n) as f64 / n as f64
    }

    fn tail_window(&self) -> std::ops::RangeInclusive<u64> {
        let n = self.len();
        let w = (n / 10).max(1000).min(n);
        (n - w + 1)..=n
    }

    /// Minimum of psi over the trailing window max(n/10, 1000).
    pub fn liminf_est(&self) -> f64 {
        self.tail_window().map(|j| self.psi(j)).fold(f64::INFINITY, f64::min)
    }

    /// Maximum of psi over the trailing window max(n/10, 1000).
    pub fn limsup_est(&self) -> f64 {
        self.tail_window().map(|j| self.psi(j)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Count x_j = c + j rho + drift(j) against J_j for j = 1..=n.
///
/// ```
/// use polycycle_lab::{orbit_frequency, CircleInterval, EndpointKind, RotationProblem};
///
/// // golden rotation equidistributes: the visit frequency of an interval
/// // tends to its length
/// let j = CircleInterval::new(0.1, 0.35);
/// let problem = RotationProblem::constant(0.0, 0.618_033_988_749_895, j, EndpointKind::Closed);
/// let trace = orbit_frequency(&problem, 10_000).unwrap();
/// assert!((trace.psi(10_000) - 0.25).abs() < 0.01);
/// ```
pub fn orbit_frequency(problem: &RotationProblem<'_>, n: u64) -> Result<FrequencyTrace> {
    if n < 1 {
        return Err(Error::domain("need at least one index"));
    }
    if n > u32::MAX as u64 {
        return Err(Error::domain(format!("trace length {n} exceeds the counter range")));
    }
    problem.validate()?;
    let mut cumulative = Vec::with_capacity(n as usize);
    let mut hits: u32 = 0;
    for j in 1..=n {
        let x = circle_reduce(problem.c + (j as f64) * problem.rho + problem.drift_at(j), 1.0)?;
        if problem.interval_at(j).contains(x, problem.endpoint_kind) {
            hits += 1;
        }
        cumulative.push(hits);
    }
    Ok(FrequencyTrace { cumulative })
}

/// What the frequency should do in the limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Prediction {
    /// Irrational rotation: psi_n tends to |J|.
    Exact(f64),
    /// Rational rotation with denominator q: only the two-sided bound
    /// -1/q + limsup psi <= |J| <= 1/q + liminf psi holds.
    Bounds { q: u64 },
}

/// Classify rho by continued-fraction convergents (denominator <= q_max,
/// relative error < 1e-12) and return the corresponding prediction for J.
pub fn predicted_limit(rho: f64, j: CircleInterval, q_max: u64) -> Prediction {
    match detect_rational(rho, q_max, 1e-12) {
        None => Prediction::Exact(j.length()),
        Some(r) => Prediction::Bounds { q: r.q },
    }
}

/// Exact count of one rational period: #{j in 1..=q : c + j p/q in J},
/// checked against the guaranteed bracket [ceil(q|J|) - 1, floor(q|J|) + 1].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RationalCount {
    pub count: u64,
    pub lower: u64,
    pub upper: u64,
}

pub fn rational_orbit_count(
    c: f64,
    p: i64,
    q: u64,
    j: CircleInterval,
    kind: EndpointKind,
) -> Result<RationalCount> {
    if q < 1 {
        return Err(Error::domain("q must be at least 1"));
    }
    if gcd(p.unsigned_abs(), q) != 1 {
        return Err(Error::domain(format!("p/q must be reduced: gcd({p}, {q}) != 1")));
    }
    let rho = p as f64 / q as f64;
    let mut count = 0u64;
    for step in 1..=q {
        let x = circle_reduce(c + (step as f64) * rho, 1.0)?;
        if j.contains(x, kind) {
            count += 1;
        }
    }
    let ql = q as f64 * j.length();
    let lower = (ql.ceil() as i64 - 1).max(0) as u64;
    let upper = (ql.floor() as u64 + 1).min(q);
    if count < lower || count > upper {
        return Err(Error::PropertyViolation(format!(
            "period count {count} escapes [{lower}, {upper}] for q = {q}, |J| = {}",
            j.length()
        )));
    }
    Ok(RationalCount { count, lower, upper })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
