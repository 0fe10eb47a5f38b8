//! The scalar invariant phi, the arc-length vector Phi, the projective
//! variant with interior points, arc assignment of interior roots, visit
//! frequencies, and the equivalence obstruction verdict.

use serde::Serialize;

use crate::config::THConfig;
use crate::error::{Error, Result};
use crate::ratio::detect_rational;
use crate::report::fmt_g17;
use crate::spark::SparkTable;

/// Denominator search ceiling for rationality detection.
pub const Q_MAX_DEFAULT: u64 = 1_000_000;
const RATIONAL_REL_TOL: f64 = 1e-12;

/// phi = ln Lambda_e / (-ln Lambda_i).
pub fn phi_of(config: &THConfig) -> f64 {
    config.ln_lambda_e() / config.minus_ln_lambda_i()
}

/// The invariant vector: Phi_k = (xi_e(E_{k+1}) - xi_e(E_k)) / (-ln Lambda_i)
/// with the closing convention xi_e(E_{N+1}) = xi_e(E_1) + ln Lambda_e.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantVector {
    pub phi: f64,
    #[serde(rename = "Phi")]
    pub phi_k: Vec<f64>,
    /// Denominator when phi is rational within the detection tolerance.
    pub q: Option<u64>,
}

pub fn invariant_vector(config: &THConfig) -> Result<InvariantVector> {
    let xi = config.xi_e();
    let step = config.minus_ln_lambda_i();
    let mut phi_k = Vec::with_capacity(xi.len());
    for k in 0..xi.len() {
        let next = if k + 1 < xi.len() { xi[k + 1] } else { xi[0] + config.ln_lambda_e() };
        let arc = (next - xi[k]) / step;
        if !(arc > 0.0) {
            return Err(Error::config(format!("arc {k} is not positive: {arc}")));
        }
        phi_k.push(arc);
    }
    let phi = phi_of(config);
    let q = detect_rational(phi, Q_MAX_DEFAULT, RATIONAL_REL_TOL).map(|r| r.q);
    Ok(InvariantVector { phi, phi_k, q })
}

/// The projective class [Phi : Psi] with K interior points, this time
/// without rescaling: exterior differences close through + ln Lambda_e,
/// interior differences through + (-ln Lambda_i). Returned as the
/// representative normalized to first coordinate 1.
pub fn projective_invariant(config: &THConfig) -> Result<Vec<f64>> {
    let xi_e = config.xi_e();
    let xi_i = config.xi_i_points();
    let mut coords = Vec::with_capacity(xi_e.len() + xi_i.len());
    for k in 0..xi_e.len() {
        let next = if k + 1 < xi_e.len() { xi_e[k + 1] } else { xi_e[0] + config.ln_lambda_e() };
        coords.push(next - xi_e[k]);
    }
    for j in 0..xi_i.len() {
        let next = if j + 1 < xi_i.len() {
            xi_i[j + 1]
        } else {
            xi_i[0] + config.minus_ln_lambda_i()
        };
        coords.push(next - xi_i[j]);
    }
    if coords.iter().all(|&c| c == 0.0) {
        return Err(Error::DegenerateClass);
    }
    let first = coords[0];
    if first == 0.0 {
        return Err(Error::DegenerateClass);
    }
    for c in &mut coords {
        *c /= first;
    }
    Ok(coords)
}

/// Arc assignment of one interior root: iota_n lies in
/// [eps_{k_n + 1, m_n}, eps_{k_n, m_n}), i.e. the chosen entry is the
/// smallest exterior value strictly greater than iota_n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub n: u32,
    pub k: u16,
    pub m: u32,
}

/// Assign every interior entry to its arc by binary search over the
/// xi-sorted exterior table.
pub fn assign_k(table: &SparkTable) -> Result<Vec<Assignment>> {
    if table.eps.is_empty() || table.iota.is_empty() {
        return Err(Error::domain("assignment needs nonempty iota and eps tables"));
    }
    // the traversal order is already xi-sorted from m0 on in the common
    // zero-perturbation case; only re-sort when necessary
    if table.eps.windows(2).all(|w| w[0].xi <= w[1].xi) {
        table
            .iota
            .iter()
            .map(|iota| {
                let idx = table.eps.partition_point(|e| e.xi < iota.xi);
                let key = if idx > 0 && idx < table.eps.len() {
                    let e = &table.eps[idx - 1];
                    Some((e.xi, e.k, e.m))
                } else {
                    None
                };
                finish_assignment(table, key, idx, table.eps.len(), iota.n, iota.xi)
            })
            .collect()
    } else {
        let sorted = sorted_eps_view(table)?;
        table
            .iota
            .iter()
            .map(|iota| {
                let idx = sorted.partition_point(|e| e.0 < iota.xi);
                let key = if idx > 0 && idx < sorted.len() { Some(sorted[idx - 1]) } else { None };
                finish_assignment(table, key, idx, sorted.len(), iota.n, iota.xi)
            })
            .collect()
    }
}

/// Exhaustive-scan route to the same assignment, kept as the independent
/// second leg of the dual-route check.
pub fn assign_k_brute(table: &SparkTable) -> Result<Vec<Assignment>> {
    table
        .iota
        .iter()
        .map(|iota| {
            // smallest eps greater than iota = largest xi strictly below
            let mut best: Option<(f64, u16, u32)> = None;
            let mut above = false;
            for e in &table.eps {
                if e.xi < iota.xi {
                    if best.is_none_or(|(xi, _, _)| e.xi > xi) {
                        best = Some((e.xi, e.k, e.m));
                    }
                } else {
                    above = true;
                }
            }
            match best {
                Some((_, k, m)) if above => {
                    check_certified(table, m)?;
                    Ok(Assignment { n: iota.n, k, m })
                }
                Some(_) => Err(Error::OutOfRange(format!(
                    "iota_{} has no exterior entry above it; table too shallow",
                    iota.n
                ))),
                None => Err(Error::OutOfRange(format!(
                    "iota_{} exceeds every stored exterior entry",
                    iota.n
                ))),
            }
        })
        .collect()
}

type EpsKey = (f64, u16, u32);

fn sorted_eps_view(table: &SparkTable) -> Result<Vec<EpsKey>> {
    let mut view: Vec<EpsKey> = table.eps.iter().map(|e| (e.xi, e.k, e.m)).collect();
    view.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(view)
}

fn finish_assignment(
    table: &SparkTable,
    key: Option<EpsKey>,
    idx: usize,
    len: usize,
    n: u32,
    xi: f64,
) -> Result<Assignment> {
    if idx == 0 {
        return Err(Error::OutOfRange(format!(
            "iota_{n} at xi = {xi} exceeds every stored exterior entry"
        )));
    }
    if idx == len {
        return Err(Error::OutOfRange(format!(
            "iota_{n} at xi = {xi} has no exterior entry above it; table too shallow"
        )));
    }
    let (_, k, m) = key.expect("interior index implies a predecessor");
    check_certified(table, m)?;
    Ok(Assignment { n, k, m })
}

fn check_certified(table: &SparkTable, m: u32) -> Result<()> {
    if m < table.m0 {
        return Err(Error::OutOfRange(format!(
            "assignment lands at m = {m}, below the certified interleaving zone m0 = {}",
            table.m0
        )));
    }
    Ok(())
}

/// Rational-regime bookkeeping of a frequency report: tail extrema of the
/// running frequencies and the two-sided bound checks
/// -1/q + phi limsup <= Phi_k <= 1/q + phi liminf.
#[derive(Debug, Clone, Serialize)]
pub struct RationalCaseReport {
    pub q: u64,
    pub liminf_est: Vec<f64>,
    pub limsup_est: Vec<f64>,
    pub lower_ok: Vec<bool>,
    pub upper_ok: Vec<bool>,
}

/// Visit frequencies at a cut, with predictions and per-arc verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct FrequencyReport {
    pub depth: u32,
    pub counts: Vec<u64>,
    pub psi: Vec<f64>,
    /// Predicted limits Phi_k / phi.
    pub predicted: Vec<f64>,
    pub rational: Option<RationalCaseReport>,
    /// Per-arc pass: |psi - predicted| < tol in the irrational regime, both
    /// rational bounds in the rational regime.
    pub verdict: Vec<bool>,
    pub tol: f64,
}

/// Count arc visits over the first `cut` interior entries.
///
/// psi_k = #{n <= cut : k_n = k} / cut. In the rational regime the liminf
/// and limsup are estimated by extrema of the running frequencies over a
/// trailing window of max(cut/10, 1000) indices.
pub fn frequencies(
    config: &THConfig,
    assignments: &[Assignment],
    cut: u32,
    tol: f64,
) -> Result<FrequencyReport> {
    if cut < 1 {
        return Err(Error::domain("cut must be at least 1"));
    }
    if (assignments.len() as u32) < cut {
        return Err(Error::domain(format!(
            "cut {cut} exceeds the {} available assignments",
            assignments.len()
        )));
    }
    let n_arcs = config.n_arcs();
    let iv = invariant_vector(config)?;
    let predicted: Vec<f64> = iv.phi_k.iter().map(|p| p / iv.phi).collect();

    let mut counts = vec![0u64; n_arcs];
    let window = ((cut / 10).max(1000)).min(cut) as usize;
    let tail_start = cut as usize - window; // 0-based index of the first window entry
    let mut liminf = vec![f64::INFINITY; n_arcs];
    let mut limsup = vec![f64::NEG_INFINITY; n_arcs];

    for (i, a) in assignments.iter().take(cut as usize).enumerate() {
        let k = a.k as usize;
        if k == 0 || k > n_arcs {
            return Err(Error::OutOfRange(format!("assignment k = {k} outside 1..={n_arcs}")));
        }
        counts[k - 1] += 1;
        if i >= tail_start {
            let denom = (i + 1) as f64;
            for arc in 0..n_arcs {
                let psi = counts[arc] as f64 / denom;
                liminf[arc] = liminf[arc].min(psi);
                limsup[arc] = limsup[arc].max(psi);
            }
        }
    }

    let psi: Vec<f64> = counts.iter().map(|&c| c as f64 / cut as f64).collect();
    let total: u64 = counts.iter().sum();
    if total != cut as u64 {
        return Err(Error::PropertyViolation(format!(
            "frequencies lost mass: counts sum to {total}, cut is {cut}"
        )));
    }

    let rational = iv.q.map(|q| {
        let inv_q = 1.0 / q as f64;
        let lower_ok: Vec<bool> = (0..n_arcs)
            .map(|k| -inv_q + iv.phi * limsup[k] <= iv.phi_k[k])
            .collect();
        let upper_ok: Vec<bool> =
            (0..n_arcs).map(|k| iv.phi_k[k] <= inv_q + iv.phi * liminf[k]).collect();
        RationalCaseReport { q, liminf_est: liminf, limsup_est: limsup, lower_ok, upper_ok }
    });

    let verdict: Vec<bool> = match &rational {
        Some(r) => (0..n_arcs).map(|k| r.lower_ok[k] && r.upper_ok[k]).collect(),
        None => (0..n_arcs).map(|k| (psi[k] - predicted[k]).abs() < tol).collect(),
    };

    Ok(FrequencyReport { depth: cut, counts, psi, predicted, rational, verdict, tol })
}

impl FrequencyReport {
    /// CSV rows: k, psi, predicted, abs_error.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,psi,predicted,abs_error\n");
        for k in 0..self.psi.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                k + 1,
                fmt_g17(self.psi[k]),
                fmt_g17(self.predicted[k]),
                fmt_g17((self.psi[k] - self.predicted[k]).abs())
            ));
        }
        out
    }
}

/// Which arithmetic regime a verdict runs under. Detection from floats can
/// be ambiguous; when the two sides disagree the caller must flag it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rationality {
    Irrational,
    Rational { q: u64 },
}

/// Outcome of comparing two invariant vectors: the invariant only ever
/// obstructs equivalence, it cannot certify it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Verdict {
    NotDistinguished,
    Inequivalent { reason: String },
}

/// Compare two invariant vectors under the stated tolerance.
///
/// Violations: phi differs; some Phi_k differs in the irrational regime;
/// some |Phi_k - Phi~_k| > 2/q in the rational regime with denominator q.
pub fn equivalence_verdict(
    a: &InvariantVector,
    b: &InvariantVector,
    tol: f64,
    regime: Option<Rationality>,
) -> Result<Verdict> {
    if a.phi_k.len() != b.phi_k.len() {
        return Err(Error::DimensionMismatch(format!(
            "invariant vectors have {} and {} arcs",
            a.phi_k.len(),
            b.phi_k.len()
        )));
    }
    if (a.phi - b.phi).abs() > tol {
        return Ok(Verdict::Inequivalent {
            reason: format!("phi differs: {} vs {}", a.phi, b.phi),
        });
    }
    let regime = match regime {
        Some(r) => r,
        None => match (a.q, b.q) {
            (None, None) => Rationality::Irrational,
            (Some(qa), Some(qb)) if qa == qb => Rationality::Rational { q: qa },
            _ => return Err(Error::AmbiguousRationality),
        },
    };
    match regime {
        Rationality::Irrational => {
            for (k, (x, y)) in a.phi_k.iter().zip(&b.phi_k).enumerate() {
                if (x - y).abs() > tol {
                    return Ok(Verdict::Inequivalent {
                        reason: format!(
                            "Phi_{} differs in the irrational regime: {x} vs {y}",
                            k + 1
                        ),
                    });
                }
            }
        }
        Rationality::Rational { q } => {
            let bound = 2.0 / q as f64;
            for (k, (x, y)) in a.phi_k.iter().zip(&b.phi_k).enumerate() {
                if (x - y).abs() > bound + tol {
                    return Ok(Verdict::Inequivalent {
                        reason: format!(
                            "Phi_{} violates the rational bound 2/{q}: {x} vs {y}",
                            k + 1
                        ),
                    });
                }
            }
        }
    }
    Ok(Verdict::NotDistinguished)
}
