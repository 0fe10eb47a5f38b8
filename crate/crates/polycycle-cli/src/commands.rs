//! One runner per subcommand. Each produces deterministic output bytes;
//! validation failures carry the name of the violated property.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use polycycle_lab::checks::PropertyCheck;
use polycycle_lab::{
    assign_k, certify_estimates, equivalence_verdict, fmt_g17, frequencies, invariant_vector,
    orbit_frequency, projective_invariant, rational_orbit_count, spark_sequence, th_sparks,
    CircleInterval, Error as LabError, GridSpec, Prediction, RectifyingChart, RotationProblem,
    SparkProblem, THConfig, THConfigSpec, Verdict,
};

use crate::inputs::{CertifyInput, RectifyInput, RotateInput, SparkleInput};

/// How a run ends: validation failures exit 2, everything else exits 1.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Error(anyhow::Error),
}

impl Failure {
    fn validation(msg: impl Into<String>) -> Self {
        Failure::Validation(msg.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Error(e)
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            // these indicate a violated property of the underlying theory,
            // not a malformed request
            LabError::OutOfRange(_) | LabError::PropertyViolation(_) => {
                Failure::Validation(e.to_string())
            }
            other => Failure::Error(anyhow::Error::new(other)),
        }
    }
}

pub type RunResult = Result<Output, Failure>;

/// Output bytes of a run: the primary stream plus optional side files.
pub struct Output {
    pub primary: String,
    pub extra_files: Vec<(PathBuf, String)>,
}

impl Output {
    fn primary(s: String) -> Self {
        Output { primary: s, extra_files: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn to_json_pretty<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Failure::Error(e.into()))
}

fn render_checks(checks: &[PropertyCheck]) -> RunResult {
    let mut out = String::new();
    let mut all_pass = true;
    for c in checks {
        all_pass &= c.pass;
        out.push_str(&format!(
            "{} {} - {}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    if all_pass {
        Ok(Output::primary(out))
    } else {
        let failed: Vec<&str> =
            checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        Err(Failure::Validation(format!(
            "{out}violated properties: {}",
            failed.join(", ")
        )))
    }
}

pub fn run_rectify(input: &RectifyInput, tol: f64, format: Format, check: bool) -> RunResult {
    let model = input.model.build()?;
    if check {
        return render_checks(&polycycle_lab::checks::rectifier_checks(&model, tol)?);
    }
    let chart = RectifyingChart::build(&model, tol)?;
    let delta = model.delta;
    let x_min = input.x_min.unwrap_or(delta * 1e-8);
    let x_max = input.x_max.unwrap_or(delta * 0.8);
    if !(x_min > 0.0 && x_min < x_max && x_max < delta) {
        return Err(Failure::Error(anyhow::anyhow!(
            "need 0 < x_min < x_max < delta, got [{x_min}, {x_max}] with delta = {delta}"
        )));
    }
    let count = input.count.max(2);
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let t = i as f64 / (count - 1) as f64;
        let x = (x_min.ln() + t * (x_max.ln() - x_min.ln())).exp();
        let xi = chart.eval(x)?;
        let residual = chart.residual(x)?;
        rows.push((x, xi, residual));
    }
    let worst = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    if worst > 10.0 * tol {
        return Err(Failure::validation(format!(
            "chart conjugacy residual {worst:.3e} exceeds 10 tol = {:.3e}",
            10.0 * tol
        )));
    }
    let primary = match format {
        Format::Csv => {
            let mut s = String::from("x,xi,residual\n");
            for (x, xi, r) in &rows {
                s.push_str(&format!("{},{},{}\n", fmt_g17(*x), fmt_g17(*xi), fmt_g17(*r)));
            }
            s
        }
        Format::Json => to_json_pretty(
            &rows
                .iter()
                .map(|(x, xi, r)| json!({"x": x, "xi": xi, "residual": r}))
                .collect::<Vec<_>>(),
        )?,
    };
    Ok(Output::primary(primary))
}

pub fn run_sparkle(
    input: &SparkleInput,
    depth: u32,
    tol: f64,
    format: Format,
    check: bool,
) -> RunResult {
    let model = input.model.build()?;
    if check {
        let n_hi = depth.min(input.n_min + 35).max(input.n_min + 4);
        return render_checks(&polycycle_lab::checks::sparkler_checks(
            &model,
            input.p0,
            input.n_min,
            n_hi,
            tol,
        )?);
    }
    if depth < input.n_min {
        return Err(Failure::Error(anyhow::anyhow!(
            "depth {depth} is below n_min {}",
            input.n_min
        )));
    }
    let target = |_: f64| input.p0;
    let problem = SparkProblem::new(&model, &target)?;
    let points = spark_sequence(&problem, input.n_min..=depth, tol)?;
    let primary = match format {
        Format::Csv => {
            let mut s = String::from("n,xi,residual\n");
            for p in &points {
                s.push_str(&format!("{},{},{}\n", p.n, fmt_g17(p.xi), fmt_g17(p.residual)));
            }
            s
        }
        Format::Json => to_json_pretty(
            &points
                .iter()
                .map(|p| json!({"n": p.n, "xi": p.xi, "residual": p.residual}))
                .collect::<Vec<_>>(),
        )?,
    };
    Ok(Output::primary(primary))
}

pub fn run_th(
    spec: &THConfigSpec,
    depth: u32,
    tol: f64,
    format: Format,
    check: bool,
    table_path: Option<PathBuf>,
) -> RunResult {
    let config = THConfig::from_spec(spec)?;
    if check {
        return render_checks(&polycycle_lab::checks::th_checks(&config, depth, tol.max(0.02))?);
    }
    let table = th_sparks(&config, depth, 1e-10)?;
    let assignments = assign_k(&table)?;
    let report = frequencies(&config, &assignments, depth, tol.max(1e-6))?;

    if let Some(r) = &report.rational {
        for k in 0..report.psi.len() {
            if !(r.lower_ok[k] && r.upper_ok[k]) {
                return Err(Failure::validation(format!(
                    "rational-case frequency bounds violated at arc {} (denominator q = {})",
                    k + 1,
                    r.q
                )));
            }
        }
    }

    let primary = match format {
        Format::Csv => report.to_csv(),
        Format::Json => {
            let iv = invariant_vector(&config)?;
            let abs_error: Vec<f64> = report
                .psi
                .iter()
                .zip(&report.predicted)
                .map(|(p, q)| (p - q).abs())
                .collect();
            to_json_pretty(&json!({
                "phi": iv.phi,
                "q": iv.q,
                "m0": table.m0,
                "depth": report.depth,
                "counts": report.counts,
                "psi": report.psi,
                "predicted": report.predicted,
                "abs_error": abs_error,
                "rational": report.rational,
            }))?
        }
    };
    let mut out = Output::primary(primary);
    if let Some(path) = table_path {
        out.extra_files.push((path, table.to_csv()));
    }
    Ok(out)
}

pub fn run_freq(
    spec: &THConfigSpec,
    compare: Option<&THConfigSpec>,
    tol: f64,
    format: Format,
    check: bool,
) -> RunResult {
    let config = THConfig::from_spec(spec)?;
    if check {
        let mut checks = Vec::new();
        let iv = invariant_vector(&config)?;
        let sum: f64 = iv.phi_k.iter().sum();
        checks.push(PropertyCheck {
            name: "phi-sum",
            pass: (sum - iv.phi).abs() < 1e-12,
            detail: format!("sum Phi_k = {sum:.15}, phi = {:.15}", iv.phi),
        });
        let shifted = invariant_vector(&config.translated(0.041))?;
        checks.push(PropertyCheck {
            name: "translation-invariance",
            pass: iv
                .phi_k
                .iter()
                .zip(&shifted.phi_k)
                .all(|(a, b)| (a - b).abs() < 1e-12),
            detail: "Phi unchanged under a common chart shift".into(),
        });
        let verdict = equivalence_verdict(&iv, &shifted, 1e-9, None)?;
        checks.push(PropertyCheck {
            name: "translation-not-distinguished",
            pass: verdict == Verdict::NotDistinguished,
            detail: format!("{verdict:?}"),
        });
        return render_checks(&checks);
    }

    let iv = invariant_vector(&config)?;
    let projective = projective_invariant(&config)?;
    let verdict = match compare {
        None => None,
        Some(other_spec) => {
            let other = THConfig::from_spec(other_spec)?;
            let other_iv = invariant_vector(&other)?;
            Some(equivalence_verdict(&iv, &other_iv, tol.max(1e-12), None)?)
        }
    };

    let primary = match format {
        Format::Csv => {
            let mut s = String::from("k,Phi_k,predicted_psi,phi,q\n");
            let q_field = iv.q.map_or(String::new(), |q| q.to_string());
            for (k, phi_k) in iv.phi_k.iter().enumerate() {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    k + 1,
                    fmt_g17(*phi_k),
                    fmt_g17(phi_k / iv.phi),
                    fmt_g17(iv.phi),
                    q_field
                ));
            }
            if let Some(v) = &verdict {
                s.push_str(&match v {
                    Verdict::NotDistinguished => "verdict,not_distinguished\n".to_string(),
                    Verdict::Inequivalent { reason } => {
                        format!("verdict,inequivalent: {}\n", reason.replace(',', ";"))
                    }
                });
            }
            s
        }
        Format::Json => to_json_pretty(&json!({
            "phi": iv.phi,
            "q": iv.q,
            "Phi": iv.phi_k,
            "predicted_psi": iv.phi_k.iter().map(|p| p / iv.phi).collect::<Vec<_>>(),
            "projective": projective,
            "verdict": verdict,
        }))?,
    };
    Ok(Output::primary(primary))
}

pub fn run_rotate(
    input: &RotateInput,
    depth: u64,
    format: Format,
    check: bool,
) -> RunResult {
    let rho = input.rotation_number()?;
    let j = CircleInterval::new(input.j.a, input.j.b);
    if check {
        return render_checks(&polycycle_lab::checks::rotation_checks(
            input.c,
            rho,
            j,
            input.kind,
            depth.min(200_000),
        )?);
    }
    let drift_fn = input.drift.map(|p| move |n: u64| p.r * p.q.powi(n.min(1 << 24) as i32));
    let shrink = input.j_shrink;
    let seq_fn = shrink.map(|p| {
        move |n: u64| {
            let d = p.r * p.q.powi(n.min(1 << 24) as i32);
            CircleInterval::new(j.a + d, j.b - d)
        }
    });
    let problem = RotationProblem {
        c: input.c,
        rho,
        drift: drift_fn.as_ref().map(|f| f as &(dyn Fn(u64) -> f64 + Sync)),
        j_limit: j,
        j_seq: seq_fn
            .as_ref()
            .map(|f| f as &(dyn Fn(u64) -> CircleInterval + Sync)),
        endpoint_kind: input.kind,
        decay_from: input.decay_from,
    };
    let trace = orbit_frequency(&problem, depth)?;
    let prediction = polycycle_lab::predicted_limit(rho, j, polycycle_lab::invariant::Q_MAX_DEFAULT);
    let (kind, value, bounds_ok) = match prediction {
        Prediction::Exact(l) => ("exact", l, true),
        Prediction::Bounds { q } => {
            let lower = -1.0 / q as f64 + trace.limsup_est() <= j.length() + 1e-12;
            let upper = j.length() <= 1.0 / q as f64 + trace.liminf_est() + 1e-12;
            // cross-check one exact period when the drift vanishes
            if input.drift.is_none() && input.j_shrink.is_none() {
                if let Some(r) = polycycle_lab::detect_rational(
                    rho,
                    polycycle_lab::invariant::Q_MAX_DEFAULT,
                    1e-12,
                ) {
                    rational_orbit_count(input.c, r.p, r.q, j, input.kind)?;
                }
            }
            ("bounds", q as f64, lower && upper)
        }
    };
    if !bounds_ok {
        return Err(Failure::validation(format!(
            "rational-rotation frequency bounds violated (q = {value})"
        )));
    }
    let primary = match format {
        Format::Csv => {
            let mut s = String::from(
                "n,count,psi,liminf_est,limsup_est,prediction_kind,prediction_value,bounds_ok\n",
            );
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                depth,
                trace.count(depth),
                fmt_g17(trace.psi(depth)),
                fmt_g17(trace.liminf_est()),
                fmt_g17(trace.limsup_est()),
                kind,
                fmt_g17(value),
                bounds_ok
            ));
            s
        }
        Format::Json => to_json_pretty(&json!({
            "n": depth,
            "count": trace.count(depth),
            "psi": trace.psi(depth),
            "liminf_est": trace.liminf_est(),
            "limsup_est": trace.limsup_est(),
            "prediction_kind": kind,
            "prediction_value": value,
            "bounds_ok": bounds_ok,
        }))?,
    };
    Ok(Output::primary(primary))
}

pub fn run_certify(
    input: &CertifyInput,
    seed: u64,
    format: Format,
    check: bool,
) -> RunResult {
    let model = input.model.build()?;
    let mut grid = input.grid.apply(GridSpec::default());
    if seed != 0 {
        grid.jitter_seed = Some(seed);
    }
    if check {
        return render_checks(&polycycle_lab::checks::model_checks(&model, &grid)?);
    }
    let cert = certify_estimates(&model, &grid)?;
    let primary = match format {
        Format::Csv => {
            let mut s = String::from(
                "pass,c,C,delta,grid_size,map_min,map_max,dx_min,dx_max,deps_min,deps_max,\
                 deps_exempt,iterates_checked\n",
            );
            let w = &cert.worst_ratios;
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                cert.pass,
                fmt_g17(cert.c),
                fmt_g17(cert.big_c),
                fmt_g17(cert.delta),
                cert.grid_size,
                fmt_g17(w.map_min),
                fmt_g17(w.map_max),
                fmt_g17(w.dx_min),
                fmt_g17(w.dx_max),
                fmt_g17(w.deps_min),
                fmt_g17(w.deps_max),
                cert.deps_exempt,
                cert.iterates_checked
            ));
            s
        }
        Format::Json => to_json_pretty(&cert)?,
    };
    if !cert.pass {
        return Err(Failure::Validation(format!(
            "estimate certificate failed: {}",
            cert.failures.join("; ")
        )));
    }
    Ok(Output::primary(primary))
}
