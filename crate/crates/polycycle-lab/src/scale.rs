//! Arithmetic on the neg-log scale u = -ln x and the log-log scale
//! xi = ln(-ln x).
//!
//! Quantities of the form eps_n ~ exp(-exp(n |ln Lambda|)) underflow any
//! floating-point format after a handful of steps. Everything downstream
//! therefore computes on the u- or xi-scale and converts back to x only for
//! reporting, when the value is representable at all.

use crate::error::{Error, Result};

/// Default absolute comparison tolerance on the xi/u scales.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Largest u = -ln x for which x = exp(-u) is still a normal positive double
/// (-ln of `f64::MIN_POSITIVE`). Beyond this, stay on the u-scale.
pub const NEG_LOG_MAX: f64 = 708.396_418_532_264_1;

/// A point x in (0, 1) stored as xi = ln(-ln x).
///
/// The ordering is reversed: xi_1 < xi_2 iff x_1 > x_2, over the whole
/// admissible range. xi ranges over all of R; x = exp(-exp(xi)).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogLogCoord {
    pub xi: f64,
}

/// A point x in (0, 1) stored as u = -ln x > 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NegLog {
    pub u: f64,
}

/// Outcome of mapping a xi-coordinate back to x = exp(-exp(xi)).
///
/// Underflow is a value, not an error: callers producing sub-representable
/// eps_n keep going on the xi-scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XValue {
    Finite(f64),
    Underflow,
}

impl XValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            XValue::Finite(x) => Some(x),
            XValue::Underflow => None,
        }
    }

    pub fn is_underflow(self) -> bool {
        matches!(self, XValue::Underflow)
    }
}

impl LogLogCoord {
    pub fn new(xi: f64) -> Self {
        LogLogCoord { xi }
    }

    pub fn from_x(x: f64) -> Result<Self> {
        xi_from_x(x)
    }

    pub fn to_x(self) -> XValue {
        x_from_xi(self)
    }

    pub fn to_neg_log(self) -> NegLog {
        NegLog { u: self.xi.exp() }
    }
}

impl NegLog {
    pub fn new(u: f64) -> Result<Self> {
        if u > 0.0 && u.is_finite() {
            Ok(NegLog { u })
        } else {
            Err(Error::domain(format!("neg-log coordinate must satisfy u > 0, got {u}")))
        }
    }

    pub fn from_x(x: f64) -> Result<Self> {
        if x > 0.0 && x < 1.0 {
            Ok(NegLog { u: -x.ln() })
        } else {
            Err(Error::domain(format!("x must lie in (0, 1), got {x}")))
        }
    }

    pub fn to_log_log(self) -> LogLogCoord {
        LogLogCoord { xi: self.u.ln() }
    }
}

/// xi = ln(-ln x) for x in (0, 1).
pub fn xi_from_x(x: f64) -> Result<LogLogCoord> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain(format!("x must lie in (0, 1), got {x}")));
    }
    Ok(LogLogCoord { xi: (-x.ln()).ln() })
}

/// x = exp(-exp(xi)), or `Underflow` when exp(xi) exceeds the representable
/// neg-log range.
pub fn x_from_xi(xi: LogLogCoord) -> XValue {
    let u = xi.xi.exp();
    if u > NEG_LOG_MAX {
        XValue::Underflow
    } else {
        XValue::Finite((-u).exp())
    }
}

/// The map x -> C x^Lambda on the u-scale: u -> Lambda u - c with c = ln C.
///
/// Exact-form affine arithmetic; the image must stay inside (0, 1).
pub fn power_law_step_u(u: NegLog, lambda: f64, c: f64) -> Result<NegLog> {
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("exponent must be positive, got {lambda}")));
    }
    let next = lambda * u.u - c;
    if next > 0.0 {
        Ok(NegLog { u: next })
    } else {
        Err(Error::domain(format!(
            "power-law image left (0, 1): Lambda u - c = {next} <= 0"
        )))
    }
}

/// t reduced modulo `circumference`, result in [0, circumference).
pub fn circle_reduce(t: f64, circumference: f64) -> Result<f64> {
    if !(circumference > 0.0 && circumference.is_finite()) {
        return Err(Error::domain(format!(
            "circumference must be positive and finite, got {circumference}"
        )));
    }
    let r = t.rem_euclid(circumference);
    // rem_euclid of a tiny negative t can round up to the circumference itself
    if r >= circumference {
        Ok(0.0)
    } else {
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn xi_of_reference_points() {
        // ln(-ln e^-1) = ln 1 = 0
        assert_eq!(xi_from_x((-1.0f64).exp()).unwrap().xi, 0.0);
        // ln(-ln e^-e) = ln e = 1
        assert!((xi_from_x((-std::f64::consts::E).exp()).unwrap().xi - 1.0).abs() < 1e-14);
        // frozen arbitrary-precision value of ln(ln 100)
        assert!((xi_from_x(0.01).unwrap().xi - 1.527_179_625_807_901_1).abs() < 1e-12);
    }

    #[test]
    fn xi_domain_errors() {
        assert!(matches!(xi_from_x(0.0), Err(Error::Domain(_))));
        assert!(matches!(xi_from_x(1.0), Err(Error::Domain(_))));
        assert!(matches!(xi_from_x(-0.5), Err(Error::Domain(_))));
        assert!(matches!(xi_from_x(1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn x_from_xi_reference_points() {
        let e_inv = x_from_xi(LogLogCoord::new(0.0)).finite().unwrap();
        assert!((e_inv - (-1.0f64).exp()).abs() < 1e-15);
        let x1 = x_from_xi(LogLogCoord::new(1.0)).finite().unwrap();
        // frozen: exp(-e)
        assert!((x1 - 0.065_988_035_845_312_54).abs() < 1e-15);
    }

    #[test]
    fn x_from_xi_underflows_as_a_value() {
        // exp(10) ~ 22026 > NEG_LOG_MAX: the x-value is sub-representable
        assert!(x_from_xi(LogLogCoord::new(10.0)).is_underflow());
        // just inside the representable range
        assert!(x_from_xi(LogLogCoord::new(NEG_LOG_MAX.ln() - 1e-3)).finite().is_some());
    }

    #[test]
    fn power_law_step_reference_points() {
        let u = NegLog::new(1.0).unwrap();
        assert_eq!(power_law_step_u(u, 2.0, 0.0).unwrap().u, 2.0);

        // u = ln 10, Lambda = 2, c = ln 2: u' = 2 ln 10 - ln 2 = -ln(2 * 0.1^2)
        let u = NegLog::new(10.0f64.ln()).unwrap();
        let got = power_law_step_u(u, 2.0, 2.0f64.ln()).unwrap().u;
        assert!((got - 3.912_023_005_428_146).abs() < 1e-13);

        let u = NegLog::new(0.1).unwrap();
        assert!(matches!(
            power_law_step_u(u, 0.5, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn circle_reduce_reference_points() {
        assert!((circle_reduce(5.3, 2.0).unwrap() - 1.3).abs() < 1e-12);
        assert!((circle_reduce(-0.5, 2.0).unwrap() - 1.5).abs() < 1e-12);
        let circ = 1.25f64.ln();
        let got = circle_reduce(3.0 * circ + 0.1, circ).unwrap();
        assert!((got - 0.1).abs() < 1e-12);
        assert!(matches!(circle_reduce(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(circle_reduce(1.0, -2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn circle_reduce_never_returns_circumference() {
        // -1e-18 + 2.0 rounds to 2.0; the result must still be < 2.0
        let r = circle_reduce(-1e-18, 2.0).unwrap();
        assert!((0.0..2.0).contains(&r));
    }

    proptest! {
        #[test]
        fn round_trip_xi(xi in -5.0f64..5.0) {
            let x = x_from_xi(LogLogCoord::new(xi)).finite().unwrap();
            let back = xi_from_x(x).unwrap().xi;
            prop_assert!((back - xi).abs() < 1e-12);
        }

        #[test]
        fn ordering_reverses(a in 1e-300f64..1.0, b in 1e-300f64..1.0) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let xi_lo = xi_from_x(lo).unwrap().xi;
            let xi_hi = xi_from_x(hi).unwrap().xi;
            prop_assert!(xi_lo > xi_hi);
        }

        #[test]
        fn neg_log_round_trip(u in 1e-3f64..1e3) {
            let back = NegLog::new(u).unwrap().to_log_log().to_neg_log();
            prop_assert!((back.u - u).abs() <= 1e-14 * u);
        }

        #[test]
        fn power_law_step_matches_direct(x in 1e-8f64..0.9, lambda in 0.2f64..3.0, c_mult in 0.2f64..5.0) {
            let u = NegLog::from_x(x).unwrap();
            let c = c_mult.ln();
            if let Ok(stepped) = power_law_step_u(u, lambda, c) {
                let direct = c_mult * x.powf(lambda);
                prop_assume!(direct > 0.0 && direct < 1.0);
                let expect = -direct.ln();
                prop_assert!((stepped.u - expect).abs() <= 1e-13 * expect.abs().max(1.0));
            }
        }

        #[test]
        fn circle_reduce_periodic(t in -50.0f64..50.0, k in -20i64..20, circ in 0.1f64..7.0) {
            let a = circle_reduce(t, circ).unwrap();
            let b = circle_reduce(t + (k as f64) * circ, circ).unwrap();
            let diff = (a - b).abs();
            prop_assert!(diff < 1e-12 || (circ - diff).abs() < 1e-12);
        }
    }
}
