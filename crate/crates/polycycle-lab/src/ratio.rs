//! Rationality detection through continued-fraction convergents.
//!
//! A float never proves irrationality; what can be decided is whether some
//! convergent with a small denominator approximates the value to within a
//! tight relative tolerance. Doubles carrying a true irrational terminate at
//! denominators far beyond any reasonable `q_max`, so they read as
//! irrational, while 0.5 or ln(sqrt 2)/ln 2 are flagged with their exact
//! denominator.

/// A convergent p/q that matches the input within the requested tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalApprox {
    pub p: i64,
    pub q: u64,
}

impl RationalApprox {
    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

/// A generic irrational has convergents with err ~ 1/q^2; a float carrying a
/// true rational lands on it with err orders of magnitude below that. Only
/// convergents beating 1/q^2 by this factor count as detections, otherwise
/// every real with a denominator near sqrt(1/rel_tol) would be flagged.
const EXCEPTIONAL_JUMP: f64 = 0.005;

/// Search the continued-fraction convergents of `x` for one with denominator
/// <= `q_max`, relative error < `rel_tol` (absolute for |x| <= 1), and an
/// exceptionally small err * q^2.
pub fn detect_rational(x: f64, q_max: u64, rel_tol: f64) -> Option<RationalApprox> {
    if !x.is_finite() {
        return None;
    }
    let scale = x.abs().max(1.0);
    let target = rel_tol * scale;
    let jump_target = EXCEPTIONAL_JUMP * scale;

    // convergent recurrences p_k = a_k p_{k-1} + p_{k-2}, same for q
    let mut p_prev: i128 = 1;
    let mut p_curr: i128 = x.floor() as i128;
    let mut q_prev: i128 = 0;
    let mut q_curr: i128 = 1;
    let mut frac = x - x.floor();

    for _ in 0..64 {
        let err = (x - p_curr as f64 / q_curr as f64).abs();
        let q_sq = (q_curr as f64) * (q_curr as f64);
        if err <= target && err * q_sq <= jump_target {
            return Some(RationalApprox { p: p_curr as i64, q: q_curr as u64 });
        }
        if frac.abs() < f64::EPSILON {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        if !(a >= 1.0) || a >= 9.0e18 {
            break;
        }
        frac = inv - a;
        let a = a as i128;
        let p_next = a * p_curr + p_prev;
        let q_next = a * q_curr + q_prev;
        if q_next as u128 > q_max as u128 || p_next.unsigned_abs() > i64::MAX as u128 {
            break;
        }
        p_prev = p_curr;
        p_curr = p_next;
        q_prev = q_curr;
        q_curr = q_next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_small_rationals() {
        assert_eq!(detect_rational(0.5, 1_000_000, 1e-12), Some(RationalApprox { p: 1, q: 2 }));
        assert_eq!(detect_rational(0.0, 1_000_000, 1e-12), Some(RationalApprox { p: 0, q: 1 }));
        assert_eq!(detect_rational(2.0, 10, 1e-12), Some(RationalApprox { p: 2, q: 1 }));
        assert_eq!(
            detect_rational(2.0 / 5.0, 1_000_000, 1e-12),
            Some(RationalApprox { p: 2, q: 5 })
        );
        assert_eq!(
            detect_rational(-1.0 / 3.0, 1_000_000, 1e-12),
            Some(RationalApprox { p: -1, q: 3 })
        );
    }

    #[test]
    fn computed_rational_ratios() {
        // ln(2^(1/2))/ln 2 = 1/2 up to rounding
        let phi = 2.0f64.sqrt().ln() / 2.0f64.ln();
        assert_eq!(detect_rational(phi, 1_000_000, 1e-12), Some(RationalApprox { p: 1, q: 2 }));
        let phi = 2.0f64.powf(2.0 / 5.0).ln() / 2.0f64.ln();
        assert_eq!(detect_rational(phi, 1_000_000, 1e-12), Some(RationalApprox { p: 2, q: 5 }));
    }

    #[test]
    fn irrational_ratios_not_flagged() {
        let phi = 1.25f64.ln() / 2.0f64.ln();
        assert_eq!(detect_rational(phi, 1_000_000, 1e-12), None);
        let golden = (5.0f64.sqrt() - 1.0) / 2.0;
        assert_eq!(detect_rational(golden, 1_000_000, 1e-12), None);
        assert_eq!(detect_rational(std::f64::consts::PI, 1_000_000, 1e-12), None);
    }

    #[test]
    fn q_max_limits_the_search() {
        // 355/113 approximates pi to ~3e-7 -- good, but not to 1e-12
        assert_eq!(detect_rational(std::f64::consts::PI, 113, 1e-6).map(|r| r.q), Some(113));
        assert_eq!(detect_rational(1.0 / 977.0, 100, 1e-12), None);
        assert_eq!(
            detect_rational(1.0 / 977.0, 1000, 1e-12),
            Some(RationalApprox { p: 1, q: 977 })
        );
    }
}
