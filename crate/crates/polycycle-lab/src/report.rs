//! Shared formatting for tabular outputs: plots and regression diffs depend
//! on byte-stable fields.

/// Floating-point field format used by every CSV/JSON table: 17 significant
/// digits, '.' decimal separator, plain e-notation.
pub fn fmt_g17(x: f64) -> String {
    format!("{:.16e}", x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_g17(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_g17(std::f64::consts::PI), "3.1415926535897931e0");
        // round-trips exactly
        let x = 0.32192809488736235f64;
        assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
    }
}
