//! Helpers for deterministic numeric output.

/// Rounds to 15 significant digits so serialized values are stable.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

/// Formats at 15 significant digits.
pub fn fmt15(x: f64) -> String {
    format!("{x:.14e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round15(0.1 + 0.2), 0.3);
        assert_eq!(round15(1.0 / 3.0), 0.333333333333333);
        assert!(round15(f64::NAN).is_nan());
        assert_eq!(fmt15(2.5), "2.50000000000000e0");
    }
}
