//! Deterministic float formatting for CSV and manifest output.
//!
//! All numeric output goes through one formatter so that repeated runs
//! produce byte-identical files: scientific notation with 17 significant
//! digits, enough to round-trip any f64 exactly.

/// Format with 17 significant digits (1 before the decimal point, 16 after).
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Join formatted floats with commas.
pub fn csv_row(values: &[f64]) -> String {
    values.iter().map(|&v| float(v)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::float;

    #[test]
    fn roundtrips_exactly() {
        for &x in &[
            0.0,
            1.0,
            -1.5,
            3.8e6,
            -2.718281828459045e-7,
            f64::MIN_POSITIVE,
            1.0 / 3.0,
        ] {
            let s = float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s} did not round-trip");
        }
    }

    #[test]
    fn is_deterministic() {
        assert_eq!(float(1.0 / 3.0), float(1.0 / 3.0));
        assert_eq!(float(0.1), "1.0000000000000001e-1");
    }
}
