//! Bit-stable number formatting for reports.

/// 17 significant digits in scientific notation.
pub fn sci(x: f64) -> String {
    if x == 0.0 {
        // Avoid "-0" and keep one spelling of zero.
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}
