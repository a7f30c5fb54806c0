//! Text formatting shared by every emitted artifact.

/// Seventeen significant digits in scientific notation, so every `f64`
/// round-trips exactly and equal values print identically.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}
