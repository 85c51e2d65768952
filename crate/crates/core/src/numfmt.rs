//! Deterministic number rendering shared by the MPS writer, CSV and text output.

/// Shortest round-trip decimal; integral values below 1e15 print without a fraction.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v.fract() == 0.0 && v.abs() < 1e15 {
        let i = v as i64;
        return i.to_string();
    }
    format!("{v:?}")
}
