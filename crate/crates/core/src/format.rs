//! Number formatting shared by the CSV writers.

/// Formats `x` with `digits` significant digits and no trailing zeros.
pub fn sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x).parse().expect("scientific notation round-trips");
    rounded.to_string()
}

/// Rounds to a fixed number of decimals, as the printed tables do.
pub fn fixed(x: f64, decimals: usize) -> String {
    format!("{:.*}", decimals, x)
}
