/// Formats a double with 17 significant digits, enough to round-trip.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}
