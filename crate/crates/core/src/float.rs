/// Renders a float as the shortest decimal that parses back to the same
/// bits, always carrying at least one fractional digit (`334.0`, `1.0e16`).
pub fn format_float(value: f64) -> String {
    let s = format!("{value:?}");
    if !value.is_finite() || s.contains('.') {
        return s;
    }
    match s.find('e') {
        Some(pos) => format!("{}.0{}", &s[..pos], &s[pos..]),
        None => format!("{s}.0"),
    }
}
