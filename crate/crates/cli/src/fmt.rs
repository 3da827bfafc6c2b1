/// Six significant digits for terminal tables.
pub fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig(0.788675134594813), "0.788675");
        assert_eq!(sig(0.15373715304169078), "0.153737");
        assert_eq!(sig(1234567.0), "1234567");
        assert_eq!(sig(0.5), "0.5");
        assert_eq!(sig(-0.00012345678), "-0.000123457");
        assert_eq!(sig(0.0), "0");
    }
}
