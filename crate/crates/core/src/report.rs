//! Locale-free number formatting for TSV/CSV reports.

/// `num / den` rounded half-up to `places` decimals, computed exactly in
/// integer arithmetic.
pub fn ratio_half_up(num: u64, den: u64, places: u32) -> String {
    if den == 0 {
        return "nan".into();
    }
    let scale = 10u128.pow(places);
    let (n, d) = (num as u128, den as u128);
    let scaled = (2 * n * scale + d) / (2 * d);
    fixed(scaled, scale, places)
}

/// `num / den` truncated to `places` decimals.
pub fn ratio_truncated(num: u64, den: u64, places: u32) -> String {
    if den == 0 {
        return "nan".into();
    }
    let scale = 10u128.pow(places);
    fixed(num as u128 * scale / den as u128, scale, places)
}

fn fixed(scaled: u128, scale: u128, places: u32) -> String {
    if places == 0 {
        return scaled.to_string();
    }
    format!(
        "{}.{:0width$}",
        scaled / scale,
        scaled % scale,
        width = places as usize
    )
}

/// Fixed-point rendering of a float with `places` decimals.
pub fn float(x: f64, places: usize) -> String {
    if x == 0.0 {
        // avoid "-0.0000"
        return format!("{:.places$}", 0.0);
    }
    format!("{x:.places$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_up_boundaries() {
        assert_eq!(ratio_half_up(437, 604, 2), "0.72");
        assert_eq!(ratio_half_up(1215, 604, 2), "2.01");
        assert_eq!(ratio_half_up(1, 8, 2), "0.13");
        assert_eq!(ratio_half_up(3, 8, 2), "0.38");
        assert_eq!(ratio_half_up(19044, 73022, 3), "0.261");
        assert_eq!(ratio_half_up(5, 1, 0), "5");
    }

    #[test]
    fn truncation() {
        assert_eq!(ratio_truncated(573, 1713, 3), "0.334");
        assert_eq!(ratio_truncated(779, 2803, 3), "0.277");
        assert_eq!(ratio_truncated(1, 1, 3), "1.000");
    }

    #[test]
    fn float_formatting() {
        assert_eq!(float(-0.0, 2), "0.00");
        assert_eq!(float(59.46035575, 4), "59.4604");
    }
}
