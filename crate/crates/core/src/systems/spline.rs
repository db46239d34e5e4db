/// Compactly supported cubic spline profile used for wave initial data.
///
/// Negative arguments are reflected, so callers may pass `a (x - c)` directly.
pub fn spline_h(s: f64) -> f64 {
    let s = s.abs();
    if s <= 1.0 {
        1.0 - 1.5 * s * s + 0.75 * s * s * s
    } else if s <= 2.0 {
        let r = 2.0 - s;
        0.25 * r * r * r
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_values() {
        assert_eq!(spline_h(0.0), 1.0);
        assert_eq!(spline_h(2.0), 0.0);
        assert_eq!(spline_h(5.0), 0.0);
        assert_eq!(1.0 - 1.5 + 0.75, 0.25);
        assert_eq!(spline_h(1.0), 0.25);
        assert!((spline_h(1.0 + 1e-12) - 0.25).abs() < 1e-11);
        assert_eq!(spline_h(-0.5), spline_h(0.5));
    }
}
