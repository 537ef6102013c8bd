/// One-sided 95% normal quantile.
pub const Z_95_ONE_SIDED: f64 = 1.644_853_626_951_472_2;

/// Lower end of the one-sided 95% Wilson score interval for `successes` out
/// of `trials`. `None` when there are no trials.
pub fn wilson_lower(successes: usize, trials: usize) -> Option<f64> {
    if trials == 0 {
        return None;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95_ONE_SIDED * Z_95_ONE_SIDED;
    let centre = p + z2 / (2.0 * n);
    let spread = Z_95_ONE_SIDED * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Some(((centre - spread) / (1.0 + z2 / n)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn known_values() {
        assert_eq!(wilson_lower(0, 0), None);
        assert_eq!(wilson_lower(0, 10), Some(0.0));
        // all successes: n / (n + z²)
        let z2 = Z_95_ONE_SIDED * Z_95_ONE_SIDED;
        assert_relative_eq!(
            wilson_lower(200, 200).unwrap(),
            200.0 / (200.0 + z2),
            epsilon = 1e-12
        );
        // 90 / 100 against the closed form evaluated by hand
        let n = 100.0;
        let p = 0.9;
        let lo = (p + z2 / (2.0 * n)
            - Z_95_ONE_SIDED * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt())
            / (1.0 + z2 / n);
        assert_relative_eq!(wilson_lower(90, 100).unwrap(), lo, epsilon = 1e-15);
        assert!(lo < 0.9 && lo > 0.83);
    }

    #[test]
    fn monotone_in_successes() {
        let mut prev = -1.0;
        for k in 0..=50 {
            let w = wilson_lower(k, 50).unwrap();
            assert!(w > prev);
            assert!(w <= k as f64 / 50.0);
            prev = w;
        }
    }
}
