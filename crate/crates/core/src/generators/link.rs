//! Softplus link between free parameters and positive rates.

/// Smallest rate the softplus link can produce.
pub const RATE_FLOOR: f64 = 1e-12;

#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Rate under the softplus link, floored at [`RATE_FLOOR`].
#[inline]
pub fn rate(theta: f64) -> f64 {
    softplus(theta).max(RATE_FLOOR)
}

/// d rate / d theta; zero where the floor is active.
#[inline]
pub fn rate_derivative(theta: f64) -> f64 {
    if softplus(theta) > RATE_FLOOR {
        sigmoid(theta)
    } else {
        0.0
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`softplus`] on (0, ∞): ln(e^r − 1).
#[inline]
pub fn softplus_inv(r: f64) -> f64 {
    let r = r.max(RATE_FLOOR);
    r + (-(-r).exp_m1()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_values() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-16);
        assert!((softplus(50.0) - 50.0).abs() < 1e-15);
        assert!(softplus(-800.0) == 0.0);
        assert_eq!(rate(-800.0), RATE_FLOOR);
        assert_eq!(rate_derivative(-800.0), 0.0);
    }

    #[test]
    fn inverse_round_trips() {
        for &r in &[1e-9, 1e-3, 0.3, 1.0, 1.999, 7.5, 40.0] {
            let back = softplus(softplus_inv(r));
            assert!((back - r).abs() <= 1e-13 * r.max(1.0), "{r} -> {back}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for &x in &[-4.0, -0.5, 0.0, 0.7, 3.0] {
            let h = 1e-6;
            let fd = (softplus(x + h) - softplus(x - h)) / (2.0 * h);
            assert!((fd - rate_derivative(x)).abs() < 1e-9);
        }
    }
}
