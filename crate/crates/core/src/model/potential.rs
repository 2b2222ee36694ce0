//! The exponential potentials driving every dual update.

use std::f64::consts::E;

/// 1 - 1/e, the free-disposal competitive ratio.
pub const ONE_MINUS_INV_E: f64 = 1.0 - 1.0 / E;

/// 1/(1-1/e), the target rate of dual growth per unit of primal.
pub const RATE: f64 = 1.0 / ONE_MINUS_INV_E;

/// g(y) = e^(y-1) / (1 - 1/e).
pub fn g(y: f64) -> f64 {
    (y - 1.0).exp() / ONE_MINUS_INV_E
}

/// G(y) = (e^(y-1) - 1/e) / (1 - 1/e), the primitive of g with G(0) = 0 and G(1) = 1.
pub fn big_g(y: f64) -> f64 {
    // expm1 keeps precision for y near 0
    (-1.0f64).exp() * y.exp_m1() / ONE_MINUS_INV_E
}

/// Primitive of G vanishing at 0, used to integrate ledgers exactly over a step.
pub fn big_h(y: f64) -> f64 {
    let inv_e = (-1.0f64).exp();
    inv_e * (y.exp_m1() - y) / ONE_MINUS_INV_E
}

/// Bound e^(-r) - 1/e for the additive-budget algorithm at a given R_max.
pub fn budget_bound(r_max: f64) -> f64 {
    (-r_max).exp() - (-1.0f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        assert_eq!(big_g(0.0), 0.0);
        assert!((big_g(1.0) - 1.0).abs() < 1e-15);
        assert!((g(1.0) - 1.581_976_706_869_326_4).abs() < 1e-12);
        assert_eq!(big_h(0.0), 0.0);
    }

    #[test]
    fn rate_identity_on_grid() {
        for k in 0..=1000 {
            let y = k as f64 / 1000.0;
            assert!((1.0 - big_g(y) + g(y) - RATE).abs() < 1e-14, "y = {y}");
        }
    }

    #[test]
    fn strictly_increasing() {
        let mut prev = (g(0.0), big_g(0.0));
        for k in 1..=10_000 {
            let y = k as f64 / 10_000.0;
            let cur = (g(y), big_g(y));
            assert!(cur.0 > prev.0 && cur.1 > prev.1);
            prev = cur;
        }
    }

    #[test]
    fn primitives_match_quadrature() {
        // composite Simpson on a fine grid as an independent check of G' = g and H' = G
        let simpson = |f: &dyn Fn(f64) -> f64, b: f64| {
            let n = 2000;
            let h = b / n as f64;
            let mut s = f(0.0) + f(b);
            for k in 1..n {
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
            }
            s * h / 3.0
        };
        for &b in &[0.1, 0.5, 0.9, 1.0] {
            assert!((simpson(&g, b) - big_g(b)).abs() < 1e-12);
            assert!((simpson(&big_g, b) - big_h(b)).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_bound_limits() {
        assert_eq!(budget_bound(1.0), 0.0);
        assert!((budget_bound(0.0) - ONE_MINUS_INV_E).abs() < 1e-15);
    }
}
