//! Closed-form sweep rates of the two-subdomain method on `(0, 1)` with
//! `Ω₁ = (0, s)` and `Ω₂ = (r, 1)`.
//!
//! `g(z) = sinh²z + sin²z` grows like `e^{2z}/4`, so every ratio of `g`
//! values is formed from logarithms.

use std::f64::consts::{LN_2, SQRT_2};

use crate::error::{Error, Result};

/// Beyond this argument `g` and `sinh` are evaluated through their
/// exponential asymptotics.
const LOG_SWITCH: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Analytic1DConfig {
    pub r: f64,
    pub s: f64,
    pub alpha: f64,
}

impl Analytic1DConfig {
    pub fn new(r: f64, s: f64, alpha: f64) -> Result<Self> {
        check_interfaces(r, s)?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { r, s, alpha })
    }

    pub fn gamma(&self) -> f64 {
        gamma(self.alpha)
    }

    pub fn rho_c(&self) -> f64 {
        rho_c_gamma(self.r, self.s, self.gamma())
    }

    pub fn rho_e(&self) -> f64 {
        rho_e(self.r, self.s)
    }
}

fn check_interfaces(r: f64, s: f64) -> Result<()> {
    if 0.0 < r && r < s && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("need 0 < r < s < 1, got r = {r}, s = {s}")))
    }
}

/// `γ = (√2/2) α^(-1/4)`.
pub fn gamma(alpha: f64) -> f64 {
    0.5 * SQRT_2 * alpha.powf(-0.25)
}

/// `sinh²z + sin²z`; overflows to infinity past `z ≈ 355`, use [`ln_g`] there.
pub fn g(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < LOG_SWITCH {
        z.sinh().powi(2) + z.sin().powi(2)
    } else {
        ln_g(z).exp()
    }
}

/// `ln g(z)` for `z > 0`; `-inf` at zero.
pub fn ln_g(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < LOG_SWITCH {
        (z.sinh().powi(2) + z.sin().powi(2)).ln()
    } else {
        // 4g = e^{2z} (1 + (4 sin²z - 2 + e^{-2z}) e^{-2z})
        let e = (-2.0 * z).exp();
        2.0 * z - 2.0 * LN_2 + ((4.0 * z.sin().powi(2) - 2.0 + e) * e).ln_1p()
    }
}

fn ln_sinh(x: f64) -> f64 {
    if x < LOG_SWITCH {
        x.sinh().ln()
    } else {
        x - LN_2 + (-(-2.0 * x).exp()).ln_1p()
    }
}

/// `L(x, s) = g(γx) / g(γs)` for `x ∈ [0, s]`.
pub fn left_factor(x: f64, s: f64, gamma: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    (ln_g(gamma * x) - ln_g(gamma * s)).exp()
}

/// `R(r, x) = g(γ(1-x)) / g(γ(1-r))` for `x ∈ [r, 1]`.
pub fn right_factor(r: f64, x: f64, gamma: f64) -> f64 {
    if x == 1.0 {
        return 0.0;
    }
    (ln_g(gamma * (1.0 - x)) - ln_g(gamma * (1.0 - r))).exp()
}

/// `ρ_c = L(r, s) R(r, s)` at a given `γ`.
pub fn rho_c_gamma(r: f64, s: f64, gamma: f64) -> f64 {
    let ln = ln_g(gamma * r) - ln_g(gamma * s) + ln_g(gamma * (1.0 - s)) - ln_g(gamma * (1.0 - r));
    ln.exp()
}

pub fn rho_c(config: &Analytic1DConfig) -> f64 {
    config.rho_c()
}

/// Sweep rate of the Laplace equation, `r(1-s) / (s(1-r))`.
pub fn rho_e(r: f64, s: f64) -> f64 {
    r * (1.0 - s) / (s * (1.0 - r))
}

/// Sweep rate of `-w'' + β²w = 0`; `β = 0` gives [`rho_e`].
pub fn rho_e_beta(r: f64, s: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return rho_e(r, s);
    }
    (ln_sinh(beta * r) + ln_sinh(beta * (1.0 - s)) - ln_sinh(beta * s) - ln_sinh(beta * (1.0 - r))).exp()
}

/// `count` evenly spaced samples `(γ, ρ_c(γ))` over `[lo, hi]`.
pub fn rate_vs_gamma_scan(r: f64, s: f64, range: (f64, f64), count: usize) -> Result<Vec<(f64, f64)>> {
    check_interfaces(r, s)?;
    let (lo, hi) = range;
    if !(0.0 < lo && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if count < 2 {
        return Err(Error::InvalidParameter(format!("scan needs at least 2 samples, got {count}")));
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            let gamma = if i + 1 == count { hi } else { lo + step * i as f64 };
            (gamma, rho_c_gamma(r, s, gamma))
        })
        .collect())
}

/// `(ρ_c, ρ̃_{e,β})` with `β = 2γ = √2 α^(-1/4)`.
pub fn better_estimate_pairing(r: f64, s: f64, alpha: f64) -> Result<(f64, f64)> {
    let config = Analytic1DConfig::new(r, s, alpha)?;
    let beta = 2.0 * config.gamma();
    Ok((config.rho_c(), rho_e_beta(r, s, beta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn g_at_zero_and_lower_bound() {
        assert_eq!(g(0.0), 0.0);
        for z in [0.5, 1.0, 2.0] {
            assert!(g(z) >= z * z);
        }
    }

    #[test]
    fn g_closed_forms_agree() {
        let z: f64 = 3.0;
        let alt = 0.5 * ((2.0 * z).cosh() - (2.0 * z).cos());
        assert!((g(z) - alt).abs() <= 1e-12 * alt);
        // across the switch to the log form
        for z in [19.9f64, 20.0, 20.1, 25.0] {
            let alt = 0.5 * ((2.0 * z).cosh() - (2.0 * z).cos());
            assert_relative_eq!(g(z), alt, max_relative = 1e-13);
        }
    }

    #[test]
    fn ln_g_survives_overflow() {
        assert!(g(400.0).is_infinite());
        assert_relative_eq!(ln_g(400.0), 800.0 - 4f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn rho_e_examples() {
        assert_relative_eq!(rho_e(0.4, 0.6), 4.0 / 9.0, max_relative = 1e-15);
        assert_relative_eq!(rho_e(0.25, 0.75), 1.0 / 9.0, max_relative = 1e-15);
        assert!(rho_e(0.4, 0.4 + 1e-9) > 1.0 - 1e-8);
    }

    #[test]
    fn rho_c_small_gamma_limit() {
        let v = rho_c_gamma(0.4, 0.6, 1e-4);
        assert_relative_eq!(v, (4.0f64 / 9.0).powi(2), max_relative = 1e-6);
        assert!((v - 0.1975).abs() < 1e-4);
    }

    #[test]
    fn rho_c_symmetric_is_left_squared() {
        let (r, s, gm) = (0.3, 0.7, 2.5);
        let l = left_factor(r, s, gm);
        assert_relative_eq!(right_factor(r, s, gm), l, max_relative = 1e-14);
        assert_relative_eq!(rho_c_gamma(r, s, gm), l * l, max_relative = 1e-14);
    }

    #[test]
    fn rho_c_small_alpha_asymptotics() {
        let c = Analytic1DConfig::new(0.4, 0.6, 1e-6).unwrap();
        assert!((c.gamma() - 22.36).abs() < 0.01);
        let asym = (2.0 * SQRT_2 * 1e-6f64.powf(-0.25) * (0.4 - 0.6)).exp();
        assert!((c.rho_c() / asym - 1.0).abs() <= 0.05);
    }

    #[test]
    fn rho_e_beta_examples() {
        assert_eq!(rho_e_beta(0.4, 0.6, 0.0), rho_e(0.4, 0.6));
        assert_relative_eq!(rho_e_beta(0.4, 0.6, 1e-6), rho_e(0.4, 0.6), max_relative = 1e-10);
        assert!(rho_e_beta(0.4, 0.6, 1.0) < rho_e(0.4, 0.6));
        let asym = (2.0 * 50.0 * (0.4 - 0.6f64)).exp();
        assert!((rho_e_beta(0.4, 0.6, 50.0) / asym - 1.0).abs() <= 0.05);
    }

    #[test]
    fn rho_e_beta_direct_formula() {
        let (r, s, b) = (0.35, 0.55, 3.0f64);
        let direct = (b * r).sinh() * (b * (1.0 - s)).sinh() / ((b * s).sinh() * (b * (1.0 - r)).sinh());
        assert_relative_eq!(rho_e_beta(r, s, b), direct, max_relative = 1e-13);
    }

    #[test]
    fn scan_examples() {
        let scan = rate_vs_gamma_scan(0.4, 0.6, (1e-3, 40.0), 50).unwrap();
        assert_eq!(scan.len(), 50);
        assert_eq!(scan[49].0, 40.0);
        for w in scan.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
        let re2 = rho_e(0.4, 0.6).powi(2);
        assert!(scan[0].1 <= re2 && scan[0].1 > re2 * (1.0 - 1e-6));
        assert!(scan[49].1 < 1e-6);
        assert!(rate_vs_gamma_scan(0.4, 0.6, (1.0, 2.0), 1).is_err());
        assert!(rate_vs_gamma_scan(0.6, 0.4, (1.0, 2.0), 5).is_err());
    }

    #[test]
    fn better_estimate_regimes() {
        let (c, e) = better_estimate_pairing(0.4, 0.6, 1e-8).unwrap();
        assert!((c / e - 1.0).abs() <= 0.05);
        let (c, e) = better_estimate_pairing(0.4, 0.6, 1e4).unwrap();
        assert!((c / (e * e) - 1.0).abs() <= 0.05);
        for alpha in [1e-8, 1e-4, 1.0, 1e4] {
            let (c, e) = better_estimate_pairing(0.4, 0.6, alpha).unwrap();
            assert!(0.0 < c && c < 1.0 && 0.0 < e && e < 1.0);
        }
    }

    #[test]
    fn invalid_config() {
        assert!(Analytic1DConfig::new(0.6, 0.4, 1.0).is_err());
        assert!(Analytic1DConfig::new(0.0, 0.4, 1.0).is_err());
        assert!(Analytic1DConfig::new(0.4, 0.6, 0.0).is_err());
    }

    fn interfaces() -> impl Strategy<Value = (f64, f64)> {
        (0.02f64..0.96, 0.01f64..0.5).prop_filter_map("s < 1", |(r, gap)| {
            let s = r + gap;
            (s < 0.98).then_some((r, s))
        })
    }

    proptest! {
        #[test]
        fn rho_c_below_rho_e_squared((r, s) in interfaces(), log_alpha in -8.0f64..4.0) {
            let c = Analytic1DConfig::new(r, s, 10f64.powf(log_alpha)).unwrap();
            let re = c.rho_e();
            prop_assert!(c.rho_c() < re);
            prop_assert!(c.rho_c() <= re * re * (1.0 + 1e-12));
        }

        #[test]
        fn rho_c_decreases_in_gamma((r, s) in interfaces(), g1 in 0.1f64..30.0, factor in 1.05f64..3.0) {
            prop_assert!(rho_c_gamma(r, s, g1 * factor) < rho_c_gamma(r, s, g1));
        }

        #[test]
        fn rho_e_beta_below_rho_e((r, s) in interfaces(), beta in 0.01f64..200.0) {
            prop_assert!(rho_e_beta(r, s, beta) < rho_e(r, s));
        }

        #[test]
        fn factors_are_monotone((r, s) in interfaces(), gm in 0.01f64..40.0, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
            let (a, b) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(left_factor(a * s, s, gm) <= left_factor(b * s, s, gm) * (1.0 + 1e-12));
            let (xa, xb) = (r + a * (1.0 - r), r + b * (1.0 - r));
            prop_assert!(right_factor(r, xa, gm) * (1.0 - 1e-12) >= right_factor(r, xb, gm));
            prop_assert!((left_factor(s, s, gm) - 1.0).abs() < 1e-14);
            prop_assert!((right_factor(r, r, gm) - 1.0).abs() < 1e-14);
        }
    }
}
