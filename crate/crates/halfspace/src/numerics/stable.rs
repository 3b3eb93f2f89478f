//! Overflow- and cancellation-safe elementary functions used by the geometric
//! and spectral routines. Arguments as large as several hundred must survive,
//! so `exp`-scale quantities are manipulated through `expm1`/`ln_1p`
//! factorizations or logarithms.

/// `arcosh(1 + u)` for `u ≥ 0`, accurate down to `u → 0` where the naive
/// `arcosh` loses half the significant digits.
///
/// Uses `arcosh(1 + u) = ln(1 + u + sqrt(u(u + 2)))`.
pub fn arcosh1p(u: f64) -> f64 {
    debug_assert!(u >= -1e-12, "arcosh1p argument must be ≥ 0, got {u}");
    let u = u.max(0.0);
    (u + (u * (u + 2.0)).sqrt()).ln_1p()
}

/// `ln(sinh x)` for `x > 0` without overflow: `x + ln(1 − e^{−2x}) − ln 2`.
pub fn ln_sinh(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_sinh needs x > 0, got {x}");
    x + (-(-2.0 * x).exp_m1()).ln() - std::f64::consts::LN_2
}

/// `ln(x / sinh x)` for `x ≥ 0`, continuous through the removable singularity
/// at zero (`x/sinh x → 1`).
pub fn ln_x_over_sinh(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 1e-4 {
        // ln(x/sinh x) = −x²/6 + 7x⁴/360 − …
        let x2 = x * x;
        -x2 / 6.0 + 7.0 * x2 * x2 / 360.0
    } else {
        x.ln() - ln_sinh(x)
    }
}

/// `sinh(2x) − 2x` evaluated without cancellation for small `x`.
///
/// This is the radial volume integrand primitive in dimension three up to a
/// factor `π/…`; the naive difference loses all digits below `x ≈ 1e−5`.
pub fn sinh2x_minus_2x(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 0.25 {
        // Σ_{k≥1} (2x)^{2k+1}/(2k+1)!
        let w = 2.0 * x;
        let w2 = w * w;
        let mut term = w * w2 / 6.0;
        let mut sum = term;
        let mut n = 3.0;
        loop {
            term *= w2 / ((n + 1.0) * (n + 2.0));
            n += 2.0;
            let next = sum + term;
            if next == sum {
                return sum;
            }
            sum = next;
        }
    } else {
        (2.0 * x).sinh() - 2.0 * x
    }
}

/// `cosh x − 1` without cancellation: `2 sinh²(x/2)`.
pub fn cosh_minus_1(x: f64) -> f64 {
    let s = (0.5 * x).sinh();
    2.0 * s * s
}

/// The θ-kernel base `2(cosh ρ − cosh r)/e^ρ` for `|r| ≤ ρ`, via the exact
/// factorization `(1 − e^{r−ρ})(1 − e^{−(r+ρ)}) = expm1(r−ρ)·expm1(−r−ρ)`.
///
/// The product form is free of overflow for any `ρ` and keeps full relative
/// accuracy at both endpoints `r → ±ρ`, where the difference of hyperbolic
/// cosines cancels catastrophically.
pub fn theta_base(rho: f64, r: f64) -> f64 {
    debug_assert!(rho >= r.abs());
    (r - rho).exp_m1() * (-r - rho).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arcosh1p_matches_reference_points() {
        // arcosh(3/2) = 2 ln φ with φ the golden ratio.
        let phi = 0.5 * (1.0 + 5.0_f64.sqrt());
        assert!((arcosh1p(0.5) - 2.0 * phi.ln()).abs() < 1e-15);
        // Small-u regime: arcosh(1 + u) ≈ sqrt(2u)·(1 − u/12).
        let u = 1e-12_f64;
        let expected = (2.0 * u).sqrt() * (1.0 - u / 12.0);
        assert!((arcosh1p(u) - expected).abs() / expected < 1e-10);
        assert_eq!(arcosh1p(0.0), 0.0);
    }

    #[test]
    fn ln_sinh_handles_large_arguments() {
        assert!((ln_sinh(1.0) - 1.0_f64.sinh().ln()).abs() < 1e-15);
        // sinh(800) overflows; ln sinh(800) = 800 − ln 2 up to e^{−1600}.
        assert!((ln_sinh(800.0) - (800.0 - std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn ln_x_over_sinh_is_continuous_at_zero() {
        assert_eq!(ln_x_over_sinh(0.0), 0.0);
        // Just below the series switchover, the series and the direct
        // logarithm agree to full precision.
        let x = 9.9e-5_f64;
        let series = ln_x_over_sinh(x);
        let direct = (x / x.sinh()).ln();
        assert!((series - direct).abs() < 1e-15);
        assert!((ln_x_over_sinh(2.0) - (2.0 / 2.0_f64.sinh()).ln()).abs() < 1e-14);
    }

    #[test]
    fn sinh2x_minus_2x_series_matches_direct_eval() {
        for &x in &[0.01_f64, 0.1, 0.2499, 0.2501, 1.0, 5.0] {
            let direct = (2.0 * x).sinh() - 2.0 * x;
            let stable = sinh2x_minus_2x(x);
            assert!(
                (stable - direct).abs() <= 1e-12 * direct.abs().max(1e-300),
                "x = {x}: {stable} vs {direct}"
            );
        }
        // Tiny argument: leading term 4x³/3.
        let x = 1e-8;
        assert!((sinh2x_minus_2x(x) - 4.0 * x * x * x / 3.0).abs() < 1e-40);
    }

    #[test]
    fn theta_base_matches_cosh_difference_and_endpoints() {
        for &(rho, r) in &[(2.0_f64, 1.0_f64), (5.0, -3.0), (1.0, 0.0), (0.5, 0.49)] {
            let direct = 2.0 * (rho.cosh() - r.cosh()) / rho.exp();
            let stable = theta_base(rho, r);
            assert!((stable - direct).abs() < 1e-13 * direct.max(1.0));
        }
        assert_eq!(theta_base(3.0, 3.0), 0.0);
        assert_eq!(theta_base(3.0, -3.0), 0.0);
        // Large ρ, r = 0: base = (1 − e^{−ρ})² → 1 from below without
        // overflow (at ρ = 400 it rounds to exactly 1).
        let b = theta_base(400.0, 0.0);
        assert!(b <= 1.0 && b > 1.0 - 1e-12);
        let b18 = theta_base(18.0, 0.0);
        assert!(b18 < 1.0 && b18 > 1.0 - 1e-7);
    }
}
