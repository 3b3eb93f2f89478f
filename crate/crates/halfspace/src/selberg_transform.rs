//! The ball-average eigenvalue `ν_ρ(λ)` by three independent routes, and
//! sweep reports for its two asymptotic regimes.
//!
//! Averaging a Laplace eigenfunction (eigenvalue `λ`, spectral parameter
//! `s(d−1−s) = λ`) over the ball `B(x, ρ)` multiplies it by
//!
//! ```text
//! ν_ρ(λ) = (1/𝒱_d(ρ)) ∫_{B(o,ρ)} y^s dμ.
//! ```
//!
//! Routes implemented:
//!
//! 1. **direct** — Fubini over horospherical slabs reduces the ball integral
//!    to `I = c_{d−1} e^{ρ(d−1)/2} ∫_{−ρ}^{ρ} e^{r(s−(d−1)/2)} (θ-base)^{(d−1)/2} dr`
//!    in the variable `y = e^r`, with `c_{d−1}` the Euclidean unit-ball
//!    volume in `ℝ^{d−1}`; then `ν = I/𝒱_d(ρ)`.
//! 2. **theta_form** — the shifted kernel form
//!    `𝒱_d(ρ) ν = c_{d−1} e^{−ρs} e^{(d−1)ρ} ℐ(s,ρ)` with
//!    `ℐ(s,ρ) = ∫_0^{2ρ} e^{u(s−(d−1)/2)} θ(ρ, u−ρ) du`, evaluated with all
//!    exponential prefactors in log space (stable to `ρ = 500`).
//! 3. **radial_ode** — `ν_ρ(λ) = (1/𝒱_d(ρ)) ∫_0^ρ 𝒱_d′(t) S(λ,t) dt` with the
//!    sphere-mean function `S` from [`crate::delsarte_verification`]; this
//!    route is intrinsically real and serves as the realization oracle for
//!    the two complex-integrand routes.

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::delsarte_verification::radial_ode_solve;
use crate::hyperbolic_core::{ball_volume, ln_ball_volume, spectral_param, theta};
use crate::numerics::quadrature::{integrate, integrate_complex, Quadrature};
use crate::numerics::stable::{ln_sinh, theta_base};
use crate::{Error, Result};

/// Which formula produced a [`SelbergValue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NuRoute {
    /// Slab integral in the variable `y = e^r`.
    Direct,
    /// Shifted θ-kernel integral with log-space prefactors.
    ThetaForm,
    /// Integration of the radial eigenfunction against `𝒱′`.
    RadialOde,
}

/// A computed value of `ν_ρ(λ)` with its provenance and error estimate.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SelbergValue {
    /// The (realized) eigenvalue of the ball-average operator.
    pub nu: f64,
    /// Route that produced the value.
    pub route: NuRoute,
    /// Propagated quadrature error estimate (absolute).
    pub quadrature_error: f64,
}

/// Relative tolerance requested from the quadrature driver.
const NU_REL_TOL: f64 = 1e-9;
/// Bound on the imaginary part of the complex-route integrals, relative to
/// `max(1, |ν|)`.
const IMAGINARY_TOLERANCE: f64 = 1e-8;

/// `ln ω_{d−1}`: log unit-sphere area in `ℝ^d`.
fn ln_unit_sphere_area(d: usize) -> f64 {
    std::f64::consts::LN_2 + (d as f64 / 2.0) * std::f64::consts::PI.ln() - ln_gamma(d as f64 / 2.0)
}

/// `ln c_{d−1}`: log volume of the Euclidean unit ball in `ℝ^{d−1}`
/// (`c_1 = 2`, `c_2 = π`).
fn ln_slab_constant(d: usize) -> f64 {
    let n = (d - 1) as f64;
    (n / 2.0) * std::f64::consts::PI.ln() - ln_gamma(n / 2.0 + 1.0)
}

/// `ln 𝒱_d(ρ)`, stable for `d ∈ {2,3}` at large ρ, direct otherwise.
fn ln_volume(d: usize, rho: f64) -> Result<f64> {
    if d <= 3 {
        ln_ball_volume(d, rho)
    } else {
        Ok(ball_volume(d, rho)?.ln())
    }
}

fn validate(d: usize, lambda: f64, rho: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("ν needs d ≥ 2, got {d}")));
    }
    if !(lambda >= 0.0) || !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ν needs λ ≥ 0 and ρ > 0, got λ = {lambda}, ρ = {rho}"
        )));
    }
    Ok(())
}

/// `base^{(d−1)/2}` with the cheap exact forms for `d = 2, 3`.
fn base_power(d: usize, base: f64) -> f64 {
    match d {
        2 => base.sqrt(),
        3 => base,
        _ => base.powf((d as f64 - 1.0) / 2.0),
    }
}

/// Panel seed for an oscillatory integrand: about three panels per period
/// of `e^{iκr}` across the interval, at least 8, at most 4096.
fn panels_for(length: f64, freq: f64) -> usize {
    ((length * (freq + 0.5) / 3.0).ceil() as usize).clamp(8, 4096)
}

/// Realize a complex route value: enforce the imaginary-part bound and
/// package the real part.
fn realize(nu_c: Complex64, err: f64, route: NuRoute) -> Result<SelbergValue> {
    let bound = IMAGINARY_TOLERANCE * nu_c.re.abs().max(1.0);
    if nu_c.im.abs() > bound {
        return Err(Error::ImaginaryResidual {
            residual: nu_c.im.abs(),
            bound,
        });
    }
    Ok(SelbergValue {
        nu: nu_c.re,
        route,
        quadrature_error: err,
    })
}

/// Integrate `f` over `[a, b]`; when `sqrt_ends` is set (even `d`, where the
/// integrand vanishes like a square root at both ends), substitute
/// `r = a + v²` and `r = b − v²` on the outer `min(1, (b−a)/2)`-collars so
/// the transformed integrands are smooth.
fn integrate_with_endpoint_care<F>(
    f: F,
    a: f64,
    b: f64,
    freq: f64,
    sqrt_ends: bool,
) -> Result<Quadrature>
where
    F: Fn(f64) -> Complex64,
{
    let abs_tol = f64::MIN_POSITIVE;
    if !sqrt_ends {
        return integrate_complex(f, a, b, abs_tol, NU_REL_TOL, panels_for(b - a, freq));
    }
    let half = (b - a) / 2.0;
    let c = half.min(1.0);
    let root = c.sqrt();
    let left = integrate_complex(
        |v| f(a + v * v) * 2.0 * v,
        0.0,
        root,
        abs_tol,
        NU_REL_TOL,
        panels_for(root, 2.0 * freq * root),
    )?;
    let right = integrate_complex(
        |v| f(b - v * v) * 2.0 * v,
        0.0,
        root,
        abs_tol,
        NU_REL_TOL,
        panels_for(root, 2.0 * freq * root),
    )?;
    let mut total = Quadrature {
        value: left.value + right.value,
        error_estimate: left.error_estimate + right.error_estimate,
        evaluations: left.evaluations + right.evaluations,
    };
    if b - c > a + c {
        let mid = integrate_complex(
            &f,
            a + c,
            b - c,
            abs_tol,
            NU_REL_TOL,
            panels_for(b - a - 2.0 * c, freq),
        )?;
        total.value += mid.value;
        total.error_estimate += mid.error_estimate;
        total.evaluations += mid.evaluations;
    }
    Ok(total)
}

fn nu_direct_with_s(d: usize, s: Complex64, rho: f64) -> Result<SelbergValue> {
    let h = (d as f64 - 1.0) / 2.0;
    let exponent = s - h;
    let integral = integrate_with_endpoint_care(
        |r| (exponent * r).exp() * base_power(d, theta_base(rho, r)),
        -rho,
        rho,
        exponent.im.abs(),
        d.is_multiple_of(2),
    )?;
    let ln_pref = ln_slab_constant(d) + rho * h - ln_volume(d, rho)?;
    let pref = ln_pref.exp();
    realize(
        integral.value * pref,
        integral.error_estimate * pref,
        NuRoute::Direct,
    )
}

/// `ν_ρ(λ)` by the direct slab integral in the variable `y = e^r`.
pub fn nu_direct(d: usize, lambda: f64, rho: f64) -> Result<SelbergValue> {
    validate(d, lambda, rho)?;
    nu_direct_with_s(d, spectral_param(d, lambda)?.s, rho)
}

/// The kernel integral `ℐ(s, ρ) = ∫_0^{2ρ} e^{u(s−(d−1)/2)} θ(ρ, u−ρ) du`.
///
/// Bounded by `2^{(d+1)/2} ρ` in modulus; the integrand never exceeds
/// `2^{(d−1)/2}`, so the evaluation is overflow-free for any `ρ`.
pub fn theta_integral(d: usize, s: Complex64, rho: f64) -> Result<Quadrature> {
    if d < 2 || !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ℐ needs d ≥ 2 and ρ > 0, got d = {d}, ρ = {rho}"
        )));
    }
    let h = (d as f64 - 1.0) / 2.0;
    let exponent = s - h;
    integrate_with_endpoint_care(
        |u| {
            let r = (u - rho).clamp(-rho, rho);
            if r.abs() >= rho {
                return Complex64::new(0.0, 0.0);
            }
            (exponent * u).exp() * theta(d, rho, r).expect("|r| < ρ by construction")
        },
        0.0,
        2.0 * rho,
        exponent.im.abs(),
        d.is_multiple_of(2),
    )
}

/// `ν_ρ(λ)` by the shifted θ-kernel form with log-space prefactors.
pub fn nu_theta(d: usize, lambda: f64, rho: f64) -> Result<SelbergValue> {
    validate(d, lambda, rho)?;
    let s = spectral_param(d, lambda)?.s;
    let integral = theta_integral(d, s, rho)?;
    let ln_pref = ln_slab_constant(d) + (d as f64 - 1.0) * rho - s.re * rho - ln_volume(d, rho)?;
    let pref = ln_pref.exp();
    let phase = Complex64::new(0.0, -s.im * rho).exp();
    realize(
        integral.value * phase * pref,
        integral.error_estimate * pref,
        NuRoute::ThetaForm,
    )
}

/// `ν_ρ(λ)` by integrating the radial eigenfunction against the sphere-area
/// weight: `ν = ∫_0^ρ exp(ln 𝒱′(t) − ln 𝒱(ρ)) · S(λ, t) dt`.
pub fn nu_ode(d: usize, lambda: f64, rho: f64) -> Result<SelbergValue> {
    validate(d, lambda, rho)?;
    let solution = radial_ode_solve(d, lambda, rho)?;
    let ln_norm = ln_unit_sphere_area(d) - ln_volume(d, rho)?;
    let n = d as f64 - 1.0;
    let half = n / 2.0;
    let freq = (lambda - half * half).max(0.0).sqrt();
    let integral = integrate(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            let weight = (ln_norm + n * ln_sinh(t)).exp();
            weight
                * solution
                    .evaluate(t)
                    .expect("integration stays inside the solved interval")
        },
        0.0,
        rho,
        f64::MIN_POSITIVE,
        NU_REL_TOL,
        panels_for(rho, freq),
    )?;
    Ok(SelbergValue {
        nu: integral.value.re,
        route: NuRoute::RadialOde,
        quadrature_error: integral.error_estimate,
    })
}

/// One row of [`spectral_bound_report`].
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SpectralBoundRow {
    /// Ball radius.
    pub rho: f64,
    /// Cut `β ln ρ / ρ` between the two regimes.
    pub lambda_cut: f64,
    /// `sup_{λ ≤ cut} |ν_ρ(λ) e^{λρ/(d−1)} − 1|`.
    pub small_lambda_sup: f64,
    /// Envelope shape `ln²(ρ)/ρ` for the small-λ statistic.
    pub small_lambda_envelope: f64,
    /// `sup_{λ ∈ [cut, Λ_max]} |ν_ρ(λ)| ρ^{β/(d−1)}`.
    pub large_lambda_sup: f64,
}

/// Sweep report for the two-regime spectral bounds on `ν_ρ`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SpectralBoundReport {
    /// Model dimension.
    pub dim: usize,
    /// Regime-splitting exponent β.
    pub beta: f64,
    /// Upper end `Λ_max` of the λ sweep.
    pub lambda_max: f64,
    /// λ samples per regime per radius.
    pub lambda_resolution: usize,
    /// One row per grid radius, in grid order.
    pub rows: Vec<SpectralBoundRow>,
}

impl SpectralBoundReport {
    /// Whether the small-λ sup decreases strictly along the ρ grid.
    pub fn small_lambda_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].small_lambda_sup < w[0].small_lambda_sup)
    }

    /// Whether every small-λ sup is below `c ·` its envelope.
    pub fn small_lambda_below_envelope(&self, c: f64) -> bool {
        self.rows
            .iter()
            .all(|r| r.small_lambda_sup <= c * r.small_lambda_envelope)
    }

    /// Whether the large-λ statistic stays within `factor` of its minimum
    /// across the grid (boundedness by a constant).
    pub fn large_lambda_bounded_within(&self, factor: f64) -> bool {
        let min = self
            .rows
            .iter()
            .map(|r| r.large_lambda_sup)
            .fold(f64::MAX, f64::min);
        let max = self
            .rows
            .iter()
            .map(|r| r.large_lambda_sup)
            .fold(0.0, f64::max);
        max <= factor * min
    }
}

/// Evaluate the small-λ regime (`|ν e^{λρ/(d−1)} − 1|` for `λ ≤ β ln ρ/ρ`)
/// and the decay regime (`|ν| ρ^{β/(d−1)}` for `λ` up to `Λ_max`, default
/// `(d−1)²/4 + 25`) on a grid of radii (increasing, each ≥ 1, max 500).
pub fn spectral_bound_report(
    d: usize,
    beta: f64,
    rho_grid: &[f64],
    lambda_resolution: usize,
) -> Result<SpectralBoundReport> {
    if d < 2 || !(beta > 0.0) || lambda_resolution < 2 {
        return Err(Error::InvalidArgument(
            "spectral report needs d ≥ 2, β > 0, λ-resolution ≥ 2".into(),
        ));
    }
    if rho_grid.is_empty()
        || rho_grid.windows(2).any(|w| w[1] <= w[0])
        || rho_grid.iter().any(|&r| !(1.0..=500.0).contains(&r))
    {
        return Err(Error::InvalidArgument(
            "ρ grid must be increasing within [1, 500]".into(),
        ));
    }
    let n = d as f64 - 1.0;
    let lambda_max = n * n / 4.0 + 25.0;
    let mut rows = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        let cut = beta * rho.ln() / rho;
        let res = lambda_resolution;
        let mut small_lambda_sup = 0.0_f64;
        for k in 0..res {
            let lambda = cut * k as f64 / (res - 1) as f64;
            let nu = nu_theta(d, lambda, rho)?.nu;
            let stat = (nu * (lambda * rho / n).exp() - 1.0).abs();
            small_lambda_sup = small_lambda_sup.max(stat);
        }
        let mut large_lambda_sup = 0.0_f64;
        for k in 0..res {
            let lambda = cut + (lambda_max - cut) * k as f64 / (res - 1) as f64;
            let nu = nu_theta(d, lambda, rho)?.nu;
            large_lambda_sup = large_lambda_sup.max(nu.abs() * rho.powf(beta / n));
        }
        rows.push(SpectralBoundRow {
            rho,
            lambda_cut: cut,
            small_lambda_sup,
            small_lambda_envelope: rho.ln().powi(2) / rho,
            large_lambda_sup,
        });
    }
    Ok(SpectralBoundReport {
        dim: d,
        beta,
        lambda_max,
        lambda_resolution,
        rows,
    })
}

/// One row of [`decay_constant_check`].
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DecayConstantRow {
    /// Ball radius.
    pub rho: f64,
    /// Fitted regime-1 constant `max_{λ ≤ λ0} |ν e^{sρ} − 1| / s`.
    pub c1: f64,
    /// Fitted regime-2 constant `max_λ |ν| e^{ρ s(λ0)} / ρ`.
    pub c2: f64,
}

/// Fitted-constant report for the two exponential regimes of `ν_ρ`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DecayConstantReport {
    /// Model dimension.
    pub dim: usize,
    /// Regime-splitting eigenvalue `λ0 < (d−1)²/4`.
    pub lambda0: f64,
    /// Per-radius fitted constants.
    pub rows: Vec<DecayConstantRow>,
    /// Overall fitted regime-1 constant (maximum over the grid).
    pub fitted_c1: f64,
    /// Overall regime-2 constant.
    pub fitted_c2: f64,
}

impl DecayConstantReport {
    /// Stability: the regime-1 constant at the largest radius is within a
    /// factor two of the mid-grid one, and the regime-2 constant does not
    /// grow by more than a factor two. (The regime-2 statistic is allowed to
    /// *decay*: the bound's ρ-factor is slack at the fitted optimum λ ≈ λ0,
    /// where `|ν| e^{ρ s(λ0)}` tends to a constant, so the fitted minimal
    /// constant behaves like 1/ρ.)
    pub fn stable(&self) -> bool {
        let mid = &self.rows[self.rows.len() / 2];
        let last = &self.rows[self.rows.len() - 1];
        let two_sided = |a: f64, b: f64| a <= 2.0 * b && b <= 2.0 * a;
        two_sided(last.c1, mid.c1) && last.c2 <= 2.0 * mid.c2
    }
}

/// Fit the constants of the two regimes: for `λ ≤ λ0`,
/// `|ν_ρ(λ) e^{s(λ)ρ} − 1| ≤ C₁ s(λ)`; for larger `λ`,
/// `|ν_ρ(λ)| ≤ C₂ ρ e^{−ρ s(λ0)}`.
pub fn decay_constant_check(
    d: usize,
    lambda0: f64,
    rho_grid: &[f64],
) -> Result<DecayConstantReport> {
    let n = d as f64 - 1.0;
    if d < 2 || !(lambda0 > 0.0) || lambda0 >= n * n / 4.0 {
        return Err(Error::InvalidArgument(format!(
            "decay-constant check needs 0 < λ0 < (d−1)²/4, got λ0 = {lambda0}"
        )));
    }
    if rho_grid.len() < 3 || rho_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "ρ grid must be increasing with at least 3 entries".into(),
        ));
    }
    let s0 = spectral_param(d, lambda0)?.s.re;
    let regime1: Vec<f64> = (0..13)
        .map(|k| lambda0 * 10f64.powf(-3.0 + 3.0 * k as f64 / 12.0))
        .collect();
    let regime2: Vec<f64> = (0..13)
        .map(|k| lambda0 + (n * n / 4.0 + 10.0 - lambda0) * k as f64 / 12.0)
        .collect();
    let mut rows = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        let mut c1 = 0.0_f64;
        for &lambda in &regime1 {
            let s = spectral_param(d, lambda)?.s.re;
            let nu = nu_theta(d, lambda, rho)?.nu;
            // ν e^{sρ} assembled in log space to survive large sρ.
            let scaled = nu.signum() * (nu.abs().ln() + s * rho).exp();
            c1 = c1.max((scaled - 1.0).abs() / s);
        }
        let mut c2 = 0.0_f64;
        for &lambda in &regime2 {
            let nu = nu_theta(d, lambda, rho)?.nu;
            c2 = c2.max(nu.abs().ln().exp() * (s0 * rho).exp() / rho);
        }
        rows.push(DecayConstantRow { rho, c1, c2 });
    }
    let fitted_c1 = rows.iter().map(|r| r.c1).fold(0.0, f64::max);
    let fitted_c2 = rows.iter().map(|r| r.c2).fold(0.0, f64::max);
    Ok(DecayConstantReport {
        dim: d,
        lambda0,
        rows,
        fitted_c1,
        fitted_c2,
    })
}
