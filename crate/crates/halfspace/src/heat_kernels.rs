//! The heat kernel of three-dimensional hyperbolic space and its
//! periodization over a group orbit.
//!
//! The free kernel has the closed form
//!
//! ```text
//! p(ρ, t) = (4πt)^{−3/2} · (ρ / sinh ρ) · exp(−t − ρ²/(4t)),
//! ```
//!
//! evaluated here in log space. The quotient kernel is the orbit sum
//! `p_Γ(x, y, t) = Σ_γ p(d(x, γ·y), t)`, truncated at a radius `R` whose
//! discarded remainder is controlled by a certified tail bound: orbit points
//! are pairwise `2η`-separated (with `η` half the minimal displacement), so
//! the remainder is dominated by a shell integral of the free kernel, which
//! evaluates to an explicit expression in `erfc`.

use statrs::function::erf::erfc;

use crate::group_orbits::{enumerate_orbit, GroupPresentation};
use crate::hyperbolic_core::{ball_volume, hyperbolic_distance, Point};
use crate::numerics::parallel::sum_batched;
use crate::numerics::quadrature::integrate;
use crate::numerics::stable::ln_x_over_sinh;
use crate::{Error, Result};

use serde::Serialize;

/// Hard ceiling for the truncation-radius search in
/// [`heat_kernel_quotient`].
const MAX_TRUNCATION_RADIUS: f64 = 2000.0;

/// Orbit points closer than this are considered coincident when measuring
/// the minimal displacement.
const DISPLACEMENT_FLOOR: f64 = 1e-9;

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "heat time must be positive and finite, got {t}"
        )));
    }
    Ok(())
}

/// The heat kernel `p(ρ, t)` of three-dimensional hyperbolic space.
pub fn heat_kernel_h3(rho: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "distance must be non-negative and finite, got {rho}"
        )));
    }
    let ln_p = -1.5 * (4.0 * std::f64::consts::PI * t).ln() - t - rho * rho / (4.0 * t)
        + ln_x_over_sinh(rho);
    Ok(ln_p.exp())
}

/// Radial logarithmic derivative `∂_ρ ln p(ρ, t) = 1/ρ − coth ρ − ρ/(2t)`
/// (negative for all `ρ, t > 0`).
pub fn log_heat_gradient_h3(rho: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "log-gradient needs ρ > 0, got {rho}"
        )));
    }
    Ok(1.0 / rho - 1.0 / rho.tanh() - rho / (2.0 * t))
}

/// A quotient heat-kernel value together with a certified bound on the
/// truncation error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HeatValue {
    /// Truncated orbit sum `Σ_{d(x, γy) ≤ R} p(d(x, γy), t)`.
    pub value: f64,
    /// Certified upper bound for the discarded remainder.
    pub tail_bound: f64,
}

/// Certified upper bound for `Σ_{d(x, γy) > R} p(d(x, γy), t)` over any
/// orbit whose points are pairwise separated by at least `2η`.
///
/// Each far orbit point owns a disjoint ball of radius `η` inside the shell
/// `{d(x, ·) ≥ R − η}`, and the kernel value at the point is dominated by
/// the ball average of `p(d(x, w) − 2η, t)`. Bounding `sinh(u + 2η) ≤
/// e^{u+2η}/2` and `u/sinh u ≤ 2u e^{−u}/(1 − e^{−2a})` on `u ≥ a = R − 3η`
/// leaves a Gaussian integral:
///
/// ```text
/// tail(R, t, η) = (4π / V₃(η)) · (e^{4η}/2) · (4πt)^{−3/2}
///                 · (1 − e^{−2a})⁻¹ · [2√π t^{3/2} erfc(v₀) + 2t e^{−v₀²}],
/// ```
///
/// with `v₀ = (a − 2t)/(2√t)`. The bound is strictly decreasing in `R` and
/// requires `R > 3η`.
pub fn heat_tail_bound(truncation_radius: f64, t: f64, eta: f64) -> Result<f64> {
    check_time(t)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "separation radius must be positive, got {eta}"
        )));
    }
    let a = truncation_radius - 3.0 * eta;
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "truncation radius {truncation_radius} must exceed 3η = {}",
            3.0 * eta
        )));
    }
    let v0 = (a - 2.0 * t) / (2.0 * t.sqrt());
    let gaussian =
        2.0 * std::f64::consts::PI.sqrt() * t.powf(1.5) * erfc(v0) + 2.0 * t * (-v0 * v0).exp();
    let prefactor = 4.0 * std::f64::consts::PI / ball_volume(3, eta)?
        * ((4.0 * eta).exp() / 2.0)
        * (4.0 * std::f64::consts::PI * t).powf(-1.5)
        / (-(-2.0 * a).exp_m1());
    Ok(prefactor * gaussian)
}

/// Half the minimal displacement `min_{γ ≠ e} d(y, γ·y)`, capped at 1 (the
/// cap only loosens the tail bound, never its validity). Requires a
/// completeness certificate; returns `None` for the trivial group.
fn separation_radius(group: &GroupPresentation, y: &Point) -> Result<Option<f64>> {
    if group.generators().is_empty() {
        return Ok(None);
    }
    let reach = group
        .generators()
        .iter()
        .map(|g| {
            let gy = g.apply(y)?;
            hyperbolic_distance(y, &gy)
        })
        .try_fold(f64::INFINITY, |m, d| d.map(|d| m.min(d)))?;
    let ball = enumerate_orbit(group, y, y, reach)?;
    if !ball.complete {
        return Err(Error::IncompleteEnumeration {
            group: group.name().to_string(),
            reason: "minimal displacement needs a certified enumeration".into(),
        });
    }
    let min_disp = ball
        .points
        .iter()
        .map(|p| p.distance)
        .filter(|&d| d > DISPLACEMENT_FLOOR)
        .fold(f64::INFINITY, f64::min);
    if !min_disp.is_finite() {
        return Err(Error::IncompleteEnumeration {
            group: group.name().to_string(),
            reason: "no nontrivial orbit point found within one generator step".into(),
        });
    }
    Ok(Some((min_disp / 2.0).min(1.0)))
}

/// The quotient heat kernel `p_Γ(x, y, t) = Σ_γ p(d(x, γ·y), t)`, summed
/// over orbit points within a truncation radius `R` chosen so that the
/// certified tail bound is at most `epsilon` (and at least `3t`, where the
/// summand sequence has passed its peak).
///
/// Fails with [`Error::IncompleteEnumeration`] when the group has no
/// completeness certificate and with [`Error::TailUnreachable`] when no
/// radius up to 2000 certifies the requested tail.
pub fn heat_kernel_quotient(
    group: &GroupPresentation,
    x: &Point,
    y: &Point,
    t: f64,
    epsilon: f64,
) -> Result<HeatValue> {
    check_time(t)?;
    if group.dimension() != 3 {
        return Err(Error::InvalidArgument(
            "the quotient heat kernel is implemented for dimension 3".into(),
        ));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "tail tolerance must be positive, got {epsilon}"
        )));
    }
    let Some(eta) = separation_radius(group, y)? else {
        // Trivial group: a single orbit point and no tail.
        let d = hyperbolic_distance(x, y)?;
        return Ok(HeatValue {
            value: heat_kernel_h3(d, t)?,
            tail_bound: 0.0,
        });
    };

    let floor = (3.0 * t).max(3.0 * eta + 1.0);
    let radius = if heat_tail_bound(floor, t, eta)? <= epsilon {
        floor
    } else {
        let mut hi = floor;
        while heat_tail_bound(hi, t, eta)? > epsilon {
            hi *= 2.0;
            if hi > MAX_TRUNCATION_RADIUS {
                return Err(Error::TailUnreachable {
                    requested: epsilon,
                    reason: format!(
                        "tail bound is still {:.3e} at radius {MAX_TRUNCATION_RADIUS}",
                        heat_tail_bound(MAX_TRUNCATION_RADIUS, t, eta)?
                    ),
                });
            }
        }
        // Bisect down to a tight radius (the bound is decreasing in R).
        let mut lo = hi / 2.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if heat_tail_bound(mid, t, eta)? <= epsilon {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi.max(floor)
    };

    let ball = enumerate_orbit(group, x, y, radius)?;
    if !ball.complete {
        return Err(Error::IncompleteEnumeration {
            group: group.name().to_string(),
            reason: "the quotient heat kernel needs a certified enumeration".into(),
        });
    }
    let terms: Vec<f64> = ball
        .points
        .iter()
        .map(|p| heat_kernel_h3(p.distance, t))
        .collect::<Result<_>>()?;
    Ok(HeatValue {
        value: sum_batched(&terms, 1024),
        tail_bound: heat_tail_bound(radius, t, eta)?,
    })
}

/// One time sample of the on-diagonal quotient kernel.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonotonicityRow {
    /// Heat time.
    pub t: f64,
    /// Truncated value of `p_Γ(x, x, t)`.
    pub value: f64,
    /// Certified truncation tail.
    pub tail_bound: f64,
}

/// Result of checking that `t ↦ p_Γ(x, x, t)` is non-increasing.
#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    /// Values along the time grid.
    pub rows: Vec<MonotonicityRow>,
    /// Whether every consecutive pair decreases within the certified tails,
    /// i.e. `value_i + tail_i ≥ value_{i+1} − tail_{i+1}`.
    pub non_increasing: bool,
}

/// Evaluate `p_Γ(x, x, t)` along an increasing time grid and check that the
/// sequence is non-increasing up to the certified truncation tails (the
/// on-diagonal kernel is an integral of `e^{−λt}` against a positive
/// spectral measure, so a genuine increase would signal a defect).
pub fn monotonicity_check(
    group: &GroupPresentation,
    x: &Point,
    t_grid: &[f64],
    epsilon: f64,
) -> Result<MonotonicityReport> {
    if t_grid.len() < 2 {
        return Err(Error::InvalidArgument(
            "monotonicity needs at least 2 time samples".into(),
        ));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "monotonicity needs a strictly increasing time grid".into(),
        ));
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let hv = heat_kernel_quotient(group, x, x, t, epsilon)?;
        rows.push(MonotonicityRow {
            t,
            value: hv.value,
            tail_bound: hv.tail_bound,
        });
    }
    let non_increasing = rows
        .windows(2)
        .all(|w| w[0].value + w[0].tail_bound >= w[1].value - w[1].tail_bound);
    Ok(MonotonicityReport {
        rows,
        non_increasing,
    })
}

/// Result of validating the radial log-derivative of the free kernel.
#[derive(Debug, Clone, Serialize)]
pub struct LogGradientReport {
    /// Largest relative deviation between the closed form and a central
    /// finite difference of `ln p`.
    pub max_fd_rel_error: f64,
    /// Whether `|∂_ρ ln p| ≤ 1 + ρ/(2t)` held at every sample.
    pub bound_satisfied: bool,
    /// Whether `ρ ≤ 4t` implied `|∂_ρ ln p| ≤ 3` at every sample.
    pub small_ball_regime_ok: bool,
    /// Number of samples checked.
    pub samples: usize,
}

/// Check the closed-form radial log-derivative of the free kernel against
/// finite differences, and its first-order bounds, on a list of `(ρ, t)`
/// samples.
pub fn log_gradient_bound_check(samples: &[(f64, f64)]) -> Result<LogGradientReport> {
    if samples.is_empty() {
        return Err(Error::InsufficientData(
            "log-gradient check needs at least one (ρ, t) sample".into(),
        ));
    }
    let mut max_fd_rel_error = 0.0_f64;
    let mut bound_satisfied = true;
    let mut small_ball_regime_ok = true;
    for &(rho, t) in samples {
        let exact = log_heat_gradient_h3(rho, t)?;
        let h = (1e-5 * rho.max(1.0)).min(0.5 * rho);
        let fd =
            ((heat_kernel_h3(rho + h, t)?).ln() - (heat_kernel_h3(rho - h, t)?).ln()) / (2.0 * h);
        max_fd_rel_error = max_fd_rel_error.max((fd - exact).abs() / exact.abs().max(1.0));
        // |1/ρ − coth ρ| < 1 for every ρ > 0, so |∂_ρ ln p| ≤ 1 + ρ/(2t).
        if exact.abs() > 1.0 + rho / (2.0 * t) + 1e-12 {
            bound_satisfied = false;
        }
        if rho <= 4.0 * t && exact.abs() > 3.0 + 1e-12 {
            small_ball_regime_ok = false;
        }
    }
    Ok(LogGradientReport {
        max_fd_rel_error,
        bound_satisfied,
        small_ball_regime_ok,
        samples: samples.len(),
    })
}

/// Relative deviation of the total mass `∫_{H³} p(d(o, w), t) dμ(w)` from 1
/// (stochastic completeness), computed by radial quadrature.
pub fn mass_residual(t: f64) -> Result<f64> {
    check_time(t)?;
    let r_max = 2.0 * t + 14.0 * t.sqrt() + 5.0;
    let c = 4.0 * std::f64::consts::PI * (4.0 * std::f64::consts::PI * t).powf(-1.5);
    let mass = integrate(
        |rho| c * rho * rho.sinh() * (-t - rho * rho / (4.0 * t)).exp(),
        0.0,
        r_max,
        f64::MIN_POSITIVE,
        1e-12,
        32,
    )?;
    Ok((mass.value.re - 1.0).abs())
}

/// Relative residual of the semigroup identity
/// `∫_{H³} p(d(x, w), t₁) p(d(w, y), t₂) dμ(w) = p(d(x, y), t₁ + t₂)`.
///
/// The integral is reduced to geodesic polar coordinates around `x` (the
/// azimuthal angle integrates to `2π`) and evaluated by nested adaptive
/// quadrature over the radius and the polar angle.
pub fn semigroup_residual(t1: f64, t2: f64, dxy: f64) -> Result<f64> {
    check_time(t1)?;
    check_time(t2)?;
    if !(dxy >= 0.0 && dxy.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "distance must be non-negative and finite, got {dxy}"
        )));
    }
    let y_pt = Point::from_parts(num_complex::Complex64::new(0.0, 0.0), dxy.exp(), 3)?;
    let r1 = 2.0 * t1 + 12.0 * t1.sqrt();
    let r2 = 2.0 * t2 + 12.0 * t2.sqrt();
    let r_max = r1.max(dxy + r2) + 2.0;
    let outer = integrate(
        |rho_w| {
            if rho_w == 0.0 {
                return 0.0;
            }
            let p1 = heat_kernel_h3(rho_w, t1).unwrap_or(f64::NAN);
            let inner = integrate(
                |alpha| {
                    // w = exp_o(ρ_w · u(α)) in the vertical plane through o
                    // and y: u = (sin α, 0, cos α).
                    let denom = rho_w.cosh() - alpha.cos() * rho_w.sinh();
                    let w = Point::from_parts(
                        num_complex::Complex64::new(rho_w.sinh() * alpha.sin() / denom, 0.0),
                        1.0 / denom,
                        3,
                    )
                    .expect("heights are positive inside the disk model image");
                    let d2 =
                        hyperbolic_distance(&w, &y_pt).expect("dimensions agree by construction");
                    heat_kernel_h3(d2, t2)
                        .map(|p| p * alpha.sin())
                        .unwrap_or(f64::NAN)
                },
                0.0,
                std::f64::consts::PI,
                f64::MIN_POSITIVE,
                1e-9,
                8,
            );
            let inner = match inner {
                Ok(q) => q.value.re,
                Err(_) => f64::NAN,
            };
            let sh = rho_w.sinh();
            2.0 * std::f64::consts::PI * p1 * sh * sh * inner
        },
        0.0,
        r_max,
        f64::MIN_POSITIVE,
        1e-7,
        32,
    )?;
    let expected = heat_kernel_h3(dxy, t1 + t2)?;
    Ok((outer.value.re - expected).abs() / expected)
}
