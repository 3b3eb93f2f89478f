//! Cross-module experiments: counting tables, sandwich-inequality sweeps,
//! and growth-exponent sweeps.
//!
//! The central table relates, per radius `ρ`, the orbital count
//! `N(x, x, ρ)`, the quotient heat kernel `p_Γ(x, x, ρ/2)`, and the ball
//! volume `V₃(ρ)` through the ratio `N / (p_Γ · V₃)`. Rows serialize to CSV
//! with the fixed column set `rho,N,p,p_tail,V,ratio,complete`.

use std::io::Write;

use serde::Serialize;

use crate::group_orbits::{
    critical_exponent_estimate, enumerate_orbit, enumerate_orbit_elements, orbital_scalar_product,
    GroupPresentation,
};
use crate::heat_kernels::heat_kernel_quotient;
use crate::hyperbolic_core::{ball_volume, hyperbolic_distance, sample_ball, Point};
use crate::numerics::rng::mix;
use crate::{Error, Result};

/// One row of the counting table at radius `ρ` (heat time `t = ρ/2`).
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    /// Ball radius.
    pub rho: f64,
    /// Orbital count `N(x, x, ρ)`.
    #[serde(rename = "N")]
    pub count: u64,
    /// Quotient heat kernel `p_Γ(x, x, ρ/2)` (truncated value).
    #[serde(rename = "p")]
    pub heat: f64,
    /// Certified truncation tail of the heat value.
    pub p_tail: f64,
    /// Ball volume `V₃(ρ)`.
    #[serde(rename = "V")]
    pub volume: f64,
    /// `N / (p · V)`.
    pub ratio: f64,
    /// Whether the orbit enumeration was certified complete.
    pub complete: bool,
}

/// Build the counting table along a radius grid: for each `ρ` the orbital
/// count within `B(x, ρ)`, the on-diagonal quotient heat kernel at time
/// `ρ/2` (tail certified below `epsilon`), the ball volume, and their
/// ratio.
pub fn counting_table(
    group: &GroupPresentation,
    x: &Point,
    rho_grid: &[f64],
    epsilon: f64,
) -> Result<Vec<ExperimentRow>> {
    if group.dimension() != 3 {
        return Err(Error::InvalidArgument(
            "the counting table is implemented for dimension 3".into(),
        ));
    }
    if rho_grid.is_empty() {
        return Err(Error::InvalidArgument("empty radius grid".into()));
    }
    let mut rows = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "radii must be positive and finite, got {rho}"
            )));
        }
        let ball = enumerate_orbit(group, x, x, rho)?;
        let heat = heat_kernel_quotient(group, x, x, rho / 2.0, epsilon)?;
        let volume = ball_volume(3, rho)?;
        rows.push(ExperimentRow {
            rho,
            count: ball.points.len() as u64,
            heat: heat.value,
            p_tail: heat.tail_bound,
            volume,
            ratio: ball.points.len() as f64 / (heat.value * volume),
            complete: ball.complete,
        });
    }
    Ok(rows)
}

/// Serialize rows as CSV with the fixed header
/// `rho,N,p,p_tail,V,ratio,complete`. Output is byte-reproducible for
/// equal inputs.
pub fn write_csv<W: Write>(rows: &[ExperimentRow], writer: W) -> Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    for row in rows {
        csv_writer.serialize(row)?;
    }
    csv_writer.flush()?;
    Ok(())
}

/// Outcome of a sandwich-inequality sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    /// Number of sampled pointwise configurations `(δ, ρ, z, w)`.
    pub pointwise_configs: usize,
    /// Pointwise violations of
    /// `N(x, z, ρ−δ) ≤ N(x, w, ρ) ≤ N(x, z, ρ+δ)` over `d(w, z) ≤ δ`.
    pub pointwise_violations: usize,
    /// Number of `(δ, ρ)` pairs checked through the averaged chain.
    pub averaged_configs: usize,
    /// Averaged-chain violations beyond three standard errors.
    pub averaged_violations: usize,
    /// Whether the underlying superset enumeration was certified complete.
    pub complete: bool,
}

/// Sweep the sandwich inequalities for the orbital counting function.
///
/// For every pair `(δ, ρ)` from the two grids, `samples_per_config` random
/// configurations `z ∈ B(y, δ)`, `w ∈ B(z, δ)` are drawn and the pointwise
/// chain `N(x, z, ρ−δ) ≤ N(x, w, ρ) ≤ N(x, z, ρ+δ)` is checked by exact
/// counting. All counts reuse one enumeration at radius
/// `max ρ + 2 max δ`, a superset of every candidate list by the triangle
/// inequality; the chain is valid for the counts restricted to any fixed
/// element set, so the check is meaningful even without a completeness
/// certificate.
///
/// Pairs with `ρ > 4δ` are additionally checked through the averaged form:
/// `𝒱(ρ−2δ) ⟨N/𝒱⟩_{ρ−2δ} ≤ N(x, y, ρ) ≤ 𝒱(ρ+2δ) ⟨N/𝒱⟩_{ρ+2δ}` within
/// three standard errors of the Monte Carlo means.
pub fn sandwich_suite(
    group: &GroupPresentation,
    x: &Point,
    y: &Point,
    delta_grid: &[f64],
    rho_grid: &[f64],
    samples_per_config: usize,
    seed: u64,
) -> Result<SandwichReport> {
    if delta_grid.is_empty() || rho_grid.is_empty() {
        return Err(Error::InvalidArgument(
            "sandwich sweep needs non-empty δ and ρ grids".into(),
        ));
    }
    if samples_per_config == 0 {
        return Err(Error::InvalidArgument(
            "sandwich sweep needs at least one sample per configuration".into(),
        ));
    }
    for &delta in delta_grid {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "perturbation radii must be positive, got {delta}"
            )));
        }
    }
    let delta_max = delta_grid.iter().cloned().fold(0.0, f64::max);
    let rho_max = rho_grid.iter().cloned().fold(0.0, f64::max);
    for &rho in rho_grid {
        if !(rho > delta_max && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "radii must exceed every δ (got ρ = {rho}, max δ = {delta_max})"
            )));
        }
    }
    let superset = enumerate_orbit_elements(group, x, y, rho_max + 2.0 * delta_max)?;
    let count_at = |center: &Point, radius: f64| -> Result<usize> {
        let mut n = 0;
        for e in &superset.elements {
            if hyperbolic_distance(x, &e.apply_unchecked(center))? <= radius {
                n += 1;
            }
        }
        Ok(n)
    };

    let mut pointwise_configs = 0;
    let mut pointwise_violations = 0;
    let mut averaged_configs = 0;
    let mut averaged_violations = 0;
    for (c, (&delta, &rho)) in delta_grid
        .iter()
        .flat_map(|d| rho_grid.iter().map(move |r| (d, r)))
        .enumerate()
    {
        let base = (c as u64) * (samples_per_config as u64 + 2);
        let zs = sample_ball(y, delta, mix(seed, base), samples_per_config)?;
        for (k, z) in zs.iter().enumerate() {
            let w = sample_ball(z, delta, mix(seed, base + 1 + k as u64), 1)?[0];
            let lower = count_at(z, rho - delta)?;
            let mid = count_at(&w, rho)?;
            let upper = count_at(z, rho + delta)?;
            pointwise_configs += 1;
            if !(lower <= mid && mid <= upper) {
                pointwise_violations += 1;
            }
        }
        if rho > 4.0 * delta {
            let mc = samples_per_config.max(16);
            let est_lo =
                orbital_scalar_product(group, x, y, delta, rho - 2.0 * delta, mc, mix(seed, base))?;
            let est_hi =
                orbital_scalar_product(group, x, y, delta, rho + 2.0 * delta, mc, mix(seed, base))?;
            let n = count_at(y, rho)? as f64;
            let vol_lo = ball_volume(group.dimension(), rho - 2.0 * delta)?;
            let vol_hi = ball_volume(group.dimension(), rho + 2.0 * delta)?;
            averaged_configs += 1;
            // The chain is exact on the integer counts; normalizing by the
            // volume and back rounds at the last bit, so the comparison
            // carries a small relative guard.
            let guard = 1e-9 * n.max(1.0);
            let lower_ok = vol_lo * (est_lo.mean - 3.0 * est_lo.std_error) <= n + guard;
            let upper_ok = n <= vol_hi * (est_hi.mean + 3.0 * est_hi.std_error) + guard;
            if !(lower_ok && upper_ok) {
                averaged_violations += 1;
            }
        }
    }
    Ok(SandwichReport {
        pointwise_configs,
        pointwise_violations,
        averaged_configs,
        averaged_violations,
        complete: superset.complete,
    })
}

/// Growth-exponent sweep along a radius grid.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentReport {
    /// Least-squares slope of `ln N` against `ρ` over the largest-`ρ` half.
    pub estimate: f64,
    /// Slopes over the leading and trailing two-thirds of the grid.
    pub window_estimates: (f64, f64),
    /// Absolute difference of the window slopes.
    pub window_delta: f64,
    /// Whether the window slopes agree within `0.05`.
    pub stable: bool,
    /// The counts `(ρ, N)` the fit is based on.
    pub counts: Vec<(f64, usize)>,
    /// Whether all enumerations were certified complete.
    pub complete: bool,
}

/// Count orbit points along an increasing radius grid (at least 5 radii)
/// and fit the growth exponent, reporting the fit over two overlapping
/// windows as a stability diagnostic.
pub fn exponent_sweep(
    group: &GroupPresentation,
    x: &Point,
    rho_grid: &[f64],
) -> Result<ExponentReport> {
    if rho_grid.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "exponent sweep needs at least 5 radii, got {}",
            rho_grid.len()
        )));
    }
    let mut counts = Vec::with_capacity(rho_grid.len());
    let mut complete = true;
    for &rho in rho_grid {
        let ball = enumerate_orbit(group, x, x, rho)?;
        complete &= ball.complete;
        counts.push((rho, ball.points.len()));
    }
    let estimate = critical_exponent_estimate(&counts)?;
    let window = counts.len().div_ceil(3) * 2;
    let head = critical_exponent_estimate(&counts[..window.max(3)])?;
    let tail = critical_exponent_estimate(&counts[counts.len() - window.max(3)..])?;
    let window_delta = (head - tail).abs();
    Ok(ExponentReport {
        estimate,
        window_estimates: (head, tail),
        window_delta,
        stable: window_delta <= 0.05,
        counts,
        complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::bundled_group;
    use crate::heat_kernels::heat_kernel_h3;
    use approx::assert_relative_eq;

    #[test]
    fn trivial_table_matches_closed_forms() {
        let g = bundled_group("trivial").unwrap();
        let o = Point::basepoint(3).unwrap();
        let rows = counting_table(&g, &o, &[1.0, 2.0, 4.0], 1e-10).unwrap();
        for row in &rows {
            assert_eq!(row.count, 1);
            assert!(row.complete);
            assert_eq!(row.p_tail, 0.0);
            assert_relative_eq!(
                row.heat,
                heat_kernel_h3(0.0, row.rho / 2.0).unwrap(),
                max_relative = 1e-14
            );
            assert_relative_eq!(
                row.volume,
                ball_volume(3, row.rho).unwrap(),
                max_relative = 1e-10
            );
            assert_relative_eq!(
                row.ratio,
                1.0 / (row.heat * row.volume),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn cyclic_table_counts_follow_the_translation_lattice() {
        let g = bundled_group("cyclic-one").unwrap();
        let o = Point::basepoint(3).unwrap();
        let grid = [2.3, 4.1, 6.7, 8.5];
        let rows = counting_table(&g, &o, &grid, 1e-11).unwrap();
        for row in &rows {
            assert_eq!(
                row.count,
                2 * (row.rho.floor() as u64) + 1,
                "ρ = {}",
                row.rho
            );
            assert!(row.complete);
            assert!(row.ratio.is_finite() && row.ratio > 0.0);
        }
    }

    #[test]
    fn table_rejects_bad_input() {
        let plane = bundled_group("schottky-plane").unwrap();
        let o2 = Point::basepoint(2).unwrap();
        assert!(counting_table(&plane, &o2, &[1.0], 1e-10).is_err());
        let g = bundled_group("trivial").unwrap();
        let o = Point::basepoint(3).unwrap();
        assert!(counting_table(&g, &o, &[], 1e-10).is_err());
        assert!(counting_table(&g, &o, &[-1.0], 1e-10).is_err());
    }

    #[test]
    fn csv_output_is_reproducible_with_fixed_columns() {
        let g = bundled_group("cyclic-one").unwrap();
        let o = Point::basepoint(3).unwrap();
        let rows = counting_table(&g, &o, &[1.5, 3.0], 1e-10).unwrap();
        let mut first = Vec::new();
        write_csv(&rows, &mut first).unwrap();
        let text = String::from_utf8(first.clone()).unwrap();
        assert!(
            text.starts_with("rho,N,p,p_tail,V,ratio,complete\n"),
            "{text}"
        );
        assert_eq!(text.lines().count(), 3);

        let rows_again = counting_table(&g, &o, &[1.5, 3.0], 1e-10).unwrap();
        let mut second = Vec::new();
        write_csv(&rows_again, &mut second).unwrap();
        assert_eq!(first, second, "CSV bytes must be reproducible");
    }

    #[test]
    fn sandwich_sweep_reports_no_violations_on_certified_groups() {
        for name in ["cyclic-one", "schottky-space"] {
            let g = bundled_group(name).unwrap();
            let o = Point::basepoint(3).unwrap();
            let y = Point::new(&[0.2, -0.1, 1.3]).unwrap();
            let report =
                sandwich_suite(&g, &o, &y, &[0.1, 0.25], &[2.1, 3.2], 12, 20260814).unwrap();
            assert!(report.complete, "{name}");
            assert_eq!(report.pointwise_configs, 48, "{name}");
            assert_eq!(report.pointwise_violations, 0, "{name}: {report:?}");
            assert!(report.averaged_configs > 0, "{name}");
            assert_eq!(report.averaged_violations, 0, "{name}: {report:?}");
        }
    }

    #[test]
    fn sandwich_sweep_validates_input() {
        let g = bundled_group("cyclic-one").unwrap();
        let o = Point::basepoint(3).unwrap();
        assert!(sandwich_suite(&g, &o, &o, &[], &[2.0], 4, 1).is_err());
        assert!(sandwich_suite(&g, &o, &o, &[0.1], &[], 4, 1).is_err());
        assert!(sandwich_suite(&g, &o, &o, &[0.1], &[2.0], 0, 1).is_err());
        assert!(sandwich_suite(&g, &o, &o, &[-0.1], &[2.0], 4, 1).is_err());
        assert!(sandwich_suite(&g, &o, &o, &[0.5], &[0.4], 4, 1).is_err());
    }

    #[test]
    fn exponent_sweep_separates_linear_from_exponential_growth() {
        let cyclic = bundled_group("cyclic-one").unwrap();
        let o3 = Point::basepoint(3).unwrap();
        let grid = [4.5, 6.5, 8.5, 10.5, 12.5, 14.5];
        let report = exponent_sweep(&cyclic, &o3, &grid).unwrap();
        assert!(report.complete);
        assert!(report.estimate.abs() < 0.2, "{report:?}");

        let plane = bundled_group("schottky-plane").unwrap();
        let o2 = Point::basepoint(2).unwrap();
        let grid = [3.0, 4.5, 6.0, 7.5, 9.0, 10.5, 12.0];
        let report = exponent_sweep(&plane, &o2, &grid).unwrap();
        assert!(report.complete);
        assert!(
            report.estimate > 0.15 && report.estimate < 0.95,
            "{report:?}"
        );
        assert_eq!(report.counts.len(), grid.len());

        assert!(exponent_sweep(&cyclic, &o3, &[1.0, 2.0, 3.0]).is_err());
    }
}
