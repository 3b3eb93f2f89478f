//! Upper half-space geometry: points, isometries, distances, ball volumes,
//! the θ kernel, spectral parameters, and uniform sampling of balls and
//! spheres.
//!
//! The model is `H^d = {(x_1, …, x_{d−1}, y) : y > 0}` for `d ∈ {2, 3}` with
//! basepoint `o = (0, …, 0, 1)`. Horizontal coordinates are packed into a
//! complex number (imaginary part fixed to zero when `d = 2`), so the Möbius
//! action of a 2×2 matrix takes a single form in both dimensions:
//!
//! ```text
//! denom = |c z + d|² + |c|² y²,
//! z ↦ ((a z + b) conj(c z + d) + a conj(c) y²) / denom,
//! y ↦ y / denom.
//! ```
//!
//! For `d = 3` this is the quaternionic action `w ↦ (aw + b)(cw + d)^{−1}`
//! on `w = x_1 + x_2 i + y j` written out in coordinates; for `d = 2` all
//! entries are real and the formula reduces to the classical fractional-linear
//! action on the upper half-plane.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::gamma;

use crate::numerics::parallel::ordered_map;
use crate::numerics::rng::stream_rng;
use crate::numerics::stable::{
    arcosh1p, cosh_minus_1, sinh2x_minus_2x, theta_base as theta_base_stable,
};
use crate::{Error, Result};

/// Tolerance for the unit-determinant invariant of [`Isometry`].
pub const DETERMINANT_TOLERANCE: f64 = 1e-12;
/// Looser determinant tolerance used when loading external matrices, which
/// are renormalized by `1/sqrt(det)` when within this distance of unity.
pub const LOAD_DETERMINANT_TOLERANCE: f64 = 1e-6;
/// Modulus below which a matrix entry is ignored for sign canonicalization.
pub const SIGN_CANONICAL_TOLERANCE: f64 = 1e-9;

const SAMPLE_BATCH: usize = 4096;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "model dimension must be 2 or 3, got {dim}"
        )))
    }
}

/// A point of the upper half-space model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    z: Complex64,
    height: f64,
    dim: usize,
}

impl Point {
    /// Build a point from model coordinates `(x_1, …, x_{d−1}, y)`.
    pub fn new(coords: &[f64]) -> Result<Self> {
        let dim = coords.len();
        check_dim(dim)?;
        let height = coords[dim - 1];
        if !(height > 0.0) || !height.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "last coordinate must be positive and finite, got {height}"
            )));
        }
        let z = if dim == 2 {
            Complex64::new(coords[0], 0.0)
        } else {
            Complex64::new(coords[0], coords[1])
        };
        Ok(Point { z, height, dim })
    }

    /// Build a point from its horizontal part and height.
    pub fn from_parts(z: Complex64, height: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if dim == 2 && z.im != 0.0 {
            return Err(Error::InvalidArgument(
                "horizontal part must be real when d = 2".into(),
            ));
        }
        if !(height > 0.0) || !height.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "height must be positive and finite, got {height}"
            )));
        }
        Ok(Point { z, height, dim })
    }

    /// The model basepoint `o = (0, …, 0, 1)`.
    pub fn basepoint(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Point {
            z: Complex64::new(0.0, 0.0),
            height: 1.0,
            dim,
        })
    }

    /// Model coordinates `(x_1, …, x_{d−1}, y)`.
    pub fn coords(&self) -> Vec<f64> {
        if self.dim == 2 {
            vec![self.z.re, self.height]
        } else {
            vec![self.z.re, self.z.im, self.height]
        }
    }

    /// Model dimension `d`.
    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Horizontal part `x_1 + i x_2` (imaginary part zero when `d = 2`).
    pub fn horizontal(&self) -> Complex64 {
        self.z
    }

    /// Height coordinate `y > 0`.
    pub fn height(&self) -> f64 {
        self.height
    }
}

/// Hyperbolic distance: `cosh ρ = 1 + ‖p − q‖² / (2 p_y q_y)`.
pub fn hyperbolic_distance(p: &Point, q: &Point) -> Result<f64> {
    if p.dim != q.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            got: q.dim,
        });
    }
    let dz = p.z - q.z;
    let dy = p.height - q.height;
    let u = (dz.norm_sqr() + dy * dy) / (2.0 * p.height * q.height);
    Ok(arcosh1p(u))
}

/// Distance from `p` to the vertical geodesic through the origin,
/// `cosh d = sqrt(|z|² + y²) / y`.
pub fn distance_to_vertical_axis(p: &Point) -> f64 {
    let n2 = p.z.norm_sqr();
    let norm = (n2 + p.height * p.height).sqrt();
    // cosh d − 1 = (norm − y)/y, rationalized to avoid cancellation.
    let u = (n2 / p.height) / (norm + p.height);
    arcosh1p(u)
}

/// Signed arclength coordinate (along the vertical axis) of the orthogonal
/// projection of `p`: `½ ln(|z|² + y²)`.
pub fn vertical_axis_coordinate(p: &Point) -> f64 {
    0.5 * (p.z.norm_sqr() + p.height * p.height).ln()
}

/// An orientation-preserving isometry represented by a unit-determinant 2×2
/// matrix (real entries for `d = 2`, complex for `d = 3`), identified up to
/// global sign. Stored in the canonical representative: the first entry in
/// row-major order of modulus above [`SIGN_CANONICAL_TOLERANCE`] has argument
/// in `(−π/2, π/2]`.
#[derive(Debug, Clone, Copy)]
pub struct Isometry {
    /// Row-major entries `[a, b, c, d]`.
    m: [Complex64; 4],
    dim: usize,
}

fn canonicalize_sign(m: &mut [Complex64; 4]) {
    for e in m.iter() {
        if e.norm_sqr() > SIGN_CANONICAL_TOLERANCE * SIGN_CANONICAL_TOLERANCE {
            let arg = e.arg();
            if !(arg > -std::f64::consts::FRAC_PI_2 && arg <= std::f64::consts::FRAC_PI_2) {
                for x in m.iter_mut() {
                    *x = -*x;
                }
            }
            return;
        }
    }
}

impl Isometry {
    fn build(dim: usize, mut m: [Complex64; 4], det_tol: f64) -> Result<Self> {
        check_dim(dim)?;
        if dim == 2 {
            for e in &m {
                if e.im.abs() > DETERMINANT_TOLERANCE {
                    return Err(Error::InvalidArgument(
                        "matrix entries must be real when d = 2".into(),
                    ));
                }
            }
            for e in m.iter_mut() {
                e.im = 0.0;
            }
        }
        let det = m[0] * m[3] - m[1] * m[2];
        let det_err = (det - Complex64::new(1.0, 0.0)).norm();
        if det_err > det_tol {
            return Err(Error::NonUnitDeterminant {
                error: det_err,
                tolerance: det_tol,
            });
        }
        if det_err > DETERMINANT_TOLERANCE {
            // Renormalize by the principal square root of the determinant.
            let scale = det.sqrt();
            for e in m.iter_mut() {
                *e /= scale;
            }
        }
        canonicalize_sign(&mut m);
        Ok(Isometry { m, dim })
    }

    /// Build an isometry, requiring `|det − 1| ≤ 1e−12`.
    pub fn new(dim: usize, entries: [Complex64; 4]) -> Result<Self> {
        Self::build(dim, entries, DETERMINANT_TOLERANCE)
    }

    /// Build an isometry from external data: determinants within `1e−6` of
    /// unity are renormalized, anything further off is rejected.
    pub fn new_renormalized(dim: usize, entries: [Complex64; 4]) -> Result<Self> {
        Self::build(dim, entries, LOAD_DETERMINANT_TOLERANCE)
    }

    /// Build a real-entried isometry (any `d`).
    pub fn from_real(dim: usize, entries: [f64; 4]) -> Result<Self> {
        Self::new(dim, entries.map(|x| Complex64::new(x, 0.0)))
    }

    /// The identity.
    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_real(dim, [1.0, 0.0, 0.0, 1.0])
    }

    /// Row-major entries `[a, b, c, d]` of the canonical representative.
    pub fn entries(&self) -> [Complex64; 4] {
        self.m
    }

    /// Model dimension `d`.
    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Determinant (unity within [`DETERMINANT_TOLERANCE`] by construction).
    pub fn det(&self) -> Complex64 {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    /// Inverse isometry `[d, −b; −c, a]`.
    pub fn inverse(&self) -> Self {
        let [a, b, c, d] = self.m;
        let mut m = [d, -b, -c, a];
        canonicalize_sign(&mut m);
        Isometry { m, dim: self.dim }
    }

    /// Matrix product `self · other` (the isometry applying `other` first).
    pub fn compose(&self, other: &Isometry) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Isometry) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let [a1, b1, c1, d1] = self.m;
        let [a2, b2, c2, d2] = other.m;
        let mut m = [
            a1 * a2 + b1 * c2,
            a1 * b2 + b1 * d2,
            c1 * a2 + d1 * c2,
            c1 * b2 + d1 * d2,
        ];
        canonicalize_sign(&mut m);
        Isometry { m, dim: self.dim }
    }

    /// Apply the isometry to a point.
    pub fn apply(&self, p: &Point) -> Result<Point> {
        if self.dim != p.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.dim,
            });
        }
        Ok(self.apply_unchecked(p))
    }

    pub(crate) fn apply_unchecked(&self, p: &Point) -> Point {
        debug_assert_eq!(self.dim, p.dim);
        let [a, b, c, d] = self.m;
        let y2 = p.height * p.height;
        let czd = c * p.z + d;
        let denom = czd.norm_sqr() + c.norm_sqr() * y2;
        let z = ((a * p.z + b) * czd.conj() + a * c.conj() * y2) / denom;
        let z = if self.dim == 2 {
            Complex64::new(z.re, 0.0)
        } else {
            z
        };
        Point {
            z,
            height: p.height / denom,
            dim: self.dim,
        }
    }

    /// Squared Frobenius norm `|a|² + |b|² + |c|² + |d|²`.
    pub fn frobenius_sq(&self) -> f64 {
        self.m.iter().map(|e| e.norm_sqr()).sum()
    }

    /// Displacement of the basepoint: `cosh d(o, g·o) = ‖g‖²_F / 2`.
    pub fn basepoint_displacement(&self) -> f64 {
        arcosh1p((self.frobenius_sq() - 2.0).max(0.0) / 2.0)
    }

    /// Dedup key: the canonical representative's entries rounded to 9
    /// decimals (with `−0` normalized), as bit patterns.
    pub fn canonical_key(&self) -> [u64; 8] {
        let mut key = [0u64; 8];
        for (i, e) in self.m.iter().enumerate() {
            key[2 * i] = ((e.re * 1e9).round() + 0.0).to_bits();
            key[2 * i + 1] = ((e.im * 1e9).round() + 0.0).to_bits();
        }
        key
    }

    /// Whether `self` and `other` agree entrywise (as canonical
    /// representatives) within `tol`.
    pub fn approx_eq(&self, other: &Isometry, tol: f64) -> bool {
        self.dim == other.dim
            && self
                .m
                .iter()
                .zip(other.m.iter())
                .all(|(x, y)| (x - y).norm() <= tol)
    }

    /// The vertical-axis-aligned isometry carrying the basepoint `o` to `p`:
    /// the affine map `w ↦ y_p w + z_p` with matrix
    /// `[[sqrt(y_p), z_p/sqrt(y_p)], [0, 1/sqrt(y_p)]]`.
    pub fn translation_to(p: &Point) -> Result<Self> {
        let root = p.height.sqrt();
        Self::new(
            p.dim,
            [
                Complex64::new(root, 0.0),
                p.z / root,
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0 / root, 0.0),
            ],
        )
    }
}

/// Euclidean unit-sphere area `ω_{d−1}` in `R^d`: `2 π^{d/2} / Γ(d/2)`.
fn unit_sphere_area(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// Volume of a hyperbolic ball: `V_d(ρ) = ω_{d−1} ∫_0^ρ sinh^{d−1} t dt`.
///
/// Closed forms `2π(cosh ρ − 1)` and `π(sinh 2ρ − 2ρ)` are used for
/// `d = 2, 3`; higher dimensions use the `∫ sinh^n` reduction formula.
pub fn ball_volume(d: usize, rho: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "ball volume needs d ≥ 2, got {d}"
        )));
    }
    if !(rho >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ball volume needs ρ ≥ 0, got {rho}"
        )));
    }
    match d {
        2 => Ok(2.0 * std::f64::consts::PI * cosh_minus_1(rho)),
        3 => Ok(std::f64::consts::PI * sinh2x_minus_2x(rho)),
        _ => {
            // I_n = ∫_0^ρ sinh^n, I_n = sinh^{n−1}(ρ) cosh(ρ)/n − (n−1)/n I_{n−2}.
            let (s, c) = (rho.sinh(), rho.cosh());
            let mut even = rho; // I_0
            let mut odd = c - 1.0; // I_1
            let mut n = 2;
            while n < d {
                even = s.powi(n as i32 - 1) * c / n as f64 - (n as f64 - 1.0) / n as f64 * even;
                n += 1;
                if n < d {
                    odd = s.powi(n as i32 - 1) * c / n as f64 - (n as f64 - 1.0) / n as f64 * odd;
                    n += 1;
                }
            }
            // The radial integral is I_{d−1}, whose parity is opposite to d.
            let integral = if d.is_multiple_of(2) { odd } else { even };
            Ok(unit_sphere_area(d) * integral)
        }
    }
}

/// Area of the hyperbolic sphere of radius `ρ`: `V_d′(ρ) = ω_{d−1} sinh^{d−1} ρ`.
pub fn sphere_area(d: usize, rho: f64) -> Result<f64> {
    if d < 2 || !(rho >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sphere area needs d ≥ 2 and ρ ≥ 0, got d = {d}, ρ = {rho}"
        )));
    }
    Ok(unit_sphere_area(d) * rho.sinh().powi(d as i32 - 1))
}

/// `ln V_d(ρ)` for `d ∈ {2, 3}`, safe for `ρ` up to the hundreds where the
/// volume itself overflows.
pub fn ln_ball_volume(d: usize, rho: f64) -> Result<f64> {
    check_dim(d)?;
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ln ball volume needs ρ > 0, got {rho}"
        )));
    }
    if rho < 1.0 {
        return Ok(ball_volume(d, rho)?.ln());
    }
    Ok(match d {
        // 2π(cosh ρ − 1) = π e^ρ (1 − e^{−ρ})².
        2 => std::f64::consts::PI.ln() + rho + 2.0 * (-(-rho).exp()).ln_1p(),
        // π(sinh 2ρ − 2ρ) = (π/2) e^{2ρ} (1 − e^{−4ρ} − 4ρ e^{−2ρ}).
        _ => {
            (std::f64::consts::PI / 2.0).ln()
                + 2.0 * rho
                + (-(-4.0 * rho).exp() - 4.0 * rho * (-2.0 * rho).exp()).ln_1p()
        }
    })
}

/// The kernel `θ(ρ, r) = (2(cosh ρ − cosh r)/e^ρ)^{(d−1)/2}` for `|r| < ρ`,
/// valued in `[0, 2^{(d−1)/2}]`.
///
/// The base is evaluated through the overflow-free factorization
/// `(1 − e^{r−ρ})(1 − e^{−(r+ρ)})`, which also preserves relative accuracy
/// at both endpoints.
pub fn theta(d: usize, rho: f64, r: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("θ needs d ≥ 2, got {d}")));
    }
    if !(rho > r.abs()) {
        return Err(Error::InvalidArgument(format!(
            "θ needs ρ > |r|, got ρ = {rho}, r = {r}"
        )));
    }
    let base = theta_base_stable(rho, r);
    Ok(match d {
        2 => base.sqrt(),
        3 => base,
        _ => base.powf((d as f64 - 1.0) / 2.0),
    })
}

/// The spectral parameter pair `(λ, s)` with `s(d−1−s) = λ` and
/// `Re s ≤ (d−1)/2`.
#[derive(Debug, Clone, Copy)]
pub struct SpectralParam {
    /// Laplace eigenvalue `λ ≥ 0`.
    pub lambda: f64,
    /// Root of `s(d−1−s) = λ` with `Re s ≤ (d−1)/2` and `Im s ≤ 0`.
    pub s: Complex64,
    /// Model dimension.
    pub dim: usize,
}

impl SpectralParam {
    /// Residual `|s(d−1−s) − λ|` of the defining equation.
    pub fn residual(&self) -> f64 {
        let n = self.dim as f64 - 1.0;
        (self.s * (Complex64::new(n, 0.0) - self.s) - self.lambda).norm()
    }
}

/// Solve `s(d−1−s) = λ` by `s = (d−1)/2 − sqrt((d−1)²/4 − λ)` with the
/// principal square root, so `Im s = −sqrt(λ − (d−1)²/4) ≤ 0` above the
/// branch point.
pub fn spectral_param(d: usize, lambda: f64) -> Result<SpectralParam> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "spectral parameter needs d ≥ 2, got {d}"
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "spectral parameter needs λ ≥ 0, got {lambda}"
        )));
    }
    let half = (d as f64 - 1.0) / 2.0;
    let disc = half * half - lambda;
    let s = if disc >= 0.0 {
        Complex64::new(half - disc.sqrt(), 0.0)
    } else {
        Complex64::new(half, -(-disc).sqrt())
    };
    Ok(SpectralParam { lambda, s, dim: d })
}

/// Solve `sinh(2t) − 2t = target` for `t ∈ [0, hi]` (monotone; safeguarded
/// Newton with a bisection fallback).
fn invert_volume_radius_d3(target: f64, hi: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let full = sinh2x_minus_2x(hi);
    if target >= full {
        return hi;
    }
    // Initial guess from the small-t (4t³/3) and large-t (e^{2t}/2) regimes.
    let cube = (0.75 * target).cbrt();
    let loga = 0.5 * (2.0 * target).ln();
    let mut t = if loga > 0.5 {
        loga.min(hi)
    } else {
        cube.min(hi)
    };
    let (mut lo, mut hi_b) = (0.0_f64, hi);
    for _ in 0..200 {
        let g = sinh2x_minus_2x(t) - target;
        if g > 0.0 {
            hi_b = t;
        } else {
            lo = t;
        }
        let sh = t.sinh();
        let deriv = 4.0 * sh * sh;
        let mut next = if deriv > 0.0 {
            t - g / deriv
        } else {
            0.5 * (lo + hi_b)
        };
        if !(next > lo && next < hi_b) {
            next = 0.5 * (lo + hi_b);
        }
        if (next - t).abs() <= 1e-15 * t.max(1e-3) {
            return next;
        }
        t = next;
    }
    t
}

/// Draw a radius in `[0, ρ]` with density proportional to `sinh^{d−1}`,
/// by inverse transform on the closed-form volume.
fn sample_radius<R: Rng>(dim: usize, rho: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    if dim == 2 {
        arcosh1p(u * cosh_minus_1(rho))
    } else {
        invert_volume_radius_d3(u * sinh2x_minus_2x(rho), rho)
    }
}

/// Draw a unit tangent direction `(horizontal, vertical)` at the basepoint.
fn sample_direction<R: Rng>(dim: usize, rng: &mut R) -> (Complex64, f64) {
    if dim == 2 {
        let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        (Complex64::new(phi.cos(), 0.0), phi.sin())
    } else {
        loop {
            let v = [
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ];
            let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            if n2 > 1e-12 {
                let n = n2.sqrt();
                return (Complex64::new(v[0] / n, v[1] / n), v[2] / n);
            }
        }
    }
}

/// Geodesic from the basepoint: `exp_o(t·u)` for a unit tangent direction
/// `u = (u_h, u_y)`, via `D = cosh t − u_y sinh t`, giving the point
/// `((sinh t / D)·u_h, 1/D)`.
fn exp_basepoint(dim: usize, u: (Complex64, f64), t: f64) -> Point {
    let d = t.cosh() - u.1 * t.sinh();
    Point {
        z: u.0 * (t.sinh() / d),
        height: 1.0 / d,
        dim,
    }
}

/// Transport a point constructed around `o` to the ball around `center` by
/// the affine isometry `w ↦ y_c w + z_c`.
fn transport(center: &Point, p: Point) -> Point {
    Point {
        z: center.z + p.z * center.height,
        height: center.height * p.height,
        dim: center.dim,
    }
}

fn sample_batched(center: &Point, rho: f64, seed: u64, n: usize, on_sphere: bool) -> Vec<Point> {
    let n_batches = n.div_ceil(SAMPLE_BATCH);
    let center = *center;
    let batches = ordered_map(n_batches, move |b| {
        let mut rng = stream_rng(seed, b as u64);
        let count = SAMPLE_BATCH.min(n - b * SAMPLE_BATCH);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let t = if on_sphere {
                rho
            } else {
                sample_radius(center.dim, rho, &mut rng)
            };
            let u = sample_direction(center.dim, &mut rng);
            out.push(transport(&center, exp_basepoint(center.dim, u, t)));
        }
        out
    });
    batches.into_iter().flatten().collect()
}

/// Draw `n` points i.i.d. uniform w.r.t. hyperbolic measure on
/// `B(center, ρ)`: the radius by inverse transform on the closed-form volume,
/// the direction uniform on the unit tangent sphere, mapped out by the
/// basepoint exponential and transported to `center`.
///
/// Deterministic given `seed`, independent of the worker-thread count.
pub fn sample_ball(center: &Point, rho: f64, seed: u64, n: usize) -> Result<Vec<Point>> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sample_ball needs ρ > 0, got {rho}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample_ball needs n ≥ 1".into()));
    }
    Ok(sample_batched(center, rho, seed, n, false))
}

/// Draw `n` points uniform on the sphere `S(center, ρ)` (same conventions as
/// [`sample_ball`]).
pub fn sample_sphere(center: &Point, rho: f64, seed: u64, n: usize) -> Result<Vec<Point>> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sample_sphere needs ρ > 0, got {rho}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample_sphere needs n ≥ 1".into()));
    }
    Ok(sample_batched(center, rho, seed, n, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::integrate;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords).unwrap()
    }

    #[test]
    fn distance_along_vertical_geodesic_is_log_height_ratio() {
        let o = pt(&[0.0, 0.0, 1.0]);
        let q = pt(&[0.0, 0.0, std::f64::consts::E]);
        assert!((hyperbolic_distance(&o, &q).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn distance_vanishes_iff_equal() {
        let p = pt(&[0.3, -0.2, 2.5]);
        assert_eq!(hyperbolic_distance(&p, &p).unwrap(), 0.0);
        let q = pt(&[0.3, -0.2, 2.5 + 1e-9]);
        assert!(hyperbolic_distance(&p, &q).unwrap() > 0.0);
    }

    #[test]
    fn distance_unit_horizontal_step_is_arcosh_three_halves() {
        let p = pt(&[0.0, 0.0, 1.0]);
        let q = pt(&[1.0, 0.0, 1.0]);
        // cosh ρ = 1.5; high-precision value of arcosh(3/2).
        let expected = 0.962_423_650_119_206_9;
        assert!((hyperbolic_distance(&p, &q).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn distance_dimension_mismatch_is_rejected() {
        let p2 = pt(&[0.0, 1.0]);
        let p3 = pt(&[0.0, 0.0, 1.0]);
        assert!(matches!(
            hyperbolic_distance(&p2, &p3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn point_validation() {
        assert!(Point::new(&[0.0, 0.0]).is_err()); // zero height
        assert!(Point::new(&[0.0, -1.0]).is_err());
        assert!(Point::new(&[1.0]).is_err()); // d = 1
        assert!(Point::new(&[0.0, 0.0, 0.0, 1.0]).is_err()); // d = 4
    }

    #[test]
    fn identity_fixes_points() {
        let id = Isometry::identity(3).unwrap();
        let p = pt(&[0.4, -1.2, 0.7]);
        let q = id.apply(&p).unwrap();
        assert!((q.horizontal() - p.horizontal()).norm() < 1e-15);
        assert!((q.height() - p.height()).abs() < 1e-15);
    }

    #[test]
    fn diagonal_matrix_scales_height() {
        let h = (0.5_f64).exp();
        let g = Isometry::from_real(3, [h, 0.0, 0.0, 1.0 / h]).unwrap();
        let o = pt(&[0.0, 0.0, 1.0]);
        let q = g.apply(&o).unwrap();
        assert!(q.horizontal().norm() < 1e-15);
        assert!((q.height() - std::f64::consts::E).abs() < 1e-14);
    }

    #[test]
    fn parabolic_matrix_translates_horizontally() {
        let g = Isometry::from_real(3, [1.0, 1.0, 0.0, 1.0]).unwrap();
        let o = pt(&[0.0, 0.0, 1.0]);
        let q = g.apply(&o).unwrap();
        assert!((q.horizontal().re - 1.0).abs() < 1e-15);
        assert!(q.horizontal().im.abs() < 1e-15);
        assert!((q.height() - 1.0).abs() < 1e-15);
    }

    /// A handful of fixed unit-determinant matrices exercising rotation,
    /// translation, dilation, and inversion in both dimensions.
    fn sample_isometries(dim: usize) -> Vec<Isometry> {
        let mut out = vec![
            Isometry::identity(dim).unwrap(),
            Isometry::from_real(dim, [1.0, 0.75, 0.0, 1.0]).unwrap(),
            Isometry::from_real(dim, [1.4, 0.0, 0.0, 1.0 / 1.4]).unwrap(),
            Isometry::from_real(dim, [0.0, -1.0, 1.0, 0.0]).unwrap(),
            Isometry::from_real(dim, [2.0, 1.0, 3.0, 2.0]).unwrap(),
        ];
        if dim == 3 {
            out.push(
                Isometry::new(
                    3,
                    [
                        Complex64::new(1.0, 0.5),
                        Complex64::new(0.3, -0.2),
                        Complex64::new(0.0, 0.4),
                        // Chosen so the determinant is exactly computable:
                        // solve a·d − b·c = 1 for d.
                        (Complex64::new(1.0, 0.0)
                            + Complex64::new(0.3, -0.2) * Complex64::new(0.0, 0.4))
                            / Complex64::new(1.0, 0.5),
                    ],
                )
                .unwrap(),
            );
        }
        out
    }

    fn sample_points(dim: usize) -> Vec<Point> {
        if dim == 2 {
            vec![pt(&[0.0, 1.0]), pt(&[2.0, 0.25]), pt(&[-1.5, 3.0])]
        } else {
            vec![
                pt(&[0.0, 0.0, 1.0]),
                pt(&[1.0, -0.5, 0.3]),
                pt(&[-2.0, 1.0, 4.0]),
            ]
        }
    }

    #[test]
    fn action_is_isometric() {
        for dim in [2, 3] {
            for g in sample_isometries(dim) {
                let pts = sample_points(dim);
                for p in &pts {
                    for q in &pts {
                        let before = hyperbolic_distance(p, q).unwrap();
                        let after = hyperbolic_distance(&g.apply(p).unwrap(), &g.apply(q).unwrap())
                            .unwrap();
                        assert!(
                            (before - after).abs() < 1e-10,
                            "d = {dim}: {before} vs {after}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn composition_matches_sequential_application() {
        for dim in [2, 3] {
            let gs = sample_isometries(dim);
            for g in &gs {
                for h in &gs {
                    let gh = g.compose(h).unwrap();
                    for p in sample_points(dim) {
                        let via_product = gh.apply(&p).unwrap();
                        let via_steps = g.apply(&h.apply(&p).unwrap()).unwrap();
                        assert!(
                            (via_product.horizontal() - via_steps.horizontal()).norm() < 1e-9
                                && (via_product.height() - via_steps.height()).abs() < 1e-9
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        for dim in [2, 3] {
            for g in sample_isometries(dim) {
                let e = g.compose(&g.inverse()).unwrap();
                assert!(e.approx_eq(&Isometry::identity(dim).unwrap(), 1e-12));
            }
        }
    }

    #[test]
    fn sign_canonicalization_identifies_plus_minus() {
        let g = Isometry::from_real(2, [-2.0, -1.0, -3.0, -2.0]).unwrap();
        let h = Isometry::from_real(2, [2.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(g.canonical_key(), h.canonical_key());
        assert!(
            g.entries()[0].re > 0.0,
            "canonical representative flips sign"
        );
    }

    #[test]
    fn determinant_gate_and_renormalization() {
        assert!(matches!(
            Isometry::from_real(2, [1.0, 0.0, 0.0, 1.0 + 1e-9]),
            Err(Error::NonUnitDeterminant { .. })
        ));
        // Within the loose tolerance: renormalized to unit determinant.
        let g = Isometry::new_renormalized(
            2,
            [1.0, 0.0, 0.0, 1.0 + 1e-7].map(|x| Complex64::new(x, 0.0)),
        )
        .unwrap();
        assert!((g.det() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(Isometry::new_renormalized(
            2,
            [1.0, 0.0, 0.0, 1.01].map(|x| Complex64::new(x, 0.0))
        )
        .is_err());
    }

    #[test]
    fn translation_to_carries_basepoint() {
        let p = pt(&[1.0, -2.0, 3.0]);
        let g = Isometry::translation_to(&p).unwrap();
        let o = Point::basepoint(3).unwrap();
        let q = g.apply(&o).unwrap();
        assert!((q.horizontal() - p.horizontal()).norm() < 1e-14);
        assert!((q.height() - p.height()).abs() < 1e-14);
    }

    #[test]
    fn basepoint_displacement_matches_distance() {
        for dim in [2, 3] {
            let o = Point::basepoint(dim).unwrap();
            for g in sample_isometries(dim) {
                let direct = hyperbolic_distance(&o, &g.apply(&o).unwrap()).unwrap();
                assert!(
                    (g.basepoint_displacement() - direct).abs() < 1e-10,
                    "d = {dim}"
                );
            }
        }
    }

    #[test]
    fn volumes_match_frozen_and_limit_values() {
        assert_eq!(ball_volume(2, 0.0).unwrap(), 0.0);
        assert_eq!(ball_volume(3, 0.0).unwrap(), 0.0);
        // π(sinh 2 − 2), 20-digit evaluation.
        let v31 = 5.110_932_705_708_289;
        assert!((ball_volume(3, 1.0).unwrap() - v31).abs() < 1e-12 * v31);
        // V_3(ρ)/e^{2ρ} → π/2.
        let ratio = ball_volume(3, 20.0).unwrap() / (40.0_f64).exp();
        assert!((ratio - std::f64::consts::FRAC_PI_2).abs() < 1e-8 * std::f64::consts::FRAC_PI_2);
        assert!(ball_volume(3, -1.0).is_err());
        assert!(ball_volume(1, 1.0).is_err());
    }

    #[test]
    fn closed_form_volumes_match_quadrature_oracle() {
        for d in [2usize, 3, 4] {
            for &rho in &[0.1, 1.0, 5.0, 20.0] {
                let oracle = integrate(|t| sphere_area(d, t).unwrap(), 0.0, rho, 1e-13, 1e-12, 1)
                    .unwrap()
                    .value
                    .re;
                let closed = ball_volume(d, rho).unwrap();
                assert!(
                    (closed - oracle).abs() < 1e-10 * oracle,
                    "d = {d}, ρ = {rho}: closed {closed} vs quadrature {oracle}"
                );
            }
        }
    }

    #[test]
    fn ln_volume_is_consistent_and_overflow_safe() {
        for d in [2, 3] {
            for &rho in &[0.2, 1.0, 7.0, 50.0] {
                let direct = ball_volume(d, rho).unwrap().ln();
                assert!((ln_ball_volume(d, rho).unwrap() - direct).abs() < 1e-11);
            }
            let big = ln_ball_volume(d, 500.0).unwrap();
            assert!(big.is_finite() && big > 400.0);
        }
    }

    #[test]
    fn theta_frozen_value_and_bounds() {
        // 2(cosh 2 − cosh 1)/e², 20-digit evaluation.
        let expected = 0.600_649_129_349_427_9;
        assert!((theta(3, 2.0, 1.0).unwrap() - expected).abs() < 1e-15);
        assert!((theta(2, 2.0, 1.0).unwrap() - expected.sqrt()).abs() < 1e-15);
        for d in [2usize, 3] {
            let cap = 2.0_f64.powf((d as f64 - 1.0) / 2.0);
            for &rho in &[0.5, 2.0, 10.0, 200.0] {
                for k in 0..40 {
                    let r = rho * (-1.0 + 2.0 * (k as f64 + 0.5) / 40.0);
                    let v = theta(d, rho, r).unwrap();
                    assert!((0.0..=cap).contains(&v), "θ({d},{rho},{r}) = {v}");
                }
            }
        }
        // Near the endpoints the kernel vanishes continuously.
        assert!(theta(3, 2.0, 2.0 - 1e-13).unwrap() < 1e-12);
        assert!(theta(3, 2.0, -2.0 + 1e-13).unwrap() < 1e-12);
        assert!(theta(3, 2.0, 2.0).is_err());
        assert!(theta(3, 2.0, -2.5).is_err());
        // r = 0: base = (1 − e^{−ρ})² → 1 from below in d = 3.
        let v = theta(3, 18.0, 0.0).unwrap();
        assert!(v < 1.0 && v > 1.0 - 1e-7);
        assert!(theta(3, 600.0, 0.0).unwrap() <= 1.0);
    }

    #[test]
    fn spectral_param_branches_and_residuals() {
        let s0 = spectral_param(3, 0.0).unwrap();
        assert_eq!(s0.s, Complex64::new(0.0, 0.0));
        for d in [2usize, 3] {
            let half = (d as f64 - 1.0) / 2.0;
            let top = spectral_param(d, half * half).unwrap();
            assert!((top.s - Complex64::new(half, 0.0)).norm() < 1e-15);
        }
        let s3 = spectral_param(3, 3.0).unwrap();
        assert!((s3.s - Complex64::new(1.0, -std::f64::consts::SQRT_2)).norm() < 1e-15);
        assert!(s3.residual() < 1e-14);
        assert!(spectral_param(3, -0.1).is_err());
        // Residual bound on a log grid.
        for d in [2usize, 3] {
            for k in 0..=50 {
                let lambda = 1e-3 * (100.0_f64 / 1e-3).powf(k as f64 / 50.0);
                let sp = spectral_param(d, lambda).unwrap();
                assert!(sp.residual() <= 1e-12 * lambda.max(1.0));
                assert!(sp.s.re <= (d as f64 - 1.0) / 2.0 + 1e-12);
                assert!(sp.s.im <= 0.0);
                if lambda <= (d as f64 - 1.0) * (d as f64 - 1.0) / 4.0 {
                    assert_eq!(sp.s.im, 0.0);
                    assert!(sp.s.re >= 0.0);
                }
            }
        }
    }

    #[test]
    fn sampled_ball_points_stay_in_ball_and_are_reproducible() {
        for dim in [2usize, 3] {
            let center = if dim == 2 {
                pt(&[0.7, 2.0])
            } else {
                pt(&[0.7, -0.3, 2.0])
            };
            let rho = 1.7;
            let a = sample_ball(&center, rho, 99, 5000).unwrap();
            let b = sample_ball(&center, rho, 99, 5000).unwrap();
            assert_eq!(a.len(), 5000);
            for (p, q) in a.iter().zip(b.iter()) {
                assert_eq!(p.coords(), q.coords(), "bit-identical resampling");
            }
            for p in &a {
                assert!(hyperbolic_distance(&center, p).unwrap() <= rho + 1e-12);
            }
            let c = sample_ball(&center, rho, 100, 8).unwrap();
            assert_ne!(a[0].coords(), c[0].coords(), "seed changes the stream");
        }
    }

    #[test]
    fn sampled_radii_follow_the_volume_law() {
        // Mean of 1{d ≤ ρ/2} over n samples vs V_d(ρ/2)/V_d(ρ), 4σ gate.
        for dim in [2usize, 3] {
            let center = Point::basepoint(dim).unwrap();
            let rho = 2.0;
            let n = 1_000_000;
            let pts = sample_ball(&center, rho, 7, n).unwrap();
            let hits = pts
                .iter()
                .filter(|p| hyperbolic_distance(&center, p).unwrap() <= rho / 2.0)
                .count();
            let p_hat = hits as f64 / n as f64;
            let p_true = ball_volume(dim, rho / 2.0).unwrap() / ball_volume(dim, rho).unwrap();
            let sigma = (p_true * (1.0 - p_true) / n as f64).sqrt();
            assert!(
                (p_hat - p_true).abs() < 4.0 * sigma,
                "d = {dim}: {p_hat} vs {p_true} (σ = {sigma:.2e})"
            );
        }
    }

    #[test]
    fn sphere_samples_sit_on_the_sphere() {
        let center = pt(&[0.4, 0.1, 1.5]);
        let rho = 2.2;
        for p in sample_sphere(&center, rho, 5, 2000).unwrap() {
            assert!((hyperbolic_distance(&center, &p).unwrap() - rho).abs() < 1e-11);
        }
    }

    #[test]
    fn axis_distance_and_coordinate() {
        // Points on the axis: distance 0, coordinate ln(height).
        let p = pt(&[0.0, 0.0, 3.0]);
        assert!(distance_to_vertical_axis(&p).abs() < 1e-15);
        assert!((vertical_axis_coordinate(&p) - 3.0_f64.ln()).abs() < 1e-15);
        // (1, 1) in the half-plane: distance arcsinh(1).
        let q = pt(&[1.0, 1.0]);
        assert!((distance_to_vertical_axis(&q) - 1.0_f64.asinh()).abs() < 1e-14);
    }

    #[test]
    fn volume_radius_inversion_is_accurate() {
        for &rho in &[0.3, 2.0, 10.0, 60.0] {
            for k in 1..10 {
                let u = k as f64 / 10.0;
                let t = invert_volume_radius_d3(u * sinh2x_minus_2x(rho), rho);
                let back = sinh2x_minus_2x(t) / sinh2x_minus_2x(rho);
                assert!(
                    (back - u).abs() < 1e-12,
                    "ρ = {rho}, u = {u}: recovered {back}"
                );
            }
        }
    }
}
