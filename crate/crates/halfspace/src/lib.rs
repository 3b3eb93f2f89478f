// Frozen reference constants keep their full derivation precision, and
// argument validation negates comparisons (`!(x > 0.0)`) so NaN is rejected.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

//! Numerics for hyperbolic space in the upper half-space model.
//!
//! This crate implements the computable objects attached to a discrete group
//! of orientation-preserving isometries of hyperbolic space `H^d` (`d = 2, 3`):
//!
//! * **Geometry** ([`hyperbolic_core`]): points of the upper half-space model,
//!   isometries as unit-determinant 2×2 matrices acting by Möbius
//!   transformations (quaternionic in dimension three), the hyperbolic
//!   distance, ball volumes `V_d(ρ)`, the kernel
//!   `θ(ρ, r) = (2(cosh ρ − cosh r)/e^ρ)^{(d−1)/2}`, spectral parameters
//!   `s(d−1−s) = λ`, and uniform sampling of hyperbolic balls.
//! * **Orbit enumeration** ([`group_orbits`]): breadth-first enumeration of the
//!   orbit points `γ·y` of a finitely generated group falling in a ball
//!   `B(x, ρ)`, the orbital counting function `N(x, y, ρ)`, a brute-force
//!   oracle, critical-exponent estimation, and Monte Carlo averages of
//!   `N/V_d(ρ)` over perturbed basepoints. Enumeration completeness is
//!   certified for the trivial group, cyclic groups generated by a diagonal
//!   matrix, and free groups passing a verifiable ping-pong test; everything
//!   else is reported as a certified lower bound.
//! * **Heat kernels** ([`heat_kernels`]): the explicit heat kernel of
//!   three-dimensional hyperbolic space,
//!   `p(ρ, t) = (4πt)^{−3/2} (ρ/sinh ρ) e^{−t − ρ²/(4t)}`,
//!   and its periodization `p_Γ(x, y, t) = Σ_γ p(d(x, γ·y), t)` over a group
//!   orbit with a certified truncation tail.
//! * **Ball-average transform** ([`selberg_transform`]): the eigenvalue
//!   `ν_ρ(λ)` of the ball-averaging operator acting on a Laplace eigenfunction
//!   with eigenvalue `λ`, computed by three routes (a direct slab integral,
//!   a θ-kernel form with overflow-safe prefactors, and integration of the
//!   radial eigenfunction), plus sweep reports for its two asymptotic regimes.
//! * **Radial eigenfunctions** ([`delsarte_verification`]): the universal
//!   sphere-mean function `S(λ, ρ)` as the solution of
//!   `u″ + (d−1) coth(ρ) u′ = −λ u` with `u(0) = 1`, and Monte Carlo checks of
//!   the sphere-mean and ball-mean identities against the explicit
//!   eigenfunctions `y^s`.
//! * **Experiments** ([`counting_experiments`]): cross-module tables relating
//!   the orbital count `N`, the quotient heat kernel `p_Γ`, and the ball
//!   volume, sandwich-inequality sweeps, and critical-exponent sweeps, with
//!   CSV/JSON emission for offline plotting.
//!
//! Sample presentations of groups (trivial, cyclic loxodromic, cyclic
//! parabolic, and rank-two Schottky groups over both base fields) are bundled
//! in [`groups`] and can also be loaded from JSON files.
//!
//! # Conventions
//!
//! The model is the upper half-space
//! `H^d = {(x_1, …, x_{d−1}, y) : y > 0}` with metric `(dx² + dy²)/y²` and
//! basepoint `o = (0, …, 0, 1)`. The Laplacian is taken with the geometer's
//! sign, so that `Δ y^s = s(d−1−s) y^s ≥ 0` for `0 ≤ s ≤ (d−1)/2`. All
//! randomized routines take explicit seeds and are bit-reproducible for a
//! fixed seed, independent of the worker-thread count.

#![forbid(unsafe_code)]
#![warn(missing_docs)]

pub mod counting_experiments;
pub mod delsarte_verification;
mod error;
pub mod group_orbits;
pub mod groups;
pub mod heat_kernels;
pub mod hyperbolic_core;
pub mod numerics;
pub mod selberg_transform;

pub use error::{Error, Result};
pub use group_orbits::{GroupPresentation, OrbitBall};
pub use hyperbolic_core::{Isometry, Point, SpectralParam};
