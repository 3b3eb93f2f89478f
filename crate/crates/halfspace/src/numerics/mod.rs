//! Shared numerical machinery: overflow-safe elementary functions, adaptive
//! Gauss–Kronrod quadrature, an adaptive Runge–Kutta integrator with dense
//! output, deterministic seed derivation, and order-preserving parallel
//! batching.

pub mod ode;
pub mod parallel;
pub mod quadrature;
pub mod rng;
pub mod stable;
