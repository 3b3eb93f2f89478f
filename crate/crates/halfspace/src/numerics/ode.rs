//! Adaptive explicit Runge–Kutta integration (Dormand–Prince 5(4)) with the
//! accepted steps retained for dense post-hoc evaluation.
//!
//! The integrator stores `(t, y, y′)` at every accepted step; consumers build
//! their own interpolant (the radial-eigenfunction solver uses two-point
//! quintic Hermite data since the second derivative is available from the
//! differential equation itself). A `h_max` option caps the step size so the
//! interpolation error stays below the integration tolerance.

use crate::{Error, Result};

/// Tolerances and step-size limits for [`solve`].
#[derive(Debug, Clone)]
pub struct OdeOptions {
    /// Relative tolerance per step.
    pub rtol: f64,
    /// Absolute tolerance per step.
    pub atol: f64,
    /// Upper bound on the step size (also bounds the dense-output spacing).
    pub h_max: f64,
    /// Initial step size; `None` chooses `h_max/10`.
    pub h_init: Option<f64>,
    /// Abort after this many accepted+rejected steps.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-14,
            h_max: 0.03,
            h_init: None,
            max_steps: 4_000_000,
        }
    }
}

/// Accepted integration knots: `ys[i]` and `dys[i]` are the state and its
/// derivative at `ts[i]`; `ts` is strictly increasing from `t0` to `t_end`.
#[derive(Debug, Clone)]
pub struct OdeKnots<const N: usize> {
    /// Knot abscissae.
    pub ts: Vec<f64>,
    /// States at the knots.
    pub ys: Vec<[f64; N]>,
    /// Derivatives at the knots.
    pub dys: Vec<[f64; N]>,
}

impl<const N: usize> OdeKnots<N> {
    /// Index `i` with `ts[i] ≤ t ≤ ts[i+1]` (clamped to the ends).
    pub fn segment_of(&self, t: f64) -> usize {
        match self.ts.binary_search_by(|probe| probe.total_cmp(&t)) {
            Ok(i) => i.min(self.ts.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.ts.len() - 2),
        }
    }
}

// Dormand–Prince 5(4) coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th-order and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `y′ = f(t, y)` from `(t0, y0)` to `t_end > t0`.
pub fn solve<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
) -> Result<OdeKnots<N>> {
    if !(t_end > t0) {
        return Err(Error::OdeFailure(format!(
            "integration span [{t0}, {t_end}] must be increasing"
        )));
    }
    if !(opts.h_max > 0.0 && opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::OdeFailure(
            "tolerances and h_max must be positive".into(),
        ));
    }

    let mut ts = vec![t0];
    let mut ys = vec![y0];
    let mut k1 = f(t0, &y0);
    let mut dys = vec![k1];

    let span = t_end - t0;
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.h_init.unwrap_or(opts.h_max / 10.0).min(opts.h_max);
    let h_min = span * 1e-14;

    for _step in 0..opts.max_steps {
        if t >= t_end {
            return Ok(OdeKnots { ts, ys, dys });
        }
        h = h.min(opts.h_max).min(t_end - t);
        if h < h_min {
            return Err(Error::OdeFailure(format!(
                "step size underflow at t = {t} (h = {h:.3e})"
            )));
        }

        let stage = |c: &[(f64, [f64; N])], dt: f64| -> [f64; N] {
            let mut arg = y;
            for (coeff, k) in c {
                for i in 0..N {
                    arg[i] += h * coeff * k[i];
                }
            }
            f(t + dt * h, &arg)
        };

        let k2 = stage(&[(A21, k1)], 0.2);
        let k3 = stage(&[(A31, k1), (A32, k2)], 0.3);
        let k4 = stage(&[(A41, k1), (A42, k2), (A43, k3)], 0.8);
        let k5 = stage(&[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], 8.0 / 9.0);
        let k6 = stage(
            &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
            1.0,
        );

        let mut y_next = y;
        for i in 0..N {
            y_next[i] += h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let k7 = f(t + h, &y_next);

        let mut err_sq = 0.0;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_next[i].abs());
            err_sq += (e / scale) * (e / scale);
        }
        let err = (err_sq / N as f64).sqrt();

        if err <= 1.0 {
            t += h;
            y = y_next;
            k1 = k7; // first-same-as-last
            ts.push(t);
            ys.push(y);
            dys.push(k1);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }

    Err(Error::OdeFailure(format!(
        "step budget {} exhausted at t = {t}",
        opts.max_steps
    )))
}
