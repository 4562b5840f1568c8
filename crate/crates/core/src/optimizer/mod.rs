//! Phase-shift optimization: closed-form optima in the special cases,
//! coordinate descent (parallel and sequential) for the general case, the
//! per-realization adaptive design, and phase quantization.

mod pcd;
mod quantize;
mod special;

use num_complex::Complex64;

pub use crate::channel::wrap_phase as lambda_wrap;
pub use pcd::{optimize_instant_adaptive, pcd, PcdConfig, PcdMode, Termination, OptimizationTrace};
pub use quantize::{degradation_bound, quantize};
pub use special::{classify, solve_special, SpecialCase, DEFAULT_ANGLE_TOL};

use crate::channel::PhaseShiftMatrix;
use crate::rate::DerivedConstants;

/// Ratio `(a cos(x + p) + b) / (c cos(x + q) + d)` with `d > c >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineRatio {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    pub c: f64,
    pub q: f64,
    pub d: f64,
}

impl CosineRatio {
    pub fn eval(&self, x: f64) -> f64 {
        (self.a * (x + self.p).cos() + self.b) / (self.c * (x + self.q).cos() + self.d)
    }

    /// Global maximizer over the circle, wrapped to `[0, 2pi)`; `current` is
    /// returned when the ratio does not depend on `x`.
    ///
    /// Setting the derivative to zero gives `B1 sin x + B2 cos x = R` with
    /// `B1 = bc cos q - ad cos p`, `B2 = bc sin q - ad sin p`,
    /// `R = ac sin(p - q)`. With `B1 = r cos psi`, `B2 = r sin psi` the two
    /// stationary points are `asin(R/r) - psi` and `pi - asin(R/r) - psi`;
    /// the larger of the two is the maximum.
    pub fn argmax(&self, current: f64) -> f64 {
        let CosineRatio { a, p, b, c, q, d } = *self;
        if a == 0.0 && c == 0.0 {
            return current;
        }
        let b1 = b * c * q.cos() - a * d * p.cos();
        let b2 = b * c * q.sin() - a * d * p.sin();
        let r = b1.hypot(b2);
        if r <= 1e-14 * ((b * c).abs() + (a * d).abs()) {
            return current;
        }
        let psi = b2.atan2(b1);
        let u = (a * c * (p - q).sin() / r).clamp(-1.0, 1.0).asin();
        let x1 = u - psi;
        let x2 = std::f64::consts::PI - u - psi;
        let best = if self.eval(x1) >= self.eval(x2) { x1 } else { x2 };
        lambda_wrap(best)
    }
}

/// Coefficients of `|s_rest + e^{j(theta + x)}|^2 * gain + offset` as
/// `a cos(x + p) + b`.
fn single_term(rest: Complex64, theta: f64, gain: f64, offset: f64) -> (f64, f64, f64) {
    (
        2.0 * gain * rest.norm(),
        theta - rest.arg(),
        gain * (1.0 + rest.norm_sqr()) + offset,
    )
}

/// The rate-bound objective as a function of element `k` alone, given the
/// leave-one-out LoS sums of all other elements.
pub(crate) fn coordinate_ratio(
    constants: &DerivedConstants,
    k: usize,
    rest_s: Complex64,
    rest_i: Complex64,
) -> CosineRatio {
    let (a, p, b) = single_term(rest_s, constants.theta_sru[k], constants.a_sru_los, constants.signal_offset());
    let (c, q, d) = single_term(
        rest_i,
        constants.theta_iru[k],
        constants.a_iru_los,
        constants.interference_offset(),
    );
    CosineRatio { a, p, b, c, q, d }
}

/// Optimal phase of element `(m, n)` with all other phases held at `phi`.
pub fn coordinate_optimum(phi: &PhaseShiftMatrix, constants: &DerivedConstants, m: usize, n: usize) -> f64 {
    assert!(m < phi.rows() && n < phi.cols(), "element ({m}, {n}) out of range");
    let k = m * phi.cols() + n;
    let p = phi.as_slice();
    let mut rest_s = Complex64::new(0.0, 0.0);
    let mut rest_i = Complex64::new(0.0, 0.0);
    for (l, &x) in p.iter().enumerate() {
        if l != k {
            rest_s += Complex64::from_polar(1.0, constants.theta_sru[l] + x);
            rest_i += Complex64::from_polar(1.0, constants.theta_iru[l] + x);
        }
    }
    coordinate_ratio(constants, k, rest_s, rest_i).argmax(p[k])
}
