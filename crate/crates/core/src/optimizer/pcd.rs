use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{coordinate_ratio, single_term, CosineRatio};
use crate::channel::{wrap_phase, ChannelRealization, PhaseShiftMatrix, SystemParams};
use crate::error::{invalid, Error, Result};
use crate::linalg::norm_sqr;
use crate::rate::{phased_sum, sinr_upper_bound, CsiCase, DerivedConstants};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcdMode {
    /// All coordinates from the same iterate, then a relaxed step.
    Parallel,
    /// Row-major coordinate sweep with full steps.
    Sequential,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcdConfig {
    pub rho0: f64,
    pub kappa: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub mode: PcdMode,
}

impl Default for PcdConfig {
    fn default() -> Self {
        Self {
            rho0: 1.0,
            kappa: 0.75,
            tol: 1e-6,
            max_iter: 10_000,
            mode: PcdMode::Parallel,
        }
    }
}

impl PcdConfig {
    pub fn sequential() -> Self {
        Self {
            mode: PcdMode::Sequential,
            ..Self::default()
        }
    }

    /// Stepsize `rho0 / (t + 1)^kappa` of iteration `t` (0-based).
    pub fn step(&self, t: usize) -> f64 {
        self.rho0 / ((t + 1) as f64).powf(self.kappa)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0 && self.rho0 <= 1.0) {
            return Err(invalid("rho0", format!("{} not in (0, 1]", self.rho0)));
        }
        if !(self.kappa > 0.5 && self.kappa <= 1.0) {
            return Err(invalid("kappa", format!("{} not in (0.5, 1]", self.kappa)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid("tol", "must be finite and > 0"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Tolerance,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationTrace {
    pub iterations: usize,
    /// Objective at the initial point followed by one value per iteration.
    pub objective: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub terminated_by: Termination,
    pub phases: PhaseShiftMatrix,
}

impl OptimizationTrace {
    pub fn final_objective(&self) -> f64 {
        *self.objective.last().expect("trace holds the initial objective")
    }
}

/// Moves `from` towards `target` by fraction `rho` along the shorter arc.
fn blend(from: f64, target: f64, rho: f64) -> f64 {
    let mut d = target - from;
    if d > PI {
        d -= 2.0 * PI;
    } else if d < -PI {
        d += 2.0 * PI;
    }
    wrap_phase(from + rho * d)
}

fn phasor(theta: f64, phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta + phi)
}

fn check_shape(constants: &DerivedConstants, phi: &PhaseShiftMatrix) -> Result<()> {
    if phi.rows() != constants.m_r || phi.cols() != constants.n_r {
        return Err(Error::ShapeMismatch {
            expected_rows: constants.m_r,
            expected_cols: constants.n_r,
            rows: phi.rows(),
            cols: phi.cols(),
        });
    }
    Ok(())
}

/// Coordinate ascent on the closed-form rate bound from `init`.
///
/// Parallel mode evaluates every coordinate optimum on the current iterate
/// (concurrently) and takes a relaxed step with the diminishing stepsize;
/// Sequential mode sweeps the elements in row-major order with full steps.
/// Each iteration is one update of all elements. Stops when the objective
/// changes by at most `tol` in absolute value, or after `max_iter`
/// iterations.
pub fn pcd(constants: &DerivedConstants, init: &PhaseShiftMatrix, config: &PcdConfig) -> Result<OptimizationTrace> {
    config.validate()?;
    check_shape(constants, init)?;
    let n = init.len();
    let mut phi = init.clone();
    let mut objective = vec![sinr_upper_bound(constants, &phi)];
    let mut step_sizes = Vec::new();
    let mut terminated_by = Termination::MaxIter;
    let (th_s, th_i) = (&constants.theta_sru, &constants.theta_iru);

    for t in 0..config.max_iter {
        match config.mode {
            PcdMode::Parallel => {
                let rho = config.step(t);
                let cur = phi.as_slice();
                let total_s = phased_sum(cur, th_s);
                let total_i = phased_sum(cur, th_i);
                let next: Vec<f64> = (0..n)
                    .into_par_iter()
                    .with_min_len(16)
                    .map(|k| {
                        let rest_s = total_s - phasor(th_s[k], cur[k]);
                        let rest_i = total_i - phasor(th_i[k], cur[k]);
                        let target = coordinate_ratio(constants, k, rest_s, rest_i).argmax(cur[k]);
                        blend(cur[k], target, rho)
                    })
                    .collect();
                phi = PhaseShiftMatrix::wrapped(phi.rows(), phi.cols(), next);
                step_sizes.push(rho);
            }
            PcdMode::Sequential => {
                let mut total_s = phased_sum(phi.as_slice(), th_s);
                let mut total_i = phased_sum(phi.as_slice(), th_i);
                for k in 0..n {
                    let old = phi.as_slice()[k];
                    let rest_s = total_s - phasor(th_s[k], old);
                    let rest_i = total_i - phasor(th_i[k], old);
                    let new = coordinate_ratio(constants, k, rest_s, rest_i).argmax(old);
                    phi.set_wrapped(k, new);
                    let new = phi.as_slice()[k];
                    total_s = rest_s + phasor(th_s[k], new);
                    total_i = rest_i + phasor(th_i[k], new);
                }
                step_sizes.push(1.0);
            }
        }
        let value = sinr_upper_bound(constants, &phi);
        let prev = *objective.last().expect("nonempty");
        objective.push(value);
        if (value - prev).abs() <= config.tol {
            terminated_by = Termination::Tolerance;
            break;
        }
    }

    Ok(OptimizationTrace {
        iterations: objective.len() - 1,
        objective,
        step_sizes,
        terminated_by,
        phases: phi,
    })
}

/// Per-realization objective `P_S ||h^H_RU Phi H_SR + h^H_SU||^2 / D(phi)`
/// where `D` is the expected interference-plus-noise power.
struct InstantObjective<'a> {
    constants: &'a DerivedConstants,
    p_s: f64,
    /// Row `k`: `conj(h_RU,k) H_SR[k, :]`.
    v: Vec<Vec<Complex64>>,
    v_norm2: Vec<f64>,
    direct: Vec<Complex64>,
}

impl<'a> InstantObjective<'a> {
    fn new(params: &SystemParams, constants: &'a DerivedConstants, r: &ChannelRealization) -> Self {
        let v: Vec<Vec<Complex64>> = r
            .h_ru
            .iter()
            .enumerate()
            .map(|(k, h)| r.h_sr.row(k).iter().map(|x| h.conj() * x).collect())
            .collect();
        let v_norm2 = v.iter().map(|row| norm_sqr(row)).collect();
        Self {
            constants,
            p_s: params.p_s,
            v,
            v_norm2,
            direct: r.h_su.iter().map(|z| z.conj()).collect(),
        }
    }

    fn channel(&self, phi: &[f64]) -> Vec<Complex64> {
        let mut g = self.direct.clone();
        for (row, &x) in self.v.iter().zip(phi) {
            let e = Complex64::from_polar(1.0, x);
            for (gj, vj) in g.iter_mut().zip(row) {
                *gj += e * vj;
            }
        }
        g
    }

    fn value_with(&self, g: &[Complex64], total_i: Complex64) -> f64 {
        self.p_s * norm_sqr(g) / self.constants.interference_power(total_i.norm_sqr())
    }

    fn value(&self, phi: &[f64]) -> f64 {
        self.value_with(&self.channel(phi), phased_sum(phi, &self.constants.theta_iru))
    }

    /// The objective in element `k` alone, given the current full channel `g`.
    fn ratio(&self, k: usize, phi_k: f64, g: &[Complex64], total_i: Complex64) -> CosineRatio {
        let own = Complex64::from_polar(1.0, phi_k);
        let vk = &self.v[k];
        let mut w = Complex64::new(0.0, 0.0);
        let mut u_norm2 = 0.0;
        for (gj, vj) in g.iter().zip(vk) {
            let u = gj - own * vj;
            w += u.conj() * vj;
            u_norm2 += u.norm_sqr();
        }
        let th_i = self.constants.theta_iru[k];
        let rest_i = total_i - phasor(th_i, phi_k);
        let (c, q, d) = single_term(
            rest_i,
            th_i,
            self.constants.a_iru_los,
            self.constants.interference_offset(),
        );
        CosineRatio {
            a: 2.0 * self.p_s * w.norm(),
            p: w.arg(),
            b: self.p_s * (u_norm2 + self.v_norm2[k]),
            c,
            q,
            d,
        }
    }

    /// One row-major sweep of exact coordinate maximizations.
    fn sweep(&self, phi: &mut PhaseShiftMatrix) {
        let mut g = self.channel(phi.as_slice());
        let th_i = &self.constants.theta_iru;
        let mut total_i = phased_sum(phi.as_slice(), th_i);
        for k in 0..phi.len() {
            let old = phi.as_slice()[k];
            let new = self.ratio(k, old, &g, total_i).argmax(old);
            phi.set_wrapped(k, new);
            let new = phi.as_slice()[k];
            let delta = Complex64::from_polar(1.0, new) - Complex64::from_polar(1.0, old);
            for (gj, vj) in g.iter_mut().zip(&self.v[k]) {
                *gj += delta * vj;
            }
            total_i += phasor(th_i[k], new) - phasor(th_i[k], old);
        }
    }
}

/// Phases maximizing the instant-CSI SINR of one realization.
///
/// Starts from the signal-aligned phases. Each iteration keeps the better of
/// a relaxed parallel coordinate step and a sequential sweep, so the
/// objective never decreases; sequential sweeps at the end ensure that no
/// single element can improve the objective by more than `tol`.
pub fn optimize_instant_adaptive(
    params: &SystemParams,
    constants: &DerivedConstants,
    realization: &ChannelRealization,
    config: &PcdConfig,
) -> Result<OptimizationTrace> {
    config.validate()?;
    if constants.csi_case != CsiCase::Instant {
        return Err(invalid("constants", "instant-adaptive design needs instant constants"));
    }
    let obj = InstantObjective::new(params, constants, realization);
    let mut phi = PhaseShiftMatrix::wrapped(
        constants.m_r,
        constants.n_r,
        constants.theta_sru.iter().map(|t| -t),
    );
    let n = phi.len();
    let mut current = obj.value(phi.as_slice());
    let mut objective = vec![current];
    let mut step_sizes = Vec::new();
    let mut terminated_by = Termination::MaxIter;

    for t in 0..config.max_iter {
        let rho = config.step(t);
        let g = obj.channel(phi.as_slice());
        let total_i = phased_sum(phi.as_slice(), &constants.theta_iru);
        let cur = phi.as_slice();
        let next: Vec<f64> = (0..n)
            .map(|k| blend(cur[k], obj.ratio(k, cur[k], &g, total_i).argmax(cur[k]), rho))
            .collect();
        let relaxed = PhaseShiftMatrix::wrapped(phi.rows(), phi.cols(), next);
        let relaxed_value = obj.value(relaxed.as_slice());
        obj.sweep(&mut phi);
        let swept_value = obj.value(phi.as_slice());
        let value = if relaxed_value > swept_value {
            phi = relaxed;
            step_sizes.push(rho);
            relaxed_value
        } else {
            step_sizes.push(1.0);
            swept_value
        };
        objective.push(value);
        let gain = value - current;
        current = value;
        if gain.abs() <= config.tol {
            terminated_by = Termination::Tolerance;
            break;
        }
    }

    // Polish: sequential sweeps never decrease the objective.
    let polish_tol = config.tol * 1e-2;
    for _ in 0..config.max_iter {
        obj.sweep(&mut phi);
        let value = obj.value(phi.as_slice());
        objective.push(value);
        step_sizes.push(1.0);
        let gain = value - current;
        current = value;
        if gain <= polish_tol {
            break;
        }
    }

    Ok(OptimizationTrace {
        iterations: objective.len() - 1,
        objective,
        step_sizes,
        terminated_by,
        phases: phi,
    })
}
