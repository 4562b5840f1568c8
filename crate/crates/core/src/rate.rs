//! SINR evaluation, Monte Carlo rate estimation and the closed-form
//! Jensen upper bounds on average (instant CSI) and ergodic (statistic CSI)
//! rates.
//!
//! Both SINR definitions keep the interference power as an expectation over
//! the NLoS fading, so only the received signal power is random. That
//! expectation has an exact closed form and is evaluated as such; the
//! resulting `E[SINR]` equals `sinr_upper_bound`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{
    los_components, phase_grid, sample_indexed, ChannelRealization, LosComponents, PhaseShiftMatrix,
    SystemParams,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::norm_sqr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CsiCase {
    Instant,
    Statistic,
}

impl CsiCase {
    pub const ALL: [CsiCase; 2] = [CsiCase::Instant, CsiCase::Statistic];

    pub fn as_str(self) -> &'static str {
        match self {
            CsiCase::Instant => "instant",
            CsiCase::Statistic => "statistic",
        }
    }
}

/// Closed-form constants of the rate bound for one CSI case.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedConstants {
    pub csi_case: CsiCase,
    pub m_r: usize,
    pub n_r: usize,
    pub tau_sru: f64,
    pub tau_iru: f64,
    /// `f(phi_RU) - f(delta_SR)` per IRS element, rvec order.
    pub theta_sru: Vec<f64>,
    pub theta_iru: Vec<f64>,
    /// `f(phi_IR)` over the interference-BS array.
    pub theta_ir: Vec<f64>,
    pub y_ir: f64,
    pub a_sru_los: f64,
    pub a_su: f64,
    pub a_iru_los: f64,
    pub a_iu: f64,
    pub a_sru_nlos: f64,
    pub a_iru_nlos: f64,
    /// `a_iru_los / P_I`, kept so interference terms are available at `P_I = 0`.
    pub iru_los_per_watt: f64,
    /// `a_iru_nlos / P_I`.
    pub iru_nlos_per_watt: f64,
    pub eta: f64,
    pub p_i: f64,
    pub sigma2: f64,
    pub alpha_iu: f64,
}

impl DerivedConstants {
    pub fn irs_elements(&self) -> usize {
        self.m_r * self.n_r
    }

    /// Phase-independent part of the expected signal power.
    pub fn signal_offset(&self) -> f64 {
        self.a_sru_nlos + self.a_su
    }

    /// Phase-independent part of the expected interference-plus-noise power.
    pub fn interference_offset(&self) -> f64 {
        self.a_iru_nlos + self.a_iu
    }

    /// Expected received signal power at `y_SRU = y`.
    pub fn signal_power(&self, y_sru: f64) -> f64 {
        self.a_sru_los * y_sru + self.signal_offset()
    }

    /// Expected interference-plus-noise power at `y_IRU = y`.
    pub fn interference_power(&self, y_iru: f64) -> f64 {
        self.a_iru_los * y_iru + self.interference_offset()
    }
}

/// `|sum_k e^{j(theta_k + phi_k)}|^2`.
pub fn y_los(phi: &[f64], theta: &[f64]) -> f64 {
    phased_sum(phi, theta).norm_sqr()
}

/// `sum_k e^{j(theta_k + phi_k)}`.
pub fn phased_sum(phi: &[f64], theta: &[f64]) -> Complex64 {
    debug_assert_eq!(phi.len(), theta.len());
    phi.iter().zip(theta).map(|(p, t)| Complex64::from_polar(1.0, p + t)).sum()
}

pub fn derived_constants(params: &SystemParams, case: CsiCase) -> Result<DerivedConstants> {
    params.validate()?;
    let dl = params.d_over_lambda;
    let ms = params.signal_antennas() as f64;
    let mi = params.interference_antennas() as f64;
    let mr = params.irs_elements() as f64;

    let f_ru = phase_grid(params.phi_ru, params.m_r, params.n_r, dl);
    let f_sr = phase_grid(params.delta_sr, params.m_r, params.n_r, dl);
    let f_ir = phase_grid(params.delta_ir, params.m_r, params.n_r, dl);
    let theta_sru: Vec<f64> = f_ru.iter().zip(&f_sr).map(|(a, b)| a - b).collect();
    let theta_iru: Vec<f64> = f_ru.iter().zip(&f_ir).map(|(a, b)| a - b).collect();
    let theta_ir = phase_grid(params.phi_ir, params.m_i, params.n_i, dl);
    let y_ir = y_los(&vec![0.0; theta_ir.len()], &theta_ir);

    let tau_sru = params.k_sr.los_share() * params.k_ru.los_share();
    let tau_iru = params.k_ir.los_share() * params.k_ru.los_share();
    let cascade_s = params.alpha_sr * params.alpha_ru;
    let cascade_i = params.alpha_ir * params.alpha_ru;

    let a_sru_los = params.p_s * ms * cascade_s * tau_sru;
    let a_iu = params.p_i * params.alpha_iu + params.sigma2;
    let (a_su, a_sru_nlos, iru_los_per_watt, iru_nlos_per_watt) = match case {
        CsiCase::Instant => (
            params.p_s * ms * params.alpha_su,
            params.p_s * ms * cascade_s * mr * (1.0 - tau_sru),
            cascade_i * tau_iru,
            cascade_i * mr * (1.0 - tau_iru),
        ),
        CsiCase::Statistic => {
            let beam_loss = params.k_sr.nlos_share() * (ms - 1.0) / ms;
            // K_IR/((K_IR+1)(K_RU+1)); equals tau_IRU/K_RU but stays finite at K_RU = 0.
            let cross = params.k_ir.los_share() * params.k_ru.nlos_share();
            (
                params.p_s * params.alpha_su,
                params.p_s * ms * cascade_s * mr * (1.0 - tau_sru - beam_loss),
                cascade_i * tau_iru * y_ir / mi,
                cascade_i * mr * (1.0 - tau_iru + cross * (y_ir - mi) / mi),
            )
        }
    };
    let a_iru_los = params.p_i * iru_los_per_watt;
    let a_iru_nlos = params.p_i * iru_nlos_per_watt;
    let eta = a_sru_los * (a_iru_nlos + a_iu) - a_iru_los * (a_sru_nlos + a_su);

    Ok(DerivedConstants {
        csi_case: case,
        m_r: params.m_r,
        n_r: params.n_r,
        tau_sru,
        tau_iru,
        theta_sru,
        theta_iru,
        theta_ir,
        y_ir,
        a_sru_los,
        a_su,
        a_iru_los,
        a_iu,
        a_sru_nlos,
        a_iru_nlos,
        iru_los_per_watt,
        iru_nlos_per_watt,
        eta,
        p_i: params.p_i,
        sigma2: params.sigma2,
        alpha_iu: params.alpha_iu,
    })
}

/// Closed-form `gamma_ub` from the two LoS sum powers.
pub fn sinr_bound_from_y(constants: &DerivedConstants, y_sru: f64, y_iru: f64) -> f64 {
    constants.signal_power(y_sru) / constants.interference_power(y_iru)
}

pub fn sinr_upper_bound(constants: &DerivedConstants, phi: &PhaseShiftMatrix) -> f64 {
    let p = phi.as_slice();
    sinr_bound_from_y(constants, y_los(p, &constants.theta_sru), y_los(p, &constants.theta_iru))
}

pub fn rate_upper_bound(constants: &DerivedConstants, phi: &PhaseShiftMatrix) -> f64 {
    (1.0 + sinr_upper_bound(constants, phi)).log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Signal,
    Interference,
}

fn check_phi(params: &SystemParams, phi: &PhaseShiftMatrix) -> Result<()> {
    if phi.rows() != params.m_r || phi.cols() != params.n_r {
        return Err(Error::ShapeMismatch {
            expected_rows: params.m_r,
            expected_cols: params.n_r,
            rows: phi.rows(),
            cols: phi.cols(),
        });
    }
    Ok(())
}

/// Row vector `h^H_RU Phi H_cR + h^H_cU` for the signal or interference BS.
pub fn equivalent_channel(realization: &ChannelRealization, phasors: &[Complex64], side: Side) -> Vec<Complex64> {
    let (h_cr, h_cu) = match side {
        Side::Signal => (&realization.h_sr, &realization.h_su),
        Side::Interference => (&realization.h_ir, &realization.h_iu),
    };
    let mut g: Vec<Complex64> = h_cu.iter().map(|z| z.conj()).collect();
    for (k, (&h, &e)) in realization.h_ru.iter().zip(phasors).enumerate() {
        let coef = h.conj() * e;
        for (gj, &x) in g.iter_mut().zip(h_cr.row(k)) {
            *gj += coef * x;
        }
    }
    g
}

/// Statistic-CSI signal beamformer: MRT on the LoS equivalent channel
/// `s a(phi_SR)` with `s = sum_k e^{j(theta_SRU,k + phi_k)}`. When `s = 0` the
/// channel phase is undefined and phase 0 is used; the beam direction is the
/// same.
pub fn statistic_signal_beamformer(los: &LosComponents, theta_sru: &[f64], phi: &PhaseShiftMatrix) -> Vec<Complex64> {
    let s = phased_sum(phi.as_slice(), theta_sru);
    let rot = if s.norm() > 0.0 {
        Complex64::from_polar(1.0, -s.arg())
    } else {
        Complex64::new(1.0, 0.0)
    };
    let scale = 1.0 / (los.a_sr_bs.len() as f64).sqrt();
    los.a_sr_bs.iter().map(|a| a.conj() * rot * scale).collect()
}

pub fn uniform_beamformer(len: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0 / (len as f64).sqrt(), 0.0); len]
}

fn normalized_conj(g: &[Complex64], what: &'static str) -> Result<Vec<Complex64>> {
    let n = norm_sqr(g).sqrt();
    if !(n > 0.0) {
        return Err(Error::DegenerateChannel(what));
    }
    Ok(g.iter().map(|z| z.conj() / n).collect())
}

/// Unit-norm transmit beamformer of the given BS under the given CSI case.
pub fn beamformer(
    params: &SystemParams,
    case: CsiCase,
    realization: &ChannelRealization,
    los: &LosComponents,
    phi: &PhaseShiftMatrix,
    side: Side,
) -> Result<Vec<Complex64>> {
    check_phi(params, phi)?;
    match (case, side) {
        (CsiCase::Instant, Side::Signal) => {
            let g = equivalent_channel(realization, &phi.phasors(), Side::Signal);
            normalized_conj(&g, "signal equivalent channel is zero")
        }
        (CsiCase::Instant, Side::Interference) => {
            let h = &realization.h_iu_prime;
            let n = norm_sqr(h).sqrt();
            if !(n > 0.0) {
                return Err(Error::DegenerateChannel("interference BS own-user channel is zero"));
            }
            Ok(h.iter().map(|z| z / n).collect())
        }
        (CsiCase::Statistic, Side::Signal) => {
            let f_ru = phase_grid(params.phi_ru, params.m_r, params.n_r, params.d_over_lambda);
            let f_sr = phase_grid(params.delta_sr, params.m_r, params.n_r, params.d_over_lambda);
            let theta: Vec<f64> = f_ru.iter().zip(&f_sr).map(|(a, b)| a - b).collect();
            Ok(statistic_signal_beamformer(los, &theta, phi))
        }
        (CsiCase::Statistic, Side::Interference) => Ok(uniform_beamformer(params.interference_antennas())),
    }
}

fn require_case(constants: &DerivedConstants, case: CsiCase) -> Result<()> {
    if constants.csi_case != case {
        return Err(invalid(
            "constants",
            format!("expected {} constants, got {}", case.as_str(), constants.csi_case.as_str()),
        ));
    }
    Ok(())
}

/// Instant-CSI SINR of one realization: `P_S ||g_S + h_SU||^2` over the
/// expected interference-plus-noise power.
pub fn sinr_instant(
    params: &SystemParams,
    constants: &DerivedConstants,
    realization: &ChannelRealization,
    phi: &PhaseShiftMatrix,
) -> Result<f64> {
    require_case(constants, CsiCase::Instant)?;
    check_phi(params, phi)?;
    let g = equivalent_channel(realization, &phi.phasors(), Side::Signal);
    let denom = constants.interference_power(y_los(phi.as_slice(), &constants.theta_iru));
    Ok(params.p_s * norm_sqr(&g) / denom)
}

/// Statistic-CSI SINR of one realization: LoS-matched signal beamformer,
/// expected interference with the uniform interference beamformer.
pub fn sinr_statistic(
    params: &SystemParams,
    constants: &DerivedConstants,
    realization: &ChannelRealization,
    los: &LosComponents,
    phi: &PhaseShiftMatrix,
) -> Result<f64> {
    require_case(constants, CsiCase::Statistic)?;
    check_phi(params, phi)?;
    let w = statistic_signal_beamformer(los, &constants.theta_sru, phi);
    Ok(statistic_sinr_with(params, constants, realization, phi, &w))
}

fn statistic_sinr_with(
    params: &SystemParams,
    constants: &DerivedConstants,
    realization: &ChannelRealization,
    phi: &PhaseShiftMatrix,
    w: &[Complex64],
) -> f64 {
    let g = equivalent_channel(realization, &phi.phasors(), Side::Signal);
    let rx: Complex64 = g.iter().zip(w).map(|(a, b)| a * b).sum();
    let denom = constants.interference_power(y_los(phi.as_slice(), &constants.theta_iru));
    params.p_s * rx.norm_sqr() / denom
}

/// `P_I/(M_I N_I) ||h^H_RU Phi H_IR + h^H_IU||^2`: interference power of one
/// realization averaged over the interference BS's own-user channel only.
pub fn conditional_interference_power(
    params: &SystemParams,
    realization: &ChannelRealization,
    phi: &PhaseShiftMatrix,
) -> Result<f64> {
    check_phi(params, phi)?;
    let g = equivalent_channel(realization, &phi.phasors(), Side::Interference);
    Ok(params.p_i / params.interference_antennas() as f64 * norm_sqr(&g))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub n_samples: usize,
}

/// Welford mean and standard error of the mean, accumulated in index order.
pub fn summarize(values: &[f64]) -> RateEstimate {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = values.len();
    let standard_error = if n > 1 {
        (m2 / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    RateEstimate {
        mean,
        standard_error,
        n_samples: n,
    }
}

/// Evaluates `f(index)` for every sample index on the current rayon pool,
/// keeping results in index order so the summary is schedule-independent.
pub(crate) fn per_sample<F>(n_samples: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(u64) -> Result<f64> + Sync + Send,
{
    (0..n_samples as u64).into_par_iter().map(f).collect()
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples == 0 {
        return Err(invalid("n_samples", "must be at least 1"));
    }
    Ok(())
}

/// Sample mean and standard error of `log2(1 + SINR)` over `n_samples`
/// independent realizations; sample `i` uses stream `i` of `seed`.
pub fn monte_carlo_rate(
    params: &SystemParams,
    phi: &PhaseShiftMatrix,
    case: CsiCase,
    n_samples: usize,
    seed: u64,
) -> Result<RateEstimate> {
    check_samples(n_samples)?;
    check_phi(params, phi)?;
    let constants = derived_constants(params, case)?;
    let los = los_components(params);
    let values = match case {
        CsiCase::Instant => per_sample(n_samples, |i| {
            let r = sample_indexed(params, &los, seed, i);
            Ok((1.0 + sinr_instant(params, &constants, &r, phi)?).log2())
        })?,
        CsiCase::Statistic => {
            let w = statistic_signal_beamformer(&los, &constants.theta_sru, phi);
            per_sample(n_samples, |i| {
                let r = sample_indexed(params, &los, seed, i);
                Ok((1.0 + statistic_sinr_with(params, &constants, &r, phi, &w)).log2())
            })?
        }
    };
    Ok(summarize(&values))
}

/// One closed-form moment compared with its sample estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentCheck {
    pub name: &'static str,
    pub closed_form: f64,
    pub empirical: f64,
    pub standard_error: f64,
    pub z: f64,
}

impl MomentCheck {
    fn new(name: &'static str, closed_form: f64, est: RateEstimate) -> Self {
        let diff = est.mean - closed_form;
        let z = if est.standard_error > 0.0 {
            diff / est.standard_error
        } else if diff.abs() <= 1e-12 * closed_form.abs().max(f64::MIN_POSITIVE) {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        };
        Self {
            name,
            closed_form,
            empirical: est.mean,
            standard_error: est.standard_error,
            z,
        }
    }
}

/// Compares the closed-form received signal and interference powers with
/// their sample means. The interference moment uses the actual interference
/// beamformer of the case (not its expectation) and excludes noise.
pub fn validate_moments(
    params: &SystemParams,
    phi: &PhaseShiftMatrix,
    case: CsiCase,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<MomentCheck>> {
    if n_samples < 1000 {
        return Err(invalid("n_samples", "moment validation needs at least 1000 samples"));
    }
    check_phi(params, phi)?;
    let constants = derived_constants(params, case)?;
    let los = los_components(params);
    let p = phi.as_slice();
    let y_sru = y_los(p, &constants.theta_sru);
    let y_iru = y_los(p, &constants.theta_iru);
    let phasors = phi.phasors();
    let w_s_stat = statistic_signal_beamformer(&los, &constants.theta_sru, phi);
    let w_i_stat = uniform_beamformer(params.interference_antennas());

    let pairs: Vec<(f64, f64)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let r = sample_indexed(params, &los, seed, i);
            let g_s = equivalent_channel(&r, &phasors, Side::Signal);
            let g_i = equivalent_channel(&r, &phasors, Side::Interference);
            let (sig, w_i) = match case {
                CsiCase::Instant => {
                    let n = norm_sqr(&r.h_iu_prime).sqrt();
                    (norm_sqr(&g_s), r.h_iu_prime.iter().map(|z| z / n).collect::<Vec<_>>())
                }
                CsiCase::Statistic => {
                    let rx: Complex64 = g_s.iter().zip(&w_s_stat).map(|(a, b)| a * b).sum();
                    (rx.norm_sqr(), w_i_stat.clone())
                }
            };
            let rx_i: Complex64 = g_i.iter().zip(&w_i).map(|(a, b)| a * b).sum();
            (params.p_s * sig, params.p_i * rx_i.norm_sqr())
        })
        .collect();
    let sig: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let int: Vec<f64> = pairs.iter().map(|p| p.1).collect();

    Ok(vec![
        MomentCheck::new("signal_power", constants.signal_power(y_sru), summarize(&sig)),
        MomentCheck::new(
            "interference_power",
            constants.interference_power(y_iru) - constants.sigma2,
            summarize(&int),
        ),
    ])
}
