//! The system without IRS, the discriminants deciding whether the IRS helps,
//! and the reference phase designs used in comparisons.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{los_components, sample_indexed, sample_rng, PhaseShiftMatrix, SystemParams};
use crate::error::{invalid, Result};
use crate::linalg::norm_sqr;
use crate::optimizer::{optimize_instant_adaptive, PcdConfig};
use crate::rate::{
    derived_constants, monte_carlo_rate, per_sample, rate_upper_bound, sinr_instant, sinr_statistic, summarize,
    CsiCase, DerivedConstants, RateEstimate,
};

/// Closed-form SINR bound `A_SU / A_IU` without IRS.
pub fn no_irs_sinr_ub(params: &SystemParams, case: CsiCase) -> Result<f64> {
    let c = derived_constants(params, case)?;
    Ok(c.a_su / c.a_iu)
}

/// Monte Carlo rate without IRS: MRT (instant) or the uniform beamformer
/// (statistic) on the direct link, expected interference in the denominator.
/// Uses the same per-sample direct channels as [`monte_carlo_rate`].
pub fn no_irs_monte_carlo(params: &SystemParams, case: CsiCase, n_samples: usize, seed: u64) -> Result<RateEstimate> {
    params.validate()?;
    if n_samples == 0 {
        return Err(invalid("n_samples", "must be at least 1"));
    }
    let los = los_components(params);
    let denom = params.p_i * params.alpha_iu + params.sigma2;
    let ms = params.signal_antennas() as f64;
    let values = per_sample(n_samples, |i| {
        let r = sample_indexed(params, &los, seed, i);
        let power = match case {
            CsiCase::Instant => norm_sqr(&r.h_su),
            CsiCase::Statistic => r.h_su.iter().map(|z| z.conj()).sum::<Complex64>().norm_sqr() / ms,
        };
        Ok((1.0 + params.p_s * power / denom).log2())
    })?;
    Ok(summarize(&values))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    IrsBetter,
    NoIrsBetter,
    Indeterminate,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::IrsBetter => "irs_better",
            Verdict::NoIrsBetter => "no_irs_better",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonVerdict {
    /// Positive only if the optimally configured IRS beats no IRS.
    pub xi_gt: f64,
    /// Negative only if no IRS beats every IRS configuration.
    pub xi_lt: f64,
    /// Coefficient of `P_I` in `xi_gt`.
    pub varsigma: f64,
    /// `sigma^2 (A_SRU,LoS M_R^2 N_R^2 + A_SRU,NLoS)`, the `P_I`-free part of `xi_gt`.
    pub noise_term: f64,
    pub verdict: Verdict,
}

pub fn compare(constants: &DerivedConstants) -> ComparisonVerdict {
    let mn2 = (constants.irs_elements() as f64).powi(2);
    let c = constants;
    let common = c.a_sru_nlos * c.a_iu - c.a_su * c.a_iru_nlos;
    let xi_gt = (c.a_sru_los * c.a_iu - c.a_iru_los * c.a_su) * mn2 + common;
    let xi_lt = c.a_sru_los * c.a_iu * mn2 + common;
    let peak_signal = c.a_sru_los * mn2 + c.a_sru_nlos;
    let varsigma = c.alpha_iu * peak_signal - c.a_su * (c.iru_los_per_watt * mn2 + c.iru_nlos_per_watt);
    let verdict = if xi_gt > 0.0 {
        Verdict::IrsBetter
    } else if xi_lt < 0.0 {
        Verdict::NoIrsBetter
    } else {
        Verdict::Indeterminate
    };
    ComparisonVerdict {
        xi_gt,
        xi_lt,
        varsigma,
        noise_term: c.sigma2 * peak_signal,
        verdict,
    }
}

/// Phases aligning the LoS signal paths, ignoring interference.
pub fn signal_only_phases(constants: &DerivedConstants) -> PhaseShiftMatrix {
    PhaseShiftMatrix::wrapped(constants.m_r, constants.n_r, constants.theta_sru.iter().map(|t| -t))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomPhaseRate {
    /// `C_ub` averaged over the phase draws.
    pub bound: RateEstimate,
    /// Simulated rate with a fresh phase draw per channel sample.
    pub monte_carlo: Option<RateEstimate>,
}

/// Stream for the phase draw of sample `index`, disjoint from channel streams.
fn phase_rng(seed: u64, index: u64) -> rand_chacha::ChaCha8Rng {
    sample_rng(seed, index | (1 << 63))
}

/// Uniformly random phases: the bound averaged over `n_phase_draws` draws,
/// and (if `n_samples > 0`) the simulated rate with independent phases per
/// channel sample.
pub fn random_phase_rate(
    params: &SystemParams,
    case: CsiCase,
    n_phase_draws: usize,
    n_samples: usize,
    seed: u64,
) -> Result<RandomPhaseRate> {
    if n_phase_draws == 0 {
        return Err(invalid("n_phase_draws", "must be at least 1"));
    }
    let constants = derived_constants(params, case)?;
    let (rows, cols) = (params.m_r, params.n_r);
    let bounds = per_sample(n_phase_draws, |i| {
        let phi = PhaseShiftMatrix::random(rows, cols, &mut phase_rng(seed, i));
        Ok(rate_upper_bound(&constants, &phi))
    })?;
    let monte_carlo = if n_samples > 0 {
        let los = los_components(params);
        let values = per_sample(n_samples, |i| {
            let phi = PhaseShiftMatrix::random(rows, cols, &mut phase_rng(seed, i));
            let r = sample_indexed(params, &los, seed, i);
            let sinr = match case {
                CsiCase::Instant => sinr_instant(params, &constants, &r, &phi)?,
                CsiCase::Statistic => sinr_statistic(params, &constants, &r, &los, &phi)?,
            };
            Ok((1.0 + sinr).log2())
        })?;
        Some(summarize(&values))
    } else {
        None
    };
    Ok(RandomPhaseRate {
        bound: summarize(&bounds),
        monte_carlo,
    })
}

/// Convenience: simulated rate at the signal-aligned phases.
pub fn signal_only_rate(params: &SystemParams, case: CsiCase, n_samples: usize, seed: u64) -> Result<RateEstimate> {
    let constants = derived_constants(params, case)?;
    monte_carlo_rate(params, &signal_only_phases(&constants), case, n_samples, seed)
}

/// Rate of re-optimizing the phases for every realization with instant
/// CSI, and the mean number of iterations per realization.
pub fn instant_adaptive_rate(
    params: &SystemParams,
    config: &PcdConfig,
    n_samples: usize,
    seed: u64,
) -> Result<(RateEstimate, f64)> {
    if n_samples == 0 {
        return Err(invalid("n_samples", "must be at least 1"));
    }
    let constants = derived_constants(params, CsiCase::Instant)?;
    let los = los_components(params);
    let per: Vec<(f64, usize)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let r = sample_indexed(params, &los, seed, i);
            let trace = optimize_instant_adaptive(params, &constants, &r, config)?;
            let sinr = sinr_instant(params, &constants, &r, &trace.phases)?;
            Ok(((1.0 + sinr).log2(), trace.iterations))
        })
        .collect::<Result<_>>()?;
    let rates: Vec<f64> = per.iter().map(|x| x.0).collect();
    let iterations = per.iter().map(|x| x.1 as f64).sum::<f64>() / n_samples as f64;
    Ok((summarize(&rates), iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::RicianFactor;
    use crate::optimizer::{pcd, PcdConfig};
    use crate::rate::{sinr_upper_bound, y_los};

    fn small() -> SystemParams {
        let mut p = SystemParams::reference();
        p.m_s = 2;
        p.n_s = 2;
        p.m_i = 2;
        p.n_i = 2;
        p.m_r = 2;
        p.n_r = 2;
        p
    }

    #[test]
    fn no_irs_bound_values() {
        let mut p = SystemParams::reference();
        p.p_i = 0.0;
        let g = no_irs_sinr_ub(&p, CsiCase::Instant).unwrap();
        let want = p.p_s * 16.0 * p.alpha_su / p.sigma2;
        assert!((g / want - 1.0).abs() < 1e-14);
        let p = SystemParams::reference();
        let gi = no_irs_sinr_ub(&p, CsiCase::Instant).unwrap();
        let gs = no_irs_sinr_ub(&p, CsiCase::Statistic).unwrap();
        assert!((gs / (gi / 16.0) - 1.0).abs() < 1e-14);
        let want = p.p_s * 16.0 * p.alpha_su / (p.p_i * p.alpha_iu + p.sigma2);
        assert!((gi / want - 1.0).abs() < 1e-14);
    }

    #[test]
    fn no_irs_monte_carlo_below_bound() {
        let p = small();
        for case in CsiCase::ALL {
            let est = no_irs_monte_carlo(&p, case, 5000, 3).unwrap();
            let ub = (1.0 + no_irs_sinr_ub(&p, case).unwrap()).log2();
            assert!(est.mean <= ub + 3.0 * est.standard_error);
        }
    }

    #[test]
    fn huge_noise_kills_rate() {
        let mut p = small();
        p.sigma2 = 1e10;
        let est = no_irs_monte_carlo(&p, CsiCase::Instant, 100, 3).unwrap();
        assert!(est.mean < 1e-12);
    }

    #[test]
    fn vanishing_irs_matches_no_irs() {
        let mut p = small();
        p.alpha_ru = 1e-300;
        let phi = PhaseShiftMatrix::zeros(2, 2);
        let with = monte_carlo_rate(&p, &phi, CsiCase::Instant, 3000, 8).unwrap();
        let without = no_irs_monte_carlo(&p, CsiCase::Instant, 3000, 8).unwrap();
        assert!((with.mean - without.mean).abs() <= 3.0 * with.standard_error);
        assert!((with.mean - without.mean).abs() < 1e-12);
    }

    #[test]
    fn xi_ordering_and_decomposition() {
        let p = SystemParams::reference();
        for case in CsiCase::ALL {
            let c = derived_constants(&p, case).unwrap();
            let v = compare(&c);
            assert!(v.xi_gt < v.xi_lt);
            let rebuilt = p.p_i * v.varsigma + v.noise_term;
            assert!((rebuilt - v.xi_gt).abs() <= 1e-9 * v.xi_gt.abs().max(v.noise_term.abs()));
        }
    }

    #[test]
    fn no_interference_favors_irs() {
        let mut p = SystemParams::reference();
        p.p_i = 0.0;
        for case in CsiCase::ALL {
            assert_eq!(compare(&derived_constants(&p, case).unwrap()).verdict, Verdict::IrsBetter);
        }
    }

    #[test]
    fn positive_varsigma_is_power_independent() {
        let mut p = SystemParams::reference();
        let c = derived_constants(&p, CsiCase::Instant).unwrap();
        assert!(compare(&c).varsigma > 0.0);
        for e in -6..=1 {
            p.p_i = 10f64.powi(e);
            let c = derived_constants(&p, CsiCase::Instant).unwrap();
            assert_eq!(compare(&c).verdict, Verdict::IrsBetter);
        }
    }

    #[test]
    fn varsigma_monotone_in_path_losses() {
        let base = SystemParams::reference();
        let vs = |p: &SystemParams| compare(&derived_constants(p, CsiCase::Instant).unwrap()).varsigma;
        let v0 = vs(&base);
        let mut p = base.clone();
        p.alpha_sr *= 1.1;
        assert!(vs(&p) > v0);
        let mut p = base.clone();
        p.alpha_iu *= 1.1;
        assert!(vs(&p) > v0);
        let mut p = base.clone();
        p.alpha_ir *= 1.1;
        assert!(vs(&p) < v0);
        let mut p = base;
        p.alpha_su *= 1.1;
        assert!(vs(&p) < v0);
    }

    #[test]
    fn signal_only_aligns() {
        let p = SystemParams::reference();
        let c = derived_constants(&p, CsiCase::Instant).unwrap();
        let phi = signal_only_phases(&c);
        assert!((y_los(phi.as_slice(), &c.theta_sru) - 4096.0).abs() < 1e-8);
    }

    #[test]
    fn random_phases_below_optimized() {
        let p = small();
        let c = derived_constants(&p, CsiCase::Instant).unwrap();
        let r = random_phase_rate(&p, CsiCase::Instant, 500, 0, 1).unwrap();
        assert!(r.monte_carlo.is_none());
        let tr = pcd(&c, &signal_only_phases(&c), &PcdConfig::default()).unwrap();
        assert!(r.bound.mean <= (1.0 + tr.final_objective()).log2());
        assert!(r.bound.mean > 0.0);
        let with_mc = random_phase_rate(&p, CsiCase::Statistic, 10, 200, 1).unwrap();
        assert_eq!(with_mc.monte_carlo.unwrap().n_samples, 200);
    }

    #[test]
    fn single_element_random_phase_is_constant() {
        let mut p = small();
        p.m_r = 1;
        p.n_r = 1;
        let c = derived_constants(&p, CsiCase::Instant).unwrap();
        let r = random_phase_rate(&p, CsiCase::Instant, 50, 0, 2).unwrap();
        let fixed = rate_upper_bound(&c, &PhaseShiftMatrix::zeros(1, 1));
        assert!((r.bound.mean - fixed).abs() < 1e-12);
        assert!(r.bound.standard_error < 1e-12);
    }

    #[test]
    fn case_three_beats_signal_alignment() {
        let mut p = SystemParams::reference();
        p.delta_ir = p.delta_sr;
        p.k_sr = RicianFactor::from_db(-20.0);
        p.k_ir = RicianFactor::from_db(20.0);
        let c = derived_constants(&p, CsiCase::Instant).unwrap();
        let special = crate::optimizer::solve_special(crate::optimizer::SpecialCase::SymmetricNonpositiveEta, &c, 0.0).unwrap();
        assert!(sinr_upper_bound(&c, &signal_only_phases(&c)) < sinr_upper_bound(&c, &special));
    }
}
