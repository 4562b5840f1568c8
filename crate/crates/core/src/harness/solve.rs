//! Phase design for each configured operating point.

use super::config::ExperimentConfig;
use crate::baseline::{compare, signal_only_phases, ComparisonVerdict};
use crate::channel::PhaseShiftMatrix;
use crate::error::Result;
use crate::optimizer::{classify, degradation_bound, pcd, quantize, solve_special, SpecialCase};
use crate::rate::{derived_constants, rate_upper_bound, sinr_upper_bound, CsiCase};

#[derive(Clone, Debug)]
pub struct Quantized {
    pub bits: u32,
    pub c_ub: f64,
    /// Guaranteed ceiling on `c_ub` minus the quantized rate.
    pub bound: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub axis_value: Option<f64>,
    pub csi_case: CsiCase,
    pub classification: SpecialCase,
    /// Coordinate iterations, absent for a closed-form solution.
    pub iterations: Option<usize>,
    pub gamma_ub: f64,
    pub c_ub: f64,
    pub comparison: ComparisonVerdict,
    pub quantized: Option<Quantized>,
    pub phases: PhaseShiftMatrix,
}

/// Closed form where one applies, otherwise parallel coordinate descent
/// from the signal-aligned phases.
pub fn solve(config: &ExperimentConfig, bits: Option<u32>) -> Result<Vec<Solution>> {
    let mut out = Vec::new();
    for (axis_value, scenario) in config.points()? {
        let params = scenario.to_params()?;
        for &case in &config.csi_cases {
            let constants = derived_constants(&params, case)?;
            let class = classify(&params, &constants, config.angle_tol);
            let (phases, iterations) = match class {
                SpecialCase::General => {
                    let trace = pcd(&constants, &signal_only_phases(&constants), &config.pcd)?;
                    (trace.phases, Some(trace.iterations))
                }
                special => (solve_special(special, &constants, 0.0)?, None),
            };
            let c_ub = rate_upper_bound(&constants, &phases);
            let quantized = match bits {
                None => None,
                Some(b) => Some(Quantized {
                    bits: b,
                    c_ub: rate_upper_bound(&constants, &quantize(&phases, b)?),
                    bound: degradation_bound(&constants, b, class),
                }),
            };
            out.push(Solution {
                axis_value,
                csi_case: case,
                classification: class,
                iterations,
                gamma_ub: sinr_upper_bound(&constants, &phases),
                c_ub,
                comparison: compare(&constants),
                quantized,
                phases,
            });
        }
    }
    Ok(out)
}
