use std::f64::consts::PI;

use crate::channel::{wrap_phase, PhaseShiftMatrix, SystemParams};
use crate::error::{Error, Result};
use crate::rate::DerivedConstants;

/// Default tolerance (rad) for treating the two IRS arrival directions as equal.
pub const DEFAULT_ANGLE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpecialCase {
    /// Single IRS element: the bound does not depend on the phase.
    SingleElement,
    /// Equal arrival directions and `eta > 0`: maximize the LoS sum.
    SymmetricPositiveEta,
    /// Equal arrival directions and `eta <= 0`: cancel the LoS sum.
    SymmetricNonpositiveEta,
    /// No interference power.
    NoInterference,
    General,
}

impl SpecialCase {
    pub fn as_str(self) -> &'static str {
        match self {
            SpecialCase::SingleElement => "single_element",
            SpecialCase::SymmetricPositiveEta => "symmetric_positive_eta",
            SpecialCase::SymmetricNonpositiveEta => "symmetric_nonpositive_eta",
            SpecialCase::NoInterference => "no_interference",
            SpecialCase::General => "general",
        }
    }
}

pub fn classify(params: &SystemParams, constants: &DerivedConstants, angle_tol: f64) -> SpecialCase {
    if params.m_r == 1 && params.n_r == 1 {
        return SpecialCase::SingleElement;
    }
    if params.p_i == 0.0 {
        return SpecialCase::NoInterference;
    }
    let symmetric = (params.delta_sr.h - params.delta_ir.h).abs() <= angle_tol
        && (params.delta_sr.v - params.delta_ir.v).abs() <= angle_tol;
    if symmetric {
        if constants.eta > 0.0 {
            return SpecialCase::SymmetricPositiveEta;
        }
        // cancellation pairs adjacent columns
        if params.n_r % 2 == 0 {
            return SpecialCase::SymmetricNonpositiveEta;
        }
    }
    SpecialCase::General
}

/// Closed-form optimal phases. `alpha` is the free common phase.
pub fn solve_special(case: SpecialCase, constants: &DerivedConstants, alpha: f64) -> Result<PhaseShiftMatrix> {
    let (rows, cols) = (constants.m_r, constants.n_r);
    match case {
        SpecialCase::SingleElement => Ok(PhaseShiftMatrix::zeros(rows, cols)),
        SpecialCase::SymmetricPositiveEta => Ok(PhaseShiftMatrix::wrapped(
            rows,
            cols,
            constants.theta_iru.iter().map(|t| alpha - t),
        )),
        SpecialCase::NoInterference => Ok(PhaseShiftMatrix::wrapped(
            rows,
            cols,
            constants.theta_sru.iter().map(|t| alpha - t),
        )),
        SpecialCase::SymmetricNonpositiveEta => {
            if cols % 2 != 0 {
                return Err(Error::NotSpecialCase);
            }
            // columns (2i, 2i+1) receive opposite phasors
            let theta = &constants.theta_iru;
            let phi = (0..rows * cols).map(|k| {
                let shift = if (k % cols) % 2 == 0 { 0.0 } else { PI };
                wrap_phase(alpha + shift - theta[k])
            });
            Ok(PhaseShiftMatrix::wrapped(rows, cols, phi))
        }
        SpecialCase::General => Err(Error::NotSpecialCase),
    }
}
