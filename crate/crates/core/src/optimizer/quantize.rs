use std::f64::consts::{LN_2, PI};

use super::SpecialCase;
use crate::channel::{PhaseShiftMatrix, TWO_PI};
use crate::error::{invalid, Result};
use crate::rate::DerivedConstants;

/// Snaps every phase to the nearest of the `2^b` uniform levels
/// `2 pi k / 2^b` (circularly, so values near `2 pi` round to 0).
pub fn quantize(phi: &PhaseShiftMatrix, b: u32) -> Result<PhaseShiftMatrix> {
    if !(1..=52).contains(&b) {
        return Err(invalid("b", format!("{b} bits not in 1..=52")));
    }
    let levels = 1u64 << b;
    let step = TWO_PI / levels as f64;
    let snapped = phi.as_slice().iter().map(|&x| {
        let k = (x / step).round() as u64 % levels;
        k as f64 * step
    });
    Ok(PhaseShiftMatrix::wrapped(phi.rows(), phi.cols(), snapped))
}

/// Upper bound on `C_ub(phi) - C_ub(quantize(phi, b))` where `phi` is the
/// closed-form optimum of `case`, or any stationary point for `General`.
pub fn degradation_bound(constants: &DerivedConstants, b: u32, case: SpecialCase) -> f64 {
    let mn = constants.irs_elements() as f64;
    let half = PI / 2f64.powi(b as i32);
    let pairs = ((mn - 1.0) / 2.0).ceil();
    let lattice = 4.0 * pairs * pairs;
    let a_s = constants.a_sru_los;
    let a_i = constants.a_iru_los;
    let c_s = constants.signal_offset();
    let c_i = constants.interference_offset();
    let gamma = |y: f64| (a_s * y + c_s) / (a_i * y + c_i);
    // log2((1 + gamma(hi)) / (1 + gamma(lo))) for hi - lo = gap, written
    // without cancellation so the bound keeps shrinking at large b
    let log_ratio = |lo: f64, gap: f64| {
        let diff = constants.eta * gap / ((a_i * (lo + gap) + c_i) * (a_i * lo + c_i));
        (diff / (1.0 + gamma(lo))).ln_1p() / LN_2
    };
    match case {
        SpecialCase::SingleElement => 0.0,
        SpecialCase::SymmetricPositiveEta => {
            let worst = lattice * half.cos().powi(2);
            log_ratio(worst, mn * mn - lattice + lattice * half.sin().powi(2))
        }
        SpecialCase::SymmetricNonpositiveEta => -log_ratio(0.0, lattice * half.sin().powi(2)),
        SpecialCase::NoInterference => {
            let worst = lattice * half.cos().powi(2);
            let gap = mn * mn - lattice + lattice * half.sin().powi(2);
            (a_s * gap / (c_i + a_s * worst + c_s)).ln_1p() / LN_2
        }
        SpecialCase::General => {
            let slope = (a_i * c_s - a_s * c_i).abs();
            TWO_PI * mn * slope * (mn - 1.0) / (2f64.powi(b as i32) * LN_2 * c_i * (c_s + c_i))
        }
    }
}
