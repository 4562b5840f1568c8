//! Closed-form moments against their sample estimates.

use std::io::Write;

use super::config::ExperimentConfig;
use super::fmt_f64;
use crate::baseline::signal_only_phases;
use crate::channel::{sample_rng, PhaseShiftMatrix};
use crate::error::Result;
use crate::rate::{derived_constants, validate_moments, CsiCase};

/// Moments with `|z|` above this are flagged.
pub const Z_FLAG: f64 = 4.0;

#[derive(Clone, Debug)]
pub struct ValidationRow {
    pub axis_value: Option<f64>,
    pub csi_case: CsiCase,
    pub phases: &'static str,
    pub moment: &'static str,
    pub closed_form: f64,
    pub empirical: f64,
    pub standard_error: f64,
    pub z: f64,
}

impl ValidationRow {
    pub fn flagged(&self) -> bool {
        !(self.z.abs() <= Z_FLAG)
    }

    /// The sample is deterministic and equals the closed form.
    pub fn exact(&self) -> bool {
        self.standard_error == 0.0 && self.z == 0.0
    }
}

/// Checks every sweep point and CSI case at three phase configurations:
/// all zeros, signal-aligned and uniformly random.
pub fn validation_report(config: &ExperimentConfig) -> Result<Vec<ValidationRow>> {
    let mut rows = Vec::new();
    for (axis_value, scenario) in config.points()? {
        let params = scenario.to_params()?;
        for &case in &config.csi_cases {
            let constants = derived_constants(&params, case)?;
            let random = PhaseShiftMatrix::random(params.m_r, params.n_r, &mut sample_rng(config.seed, u64::MAX));
            let sets = [
                ("zeros", PhaseShiftMatrix::zeros(params.m_r, params.n_r)),
                ("signal_only", signal_only_phases(&constants)),
                ("random", random),
            ];
            for (label, phi) in sets {
                for m in validate_moments(&params, &phi, case, config.n_samples, config.seed)? {
                    rows.push(ValidationRow {
                        axis_value,
                        csi_case: case,
                        phases: label,
                        moment: m.name,
                        closed_form: m.closed_form,
                        empirical: m.empirical,
                        standard_error: m.standard_error,
                        z: m.z,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_validation<W: Write>(rows: &[ValidationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "axis_value",
        "csi_case",
        "phases",
        "moment",
        "closed_form",
        "empirical",
        "standard_error",
        "z",
        "flagged",
        "exact",
    ])?;
    for r in rows {
        w.write_record([
            r.axis_value.map(|v| v.to_string()).unwrap_or_default(),
            r.csi_case.as_str().to_string(),
            r.phases.to_string(),
            r.moment.to_string(),
            fmt_f64(Some(r.closed_form)),
            fmt_f64(Some(r.empirical)),
            fmt_f64(Some(r.standard_error)),
            format!("{:.3}", r.z),
            r.flagged().to_string(),
            r.exact().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
