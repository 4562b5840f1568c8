use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;

use super::config::{ExperimentConfig, Scheme};
use super::{fmt_f64, sha256_hex, sibling};
use crate::baseline::{instant_adaptive_rate, no_irs_monte_carlo, no_irs_sinr_ub, random_phase_rate, signal_only_phases};
use crate::channel::SystemParams;
use crate::error::Result;
use crate::optimizer::{classify, pcd, solve_special, PcdConfig, PcdMode, SpecialCase};
use crate::rate::{derived_constants, monte_carlo_rate, rate_upper_bound, CsiCase, DerivedConstants, RateEstimate};

pub const CSV_HEADER: [&str; 11] = [
    "axis",
    "axis_value",
    "scheme",
    "csi_case",
    "classification",
    "c_ub",
    "mc_mean",
    "mc_se",
    "n_samples",
    "iterations",
    "error",
];

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub axis: String,
    pub axis_value: Option<f64>,
    pub scheme: Scheme,
    pub csi_case: CsiCase,
    pub classification: Option<SpecialCase>,
    /// Closed-form rate bound; absent for per-realization designs.
    pub c_ub: Option<f64>,
    pub mc: Option<RateEstimate>,
    /// Optimizer iterations (mean over realizations for the instant-adaptive design).
    pub iterations: Option<f64>,
    pub error: Option<String>,
    /// Kept out of the main CSV so that it stays reproducible.
    pub wall_time: Duration,
}

#[derive(Default)]
struct Outcome {
    c_ub: Option<f64>,
    mc: Option<RateEstimate>,
    iterations: Option<f64>,
}

fn evaluate(
    config: &ExperimentConfig,
    params: &SystemParams,
    constants: &DerivedConstants,
    class: SpecialCase,
    scheme: Scheme,
) -> Result<Outcome> {
    let case = constants.csi_case;
    let (n, seed) = (config.n_samples, config.seed);
    let at_phases = |phi, iterations| -> Result<Outcome> {
        Ok(Outcome {
            c_ub: Some(rate_upper_bound(constants, &phi)),
            mc: Some(monte_carlo_rate(params, &phi, case, n, seed)?),
            iterations,
        })
    };
    match scheme {
        Scheme::SpecialClosedForm => at_phases(solve_special(class, constants, 0.0)?, None),
        Scheme::Pcd | Scheme::Bcd => {
            let cfg = PcdConfig {
                mode: if scheme == Scheme::Pcd {
                    PcdMode::Parallel
                } else {
                    PcdMode::Sequential
                },
                ..config.pcd.clone()
            };
            let trace = pcd(constants, &signal_only_phases(constants), &cfg)?;
            at_phases(trace.phases, Some(trace.iterations as f64))
        }
        Scheme::SignalOnly => at_phases(signal_only_phases(constants), None),
        Scheme::NoIrs => Ok(Outcome {
            c_ub: Some((1.0 + no_irs_sinr_ub(params, case)?).log2()),
            mc: Some(no_irs_monte_carlo(params, case, n, seed)?),
            iterations: None,
        }),
        Scheme::RandomPhase => {
            let r = random_phase_rate(params, case, config.n_phase_draws, n, seed)?;
            Ok(Outcome {
                c_ub: Some(r.bound.mean),
                mc: r.monte_carlo,
                iterations: None,
            })
        }
        Scheme::InstantAdaptive => {
            let (mc, iterations) = instant_adaptive_rate(params, &config.pcd, n, seed)?;
            Ok(Outcome {
                c_ub: None,
                mc: Some(mc),
                iterations: Some(iterations),
            })
        }
    }
}

/// Evaluates every (point, CSI case, scheme) on the current rayon pool.
/// Failures become rows with an error message; the instant-adaptive design
/// is only evaluated with instant CSI.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let axis = config
        .sweep
        .as_ref()
        .map(|s| s.axis.as_str())
        .unwrap_or("none")
        .to_string();
    let mut rows = Vec::new();
    for (axis_value, scenario) in config.points()? {
        let params = scenario.to_params();
        for &case in &config.csi_cases {
            let prepared = params
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|p| derived_constants(p, case).map(|c| (p, c)).map_err(|e| e.to_string()));
            let class = prepared
                .as_ref()
                .ok()
                .map(|(p, c)| classify(p, c, config.angle_tol));
            for &scheme in &config.schemes {
                if scheme == Scheme::InstantAdaptive && case != CsiCase::Instant {
                    continue;
                }
                let start = Instant::now();
                let outcome = match &prepared {
                    Ok((p, c)) => evaluate(config, p, c, class.expect("classified"), scheme).map_err(|e| e.to_string()),
                    Err(msg) => Err(msg.clone()),
                };
                let wall_time = start.elapsed();
                let (outcome, error) = match outcome {
                    Ok(o) => (o, None),
                    Err(e) => (Outcome::default(), Some(e)),
                };
                rows.push(SweepRow {
                    axis: axis.clone(),
                    axis_value,
                    scheme,
                    csi_case: case,
                    classification: class,
                    c_ub: outcome.c_ub,
                    mc: outcome.mc,
                    iterations: outcome.iterations,
                    error,
                    wall_time,
                });
            }
        }
    }
    Ok(rows)
}

fn axis_value_str(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_rows<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.axis.clone(),
            axis_value_str(r.axis_value),
            r.scheme.as_str().to_string(),
            r.csi_case.as_str().to_string(),
            r.classification.map(|c| c.as_str()).unwrap_or_default().to_string(),
            fmt_f64(r.c_ub),
            fmt_f64(r.mc.map(|m| m.mean)),
            fmt_f64(r.mc.map(|m| m.standard_error)),
            r.mc.map(|m| m.n_samples.to_string()).unwrap_or_default(),
            fmt_f64(r.iterations),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_timing<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["axis", "axis_value", "scheme", "csi_case", "wall_time_s"])?;
    for r in rows {
        w.write_record([
            r.axis.clone(),
            axis_value_str(r.axis_value),
            r.scheme.as_str().to_string(),
            r.csi_case.as_str().to_string(),
            format!("{:.6}", r.wall_time.as_secs_f64()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    scenario: &'a str,
    seed: u64,
    n_samples: usize,
    n_phase_draws: usize,
    config_sha256: String,
    version: &'a str,
    results: String,
}

#[derive(Clone, Debug)]
pub struct SweepOutputs {
    pub results: PathBuf,
    pub timing: PathBuf,
    pub manifest: PathBuf,
}

/// Writes the results CSV, its timing sidecar and a manifest into `dir`.
pub fn write_sweep_outputs(config: &ExperimentConfig, rows: &[SweepRow], dir: &Path) -> Result<SweepOutputs> {
    let name = config.output_name();
    let results = dir.join(&name);
    if let Some(parent) = results.parent() {
        fs::create_dir_all(parent)?;
    }
    let timing = sibling(dir, &name, ".timing.csv");
    let manifest = sibling(dir, &name, ".manifest.toml");
    write_rows(rows, fs::File::create(&results)?)?;
    write_timing(rows, fs::File::create(&timing)?)?;
    let m = Manifest {
        scenario: &config.scenario_name,
        seed: config.seed,
        n_samples: config.n_samples,
        n_phase_draws: config.n_phase_draws,
        config_sha256: sha256_hex(config.source.as_bytes()),
        version: env!("CARGO_PKG_VERSION"),
        results: name.display().to_string(),
    };
    let text = toml::to_string(&m).map_err(|e| crate::error::Error::Config {
        line: None,
        message: format!("manifest serialization: {e}"),
    })?;
    fs::write(&manifest, text)?;
    Ok(SweepOutputs {
        results,
        timing,
        manifest,
    })
}
