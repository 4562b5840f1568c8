//! Wall-clock timing of the parallel and sequential coordinate methods.

use std::io::Write;
use std::time::Instant;

use super::config::ExperimentConfig;
use super::with_threads;
use crate::baseline::signal_only_phases;
use crate::error::{invalid, Result};
use crate::optimizer::{pcd, PcdConfig, PcdMode};
use crate::rate::{derived_constants, CsiCase};

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub axis_value: Option<f64>,
    pub irs_elements: usize,
    pub csi_case: CsiCase,
    pub mode: PcdMode,
    pub cores: usize,
    pub iterations: usize,
    pub objective: f64,
    /// Fastest of the repeats.
    pub wall_time_s: f64,
}

fn mode_str(mode: PcdMode) -> &'static str {
    match mode {
        PcdMode::Parallel => "parallel",
        PcdMode::Sequential => "sequential",
    }
}

/// Times the parallel method on pools of each size in `cores` and the
/// sequential method once, for every sweep point and CSI case.
pub fn bench(config: &ExperimentConfig, cores: &[usize], repeats: usize) -> Result<Vec<BenchRow>> {
    if cores.is_empty() || cores.contains(&0) {
        return Err(invalid("cores", "core counts must be >= 1"));
    }
    let repeats = repeats.max(1);
    let mut rows = Vec::new();
    for (axis_value, scenario) in config.points()? {
        let params = scenario.to_params()?;
        for &case in &config.csi_cases {
            let constants = derived_constants(&params, case)?;
            let init = signal_only_phases(&constants);
            let runs = cores
                .iter()
                .map(|&c| (PcdMode::Parallel, c))
                .chain(std::iter::once((PcdMode::Sequential, 1)));
            for (mode, c) in runs {
                let cfg = PcdConfig {
                    mode,
                    ..config.pcd.clone()
                };
                let (best, trace) = with_threads(Some(c), || -> Result<_> {
                    let mut best = f64::INFINITY;
                    let mut last = None;
                    for _ in 0..repeats {
                        let start = Instant::now();
                        let trace = pcd(&constants, &init, &cfg)?;
                        best = best.min(start.elapsed().as_secs_f64());
                        last = Some(trace);
                    }
                    Ok((best, last.expect("at least one repeat")))
                })??;
                rows.push(BenchRow {
                    axis_value,
                    irs_elements: params.irs_elements(),
                    csi_case: case,
                    mode,
                    cores: c,
                    iterations: trace.iterations,
                    objective: trace.final_objective(),
                    wall_time_s: best,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_bench<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "axis_value",
        "irs_elements",
        "csi_case",
        "mode",
        "cores",
        "iterations",
        "objective",
        "wall_time_s",
    ])?;
    for r in rows {
        w.write_record([
            r.axis_value.map(|v| v.to_string()).unwrap_or_default(),
            r.irs_elements.to_string(),
            r.csi_case.as_str().to_string(),
            mode_str(r.mode).to_string(),
            r.cores.to_string(),
            r.iterations.to_string(),
            format!("{:.16e}", r.objective),
            format!("{:.6}", r.wall_time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}
