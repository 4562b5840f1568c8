//! Configuration files, experiment sweeps, benchmarks and reports.

pub mod bench;
pub mod config;
pub mod solve;
pub mod sweep;
pub mod validate;

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;

pub use config::{load_config, parse_config, preset, Axis, ExperimentConfig, Scenario, Scheme, Sweep, PRESET_NAMES};
pub use sweep::{run_sweep, write_rows, write_sweep_outputs, SweepOutputs, SweepRow};

/// Runs `f` on a dedicated rayon pool with `threads` workers (rayon's
/// default when `None`).
pub fn with_threads<T, F>(threads: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?.install(f))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `dir/<output stem><suffix>`, e.g. `fig3.timing.csv` for `fig3.csv`.
pub(crate) fn sibling(dir: &Path, output: &Path, suffix: &str) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let parent = output.parent().map(|p| dir.join(p)).unwrap_or_else(|| dir.to_path_buf());
    parent.join(format!("{stem}{suffix}"))
}

/// Floats in output files: 17 significant digits, empty when absent.
pub(crate) fn fmt_f64(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}
