use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use irsphase::harness::bench::{bench, write_bench};
use irsphase::harness::solve::solve;
use irsphase::harness::validate::{validation_report, write_validation, Z_FLAG};
use irsphase::harness::{load_config, run_sweep, with_threads, write_sweep_outputs, ExperimentConfig, PRESET_NAMES};

#[derive(Parser)]
#[command(name = "irsphase", version, about = "IRS phase design under base-station interference")]
struct Cli {
    /// Worker threads for Monte Carlo and parallel updates (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true, env = "IRSPHASE_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scheme over the configured sweep and write a results CSV.
    Sweep { config: PathBuf },
    /// Time parallel and sequential coordinate descent on several pool sizes.
    Bench {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        cores: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Compare closed-form moments with sample estimates.
    Validate { config: PathBuf },
    /// Print the designed phases and bounds for each operating point.
    Solve {
        config: PathBuf,
        /// Also report the rate after quantizing to this many bits.
        #[arg(long)]
        bits: Option<u32>,
    },
    /// List the scenario presets usable in `experiment.scenario`.
    Presets,
}

fn load(path: &Path) -> anyhow::Result<ExperimentConfig> {
    load_config(path).with_context(|| format!("loading {}", path.display()))
}

fn stem(config: &ExperimentConfig) -> String {
    config
        .output_name()
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| config.scenario_name.clone())
}

fn fmt_value(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".to_string())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let threads = cli.threads;
    match cli.command {
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(true)
        }
        Command::Sweep { config } => {
            let config = load(&config)?;
            let rows = with_threads(threads, || run_sweep(&config))??;
            let out = write_sweep_outputs(&config, &rows, &cli.out_dir)?;
            println!(
                "{:>10} {:<28} {:<9} {:<26} {:>10} {:>10} {:>9}",
                "value", "scheme", "csi", "class", "c_ub", "mc_mean", "mc_se"
            );
            let mut errors = 0;
            for r in &rows {
                let num = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
                println!(
                    "{:>10} {:<28} {:<9} {:<26} {:>10} {:>10} {:>9}{}",
                    fmt_value(r.axis_value),
                    r.scheme.as_str(),
                    r.csi_case.as_str(),
                    r.classification.map(|c| c.as_str()).unwrap_or("-"),
                    num(r.c_ub),
                    num(r.mc.map(|m| m.mean)),
                    r.mc.map(|m| format!("{:.2e}", m.standard_error)).unwrap_or_else(|| "-".into()),
                    r.error.as_ref().map(|e| format!("  error: {e}")).unwrap_or_default(),
                );
                errors += r.error.is_some() as usize;
            }
            println!("results: {}", out.results.display());
            println!("timing: {}", out.timing.display());
            println!("manifest: {}", out.manifest.display());
            if errors > 0 {
                eprintln!("{errors} row(s) failed");
            }
            Ok(errors == 0)
        }
        Command::Bench { config, cores, repeats } => {
            let config = load(&config)?;
            let rows = bench(&config, &cores, repeats)?;
            println!(
                "{:>10} {:>6} {:<9} {:<10} {:>5} {:>6} {:>14} {:>12} {:>8}",
                "value", "MN", "csi", "mode", "cores", "iters", "gamma_ub", "time_s", "speedup"
            );
            for r in &rows {
                let serial = rows
                    .iter()
                    .find(|s| s.axis_value == r.axis_value && s.csi_case == r.csi_case && s.cores == 1 && s.mode == r.mode)
                    .map(|s| s.wall_time_s);
                println!(
                    "{:>10} {:>6} {:<9} {:<10} {:>5} {:>6} {:>14.8e} {:>12.6} {:>8}",
                    fmt_value(r.axis_value),
                    r.irs_elements,
                    r.csi_case.as_str(),
                    format!("{:?}", r.mode).to_lowercase(),
                    r.cores,
                    r.iterations,
                    r.objective,
                    r.wall_time_s,
                    serial
                        .map(|s| format!("{:.2}", s / r.wall_time_s))
                        .unwrap_or_else(|| "-".into()),
                );
            }
            fs::create_dir_all(&cli.out_dir)?;
            let path = cli.out_dir.join(format!("{}.bench.csv", stem(&config)));
            write_bench(&rows, fs::File::create(&path)?)?;
            println!("bench: {}", path.display());
            Ok(true)
        }
        Command::Validate { config } => {
            let config = load(&config)?;
            let rows = with_threads(threads, || validation_report(&config))??;
            let mut flagged = 0;
            for r in &rows {
                println!(
                    "{:>10} {:<9} {:<12} {:<20} closed={:.6e} sample={:.6e} se={:.2e} z={:+.2}{}",
                    fmt_value(r.axis_value),
                    r.csi_case.as_str(),
                    r.phases,
                    r.moment,
                    r.closed_form,
                    r.empirical,
                    r.standard_error,
                    r.z,
                    if r.flagged() {
                        "  FLAGGED"
                    } else if r.exact() {
                        "  exact"
                    } else {
                        ""
                    },
                );
                flagged += r.flagged() as usize;
            }
            fs::create_dir_all(&cli.out_dir)?;
            let path = cli.out_dir.join(format!("{}.validate.csv", stem(&config)));
            write_validation(&rows, fs::File::create(&path)?)?;
            println!("{flagged} of {} moments with |z| > {Z_FLAG}", rows.len());
            println!("report: {}", path.display());
            Ok(flagged == 0)
        }
        Command::Solve { config, bits } => {
            let config = load(&config)?;
            let solutions = with_threads(threads, || solve(&config, bits))??;
            for s in &solutions {
                println!("point {} / {}", fmt_value(s.axis_value), s.csi_case.as_str());
                println!("  classification: {}", s.classification.as_str());
                match s.iterations {
                    Some(n) => println!("  method: coordinate descent ({n} iterations)"),
                    None => println!("  method: closed form"),
                }
                println!("  gamma_ub: {:.6e}", s.gamma_ub);
                println!("  c_ub: {:.6} bit/s/Hz", s.c_ub);
                println!(
                    "  irs vs no irs: {} (xi_gt {:.3e}, xi_lt {:.3e})",
                    s.comparison.verdict.as_str(),
                    s.comparison.xi_gt,
                    s.comparison.xi_lt
                );
                if let Some(q) = &s.quantized {
                    println!("  {}-bit: c_ub {:.6}, loss bound {:.3e}", q.bits, q.c_ub, q.bound);
                }
                println!("  phases (rad):");
                for row in s.phases.to_rows() {
                    let cells: Vec<String> = row.iter().map(|x| format!("{x:.4}")).collect();
                    println!("    {}", cells.join(" "));
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
