use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn irsphase(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irsphase"))
        .args(args)
        .env("IRSPHASE_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = "[experiment]
seed = 11
n_samples = 300
n_phase_draws = 100
output = \"small.csv\"

[system]
m_s = 2
n_s = 2
m_i = 2
n_i = 2
m_r = 2
n_r = 2

[sweep]
axis = \"p_i_dbm\"
values = [10, 30]
";

#[test]
fn sweep_writes_results_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out = irsphase(&["sweep", &cfg, "--threads", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("small.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "axis,axis_value,scheme,csi_case,classification,c_ub,mc_mean,mc_se,n_samples,iterations,error"
    );
    // 2 points x (6 schemes instant + 5 statistic)
    assert_eq!(lines.count(), 22);
    assert!(csv.contains("p_i_dbm,10,pcd,instant,general,"));
    assert!(dir.path().join("small.timing.csv").exists());
    let manifest = fs::read_to_string(dir.path().join("small.manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 11"));
    assert!(manifest.contains("config_sha256"));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let mut results = Vec::new();
    for threads in ["1", "4"] {
        let sub = dir.path().join(threads);
        let out = irsphase(&["sweep", &cfg, "--threads", threads, "--out-dir", sub.to_str().unwrap()], dir.path());
        assert!(out.status.success());
        results.push(fs::read(sub.join("small.csv")).unwrap());
    }
    assert_eq!(results[0], results[1]);
}

#[test]
fn failed_rows_set_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("n_phase_draws = 100", "n_phase_draws = 100\nschemes = [\"special_closed_form\"]");
    let cfg = write_config(dir.path(), "bad.toml", &text);
    let out = irsphase(&["sweep", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let csv = fs::read_to_string(dir.path().join("small.csv")).unwrap();
    assert!(csv.contains("no closed-form solution"));
}

#[test]
fn config_errors_report_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "typo.toml", "[experiment]\nseed = 1\n[system]\nm_r = 2\nmr = 3\n");
    let out = irsphase(&["sweep", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5"), "{err}");
}

#[test]
fn solve_validate_bench_and_presets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "fig3.toml",
        "[experiment]\nscenario = \"fig3\"\nseed = 4\nn_samples = 2000\ncsi_cases = [\"statistic\"]\n[sweep]\naxis = \"m_r\"\nvalues = [2]\n",
    );
    let out = irsphase(&["solve", &cfg, "--bits", "2"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("classification: symmetric_positive_eta"), "{text}");
    assert!(text.contains("method: closed form"));
    assert!(text.contains("2-bit"));

    let out = irsphase(&["validate", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("fig3.validate.csv").exists());

    let out = irsphase(&["bench", &cfg, "--cores", "1,2", "--repeats", "1"], dir.path());
    assert!(out.status.success());
    let bench = fs::read_to_string(dir.path().join("fig3.bench.csv")).unwrap();
    assert_eq!(bench.lines().count(), 4);

    let out = irsphase(&["presets"], dir.path());
    assert!(String::from_utf8_lossy(&out.stdout).lines().any(|l| l == "fig9"));
}
