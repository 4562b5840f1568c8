//! TOML experiment configuration.
//!
//! ```toml
//! [experiment]
//! scenario = "fig3"            # preset; default "reference"
//! seed = 7                     # required
//! n_samples = 10000
//! n_phase_draws = 10000
//! schemes = ["special_closed_form", "pcd", "baseline3_signal_only"]
//! csi_cases = ["instant", "statistic"]
//! output = "fig3.csv"
//! angle_tol = 1e-9
//!
//! [system]                     # overrides; powers in dBm, K-factors in dB
//! m_r = 8
//! p_i_dbm = "off"              # no interference
//! k_ru_db = "inf"              # pure LoS
//! delta_ir_h = 0.5235987755982988
//!
//! [geometry]
//! d_su = 250.0
//!
//! [sweep]
//! axis = "m_r"                 # m_r (sets n_r too), p_i_dbm, k_sr_db, k_ru_db, d_r, d_su
//! values = [2, 4, 6, 8]
//!
//! [pcd]
//! rho0 = 1.0
//! kappa = 0.75
//! tol = 1e-6
//! max_iter = 10000
//! ```
//!
//! Keys absent from the file take the preset's value; unknown keys are errors.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::{
    dbm_to_watts, geometry_to_path_losses, Direction, PathLossExponents, RicianFactor, SystemParams,
};
use crate::error::{Error, Result};
use crate::optimizer::{PcdConfig, PcdMode, DEFAULT_ANGLE_TOL};
use crate::rate::CsiCase;

/// Operating point in configuration units (dBm, dB, metres, radians).
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub m_s: usize,
    pub n_s: usize,
    pub m_i: usize,
    pub n_i: usize,
    pub m_r: usize,
    pub n_r: usize,
    pub d_over_lambda: f64,
    pub p_s_dbm: f64,
    /// `-inf` switches the interference BS off.
    pub p_i_dbm: f64,
    pub noise_dbm: f64,
    /// `+inf` means pure LoS.
    pub k_sr_db: f64,
    pub k_ir_db: f64,
    pub k_ru_db: f64,
    pub delta_sr: Direction,
    pub delta_ir: Direction,
    pub phi_sr: Direction,
    pub phi_ir: Direction,
    pub phi_ru: Direction,
    pub d_su: f64,
    pub d_r: f64,
    pub d_ru: f64,
    pub exponents: PathLossExponents,
}

impl Scenario {
    /// General-case reference point.
    pub fn reference() -> Self {
        Self {
            m_s: 4,
            n_s: 4,
            m_i: 4,
            n_i: 4,
            m_r: 8,
            n_r: 8,
            d_over_lambda: 0.5,
            p_s_dbm: 30.0,
            p_i_dbm: 30.0,
            noise_dbm: -104.0,
            k_sr_db: 20.0,
            k_ir_db: 10.0,
            k_ru_db: 20.0,
            delta_sr: Direction::new(PI / 6.0, PI / 6.0),
            delta_ir: Direction::new(PI / 8.0, PI / 8.0),
            phi_sr: Direction::new(PI / 3.0, PI / 3.0),
            phi_ir: Direction::new(PI / 8.0, PI / 8.0),
            phi_ru: Direction::new(PI / 6.0, PI / 6.0),
            d_su: 250.0,
            d_r: 250.0,
            d_ru: 20.0,
            exponents: PathLossExponents::default(),
        }
    }

    /// Equal IRS arrival directions, all K-factors 20 dB.
    pub fn symmetric_strong_los() -> Self {
        let mut s = Self::reference();
        s.delta_ir = s.delta_sr;
        s.k_ir_db = 20.0;
        s
    }

    /// Equal IRS arrival directions with a scattered signal-BS link.
    pub fn symmetric_weak_signal_los() -> Self {
        let mut s = Self::symmetric_strong_los();
        s.k_sr_db = -20.0;
        s
    }

    pub fn to_params(&self) -> Result<SystemParams> {
        let losses = geometry_to_path_losses(self.d_su, self.d_r, self.d_ru, &self.exponents)?;
        let mut p = SystemParams {
            m_s: self.m_s,
            n_s: self.n_s,
            m_i: self.m_i,
            n_i: self.n_i,
            m_r: self.m_r,
            n_r: self.n_r,
            d_over_lambda: self.d_over_lambda,
            p_s: dbm_to_watts(self.p_s_dbm),
            p_i: dbm_to_watts(self.p_i_dbm),
            sigma2: dbm_to_watts(self.noise_dbm),
            alpha_su: 0.0,
            alpha_iu: 0.0,
            alpha_iu_prime: 0.0,
            alpha_sr: 0.0,
            alpha_ir: 0.0,
            alpha_ru: 0.0,
            k_sr: RicianFactor::from_db(self.k_sr_db),
            k_ir: RicianFactor::from_db(self.k_ir_db),
            k_ru: RicianFactor::from_db(self.k_ru_db),
            delta_sr: self.delta_sr,
            delta_ir: self.delta_ir,
            phi_sr: self.phi_sr,
            phi_ir: self.phi_ir,
            phi_ru: self.phi_ru,
        };
        p.set_path_losses(&losses);
        p.validate()?;
        Ok(p)
    }

    pub fn with_axis(&self, axis: Axis, value: f64) -> Result<Scenario> {
        let mut s = self.clone();
        match axis {
            Axis::MR => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(config_err(None, format!("m_r sweep value {value} is not a positive integer")));
                }
                s.m_r = value as usize;
                s.n_r = value as usize;
            }
            Axis::PiDbm => s.p_i_dbm = value,
            Axis::KSrDb => s.k_sr_db = value,
            Axis::KRuDb => s.k_ru_db = value,
            Axis::DR => s.d_r = value,
            Axis::DSu => s.d_su = value,
        }
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    MR,
    PiDbm,
    KSrDb,
    KRuDb,
    DR,
    DSu,
}

impl Axis {
    pub fn parse(s: &str) -> Option<Axis> {
        Some(match s {
            "m_r" => Axis::MR,
            "p_i_dbm" => Axis::PiDbm,
            "k_sr_db" => Axis::KSrDb,
            "k_ru_db" => Axis::KRuDb,
            "d_r" => Axis::DR,
            "d_su" => Axis::DSu,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::MR => "m_r",
            Axis::PiDbm => "p_i_dbm",
            Axis::KSrDb => "k_sr_db",
            Axis::KRuDb => "k_ru_db",
            Axis::DR => "d_r",
            Axis::DSu => "d_su",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    SpecialClosedForm,
    Pcd,
    Bcd,
    NoIrs,
    RandomPhase,
    SignalOnly,
    InstantAdaptive,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::SpecialClosedForm,
        Scheme::Pcd,
        Scheme::Bcd,
        Scheme::NoIrs,
        Scheme::RandomPhase,
        Scheme::SignalOnly,
        Scheme::InstantAdaptive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::SpecialClosedForm => "special_closed_form",
            Scheme::Pcd => "pcd",
            Scheme::Bcd => "bcd",
            Scheme::NoIrs => "baseline1_no_irs",
            Scheme::RandomPhase => "baseline2_random",
            Scheme::SignalOnly => "baseline3_signal_only",
            Scheme::InstantAdaptive => "baseline4_instant_adaptive",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|x| x.as_str() == s)
    }
}

fn parse_case(s: &str) -> Option<CsiCase> {
    CsiCase::ALL.into_iter().find(|c| c.as_str() == s)
}

/// A named starting point for a configuration file.
#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    pub scenario: Scenario,
    pub sweep: Option<Sweep>,
    pub schemes: Vec<Scheme>,
}

pub const PRESET_NAMES: [&str; 11] = [
    "reference",
    "fig3",
    "fig3_case3",
    "fig4",
    "fig4_case3",
    "fig5",
    "fig6",
    "fig7",
    "fig8",
    "fig9",
    "no_interference",
];

pub fn preset(name: &str) -> Option<Preset> {
    use Scheme::*;
    let special = vec![SpecialClosedForm, Pcd, NoIrs, RandomPhase, SignalOnly, InstantAdaptive];
    let general = vec![Pcd, Bcd, NoIrs, RandomPhase, SignalOnly, InstantAdaptive];
    let sweep = |axis, values: &[f64]| {
        Some(Sweep {
            axis,
            values: values.to_vec(),
        })
    };
    let m_r_values = [2.0, 4.0, 6.0, 8.0];
    let p_i_values = [20.0, 25.0, 30.0, 35.0];
    let (scenario, sweep, schemes) = match name {
        "reference" => (Scenario::reference(), None, general),
        "fig3" => (Scenario::symmetric_strong_los(), sweep(Axis::MR, &m_r_values), special),
        "fig3_case3" => (Scenario::symmetric_weak_signal_los(), sweep(Axis::MR, &m_r_values), special),
        "fig4" => (Scenario::symmetric_strong_los(), sweep(Axis::PiDbm, &p_i_values), special),
        "fig4_case3" => (Scenario::symmetric_weak_signal_los(), sweep(Axis::PiDbm, &p_i_values), special),
        "fig5" => (Scenario::reference(), sweep(Axis::KSrDb, &[-10.0, 0.0, 10.0, 20.0, 30.0]), general),
        "fig6" => (Scenario::reference(), sweep(Axis::KRuDb, &[-10.0, 0.0, 10.0, 20.0, 30.0]), general),
        "fig7" => (Scenario::reference(), sweep(Axis::DR, &[50.0, 150.0, 250.0, 350.0, 450.0]), general),
        "fig8" => (Scenario::reference(), sweep(Axis::DSu, &[100.0, 175.0, 250.0, 325.0, 400.0]), general),
        "fig9" => (Scenario::reference(), sweep(Axis::MR, &[8.0, 16.0, 24.0, 32.0]), vec![Pcd, Bcd]),
        "no_interference" => {
            let mut s = Scenario::reference();
            s.p_i_dbm = f64::NEG_INFINITY;
            (s, None, special)
        }
        _ => return None,
    };
    let name = PRESET_NAMES.iter().copied().find(|n| *n == name)?;
    Some(Preset {
        name,
        scenario,
        sweep,
        schemes,
    })
}

/// Fully resolved experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub scenario_name: String,
    pub scenario: Scenario,
    pub sweep: Option<Sweep>,
    pub schemes: Vec<Scheme>,
    pub csi_cases: Vec<CsiCase>,
    pub seed: u64,
    pub n_samples: usize,
    pub n_phase_draws: usize,
    pub output: Option<PathBuf>,
    pub angle_tol: f64,
    pub pcd: PcdConfig,
    /// Text the configuration was parsed from, hashed into the run manifest.
    pub source: String,
}

impl ExperimentConfig {
    /// Sweep points as `(axis value, scenario)`; a single `None` point when
    /// no sweep is configured.
    pub fn points(&self) -> Result<Vec<(Option<f64>, Scenario)>> {
        match &self.sweep {
            None => Ok(vec![(None, self.scenario.clone())]),
            Some(s) => s
                .values
                .iter()
                .map(|&v| Ok((Some(v), self.scenario.with_axis(s.axis, v)?)))
                .collect(),
        }
    }

    pub fn output_name(&self) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", self.scenario_name)))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: RawExperiment,
    #[serde(default)]
    system: RawSystem,
    #[serde(default)]
    geometry: RawGeometry,
    sweep: Option<RawSweep>,
    #[serde(default)]
    pcd: RawPcd,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    scenario: Option<String>,
    seed: Option<u64>,
    n_samples: Option<usize>,
    n_phase_draws: Option<usize>,
    schemes: Option<Vec<String>>,
    csi_cases: Option<Vec<String>>,
    output: Option<String>,
    angle_tol: Option<f64>,
}

/// A number or one of the words `off` / `inf`.
#[derive(Deserialize, Clone)]
#[serde(untagged)]
enum Level {
    Num(f64),
    Word(String),
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    m_s: Option<usize>,
    n_s: Option<usize>,
    m_i: Option<usize>,
    n_i: Option<usize>,
    m_r: Option<usize>,
    n_r: Option<usize>,
    d_over_lambda: Option<f64>,
    p_s_dbm: Option<f64>,
    p_i_dbm: Option<Level>,
    noise_dbm: Option<f64>,
    k_sr_db: Option<Level>,
    k_ir_db: Option<Level>,
    k_ru_db: Option<Level>,
    delta_sr_h: Option<f64>,
    delta_sr_v: Option<f64>,
    delta_ir_h: Option<f64>,
    delta_ir_v: Option<f64>,
    phi_sr_h: Option<f64>,
    phi_sr_v: Option<f64>,
    phi_ir_h: Option<f64>,
    phi_ir_v: Option<f64>,
    phi_ru_h: Option<f64>,
    phi_ru_v: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    d_su: Option<f64>,
    d_r: Option<f64>,
    d_ru: Option<f64>,
    exponent_su: Option<f64>,
    exponent_iu: Option<f64>,
    exponent_sr: Option<f64>,
    exponent_ir: Option<f64>,
    exponent_ru: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: String,
    values: Vec<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPcd {
    rho0: Option<f64>,
    kappa: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
}

fn config_err(line: Option<usize>, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line of the first `key = ...` assignment, if present.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn level(value: &Level, key: &str, word: &str, word_value: f64, text: &str) -> Result<f64> {
    match value {
        Level::Num(x) if x.is_nan() => Err(config_err(line_of_key(text, key), format!("`{key}` is NaN"))),
        Level::Num(x) => Ok(*x),
        Level::Word(w) if w == word => Ok(word_value),
        Level::Word(w) => Err(config_err(
            line_of_key(text, key),
            format!("`{key}` must be a number or \"{word}\", got \"{w}\""),
        )),
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        config_err(line, e.message().to_string())
    })?;
    let at = |key: &str| line_of_key(text, key);

    let e = raw.experiment;
    let scenario_name = e.scenario.unwrap_or_else(|| "reference".to_string());
    let base = preset(&scenario_name).ok_or_else(|| {
        config_err(
            at("scenario"),
            format!("unknown scenario \"{scenario_name}\"; known: {}", PRESET_NAMES.join(", ")),
        )
    })?;
    let seed = e
        .seed
        .ok_or_else(|| config_err(None, "`experiment.seed` is required"))?;

    let mut s = base.scenario.clone();
    let sys = raw.system;
    macro_rules! set {
        ($field:expr, $value:expr) => {
            if let Some(v) = $value {
                $field = v;
            }
        };
    }
    set!(s.m_s, sys.m_s);
    set!(s.n_s, sys.n_s);
    set!(s.m_i, sys.m_i);
    set!(s.n_i, sys.n_i);
    set!(s.m_r, sys.m_r);
    set!(s.n_r, sys.n_r);
    set!(s.d_over_lambda, sys.d_over_lambda);
    set!(s.p_s_dbm, sys.p_s_dbm);
    set!(s.noise_dbm, sys.noise_dbm);
    if let Some(v) = &sys.p_i_dbm {
        s.p_i_dbm = level(v, "p_i_dbm", "off", f64::NEG_INFINITY, text)?;
    }
    for (key, raw_value, field) in [
        ("k_sr_db", &sys.k_sr_db, &mut s.k_sr_db),
        ("k_ir_db", &sys.k_ir_db, &mut s.k_ir_db),
        ("k_ru_db", &sys.k_ru_db, &mut s.k_ru_db),
    ] {
        if let Some(v) = raw_value {
            *field = level(v, key, "inf", f64::INFINITY, text)?;
        }
    }
    set!(s.delta_sr.h, sys.delta_sr_h);
    set!(s.delta_sr.v, sys.delta_sr_v);
    set!(s.delta_ir.h, sys.delta_ir_h);
    set!(s.delta_ir.v, sys.delta_ir_v);
    set!(s.phi_sr.h, sys.phi_sr_h);
    set!(s.phi_sr.v, sys.phi_sr_v);
    set!(s.phi_ir.h, sys.phi_ir_h);
    set!(s.phi_ir.v, sys.phi_ir_v);
    set!(s.phi_ru.h, sys.phi_ru_h);
    set!(s.phi_ru.v, sys.phi_ru_v);
    let g = raw.geometry;
    set!(s.d_su, g.d_su);
    set!(s.d_r, g.d_r);
    set!(s.d_ru, g.d_ru);
    set!(s.exponents.su, g.exponent_su);
    set!(s.exponents.iu, g.exponent_iu);
    set!(s.exponents.sr, g.exponent_sr);
    set!(s.exponents.ir, g.exponent_ir);
    set!(s.exponents.ru, g.exponent_ru);

    let sweep = match raw.sweep {
        None => base.sweep.clone(),
        Some(rs) => {
            let axis = Axis::parse(&rs.axis)
                .ok_or_else(|| config_err(at("axis"), format!("unknown sweep axis \"{}\"", rs.axis)))?;
            if rs.values.is_empty() {
                return Err(config_err(at("values"), "sweep values must not be empty"));
            }
            Some(Sweep {
                axis,
                values: rs.values,
            })
        }
    };

    let schemes = match e.schemes {
        None => base.schemes.clone(),
        Some(names) => names
            .iter()
            .map(|n| {
                Scheme::parse(n).ok_or_else(|| config_err(at("schemes"), format!("unknown scheme \"{n}\"")))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    if schemes.is_empty() {
        return Err(config_err(at("schemes"), "at least one scheme is required"));
    }
    let csi_cases = match e.csi_cases {
        None => CsiCase::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| parse_case(n).ok_or_else(|| config_err(at("csi_cases"), format!("unknown CSI case \"{n}\""))))
            .collect::<Result<Vec<_>>>()?,
    };
    if csi_cases.is_empty() {
        return Err(config_err(at("csi_cases"), "at least one CSI case is required"));
    }

    let n_samples = e.n_samples.unwrap_or(10_000);
    if n_samples == 0 {
        return Err(config_err(at("n_samples"), "n_samples must be at least 1"));
    }
    let n_phase_draws = e.n_phase_draws.unwrap_or(10_000);
    if n_phase_draws == 0 {
        return Err(config_err(at("n_phase_draws"), "n_phase_draws must be at least 1"));
    }
    let angle_tol = e.angle_tol.unwrap_or(DEFAULT_ANGLE_TOL);
    if !(angle_tol >= 0.0) {
        return Err(config_err(at("angle_tol"), "angle_tol must be >= 0"));
    }

    let defaults = PcdConfig::default();
    let pcd = PcdConfig {
        rho0: raw.pcd.rho0.unwrap_or(defaults.rho0),
        kappa: raw.pcd.kappa.unwrap_or(defaults.kappa),
        tol: raw.pcd.tol.unwrap_or(defaults.tol),
        max_iter: raw.pcd.max_iter.unwrap_or(defaults.max_iter),
        mode: PcdMode::Parallel,
    };
    pcd.validate().map_err(|err| locate(err, text))?;

    let config = ExperimentConfig {
        scenario_name,
        scenario: s,
        sweep,
        schemes,
        csi_cases,
        seed,
        n_samples,
        n_phase_draws,
        output: e.output.map(PathBuf::from),
        angle_tol,
        pcd,
        source: text.to_string(),
    };
    // Every sweep point must describe a valid system.
    for (value, point) in config.points().map_err(|err| locate(err, text))? {
        point.to_params().map_err(|err| match (locate(err, text), value) {
            (Error::Config { line, message }, Some(v)) => config_err(line, format!("{message} (sweep value {v})")),
            (other, _) => other,
        })?;
    }
    Ok(config)
}

/// Turns a parameter error into a config error pointing at the offending key.
fn locate(err: Error, text: &str) -> Error {
    match err {
        Error::InvalidParameter { name, reason } => {
            let key = match name {
                "p_s" => "p_s_dbm",
                "p_i" => "p_i_dbm",
                "sigma2" => "noise_dbm",
                "k_sr" => "k_sr_db",
                "k_ir" => "k_ir_db",
                "k_ru" => "k_ru_db",
                other => other,
            };
            config_err(line_of_key(text, key), format!("`{key}`: {reason}"))
        }
        Error::Config { line, message } => config_err(line, message),
        other => config_err(None, other.to_string()),
    }
}
