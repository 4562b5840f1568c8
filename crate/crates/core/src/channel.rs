//! Array geometry, line-of-sight components and random channel draws.
//!
//! All vectors built from a uniform rectangular array (URA) use row-major
//! ("rvec") ordering: element `(m, n)` of an `M x N` array sits at flat index
//! `m * N + n`. Every other module relies on this ordering.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::linalg::CMatrix;

pub const TWO_PI: f64 = 2.0 * PI;

/// Rician K-factor of a link. `PureLos` is the `K -> inf` limit, kept as an
/// explicit variant so that limit cases are evaluated exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RicianFactor {
    Finite(f64),
    PureLos,
}

impl RicianFactor {
    pub fn from_db(db: f64) -> Self {
        if db == f64::INFINITY {
            RicianFactor::PureLos
        } else {
            RicianFactor::Finite(10f64.powf(db / 10.0))
        }
    }

    /// `K / (K + 1)`, the LoS power share.
    pub fn los_share(self) -> f64 {
        match self {
            RicianFactor::Finite(k) => k / (k + 1.0),
            RicianFactor::PureLos => 1.0,
        }
    }

    /// `1 / (K + 1)`, the NLoS power share.
    pub fn nlos_share(self) -> f64 {
        match self {
            RicianFactor::Finite(k) => 1.0 / (k + 1.0),
            RicianFactor::PureLos => 0.0,
        }
    }

    pub fn is_valid(self) -> bool {
        match self {
            RicianFactor::Finite(k) => k.is_finite() && k >= 0.0,
            RicianFactor::PureLos => true,
        }
    }
}

/// Azimuth/elevation pair, radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    pub h: f64,
    pub v: f64,
}

impl Direction {
    pub const fn new(h: f64, v: f64) -> Self {
        Self { h, v }
    }
}

/// Physical description of the two-BS, one-IRS downlink. Powers and path
/// losses are linear (watts and power gains).
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    pub m_s: usize,
    pub n_s: usize,
    pub m_i: usize,
    pub n_i: usize,
    pub m_r: usize,
    pub n_r: usize,
    pub d_over_lambda: f64,
    pub p_s: f64,
    pub p_i: f64,
    pub sigma2: f64,
    pub alpha_su: f64,
    pub alpha_iu: f64,
    /// Interference BS to its own user. No rate expression depends on it.
    pub alpha_iu_prime: f64,
    pub alpha_sr: f64,
    pub alpha_ir: f64,
    pub alpha_ru: f64,
    pub k_sr: RicianFactor,
    pub k_ir: RicianFactor,
    pub k_ru: RicianFactor,
    /// IRS-side arrival direction from the signal BS.
    pub delta_sr: Direction,
    /// IRS-side arrival direction from the interference BS.
    pub delta_ir: Direction,
    /// Signal-BS departure direction towards the IRS.
    pub phi_sr: Direction,
    /// Interference-BS departure direction towards the IRS.
    pub phi_ir: Direction,
    /// IRS departure direction towards the user.
    pub phi_ru: Direction,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl SystemParams {
    /// Reference setup of the numerical study: 4x4 BS arrays, 8x8 IRS,
    /// 30 dBm transmit powers, -104 dBm noise, IRS at (250, 20) m and the
    /// user at 250 m, general-case angles and K-factors.
    pub fn reference() -> Self {
        let losses = geometry_to_path_losses(250.0, 250.0, 20.0, &PathLossExponents::default())
            .expect("reference geometry is valid");
        let mut params = Self {
            m_s: 4,
            n_s: 4,
            m_i: 4,
            n_i: 4,
            m_r: 8,
            n_r: 8,
            d_over_lambda: 0.5,
            p_s: dbm_to_watts(30.0),
            p_i: dbm_to_watts(30.0),
            sigma2: dbm_to_watts(-104.0),
            alpha_su: 0.0,
            alpha_iu: 0.0,
            alpha_iu_prime: 0.0,
            alpha_sr: 0.0,
            alpha_ir: 0.0,
            alpha_ru: 0.0,
            k_sr: RicianFactor::from_db(20.0),
            k_ir: RicianFactor::from_db(10.0),
            k_ru: RicianFactor::from_db(20.0),
            delta_sr: Direction::new(PI / 6.0, PI / 6.0),
            delta_ir: Direction::new(PI / 8.0, PI / 8.0),
            phi_sr: Direction::new(PI / 3.0, PI / 3.0),
            phi_ir: Direction::new(PI / 8.0, PI / 8.0),
            phi_ru: Direction::new(PI / 6.0, PI / 6.0),
        };
        params.set_path_losses(&losses);
        params
    }

    pub fn set_path_losses(&mut self, losses: &PathLosses) {
        self.alpha_su = losses.su;
        self.alpha_iu = losses.iu;
        self.alpha_iu_prime = losses.iu_prime;
        self.alpha_sr = losses.sr;
        self.alpha_ir = losses.ir;
        self.alpha_ru = losses.ru;
    }

    pub fn irs_elements(&self) -> usize {
        self.m_r * self.n_r
    }

    pub fn signal_antennas(&self) -> usize {
        self.m_s * self.n_s
    }

    pub fn interference_antennas(&self) -> usize {
        self.m_i * self.n_i
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("m_s", self.m_s),
            ("n_s", self.n_s),
            ("m_i", self.m_i),
            ("n_i", self.n_i),
            ("m_r", self.m_r),
            ("n_r", self.n_r),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(invalid(name, "array dimension must be at least 1"));
            }
        }
        if self.signal_antennas() < 2 {
            return Err(invalid("m_s", "signal BS needs more than one antenna"));
        }
        if self.interference_antennas() < 2 {
            return Err(invalid("m_i", "interference BS needs more than one antenna"));
        }
        if !(self.d_over_lambda > 0.0 && self.d_over_lambda <= 0.5) {
            return Err(invalid("d_over_lambda", format!("{} not in (0, 0.5]", self.d_over_lambda)));
        }
        let positive = [
            ("p_s", self.p_s),
            ("sigma2", self.sigma2),
            ("alpha_su", self.alpha_su),
            ("alpha_iu", self.alpha_iu),
            ("alpha_iu_prime", self.alpha_iu_prime),
            ("alpha_sr", self.alpha_sr),
            ("alpha_ir", self.alpha_ir),
            ("alpha_ru", self.alpha_ru),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("{v} must be finite and > 0")));
            }
        }
        // P_I = 0 is the interference-free special case.
        if !(self.p_i.is_finite() && self.p_i >= 0.0) {
            return Err(invalid("p_i", format!("{} must be finite and >= 0", self.p_i)));
        }
        for (name, k) in [("k_sr", self.k_sr), ("k_ir", self.k_ir), ("k_ru", self.k_ru)] {
            if !k.is_valid() {
                return Err(invalid(name, format!("{k:?} must be >= 0")));
            }
        }
        let angles = [
            self.delta_sr,
            self.delta_ir,
            self.phi_sr,
            self.phi_ir,
            self.phi_ru,
        ];
        if angles.iter().any(|d| !d.h.is_finite() || !d.v.is_finite()) {
            return Err(invalid("angles", "all angles must be finite"));
        }
        Ok(())
    }
}

/// Path-loss exponents of the five links used to derive `alpha_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathLossExponents {
    pub su: f64,
    pub iu: f64,
    pub sr: f64,
    pub ir: f64,
    pub ru: f64,
}

impl Default for PathLossExponents {
    fn default() -> Self {
        Self {
            su: 3.7,
            iu: 3.5,
            sr: 2.0,
            ir: 2.0,
            ru: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathLosses {
    pub su: f64,
    pub iu: f64,
    pub iu_prime: f64,
    pub sr: f64,
    pub ir: f64,
    pub ru: f64,
}

/// x-coordinate of the interference BS; the signal BS is at the origin.
pub const INTERFERENCE_BS_X: f64 = 600.0;

/// Link distances (m) for the planar layout: signal BS at (0, 0), interference
/// BS at (600, 0), user at (`d_su`, 0) and IRS at (`d_r`, `d_ru_vert`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkDistances {
    pub su: f64,
    pub iu: f64,
    pub sr: f64,
    pub ir: f64,
    pub ru: f64,
}

pub fn link_distances(d_su: f64, d_r: f64, d_ru_vert: f64) -> LinkDistances {
    LinkDistances {
        su: d_su,
        iu: (INTERFERENCE_BS_X - d_su).abs(),
        sr: d_r.hypot(d_ru_vert),
        ir: (INTERFERENCE_BS_X - d_r).hypot(d_ru_vert),
        ru: (d_r - d_su).hypot(d_ru_vert),
    }
}

/// `alpha = 1 / (1000 d^exponent)` for every link of the planar layout.
/// The interference BS to own-user loss is set equal to `alpha_iu`.
pub fn geometry_to_path_losses(
    d_su: f64,
    d_r: f64,
    d_ru_vert: f64,
    exponents: &PathLossExponents,
) -> Result<PathLosses> {
    for (name, v) in [("d_su", d_su), ("d_r", d_r), ("d_ru", d_ru_vert)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(name, format!("distance {v} must be > 0")));
        }
    }
    let d = link_distances(d_su, d_r, d_ru_vert);
    if d.iu <= 0.0 {
        return Err(invalid("d_su", "user coincides with the interference BS"));
    }
    let loss = |dist: f64, exp: f64| 1.0 / (1000.0 * dist.powf(exp));
    let iu = loss(d.iu, exponents.iu);
    Ok(PathLosses {
        su: loss(d.su, exponents.su),
        iu,
        iu_prime: iu,
        sr: loss(d.sr, exponents.sr),
        ir: loss(d.ir, exponents.ir),
        ru: loss(d.ru, exponents.ru),
    })
}

/// Phase progression of element `(m, n)` (1-based) relative to element (1, 1).
/// Not reduced modulo 2pi.
pub fn phase_offset(d_over_lambda: f64, theta_h: f64, theta_v: f64, m: usize, n: usize) -> f64 {
    debug_assert!(m >= 1 && n >= 1);
    TWO_PI * d_over_lambda * theta_v.sin() * ((m - 1) as f64 * theta_h.cos() + (n - 1) as f64 * theta_h.sin())
}

/// Row-vectorized URA response `a(theta_h, theta_v, M, N)`.
pub fn steering_vector(dir: Direction, m_dim: usize, n_dim: usize, d_over_lambda: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(m_dim * n_dim);
    for m in 1..=m_dim {
        for n in 1..=n_dim {
            out.push(Complex64::from_polar(1.0, phase_offset(d_over_lambda, dir.h, dir.v, m, n)));
        }
    }
    out
}

/// Per-element phase grid `f(dir, m, n)` in rvec order.
pub fn phase_grid(dir: Direction, m_dim: usize, n_dim: usize, d_over_lambda: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(m_dim * n_dim);
    for m in 1..=m_dim {
        for n in 1..=n_dim {
            out.push(phase_offset(d_over_lambda, dir.h, dir.v, m, n));
        }
    }
    out
}

/// Quasi-static IRS phase shifts, `M_R x N_R`, every entry in `[0, 2pi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseShiftMatrix {
    rows: usize,
    cols: usize,
    phi: Vec<f64>,
}

impl PhaseShiftMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            phi: vec![0.0; rows * cols],
        }
    }

    /// Builds from row-major values, rejecting anything outside `[0, 2pi)`.
    pub fn new(rows: usize, cols: usize, phi: Vec<f64>) -> Result<Self> {
        if phi.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected_rows: rows,
                expected_cols: cols,
                rows: phi.len() / cols.max(1),
                cols,
            });
        }
        for (k, &v) in phi.iter().enumerate() {
            if !(0.0..TWO_PI).contains(&v) {
                return Err(Error::PhaseOutOfRange {
                    row: k / cols,
                    col: k % cols,
                    value: v,
                });
            }
        }
        Ok(Self { rows, cols, phi })
    }

    /// Builds from arbitrary real angles, wrapping each into `[0, 2pi)`.
    pub fn wrapped(rows: usize, cols: usize, angles: impl IntoIterator<Item = f64>) -> Self {
        let phi: Vec<f64> = angles.into_iter().map(wrap_phase).collect();
        assert_eq!(phi.len(), rows * cols, "angle count does not match shape");
        Self { rows, cols, phi }
    }

    pub fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let phi = (0..rows * cols).map(|_| rng.random_range(0.0..TWO_PI)).collect();
        Self { rows, cols, phi }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.phi[m * self.cols + n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.phi
    }

    /// Sets flat entry `k`, wrapping into `[0, 2pi)`.
    pub fn set_wrapped(&mut self, k: usize, value: f64) {
        self.phi[k] = wrap_phase(value);
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.phi.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// `e^{j phi}` per element, rvec order (the diagonal of `Phi(phi)`).
    pub fn phasors(&self) -> Vec<Complex64> {
        self.phi.iter().map(|&p| Complex64::from_polar(1.0, p)).collect()
    }
}

/// `x - 2pi floor(x / 2pi)`, with the rounding edge case `-tiny -> 2pi`
/// folded back to 0.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x - TWO_PI * (x / TWO_PI).floor();
    if r >= TWO_PI || r < 0.0 {
        0.0
    } else {
        r
    }
}

/// Deterministic normalized LoS components.
#[derive(Clone, Debug, PartialEq)]
pub struct LosComponents {
    /// `a^H(delta_SR, M_R, N_R) a(phi_SR, M_S, N_S)`
    pub h_bar_sr: CMatrix,
    pub h_bar_ir: CMatrix,
    /// Row vector `a(phi_RU, M_R, N_R)`, i.e. the LoS part of `h^H_RU`.
    pub h_bar_ru: Vec<Complex64>,
    /// `a(phi_SR, M_S, N_S)`, the BS-side factor of `h_bar_sr`.
    pub a_sr_bs: Vec<Complex64>,
    pub a_ir_bs: Vec<Complex64>,
}

pub fn los_components(params: &SystemParams) -> LosComponents {
    let dl = params.d_over_lambda;
    let irs_sr: Vec<Complex64> = steering_vector(params.delta_sr, params.m_r, params.n_r, dl)
        .into_iter()
        .map(|z| z.conj())
        .collect();
    let irs_ir: Vec<Complex64> = steering_vector(params.delta_ir, params.m_r, params.n_r, dl)
        .into_iter()
        .map(|z| z.conj())
        .collect();
    let a_sr_bs = steering_vector(params.phi_sr, params.m_s, params.n_s, dl);
    let a_ir_bs = steering_vector(params.phi_ir, params.m_i, params.n_i, dl);
    LosComponents {
        h_bar_sr: CMatrix::outer(&irs_sr, &a_sr_bs),
        h_bar_ir: CMatrix::outer(&irs_ir, &a_ir_bs),
        h_bar_ru: steering_vector(params.phi_ru, params.m_r, params.n_r, dl),
        a_sr_bs,
        a_ir_bs,
    }
}

/// One draw of every channel. Vectors are stored as column vectors, i.e. the
/// conjugate of the row forms `h^H` that appear in the signal model.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub h_su: Vec<Complex64>,
    pub h_iu: Vec<Complex64>,
    pub h_iu_prime: Vec<Complex64>,
    pub h_sr: CMatrix,
    pub h_ir: CMatrix,
    pub h_ru: Vec<Complex64>,
}

impl ChannelRealization {
    /// Row `h^H_RU`.
    pub fn h_ru_row(&self) -> Vec<Complex64> {
        self.h_ru.iter().map(|z| z.conj()).collect()
    }
}

#[inline]
fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn rayleigh_vector(len: usize, alpha: f64, rng: &mut impl Rng) -> Vec<Complex64> {
    let scale = alpha.sqrt();
    (0..len).map(|_| complex_normal(rng) * scale).collect()
}

fn rician_matrix(los: &CMatrix, alpha: f64, k: RicianFactor, rng: &mut impl Rng) -> CMatrix {
    let los_w = (alpha * k.los_share()).sqrt();
    let nlos_w = (alpha * k.nlos_share()).sqrt();
    let mut out = CMatrix::zeros(los.rows(), los.cols());
    for (dst, &l) in out.as_mut_slice().iter_mut().zip(los.as_slice()) {
        // Draw even when pure LoS so the stream layout does not depend on K.
        let n = complex_normal(rng);
        *dst = l * los_w + n * nlos_w;
    }
    out
}

/// Draws a realization from `rng`. Draw order is fixed: `h_su`, `h_iu`,
/// `h_iu_prime`, `H_SR`, `H_IR`, `h_RU`.
pub fn sample_realization(params: &SystemParams, los: &LosComponents, rng: &mut impl Rng) -> ChannelRealization {
    let h_su = rayleigh_vector(params.signal_antennas(), params.alpha_su, rng);
    let h_iu = rayleigh_vector(params.interference_antennas(), params.alpha_iu, rng);
    let h_iu_prime = rayleigh_vector(params.interference_antennas(), params.alpha_iu_prime, rng);
    let h_sr = rician_matrix(&los.h_bar_sr, params.alpha_sr, params.k_sr, rng);
    let h_ir = rician_matrix(&los.h_bar_ir, params.alpha_ir, params.k_ir, rng);
    let los_w = (params.alpha_ru * params.k_ru.los_share()).sqrt();
    let nlos_w = (params.alpha_ru * params.k_ru.nlos_share()).sqrt();
    let h_ru = los
        .h_bar_ru
        .iter()
        .map(|&l| {
            let row = l * los_w + complex_normal(rng) * nlos_w;
            row.conj()
        })
        .collect();
    ChannelRealization {
        h_su,
        h_iu,
        h_iu_prime,
        h_sr,
        h_ir,
        h_ru,
    }
}

/// Counter-based generator for sample `index` of the run seeded by `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Sample `index` of the run seeded by `seed`; independent of evaluation order.
pub fn sample_indexed(params: &SystemParams, los: &LosComponents, seed: u64, index: u64) -> ChannelRealization {
    sample_realization(params, los, &mut sample_rng(seed, index))
}
