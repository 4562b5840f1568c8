#![allow(dead_code)]

use std::f64::consts::PI;

use irsphase::channel::Direction;
use irsphase::harness::Scenario;
use irsphase::SystemParams;
use rand::Rng;

fn direction(rng: &mut impl Rng) -> Direction {
    Direction::new(rng.random_range(-PI / 2.0..PI / 2.0), rng.random_range(-PI / 2.0..PI / 2.0))
}

/// Random valid system with finite K-factors, BS arrays up to
/// `max_bs x max_bs` (at least two antennas) and IRS up to `max_irs x max_irs`.
pub fn random_params(rng: &mut impl Rng, max_bs: usize, max_irs: usize) -> SystemParams {
    let mut s = Scenario::reference();
    loop {
        s.m_s = rng.random_range(1..=max_bs);
        s.n_s = rng.random_range(1..=max_bs);
        if s.m_s * s.n_s > 1 {
            break;
        }
    }
    loop {
        s.m_i = rng.random_range(1..=max_bs);
        s.n_i = rng.random_range(1..=max_bs);
        if s.m_i * s.n_i > 1 {
            break;
        }
    }
    s.m_r = rng.random_range(1..=max_irs);
    s.n_r = rng.random_range(1..=max_irs);
    s.d_over_lambda = rng.random_range(0.1..=0.5);
    s.p_s_dbm = rng.random_range(20.0..40.0);
    s.p_i_dbm = rng.random_range(0.0..40.0);
    s.k_sr_db = rng.random_range(-10.0..30.0);
    s.k_ir_db = rng.random_range(-10.0..30.0);
    s.k_ru_db = rng.random_range(-10.0..30.0);
    s.delta_sr = direction(rng);
    s.delta_ir = direction(rng);
    s.phi_sr = direction(rng);
    s.phi_ir = direction(rng);
    s.phi_ru = direction(rng);
    s.d_su = rng.random_range(50.0..550.0);
    s.d_r = rng.random_range(20.0..580.0);
    s.d_ru = rng.random_range(5.0..60.0);
    s.to_params().expect("random scenario is valid")
}
