//! Quasi-static phase-shift design for an IRS-assisted downlink with an
//! interfering base station.
//!
//! * [`channel`]: array geometry, LoS components and seeded channel draws.
//! * [`rate`]: SINR, Monte Carlo rates and closed-form rate upper bounds.
//! * [`optimizer`]: closed-form optima, parallel/sequential coordinate
//!   descent and phase quantization.
//! * [`baseline`]: the no-IRS system, comparison predicates and reference
//!   schemes.
//! * [`harness`]: configuration files, sweeps, benchmarks and reports.

pub mod baseline;
pub mod channel;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod optimizer;
pub mod rate;

pub use channel::{PhaseShiftMatrix, RicianFactor, SystemParams};
pub use error::{Error, Result};
pub use rate::{CsiCase, DerivedConstants, RateEstimate};
