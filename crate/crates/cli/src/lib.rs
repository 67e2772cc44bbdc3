//! Batch front end: one JSON job in, one JSON document out.

pub mod config;
mod curve_out;
mod density;
mod format;
mod jobs;
mod verify;

pub use config::{Command, ConfigError, JobConfig, Number, Precision};
pub use density::{density_integral, density_table};
pub use jobs::{run, Options, Report};

/// Exit statuses of the binary.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 1;
    pub const SOLVER: u8 = 2;
    pub const VERIFY: u8 = 3;
}

/// Environment variable giving the default thread count.
pub const THREADS_ENV: &str = "BETAMM_THREADS";
