//! Run configuration, snapshots and the command implementations behind the
//! `bardina` binary.

pub mod commands;
pub mod config;
pub mod snapshot;

pub use commands::{
    cmd_bounds, cmd_lyapunov, cmd_selftest, cmd_simulate, cmd_verify, run_with_threads, CommandOptions, Outcome,
    SelftestOptions,
};
pub use config::{parse_config, RunSpec};
pub use snapshot::{load_snapshot, save_snapshot, Snapshot};
