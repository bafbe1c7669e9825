//! Experiment driver: seeded initial data, single runs, minimum-stabilizer
//! sweeps and convergence studies.
//!
//! Sweep cells and convergence runs are independent jobs executed on the
//! rayon pool. Set `CHILLWAVE_THREADS` to cap the number of worker threads.

mod config;
mod convergence;
mod initial;
pub mod rng;
mod run;
mod sweep;

pub use config::{
    default_ladder, ConvergenceConfig, InitialData, PotentialConfig, RunConfig, SweepConfig,
    SweepTarget,
};
pub use convergence::{convergence_study, ConvergenceRow, ConvergenceTable, CONVERGENCE_HEADER};
pub use initial::{generate_phi0, generate_phi0_in, prepare_phi1, PREPARE_STEPS};
pub use run::{initial_field, prepare, run_simulation, write_outputs, RunOutput, Snapshot};
pub use sweep::{sweep_min_stabilizer, SweepCell, SweepTable};

pub const THREADS_ENV: &str = "CHILLWAVE_THREADS";

/// Run `f` on a pool capped by `CHILLWAVE_THREADS`, or on the global pool
/// when the variable is unset or unusable.
pub(crate) fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}
