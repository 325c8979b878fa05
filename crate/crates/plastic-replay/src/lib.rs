//! IO, configuration, benchmarks and command implementations on top of
//! `plastic-replay-core`.

pub mod bench;
pub mod config;
pub mod output;
pub mod summary;
pub mod train;
pub mod verify;

pub use plastic_replay_core as core;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "PLASTIC_REPLAY_THREADS";

/// Installs the global rayon pool, honoring `PLASTIC_REPLAY_THREADS`.
/// Later calls are no-ops.
pub fn init_thread_pool() {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        builder = builder.num_threads(n.max(1));
    }
    let _ = builder.build_global();
}
