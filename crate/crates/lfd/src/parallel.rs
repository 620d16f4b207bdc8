//! Worker-pool sizing.

/// Environment variable capping the number of worker threads; `0` or unset
/// means one per core.
pub const THREADS_ENV: &str = "TABLETOP_LFD_THREADS";

pub fn configured_threads() -> Result<usize, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| format!("{THREADS_ENV} must be a non-negative integer, got {v:?}")),
        Err(_) => Ok(0),
    }
}

/// Installs the global rayon pool once; later calls are no-ops.
pub fn init_thread_pool() -> Result<(), String> {
    let n = configured_threads()?;
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
