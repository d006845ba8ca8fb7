use std::sync::OnceLock;

/// Shared rayon pool for internal data parallelism.
///
/// `CHHS_THREADS` caps the pool size; unset or 0 means all cores. Parallelism
/// only ever splits work across independent transform lanes or disjoint array
/// chunks, so results are bit-identical for any thread count.
pub(crate) fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let n = std::env::var("CHHS_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("failed to build thread pool")
    })
}
