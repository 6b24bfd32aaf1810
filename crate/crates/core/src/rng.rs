//! Reproducible random streams and the batch runner.
//!
//! Every batch of replications draws from its own ChaCha8 stream, selected
//! by `(seed, tag, batch)`. Batches are merged in index order, so results do
//! not depend on how rayon schedules them or on the pool size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type WalkRng = ChaCha8Rng;

/// Environment variable that caps the worker count.
pub const THREADS_ENV: &str = "WALKTAIL_THREADS";

/// Number of batches used for batch-means standard errors.
pub const DEFAULT_BATCHES: usize = 100;

/// Stream for batch `batch` of estimator `tag` under `seed`.
pub fn stream(seed: u64, tag: u32, batch: u32) -> WalkRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << 32) | batch as u64);
    rng
}

/// Worker count from `WALKTAIL_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `f` inside a pool sized by `WALKTAIL_THREADS` (or rayon's default).
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads_from_env() {
        builder = builder.num_threads(n);
    }
    match builder.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Splits `reps` into `batches` nearly equal parts, larger ones first.
pub fn batch_sizes(reps: u64, batches: usize) -> Vec<u64> {
    let b = batches.max(1) as u64;
    (0..b)
        .map(|i| reps / b + u64::from(i < reps % b))
        .collect()
}

/// Runs `work(rng, batch_reps)` for each batch on its own stream and
/// returns the per-batch results in batch order.
pub fn run_batches<T, F>(seed: u64, tag: u32, reps: u64, batches: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut WalkRng, u64) -> T + Sync + Send,
{
    let sizes = batch_sizes(reps, batches);
    with_pool(|| {
        sizes
            .par_iter()
            .enumerate()
            .map(|(i, &n)| {
                let mut rng = stream(seed, tag, i as u32);
                work(&mut rng, n)
            })
            .collect()
    })
}
