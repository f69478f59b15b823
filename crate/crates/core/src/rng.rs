//! Reproducible RNG streams and replica-level parallelism.
//!
//! Every Monte Carlo driver derives one independent ChaCha stream per
//! replica from `(base_seed, replica_index)`, so results are functions of
//! the base seed and the replica count alone, never of thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for a single replica: same key for the whole experiment, one
/// counter-based stream per replica index.
pub fn replica_rng(base_seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(replica);
    rng
}

/// Maps `f` over replica indices `0..replicas`, splitting the index range
/// into contiguous chunks across `threads` workers. Output order is by
/// replica index regardless of the worker count.
pub fn par_map_replicas<T, F>(replicas: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(replicas.max(1));
    if threads <= 1 || replicas <= 1 {
        return (0..replicas).map(f).collect();
    }
    let chunk = replicas.div_ceil(threads);
    let mut chunks: Vec<Vec<T>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let f = &f;
                let lo = w * chunk;
                let hi = ((w + 1) * chunk).min(replicas);
                scope.spawn(move || (lo..hi).map(f).collect::<Vec<T>>())
            })
            .collect();
        for h in handles {
            chunks.push(h.join().expect("replica worker panicked"));
        }
    });
    let mut out = Vec::with_capacity(replicas);
    for c in chunks {
        out.extend(c);
    }
    out
}

/// Default worker count for replica-parallel drivers.
pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
