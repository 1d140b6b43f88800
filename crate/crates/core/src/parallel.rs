//! Element-loop parallelism controlled by `SBN_THREADS`.
//!
//! Unset: rayon's default pool. `0`: run on the calling thread. `n`: a
//! dedicated pool of `n` workers. Results always come back in index order,
//! so merging them sequentially keeps assembly bit-reproducible.

use once_cell::sync::Lazy;
use rayon::prelude::*;

enum Mode {
    Serial,
    Global,
    Pool(rayon::ThreadPool),
}

static MODE: Lazy<Mode> = Lazy::new(|| {
    let Ok(raw) = std::env::var("SBN_THREADS") else {
        return Mode::Global;
    };
    match raw.trim().parse::<usize>() {
        Ok(0) => Mode::Serial,
        Ok(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => Mode::Pool(pool),
            Err(e) => {
                log::warn!("SBN_THREADS={n}: {e}; falling back to the global pool");
                Mode::Global
            }
        },
        Err(_) => {
            log::warn!("ignoring unparsable SBN_THREADS={raw:?}");
            Mode::Global
        }
    }
});

/// `(0..n).map(f)` evaluated under the configured parallelism, in order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match &*MODE {
        Mode::Serial => (0..n).map(f).collect(),
        Mode::Global => (0..n).into_par_iter().map(f).collect(),
        Mode::Pool(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
    }
}

/// Same as [`map_indexed`] over a slice.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_indexed(items.len(), |i| f(&items[i]))
}
