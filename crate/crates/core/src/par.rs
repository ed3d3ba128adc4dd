//! Index-parallel map. Results are always returned in index order, so the
//! worker count never affects outputs.

/// Hardware threads visible to this process.
pub fn available_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// `(0..n).map(f)` on up to `workers` threads.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if workers <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("could not start {workers} workers ({e}); running sequentially");
            (0..n).map(f).collect()
        }
    }
}

/// `(0..n).map(f)`; built without the `parallel` feature, so `workers` is
/// ignored.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers > 1 {
        log::debug!("parallel feature disabled; {workers} workers requested, using 1");
    }
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_independent_of_workers() {
        let seq = map_indexed(1000, 1, |i| i * i);
        let par = map_indexed(1000, 4, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[999], 999 * 999);
    }

    #[test]
    fn empty_range() {
        assert!(map_indexed(0, 3, |i| i).is_empty());
    }
}
