//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature (on by default) work is spread over a rayon
//! pool sized by `jobs`; without it, or with `jobs == 1`, items run in
//! order on the calling thread. Results always come back in input order,
//! so callers see identical output either way.

/// Number of worker threads to use when the caller did not ask for a
/// specific count.
pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn is_parallel_build() -> bool {
    cfg!(feature = "parallel")
}

/// Maps `f` over `items` with up to `jobs` threads (`0` means the machine
/// default).
pub fn map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        let jobs = if jobs == 0 { default_jobs() } else { jobs };
        if jobs > 1 && items.len() > 1 {
            use rayon::prelude::*;
            match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                Ok(pool) => return pool.install(|| items.par_iter().map(&f).collect()),
                Err(_) => return items.par_iter().map(&f).collect(),
            }
        }
    }
    let _ = jobs;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order_for_any_job_count() {
        let items: Vec<u64> = (0..500).collect();
        let serial = map(&items, 1, |x| x * x);
        for jobs in [0, 2, 8] {
            assert_eq!(map(&items, jobs, |x| x * x), serial);
        }
        assert!(map(&Vec::<u64>::new(), 4, |x| *x).is_empty());
    }
}
