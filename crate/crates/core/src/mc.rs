//! Deterministic parallel Monte Carlo driver.
//!
//! Work is sharded statically over path indices and results are returned in
//! index order, so outputs are identical for any worker count. Each path
//! derives its own stream from (master_seed, base_stream_id + index); there
//! is no shared mutable state.

/// Maps `job` over indices 0..m with `workers` threads, preserving index
/// order in the output.
pub fn par_map<T, F>(workers: usize, m: u64, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    let workers = workers.max(1);
    if workers == 1 || m <= 1 {
        return (0..m).map(job).collect();
    }
    let m_us = m as usize;
    let chunk = m_us.div_ceil(workers);
    let mut out: Vec<Option<T>> = Vec::with_capacity(m_us);
    out.resize_with(m_us, || None);
    std::thread::scope(|scope| {
        for (w, slot) in out.chunks_mut(chunk).enumerate() {
            let job = &job;
            let start = (w * chunk) as u64;
            scope.spawn(move || {
                for (off, cell) in slot.iter_mut().enumerate() {
                    *cell = Some(job(start + off as u64));
                }
            });
        }
    });
    out.into_iter()
        .map(|c| c.expect("worker filled slot"))
        .collect()
}

/// Default worker count: the `AZEMA_WORKERS` environment variable if set,
/// otherwise the available parallelism.
pub fn default_workers() -> usize {
    if let Ok(v) = std::env::var("AZEMA_WORKERS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_is_worker_count_independent() {
        let job = |i: u64| i * i + 1;
        let serial = par_map(1, 1000, job);
        for workers in [2, 3, 8, 17] {
            assert_eq!(par_map(workers, 1000, job), serial);
        }
    }

    #[test]
    fn handles_empty_and_tiny_inputs() {
        assert!(par_map(4, 0, |i| i).is_empty());
        assert_eq!(par_map(4, 1, |i| i), vec![0]);
        assert_eq!(par_map(16, 3, |i| i), vec![0, 1, 2]);
    }
}
