//! Bounded worker pool whose results come back in input order.

use rayon::prelude::*;

pub const DEFAULT_WORKERS: usize = 4;

pub fn run_ordered<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    if workers <= 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..200).collect();
        let out = run_ordered(&items, 4, |i, &x| {
            std::thread::sleep(std::time::Duration::from_micros((200 - x) * 10));
            (i, x * 2)
        });
        assert!(out.iter().enumerate().all(|(i, &(j, y))| i == j && y == 2 * i as u64));
    }
}
