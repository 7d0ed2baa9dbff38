//! Deterministic parallel map over a fixed index range.
//!
//! Work items are claimed from a shared counter and results are placed by
//! index, so the output never depends on the worker count or on scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

/// Computes `f(0..n)` on up to `workers` threads and returns the results in
/// index order. The first error (by arrival) aborts the map.
pub fn parallel_map<T, E, F>(workers: usize, n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync,
{
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (f, next) = (&f, &next);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n || tx.send((i, f(i))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
        for (i, result) in rx {
            match result {
                Ok(v) => slots[i] = Some(v),
                Err(e) => {
                    next.store(n, Ordering::Relaxed);
                    return Err(e);
                }
            }
        }
        Ok(slots.into_iter().map(|s| s.expect("every index produced")).collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_workers() {
        let f = |i: usize| Ok::<_, ()>(i * i);
        let one = parallel_map(1, 50, f).unwrap();
        for w in [2, 3, 8, 64] {
            assert_eq!(parallel_map(w, 50, f).unwrap(), one);
        }
        assert!(parallel_map(4, 0, f).unwrap().is_empty());
    }

    #[test]
    fn errors_propagate() {
        let r = parallel_map(4, 20, |i| if i == 7 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(7));
    }
}
