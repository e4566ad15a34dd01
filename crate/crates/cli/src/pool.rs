use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

/// Worker count from `--jobs`, falling back to the available parallelism.
pub fn resolve_jobs(requested: Option<usize>) -> usize {
    requested
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

/// Runs `f` over `items` on up to `jobs` scoped workers. Workers pull the next
/// index from a shared counter and send `(index, result)` back over a channel;
/// results are returned in item order regardless of completion order.
pub fn run_ordered<T, R, F>(jobs: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let workers = jobs.clamp(1, items.len().max(1));
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    thread::scope(|s| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, f) = (&next, &f);
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() || tx.send((i, f(i, &items[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
        for (i, r) in rx {
            slots[i] = Some(r);
        }
        slots.into_iter().map(|r| r.expect("every item produces a result")).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    #[test]
    fn order_follows_items_not_completion() {
        let items: Vec<u64> = (0..12).collect();
        let out = run_ordered(4, &items, |i, &v| {
            thread::sleep(Duration::from_millis(12 - v));
            (i, v * v)
        });
        assert_eq!(out, items.iter().map(|&v| (v as usize, v * v)).collect::<Vec<_>>());
    }

    #[test]
    fn handles_empty_and_oversized_pools() {
        assert!(run_ordered(3, &[] as &[u8], |_, _| 0).is_empty());
        assert_eq!(run_ordered(64, &[1, 2], |_, v| v + 1), vec![2, 3]);
        assert_eq!(resolve_jobs(Some(0)), 1);
    }
}
