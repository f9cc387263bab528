//! Order-preserving map over independent tasks.
//!
//! With the `parallel` feature the work is spread over a rayon pool; without
//! it (or with [`Execution::Sequential`]) tasks run in order on the calling
//! thread. Results always come back in input order, and for fallible maps the
//! reported error is the one with the lowest input index, so output never
//! depends on scheduling.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run tasks concurrently.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

pub fn try_map<T, R, F>(exec: Execution, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    map(exec, items, f).into_iter().collect()
}

/// Run `op` on a dedicated pool of `threads` workers (0 = rayon's default).
/// Without the `parallel` feature this just calls `op`.
pub fn with_threads<R: Send>(threads: usize, op: impl FnOnce() -> R + Send) -> Result<R> {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::Error::invalid("threads", e.to_string()))?;
        Ok(pool.install(op))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(op())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn preserves_order() {
        let xs: Vec<u64> = (0..500).collect();
        let seq = map(Execution::Sequential, &xs, |x| x * x);
        let par = map(Execution::Parallel, &xs, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(seq[17], 289);
    }

    #[test]
    fn first_error_by_index_wins() {
        let xs: Vec<usize> = (0..200).collect();
        let r = try_map(Execution::Parallel, &xs, |&x| {
            if x % 50 == 7 {
                Err(Error::SingularSystem(format!("{x}")))
            } else {
                Ok(x)
            }
        });
        assert_eq!(r, Err(Error::SingularSystem("7".into())));
    }

    #[test]
    fn dedicated_pool() {
        let v = with_threads(2, || map(Execution::Parallel, &[1, 2, 3], |x| x + 1)).unwrap();
        assert_eq!(v, vec![2, 3, 4]);
    }
}
