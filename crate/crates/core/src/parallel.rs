//! Execution strategy for independent jobs (sweep points, spectrum points).
//!
//! With the `parallel` feature disabled every strategy runs sequentially;
//! results are always returned in input order.

/// How a batch of independent jobs is executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon's global pool.
    #[default]
    Parallel,
    /// A dedicated pool with this many threads.
    Threads(usize),
}

impl Execution {
    /// Strategy for a `--jobs N` style request: 1 is sequential, 0 means
    /// "use the global pool".
    pub fn from_jobs(jobs: usize) -> Self {
        match jobs {
            0 => Execution::Parallel,
            1 => Execution::Sequential,
            n => Execution::Threads(n),
        }
    }

    /// Whether jobs can actually run concurrently in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self != Execution::Sequential
    }

    /// Applies `f` to every item; the output order matches `items`.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            match self {
                Execution::Sequential => {}
                Execution::Parallel => return items.par_iter().map(&f).collect(),
                Execution::Threads(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                    Ok(pool) => return pool.install(|| items.par_iter().map(&f).collect()),
                    Err(e) => log::warn!("could not start a {n}-thread pool ({e}); running sequentially"),
                },
            }
        }
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..200).collect();
        let seq = Execution::Sequential.map(&items, |x| x * x);
        for exec in [Execution::Parallel, Execution::Threads(3)] {
            assert_eq!(exec.map(&items, |x| x * x), seq);
        }
    }

    #[test]
    fn jobs_mapping() {
        assert_eq!(Execution::from_jobs(1), Execution::Sequential);
        assert_eq!(Execution::from_jobs(0), Execution::Parallel);
        assert_eq!(Execution::from_jobs(4), Execution::Threads(4));
        assert!(!Execution::Sequential.is_parallel());
    }
}
