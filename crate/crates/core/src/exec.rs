//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature disabled every helper runs on the calling
//! thread. Results are always returned in input order, so callers that
//! reduce them in a fixed order get identical output either way.

/// How independent work items (restarts, sample chunks, candidates) run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// True if this build actually runs work items concurrently.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `0..n`, returning results in index order.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_in_order() {
        let f = |i: usize| (i as f64).sqrt();
        let a = Execution::Parallel.map_indexed(1000, f);
        let b = Execution::Sequential.map_indexed(1000, f);
        assert_eq!(a, b);
    }
}
