//! Execution policy for the data-parallel loops (per-element assembly and
//! estimator evaluation, sparse matrix-vector products).
//!
//! Every parallel map collects into a `Vec` in index order and all reductions
//! are performed sequentially afterwards, so both policies give bit-identical
//! results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise runs
    /// sequentially.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Applies `f(i, &mut out[i])` to every slot of `out`.
    pub fn for_each_mut<T, F>(self, out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            out.par_iter_mut().enumerate().for_each(|(i, v)| f(i, v));
            return;
        }
        out.iter_mut().enumerate().for_each(|(i, v)| f(i, v));
    }
}
