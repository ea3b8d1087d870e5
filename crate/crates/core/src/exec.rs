//! Execution policy for the data-parallel inner loops.
//!
//! Every fan-out in the crate goes through [`Execution::map`], which keeps
//! output order identical to input order regardless of policy. Building
//! without the `parallel` feature turns [`Execution::Parallel`] into a
//! sequential loop, so results never depend on the feature set.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this policy will actually use worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Order-preserving map over a slice.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving map over an index range.
    pub fn map_range<R, F>(self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_policies_preserve_order() {
        let xs: Vec<u64> = (0..10_000).collect();
        let seq = Execution::Sequential.map(&xs, |x| x * 3 + 1);
        let par = Execution::Parallel.map(&xs, |x| x * 3 + 1);
        assert_eq!(seq, par);
        assert_eq!(
            Execution::Parallel.map_range(100, |i| i * i),
            Execution::Sequential.map_range(100, |i| i * i)
        );
    }
}
