//! Independent-trial execution: data-parallel with rayon when the `parallel`
//! feature is on, a plain loop otherwise. Results always come back in trial
//! order, so both paths produce identical output.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    /// Runs sequentially when built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    /// What `self` actually does in this build.
    pub fn effective(self) -> Execution {
        if cfg!(feature = "parallel") {
            self
        } else {
            Execution::Sequential
        }
    }
}

/// Evaluates `f(0..n)` and collects in index order, stopping at the first error
/// in the sequential path; the parallel path reports the lowest-index error.
pub fn map_trials<T, E, F>(exec: Execution, n: u64, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync + Send,
{
    match exec.effective() {
        Execution::Sequential => (0..n).map(f).collect(),
        Execution::Parallel => parallel(n, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel<T, E, F>(n: u64, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync + Send,
{
    use rayon::prelude::*;
    let out: Vec<Result<T, E>> = (0..n as usize).into_par_iter().with_min_len(16).map(|i| f(i as u64)).collect();
    out.into_iter().collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel<T, E, F>(n: u64, f: F) -> Result<Vec<T>, E>
where
    F: Fn(u64) -> Result<T, E>,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved() {
        let seq: Vec<u64> = map_trials::<_, (), _>(Execution::Sequential, 1000, |i| Ok(i * i)).unwrap();
        let par: Vec<u64> = map_trials::<_, (), _>(Execution::Parallel, 1000, |i| Ok(i * i)).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq[31], 961);
    }

    #[test]
    fn lowest_error_wins() {
        let f = |i: u64| if i % 100 == 37 { Err(i) } else { Ok(i) };
        assert_eq!(map_trials(Execution::Parallel, 500, f), Err(37));
        assert_eq!(map_trials(Execution::Sequential, 500, f), Err(37));
    }
}
