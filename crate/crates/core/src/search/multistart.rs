use rayon::prelude::*;

use super::config::SearchConfig;

pub(crate) struct Attempt<T> {
    pub value: T,
    pub residual: f64,
    pub success: bool,
}

pub(crate) struct Summary<T> {
    /// Lowest-index successful attempt, or the attempt with the smallest
    /// residual when none succeeded.
    pub best: Attempt<T>,
    pub used: usize,
}

/// Runs attempts `0..count` in chunks of `config.parallelism`, stopping after
/// the first chunk that contains a success. The chosen attempt depends only
/// on the attempt indices, never on completion order.
pub(crate) fn run<T, F>(config: &SearchConfig, count: usize, attempt: F) -> Summary<T>
where
    T: Send,
    F: Fn(usize) -> Attempt<T> + Sync,
{
    let chunk = config.parallelism.max(1);
    let mut best: Option<(usize, Attempt<T>)> = None;
    let mut start = 0;
    while start < count {
        let end = (start + chunk).min(count);
        let results: Vec<Attempt<T>> = if end - start == 1 {
            vec![attempt(start)]
        } else {
            (start..end).into_par_iter().map(&attempt).collect()
        };
        for (offset, a) in results.into_iter().enumerate() {
            let idx = start + offset;
            if a.success {
                return Summary { best: a, used: idx + 1 };
            }
            let better = match &best {
                None => true,
                Some((_, b)) => a.residual < b.residual,
            };
            if better {
                best = Some((idx, a));
            }
        }
        start = end;
    }
    let (_, best) = best.expect("at least one attempt");
    Summary { best, used: count }
}
