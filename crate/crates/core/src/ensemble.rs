//! Parallel evaluation of independent seeded tasks.

use rayon::prelude::*;

use crate::rng::{task_rng, LabRng};

/// Run `count` tasks, task `i` with its own stream `task_rng(seed, i)`, and
/// return the results in task order. Output does not depend on the thread
/// count.
pub fn ensemble<T, F>(seed: u64, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut LabRng) -> T + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i as u64);
            f(i, &mut rng)
        })
        .collect()
}
