//! One module per subcommand. Each `cmd_*` writes its files through an
//! [`Output`](crate::Output) and returns the typed summary it serialised.

pub mod coerm;
pub mod grouped;
pub mod mixture;
pub mod online;
pub mod phase;
pub mod wstar;

use mixopt_core::{Exec, MixtureWeights, RngStream};

use crate::Result;

/// Runs `f` for every seed on the worker pool, keeping seed order.
pub(crate) fn for_seeds<T, F>(exec: Exec, seeds: &[u64], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    exec.map(seeds, |&s| f(s)).into_iter().collect()
}

/// `count` Dirichlet(1) mixture weights from a tagged stream.
pub(crate) fn dirichlet_batch(n: usize, count: usize, seed: u64, tag: u64) -> Vec<MixtureWeights> {
    let mut rng = RngStream::new(seed, tag).rng();
    (0..count)
        .map(|_| mixopt_core::primitives::sample_dirichlet(n, &mut rng))
        .collect()
}
