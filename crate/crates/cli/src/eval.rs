//! Recall evaluation over a set of stored items.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqhn_core::inference::{fb_sweep, ff_sweep};
use sqhn_core::{
    energy, item_rng, recall, recall_mse, Corrupted, Corruption, Mhn, ModelState, Pattern,
};

use crate::error::Result;

const EVAL_SALT: u64 = 0x5eed_e7a1;
const TRAIN_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// The query an item is tested with. Identical for every evaluation point
/// and every presentation order.
pub fn probe(
    original: &Pattern,
    corruption: &Corruption,
    seed: u64,
    item: u64,
) -> Result<Corrupted> {
    Ok(corruption.apply(original, &mut item_rng(seed ^ EVAL_SALT, item))?)
}

/// RNG for training sample `sample` of `item`.
pub fn sample_rng(seed: u64, item: u64, sample: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ TRAIN_SALT);
    rng.set_stream((item << 32) | (sample & 0xffff_ffff));
    rng
}

/// Per-item recall MSE, over missing pixels when the query is masked.
pub fn sqhn_mses(
    state: &ModelState,
    items: &[(u64, &Pattern)],
    corruption: &Corruption,
    lambda: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    items
        .iter()
        .map(|&(id, p)| {
            let q = probe(p, corruption, seed, id)?;
            let out = recall(state, &q.pattern, q.missing.as_ref(), lambda)?;
            Ok(recall_mse(p, &out, q.missing.as_ref())?)
        })
        .collect()
}

pub fn mhn_mses(
    net: &Mhn,
    items: &[(u64, &Pattern)],
    corruption: &Corruption,
    seed: u64,
) -> Result<Vec<f64>> {
    items
        .iter()
        .map(|&(id, p)| {
            let q = probe(p, corruption, seed, id)?;
            let out = net.recall(&q.pattern, q.missing.as_ref())?;
            Ok(recall_mse(p, &out, q.missing.as_ref())?)
        })
        .collect()
}

/// Mean energy of bottom-up assignments and of bottom-up plus one top-down
/// sweep, on the corrupted queries.
pub fn mean_energies(
    state: &ModelState,
    items: &[(u64, &Pattern)],
    corruption: &Corruption,
    lambda: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    let (mut ff, mut fb) = (0.0, 0.0);
    for &(id, p) in items {
        let q = probe(p, corruption, seed, id)?;
        let sweep = ff_sweep(state, &q.pattern, q.missing.as_ref())?;
        let down = fb_sweep(state, &sweep, lambda);
        ff += energy(state, &sweep.acts.h_star, &q.pattern, q.missing.as_ref())?;
        fb += energy(state, &down.h_star, &q.pattern, q.missing.as_ref())?;
    }
    let n = items.len().max(1) as f64;
    Ok((ff / n, fb / n))
}
