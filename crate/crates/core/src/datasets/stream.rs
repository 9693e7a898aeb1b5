//! Single-pass presentation orders over one or more batches.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PatternBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamOrder {
    /// Global shuffle.
    #[default]
    Iid,
    /// Blocks by ascending label, shuffled within each block.
    Oci,
    /// Blocks by batch (domain) in the given order, shuffled within each block.
    Odi,
}

/// One position of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamItem {
    /// Index over all batches concatenated; stable across orderings.
    pub item: u64,
    pub batch: usize,
    pub index: usize,
    pub label: Option<u32>,
}

pub fn make_stream<R: Rng + ?Sized>(
    batches: &[PatternBatch],
    order: StreamOrder,
    rng: &mut R,
) -> Vec<StreamItem> {
    let mut items = Vec::new();
    let mut next = 0u64;
    for (b, batch) in batches.iter().enumerate() {
        for index in 0..batch.len() {
            items.push(StreamItem {
                item: next,
                batch: b,
                index,
                label: batch.label(index),
            });
            next += 1;
        }
    }
    match order {
        StreamOrder::Iid => items.shuffle(rng),
        StreamOrder::Oci => {
            items.shuffle(rng);
            items.sort_by_key(|it| it.label.unwrap_or(0));
        }
        StreamOrder::Odi => {
            items.shuffle(rng);
            items.sort_by_key(|it| it.batch);
        }
    }
    items
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::InputShape;
    use rand::SeedableRng;

    fn batch(labels: Vec<u32>) -> PatternBatch {
        let n = labels.len();
        PatternBatch::new(InputShape::new(1, 1, 1), vec![0.5; n], Some(labels)).unwrap()
    }

    #[test]
    fn oci_blocks_by_label() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let s = make_stream(&[batch(vec![1, 0, 1, 0, 1, 0])], StreamOrder::Oci, &mut rng);
        let labels: Vec<u32> = s.iter().map(|i| i.label.unwrap()).collect();
        assert_eq!(labels, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn odi_blocks_by_batch_and_covers_all() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let bs = [batch(vec![0; 3]), batch(vec![0; 2]), batch(vec![0; 4])];
        let s = make_stream(&bs, StreamOrder::Odi, &mut rng);
        let b: Vec<usize> = s.iter().map(|i| i.batch).collect();
        assert_eq!(b, vec![0, 0, 0, 1, 1, 2, 2, 2, 2]);
        let mut ids: Vec<u64> = s.iter().map(|i| i.item).collect();
        ids.sort();
        assert_eq!(ids, (0..9).collect::<Vec<_>>());
    }
}
