//! Count tables for the chain factorization of tag probabilities.
//!
//! A tag code `[category, slot_1, .., slot_m]` is scored one element at a
//! time, each conditioned on the elements before it and on the history.
//! These tables hold, for each n-gram order and history, the counts of
//! every code prefix and the category/slot/value marginals needed for
//! backing off within the chain.

use std::collections::HashMap;

/// History symbol of the sequence-initial pseudo-tag.
pub(crate) const BOUNDARY: u32 = 0;
/// Placeholder for history positions an order does not condition on.
pub(crate) const NA: u32 = u32::MAX - 1;
/// History symbol of a tag never seen in training; it has no counts.
pub(crate) const UNSEEN: u32 = u32::MAX;

type HistKey = (u8, u32, u32);

#[derive(Debug, Clone, Default)]
pub(crate) struct ChainTables {
    prefix: HashMap<HistKey, HashMap<Vec<u16>, u64>>,
    slots: HashMap<HistKey, HashMap<(u16, u16, u16), u64>>,
}

/// The history key seen by an order: trigram `(prev2, prev1)`, bigram
/// `prev1`, unigram nothing.
pub(crate) fn history(order: u8, prev2: u32, prev1: u32) -> HistKey {
    match order {
        3 => (3, prev2, prev1),
        2 => (2, NA, prev1),
        _ => (1, NA, NA),
    }
}

impl ChainTables {
    /// Records `n` occurrences of tag `code` after `(prev2, prev1)` at all
    /// three orders.
    pub fn add(&mut self, prev2: u32, prev1: u32, code: &[u16], n: u64) {
        for order in 1..=3 {
            let h = history(order, prev2, prev1);
            let table = self.prefix.entry(h).or_default();
            for len in 0..=code.len() {
                *table.entry(code[..len].to_vec()).or_insert(0) += n;
            }
            let slots = self.slots.entry(h).or_default();
            for (j, &v) in code.iter().enumerate().skip(1) {
                *slots.entry((code[0], j as u16, v)).or_insert(0) += n;
            }
        }
    }

    /// Count of tags starting with `prefix` after history `h`; the empty
    /// prefix gives the history count.
    pub fn prefix(&self, h: HistKey, prefix: &[u16]) -> u64 {
        self.prefix
            .get(&h)
            .and_then(|t| t.get(prefix))
            .copied()
            .unwrap_or(0)
    }

    /// Count of tags of `category` with `value` in `slot` after `h`.
    pub fn slot(&self, h: HistKey, category: u16, slot: usize, value: u16) -> u64 {
        self.slots
            .get(&h)
            .and_then(|t| t.get(&(category, slot as u16, value)))
            .copied()
            .unwrap_or(0)
    }
}
