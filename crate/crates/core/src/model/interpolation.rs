//! Deleted interpolation with one training sequence held out at a time.
//!
//! For every token, each candidate estimator is recomputed from the counts
//! with the token's whole sequence removed; the token votes for the
//! estimator with the highest held-out ratio (a zero denominator counts as
//! ratio 0). Ties go to the more general estimator. The weights are the
//! normalised vote totals, uniform if nobody voted.

use super::chain::{history, ChainTables, BOUNDARY};
use crate::tagset::TagCode;

fn held_out(total_num: u64, seq_num: u64, total_den: u64, seq_den: u64) -> f64 {
    let den = total_den - seq_den;
    if den == 0 {
        0.0
    } else {
        (total_num - seq_num) as f64 / den as f64
    }
}

/// Index of the largest value; ties go to the lowest index.
fn vote(ratios: [f64; 3]) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if ratios[i] > ratios[best] {
            best = i;
        }
    }
    best
}

fn normalise(votes: [u64; 3]) -> [f64; 3] {
    let total: u64 = votes.iter().sum();
    if total == 0 {
        return [1.0 / 3.0; 3];
    }
    votes.map(|v| v as f64 / total as f64)
}

/// Fits `(λ1, λ2, λ3)` over orders and `(κ1, κ2, κ3)` over the in-chain
/// levels (full prefix, category, feature unigram) from training sequences
/// given as `(history symbol, code)` per token. `total` holds the counts of
/// the whole corpus.
pub(crate) fn fit(
    sequences: &[Vec<(u32, TagCode)>],
    total: &ChainTables,
) -> ([f64; 3], [f64; 3]) {
    let mut order_votes = [0u64; 3];
    let mut level_votes = [0u64; 3];
    for seq in sequences {
        let mut own = ChainTables::default();
        let (mut h2, mut h1) = (BOUNDARY, BOUNDARY);
        for (sym, code) in seq {
            own.add(h2, h1, code, 1);
            (h2, h1) = (h1, *sym);
        }

        let (mut h2, mut h1) = (BOUNDARY, BOUNDARY);
        for (sym, code) in seq {
            let ratio = |order: u8| {
                let h = history(order, h2, h1);
                held_out(
                    total.prefix(h, code),
                    own.prefix(h, code),
                    total.prefix(h, &[]),
                    own.prefix(h, &[]),
                )
            };
            order_votes[vote([ratio(1), ratio(2), ratio(3)])] += 1;

            let h = history(3, h2, h1);
            let uni = history(1, h2, h1);
            let cat = code[0];
            for (j, &v) in code.iter().enumerate().skip(1) {
                let levels = [
                    held_out(
                        total.prefix(h, &code[..=j]),
                        own.prefix(h, &code[..=j]),
                        total.prefix(h, &code[..j]),
                        own.prefix(h, &code[..j]),
                    ),
                    held_out(
                        total.slot(h, cat, j, v),
                        own.slot(h, cat, j, v),
                        total.prefix(h, &code[..1]),
                        own.prefix(h, &code[..1]),
                    ),
                    held_out(
                        total.slot(uni, cat, j, v),
                        own.slot(uni, cat, j, v),
                        total.prefix(uni, &code[..1]),
                        own.prefix(uni, &code[..1]),
                    ),
                ];
                // the feature unigram is the most general level
                level_votes[2 - vote([levels[2], levels[1], levels[0]])] += 1;
            }
            (h2, h1) = (h1, *sym);
        }
    }
    (normalise(order_votes), normalise(level_votes))
}
