//! Held-out tagging accuracy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decoder::{tag_sequence_with, DecodeOptions};
use crate::error::{Error, Result};
use crate::model::{Model, TrainOptions};
use crate::morphology::RuleSet;
use crate::tagset::TagSchema;
use crate::text::Sequence;

pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
}

impl Accuracy {
    /// Fraction correct; `None` when nothing was tagged.
    pub fn ratio(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }

    fn add(&mut self, other: Accuracy) {
        self.correct += other.correct;
        self.total += other.total;
    }
}

/// Tags every sequence of `corpus` and compares with its gold tags.
pub fn accuracy(model: &Model, corpus: &[Sequence], options: &DecodeOptions) -> Result<Accuracy> {
    let mut acc = Accuracy {
        correct: 0,
        total: 0,
    };
    for (i, seq) in corpus.iter().enumerate() {
        let gold = seq.gold_tags.as_ref().ok_or(Error::MissingGoldTags(i))?;
        let predicted = tag_sequence_with(model, &seq.tokens, options)?;
        acc.correct += predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
        acc.total += gold.len();
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    /// Folds actually used: `min(requested, sequences)`.
    pub folds: usize,
    pub accuracy: Accuracy,
}

/// k-fold cross-validation over sequences. Sequences are shuffled with a
/// seeded generator and dealt round-robin into folds, so the result depends
/// only on the inputs and `seed`. Fewer than two sequences give zero folds.
pub fn cross_validate(
    corpus: &[Sequence],
    rules: &RuleSet,
    schema: &TagSchema,
    options: &TrainOptions,
    folds: usize,
    seed: u64,
) -> Result<CrossValidation> {
    let folds = folds.min(corpus.len());
    let mut total = Accuracy {
        correct: 0,
        total: 0,
    };
    if folds < 2 {
        return Ok(CrossValidation {
            folds: 0,
            accuracy: total,
        });
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    for fold in 0..folds {
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for (k, &idx) in order.iter().enumerate() {
            if k % folds == fold {
                test.push(corpus[idx].clone());
            } else {
                train.push(corpus[idx].clone());
            }
        }
        let model = match Model::train(&train, rules.clone(), schema.clone(), options) {
            // a fold whose training part has no tokens cannot be scored
            Err(Error::EmptyCorpus) => continue,
            other => other?,
        };
        total.add(accuracy(&model, &test, &DecodeOptions::default())?);
    }
    Ok(CrossValidation {
        folds,
        accuracy: total,
    })
}
