//! Trigram tag model.
//!
//! Transition probabilities interpolate three orders,
//!
//! ```text
//! P(t | t1, t2) = λ1·P1(t) + λ2·P2(t | t1) + λ3·P3(t | t2, t1)
//! ```
//!
//! where each order is itself a product over the tag's chain: the category
//! first, then one factor per feature slot in canonical order, each
//! conditioned on the elements before it. With raw counts the chain is an
//! identity and every order equals its joint relative frequency. With
//! backoff, each feature factor mixes the full-prefix estimate, the
//! feature-given-category estimate and an add-one feature unigram, and the
//! unigram category factor is add-one smoothed, so every schema-valid tag
//! gets positive probability whenever λ1 > 0. An order whose history was
//! never observed defers to the order below it.
//!
//! λ and the in-chain weights are fitted by deleted interpolation, holding
//! out one training sequence at a time. Sequences are padded with two
//! boundary pseudo-tags; there is no end-of-sequence factor.

mod chain;
mod interpolation;
mod io;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::morphology::{self, Lexicon, LexiconTrainingLog, RuleSet};
use crate::tagset::{Tag, TagCode, TagSchema, PUNCT};
use crate::text::{Sequence, Token};

use chain::{history, ChainTables, BOUNDARY, NA, UNSEEN};

/// Sentinel returned for impossible sequences.
pub const NEG_INFINITY: f64 = f64::NEG_INFINITY;

/// How factors inside a tag's chain are estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainSmoothing {
    /// Relative frequencies only.
    Raw,
    /// Feature factors interpolate (full prefix, category, feature unigram)
    /// with these weights.
    Backoff([f64; 3]),
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Use raw chain factors instead of fitted backoff.
    pub raw_chain: bool,
    /// Fixed (λ1, λ2, λ3) instead of deleted interpolation.
    pub lambda: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub sequences: usize,
    pub tokens: usize,
    pub lexicon: LexiconTrainingLog,
}

/// A trained tagger model. Immutable once built.
#[derive(Debug, Clone)]
pub struct Model {
    schema: TagSchema,
    rules: RuleSet,
    lexicon: Lexicon,
    /// Tags seen in training, sorted; history symbol of `tags[i]` is `i + 1`.
    tags: Vec<Tag>,
    syms: HashMap<TagCode, u32>,
    trigrams: BTreeMap<[u32; 3], u64>,
    lambda: [f64; 3],
    smoothing: ChainSmoothing,
    tables: ChainTables,
    tokens: u64,
}

fn check_weights(w: [f64; 3]) -> Result<[f64; 3]> {
    let sum: f64 = w.iter().sum();
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Format(format!(
            "interpolation weights must be non-negative and sum to 1, got {w:?}"
        )));
    }
    Ok(w)
}

impl Model {
    pub fn train(
        corpus: &[Sequence],
        rules: RuleSet,
        schema: TagSchema,
        options: &TrainOptions,
    ) -> Result<Self> {
        Self::train_with_report(corpus, rules, schema, options).map(|(m, _)| m)
    }

    pub fn train_with_report(
        corpus: &[Sequence],
        rules: RuleSet,
        schema: TagSchema,
        options: &TrainOptions,
    ) -> Result<(Self, TrainingReport)> {
        let mut distinct = BTreeSet::new();
        let mut token_count = 0;
        for (i, seq) in corpus.iter().enumerate() {
            let tags = seq.gold_tags.as_ref().ok_or(Error::MissingGoldTags(i))?;
            if tags.len() != seq.tokens.len() {
                return Err(Error::LengthMismatch {
                    tokens: seq.tokens.len(),
                    tags: tags.len(),
                });
            }
            for t in tags {
                schema.validate(t)?;
                distinct.insert(t.clone());
            }
            token_count += tags.len();
        }
        if token_count == 0 {
            return Err(Error::EmptyCorpus);
        }
        let tags: Vec<Tag> = distinct.into_iter().collect();
        let sym_of: HashMap<&Tag, u32> = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t, i as u32 + 1))
            .collect();

        let mut trigrams: BTreeMap<[u32; 3], u64> = BTreeMap::new();
        let mut coded: Vec<Vec<(u32, TagCode)>> = Vec::with_capacity(corpus.len());
        for seq in corpus {
            let mut row = Vec::with_capacity(seq.len());
            let (mut h2, mut h1) = (BOUNDARY, BOUNDARY);
            for t in seq.gold_tags.as_ref().expect("checked above") {
                let s = sym_of[t];
                *trigrams.entry([h2, h1, s]).or_insert(0) += 1;
                row.push((s, schema.encode(t)?));
                (h2, h1) = (h1, s);
            }
            coded.push(row);
        }

        let (lexicon, lex_log) = morphology::train_lexicon(corpus, &rules, &schema)?;

        let mut model = Self::assemble(
            schema,
            rules,
            lexicon,
            tags,
            trigrams,
            [1.0, 0.0, 0.0],
            ChainSmoothing::Raw,
        )?;
        let (lambda, kappa) = interpolation::fit(&coded, &model.tables);
        model.lambda = match options.lambda {
            Some(l) => check_weights(l)?,
            None => lambda,
        };
        if !options.raw_chain {
            model.smoothing = ChainSmoothing::Backoff(kappa);
        }
        let report = TrainingReport {
            sequences: corpus.len(),
            tokens: token_count,
            lexicon: lex_log,
        };
        Ok((model, report))
    }

    fn assemble(
        schema: TagSchema,
        rules: RuleSet,
        lexicon: Lexicon,
        tags: Vec<Tag>,
        trigrams: BTreeMap<[u32; 3], u64>,
        lambda: [f64; 3],
        smoothing: ChainSmoothing,
    ) -> Result<Self> {
        let codes: Vec<TagCode> = tags
            .iter()
            .map(|t| schema.encode(t))
            .collect::<Result<_>>()?;
        let syms = codes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i as u32 + 1))
            .collect();
        let mut tables = ChainTables::default();
        let mut tokens = 0;
        for (&[h2, h1, t], &n) in &trigrams {
            tables.add(h2, h1, &codes[t as usize - 1], n);
            tokens += n;
        }
        Ok(Self {
            schema,
            rules,
            lexicon,
            tags,
            syms,
            trigrams,
            lambda,
            smoothing,
            tables,
            tokens,
        })
    }

    /// Replaces the interpolation weights (λ1, λ2, λ3).
    pub fn with_lambda(mut self, lambda: [f64; 3]) -> Result<Self> {
        self.lambda = check_weights(lambda)?;
        Ok(self)
    }

    pub fn with_smoothing(mut self, smoothing: ChainSmoothing) -> Result<Self> {
        if let ChainSmoothing::Backoff(k) = smoothing {
            check_weights(k)?;
        }
        self.smoothing = smoothing;
        Ok(self)
    }

    pub fn schema(&self) -> &TagSchema {
        &self.schema
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// (λ1, λ2, λ3): unigram, bigram, trigram weights.
    pub fn lambda(&self) -> [f64; 3] {
        self.lambda
    }

    pub fn smoothing(&self) -> ChainSmoothing {
        self.smoothing
    }

    /// Tags observed in training, in canonical order.
    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn token_count(&self) -> u64 {
        self.tokens
    }

    fn sym(&self, tag: Option<&Tag>) -> Result<u32> {
        match tag {
            None => Ok(BOUNDARY),
            Some(t) => Ok(self.sym_of_code(&self.schema.encode(t)?)),
        }
    }

    pub(crate) fn sym_of_code(&self, code: &[u16]) -> u32 {
        self.syms.get(code).copied().unwrap_or(UNSEEN)
    }

    /// Raw count of `tag` following `(prev2, prev1)`; `None` is the
    /// boundary.
    pub fn trigram_count(&self, prev2: Option<&Tag>, prev1: Option<&Tag>, tag: &Tag) -> u64 {
        let (Ok(a), Ok(b), Ok(c)) = (self.sym(prev2), self.sym(prev1), self.sym(Some(tag))) else {
            return 0;
        };
        self.trigrams.get(&[a, b, c]).copied().unwrap_or(0)
    }

    fn slot_factor(&self, h: (u8, u32, u32), code: &[u16], j: usize) -> f64 {
        let num = self.tables.prefix(h, &code[..=j]) as f64;
        let den = self.tables.prefix(h, &code[..j]) as f64;
        match self.smoothing {
            // den > 0 because every earlier factor was positive
            ChainSmoothing::Raw => num / den,
            ChainSmoothing::Backoff(k) => {
                let cat = code[0];
                let uni = history(1, NA, NA);
                let arity = self.schema.slot_arity(cat as usize, j - 1) as f64;
                let unigram = (self.tables.slot(uni, cat, j, code[j]) as f64 + 1.0)
                    / (self.tables.prefix(uni, &code[..1]) as f64 + arity);
                let mut acc = k[2] * unigram;
                let mut weight = k[2];
                if den > 0.0 {
                    acc += k[0] * num / den;
                    weight += k[0];
                }
                let cat_count = self.tables.prefix(h, &code[..1]);
                if cat_count > 0 {
                    acc += k[1] * self.tables.slot(h, cat, j, code[j]) as f64 / cat_count as f64;
                    weight += k[1];
                }
                if weight > 0.0 {
                    acc / weight
                } else {
                    unigram
                }
            }
        }
    }

    /// Chain probability at one order; `None` when the history was never
    /// observed.
    fn order_prob(&self, order: u8, prev2: u32, prev1: u32, code: &[u16]) -> Option<f64> {
        let h = history(order, prev2, prev1);
        let ctx = self.tables.prefix(h, &[]);
        if ctx == 0 {
            return None;
        }
        let cat_count = self.tables.prefix(h, &code[..1]) as f64;
        let mut p = match self.smoothing {
            ChainSmoothing::Backoff(_) if order == 1 => {
                (cat_count + 1.0) / (ctx as f64 + self.schema.categories().len() as f64)
            }
            _ => cat_count / ctx as f64,
        };
        for j in 1..code.len() {
            if p == 0.0 {
                return Some(0.0);
            }
            p *= self.slot_factor(h, code, j);
        }
        Some(p)
    }

    fn orders(&self, code: &[u16], prev1: u32, prev2: u32) -> [f64; 3] {
        let p1 = self.order_prob(1, prev2, prev1, code).unwrap_or(0.0);
        let p2 = self.order_prob(2, prev2, prev1, code).unwrap_or(p1);
        let p3 = self.order_prob(3, prev2, prev1, code).unwrap_or(p2);
        [p1, p2, p3]
    }

    pub(crate) fn transition_coded(&self, code: &[u16], prev1: u32, prev2: u32) -> f64 {
        let [p1, p2, p3] = self.orders(code, prev1, prev2);
        self.lambda[0] * p1 + self.lambda[1] * p2 + self.lambda[2] * p3
    }

    /// Interpolated P(tag | prev2, prev1). `None` stands for the boundary.
    pub fn transition_prob(&self, tag: &Tag, prev1: Option<&Tag>, prev2: Option<&Tag>) -> Result<f64> {
        let code = self.schema.encode(tag)?;
        Ok(self.transition_coded(&code, self.sym(prev1)?, self.sym(prev2)?))
    }

    /// The trigram-order chain product alone, without order interpolation:
    /// P(category | h) · Π_k P(slot_k | category, slot_1..slot_{k-1}, h).
    pub fn feature_chain_prob(&self, tag: &Tag, prev1: Option<&Tag>, prev2: Option<&Tag>) -> Result<f64> {
        let code = self.schema.encode(tag)?;
        Ok(self.orders(&code, self.sym(prev1)?, self.sym(prev2)?)[2])
    }

    /// Lexical distribution for a token. Punctuation that is not in the
    /// lexicon gets the `punct` tag when the schema has it.
    pub fn emissions(&self, token: &Token) -> Vec<(Tag, f64)> {
        if self.lexicon.fullform(&token.norm).is_none()
            && token.is_punctuation()
            && self.schema.has_category(PUNCT)
        {
            return vec![(Tag::bare(PUNCT), 1.0)];
        }
        let dist = morphology::lexical_prob(&token.norm, &self.lexicon, &self.rules);
        if !dist.is_empty() {
            return dist;
        }
        let w = 1.0 / self.tags.len() as f64;
        self.tags.iter().map(|t| (t.clone(), w)).collect()
    }

    pub fn emission_prob(&self, token: &Token, tag: &Tag) -> f64 {
        self.emissions(token)
            .into_iter()
            .find(|(t, _)| t == tag)
            .map_or(0.0, |(_, p)| p)
    }

    /// log Π_i P(t_i | t_{i-2}, t_{i-1}) · P(w_i | t_i), or −∞ when a factor
    /// is zero.
    pub fn sequence_log_prob(&self, tokens: &[Token], tags: &[Tag]) -> Result<f64> {
        crate::decoder::sequence_log_prob(self, tokens, tags)
    }
}
