//! Morphological analysis: prefix–stem–suffix segmentation and lexical
//! probabilities.
//!
//! Inflected words are stored by stem. A stem entry records the categories
//! the stem was seen with and the paradigm classes of the suffixes it
//! combined with; the suffix table records P(tag | suffix). For a word
//! `w = prefix + stem + suffix` the score of a tag is
//!
//! ```text
//! score(t) = P(category(t) | stem) * P(t | suffix)
//! ```
//!
//! counted only when the suffix's paradigm class is one of the stem's and
//! the tag is licensed by both. Scores of all valid analyses are summed per
//! tag and renormalized; the result stands in for the emission term
//! P(w | t) of the tagger (P(t|w) and P(w|t) are treated as interchangeable
//! up to normalization, which is an approximation).

pub mod lexicon;
pub mod rules;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::Result;
use crate::tagset::{Tag, TagSchema, PUNCT};
use crate::text::Sequence;

pub use lexicon::{format_prob, round_prob, EntryKind, Lexicon, LexiconEntry};
pub use rules::{PrefixRule, RuleSet, Suffix, SuffixMatch, SuffixRule};

/// How an analysis was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisSource {
    Fullform,
    KnownStem,
    /// Stem not in the lexicon; tags come from the suffix alone.
    UnknownStem,
    /// Nothing matched; tags come from the open-class prior.
    Fallback,
}

/// One admissible segmentation with its (unnormalized) tag scores.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphAnalysis {
    pub prefix: String,
    pub stem: String,
    pub suffix: String,
    pub tag_probs: Vec<(Tag, f64)>,
    pub source: AnalysisSource,
}

/// Whether `tag` may be produced by combining `stem` with `suffix`.
pub fn validate(stem: &LexiconEntry, suffix: &Suffix, tag: &Tag) -> bool {
    stem.kind == EntryKind::Stem
        && stem.paradigm_classes.contains(&suffix.class)
        && suffix.tags.binary_search(tag).is_ok()
        && stem.has_category(&tag.category)
}

/// P(tag | suffix): trained relative frequencies, or uniform over the
/// rule's tags for a suffix never seen in training.
pub fn suffix_distribution(suffix: &Suffix, lexicon: &Lexicon) -> Vec<(Tag, f64)> {
    match lexicon.suffix_probs(&suffix.literal, &suffix.class) {
        Some(dist) if !dist.is_empty() => dist
            .iter()
            .filter(|(t, _)| suffix.tags.binary_search(t).is_ok())
            .cloned()
            .collect(),
        _ => {
            let w = 1.0 / suffix.tags.len() as f64;
            suffix.tags.iter().map(|t| (t.clone(), w)).collect()
        }
    }
}

fn known_analysis(
    prefix: &str,
    stem_form: &str,
    suffix: &Suffix,
    lexicon: &Lexicon,
) -> Option<MorphAnalysis> {
    let entry = lexicon.stem(stem_form)?;
    let tag_probs: Vec<(Tag, f64)> = suffix_distribution(suffix, lexicon)
        .into_iter()
        .filter(|(t, _)| validate(entry, suffix, t))
        .map(|(t, p)| {
            let score = entry.category_prob(&t.category) * p;
            (t, score)
        })
        .filter(|(_, s)| *s > 0.0)
        .collect();
    (!tag_probs.is_empty()).then(|| MorphAnalysis {
        prefix: prefix.to_string(),
        stem: stem_form.to_string(),
        suffix: suffix.literal.clone(),
        tag_probs,
        source: AnalysisSource::KnownStem,
    })
}

/// All admissible segmentations of a normalized word.
///
/// Full forms yield exactly one analysis. Otherwise every split into an
/// optional strippable prefix, a lexicon stem and a rule suffix (or the
/// empty suffix) that passes [`validate`] is returned. When no such split
/// exists, suffix-only analyses with an unknown stem are returned, and if
/// no suffix matches either, a single fallback analysis carrying the
/// unknown-word prior. Ordered by descending suffix length, then
/// descending stem length.
pub fn segment(word: &str, lexicon: &Lexicon, rules: &RuleSet) -> Vec<MorphAnalysis> {
    if let Some(entry) = lexicon.fullform(word) {
        return vec![MorphAnalysis {
            prefix: String::new(),
            stem: word.to_string(),
            suffix: String::new(),
            tag_probs: entry.tag_probs.clone(),
            source: AnalysisSource::Fullform,
        }];
    }

    let mut splits: Vec<(&str, &str)> = vec![("", word)];
    for len in rules.strippable_prefixes(word) {
        splits.push(word.split_at(len));
    }

    let mut known = Vec::new();
    for &(prefix, rest) in &splits {
        let matches = rules.suffix_matches(rest);
        let has_empty_rule = matches.iter().any(|m| m.start == rest.len());
        for m in &matches {
            let stem = &rest[..m.start];
            if stem.is_empty() {
                continue;
            }
            if let Some(a) = known_analysis(prefix, stem, rules.suffix(m.suffix), lexicon) {
                known.push(a);
            }
        }
        // the bare stem with no ending contributes its own tags
        if !has_empty_rule && prefix.is_empty() {
            if let Some(entry) = lexicon.stem(rest) {
                if !entry.tag_probs.is_empty() {
                    known.push(MorphAnalysis {
                        prefix: String::new(),
                        stem: rest.to_string(),
                        suffix: String::new(),
                        tag_probs: entry.tag_probs.clone(),
                        source: AnalysisSource::KnownStem,
                    });
                }
            }
        }
    }
    if !known.is_empty() {
        sort_analyses(&mut known);
        return known;
    }

    let mut unknown: Vec<MorphAnalysis> = rules
        .suffix_matches(word)
        .into_iter()
        .filter(|m| m.start > 0)
        .map(|m| {
            let suffix = rules.suffix(m.suffix);
            MorphAnalysis {
                prefix: String::new(),
                stem: word[..m.start].to_string(),
                suffix: suffix.literal.clone(),
                tag_probs: suffix_distribution(suffix, lexicon),
                source: AnalysisSource::UnknownStem,
            }
        })
        .filter(|a| !a.tag_probs.is_empty())
        .collect();
    if !unknown.is_empty() {
        sort_analyses(&mut unknown);
        return unknown;
    }

    vec![MorphAnalysis {
        prefix: String::new(),
        stem: word.to_string(),
        suffix: String::new(),
        tag_probs: lexicon.unknown_prior.clone(),
        source: AnalysisSource::Fallback,
    }]
}

fn sort_analyses(analyses: &mut [MorphAnalysis]) {
    analyses.sort_by(|a, b| {
        let key = |x: &MorphAnalysis| (x.suffix.chars().count(), x.stem.chars().count());
        key(b).cmp(&key(a))
    });
}

/// Lexical probability distribution over tags for a normalized word,
/// sorted by tag. Empty only when the lexicon has no prior and nothing
/// matches.
pub fn lexical_prob(word: &str, lexicon: &Lexicon, rules: &RuleSet) -> Vec<(Tag, f64)> {
    let mut scores: BTreeMap<Tag, f64> = BTreeMap::new();
    for analysis in segment(word, lexicon, rules) {
        for (tag, s) in analysis.tag_probs {
            *scores.entry(tag).or_insert(0.0) += s;
        }
    }
    let total: f64 = scores.values().sum();
    if total <= 0.0 {
        return Vec::new();
    }
    scores
        .into_iter()
        .filter(|(_, s)| *s > 0.0)
        .map(|(t, s)| (t, s / total))
        .collect()
}

/// What happened to each training token.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LexiconTrainingLog {
    pub tokens: usize,
    pub stem_tokens: usize,
    pub fullform_tokens: usize,
    /// Inflected tokens whose gold tag no segmentation could explain; they
    /// were stored as full forms.
    pub unexplained: Vec<(String, Tag)>,
}

#[derive(Debug, Clone, PartialEq)]
struct Split {
    prefix_len: usize,
    stem: String,
    suffix: usize,
    suffix_len: usize,
}

/// Longest-suffix split of `rest` whose suffix licenses `tag`.
fn best_split(rest: &str, prefix_len: usize, tag: &Tag, rules: &RuleSet) -> Option<Split> {
    rules
        .suffix_matches(rest)
        .into_iter()
        .find(|m| m.start > 0 && rules.suffix(m.suffix).tags.binary_search(tag).is_ok())
        .map(|m| Split {
            prefix_len,
            stem: rest[..m.start].to_string(),
            suffix: m.suffix,
            suffix_len: rest.len() - m.start,
        })
}

fn normalize_counts<K: Ord + Clone>(counts: &BTreeMap<K, usize>) -> Vec<(K, f64)> {
    let total: usize = counts.values().sum();
    counts
        .iter()
        .map(|(k, &c)| (k.clone(), round_prob(c as f64 / total as f64)))
        .collect()
}

/// Builds the stem, full-form and suffix tables from a gold-tagged corpus.
///
/// Uninflected categories are stored as full forms. An inflected token is
/// split with the longest suffix whose rule licenses its gold tag; a
/// strippable prefix is removed when the resulting stem also occurs
/// without a prefix elsewhere in the corpus.
pub fn train_lexicon(
    corpus: &[Sequence],
    rules: &RuleSet,
    schema: &TagSchema,
) -> Result<(Lexicon, LexiconTrainingLog)> {
    let mut tokens: Vec<(&str, &Tag)> = Vec::new();
    for (i, seq) in corpus.iter().enumerate() {
        let pairs = seq.pairs().ok_or(crate::Error::MissingGoldTags(i))?;
        for (tok, tag) in pairs {
            schema.validate(tag)?;
            tokens.push((tok.norm.as_str(), tag));
        }
    }

    let is_fullform_tag = |t: &Tag| t.category == PUNCT || schema.is_uninflected(&t.category);

    // pass 1: plain splits
    let plain: Vec<Option<Split>> = tokens
        .iter()
        .map(|(w, t)| {
            if is_fullform_tag(t) {
                None
            } else {
                best_split(w, 0, t, rules)
            }
        })
        .collect();
    let plain_stems: BTreeSet<&str> = plain.iter().flatten().map(|s| s.stem.as_str()).collect();

    // pass 2: prefer a prefixed split whose stem is attested without prefix
    let mut log = LexiconTrainingLog {
        tokens: tokens.len(),
        ..Default::default()
    };
    let mut stem_counts: BTreeMap<String, BTreeMap<Tag, usize>> = BTreeMap::new();
    let mut stem_classes: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut suffix_counts: BTreeMap<(String, String), BTreeMap<Tag, usize>> = BTreeMap::new();
    let mut fullform_counts: BTreeMap<String, BTreeMap<Tag, usize>> = BTreeMap::new();

    for (&(word, tag), plain_split) in tokens.iter().zip(&plain) {
        if is_fullform_tag(tag) {
            *fullform_counts
                .entry(word.to_string())
                .or_default()
                .entry(tag.clone())
                .or_insert(0) += 1;
            log.fullform_tokens += 1;
            continue;
        }
        let prefixed: Vec<Split> = rules
            .strippable_prefixes(word)
            .into_iter()
            .filter_map(|len| best_split(&word[len..], len, tag, rules))
            .collect();
        let attested = prefixed
            .iter()
            .filter(|s| plain_stems.contains(s.stem.as_str()))
            .max_by_key(|s| (s.suffix_len, std::cmp::Reverse(s.prefix_len)))
            .cloned();
        let chosen = attested
            .or_else(|| plain_split.clone())
            .or_else(|| prefixed.into_iter().next());
        match chosen {
            Some(split) => {
                let suffix = rules.suffix(split.suffix);
                *stem_counts
                    .entry(split.stem.clone())
                    .or_default()
                    .entry(tag.category_tag())
                    .or_insert(0) += 1;
                stem_classes
                    .entry(split.stem)
                    .or_default()
                    .insert(suffix.class.clone());
                *suffix_counts
                    .entry((suffix.literal.clone(), suffix.class.clone()))
                    .or_default()
                    .entry(tag.clone())
                    .or_insert(0) += 1;
                log.stem_tokens += 1;
            }
            None => {
                *fullform_counts
                    .entry(word.to_string())
                    .or_default()
                    .entry(tag.clone())
                    .or_insert(0) += 1;
                log.fullform_tokens += 1;
                log.unexplained.push((word.to_string(), tag.clone()));
            }
        }
    }

    let mut lexicon = Lexicon::default();
    for (form, counts) in &stem_counts {
        lexicon.stems.insert(
            form.clone(),
            LexiconEntry {
                form: form.clone(),
                kind: EntryKind::Stem,
                paradigm_classes: stem_classes.remove(form).unwrap_or_default(),
                tag_probs: normalize_counts(counts),
            },
        );
    }
    for (form, counts) in &fullform_counts {
        lexicon.fullforms.insert(
            form.clone(),
            LexiconEntry {
                form: form.clone(),
                kind: EntryKind::Fullform,
                paradigm_classes: BTreeSet::new(),
                tag_probs: normalize_counts(counts),
            },
        );
    }
    for (key, counts) in &suffix_counts {
        lexicon.suffixes.insert(key.clone(), normalize_counts(counts));
    }
    lexicon.unknown_prior = unknown_prior(&tokens);
    Ok((lexicon, log))
}

/// Tag distribution over hapax legomena (non-punctuation words seen once),
/// falling back to all word tokens, then to all tokens.
fn unknown_prior(tokens: &[(&str, &Tag)]) -> Vec<(Tag, f64)> {
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for (w, _) in tokens {
        *freq.entry(w).or_insert(0) += 1;
    }
    let collect = |pred: &dyn Fn(&str, &Tag) -> bool| {
        let mut counts: BTreeMap<Tag, usize> = BTreeMap::new();
        for (w, t) in tokens {
            if pred(w, t) {
                *counts.entry((*t).clone()).or_insert(0) += 1;
            }
        }
        counts
    };
    let hapax = collect(&|w, t| t.category != PUNCT && freq[w] == 1);
    if !hapax.is_empty() {
        return normalize_counts(&hapax);
    }
    let words = collect(&|_, t| t.category != PUNCT);
    if !words.is_empty() {
        return normalize_counts(&words);
    }
    normalize_counts(&collect(&|_, _| true))
}
