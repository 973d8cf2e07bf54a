//! Stem, full-form and suffix statistics and their file format.
//!
//! One entry per line, tab separated:
//!
//! ```text
//! form	kind	classes	tag=prob;tag=prob
//! ```
//!
//! `kind` is `stem`, `fullform`, `suffix` (form = suffix literal, classes =
//! its paradigm class) or `prior` (the unknown-word distribution, form `*`).
//! `classes` is comma separated, `-` when empty. Tag/probability items are
//! separated by `;` because tags themselves contain commas. Probabilities
//! are written with 12 significant digits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::tagset::{Tag, TagSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntryKind {
    Stem,
    Fullform,
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryKind::Stem => "stem",
            EntryKind::Fullform => "fullform",
        })
    }
}

/// A stem or full form with its tag distribution. Stem entries hold
/// category-level tags (no features); the suffix supplies the features.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry {
    pub form: String,
    pub kind: EntryKind,
    pub paradigm_classes: BTreeSet<String>,
    /// Sorted by tag.
    pub tag_probs: Vec<(Tag, f64)>,
}

impl LexiconEntry {
    pub fn prob(&self, tag: &Tag) -> f64 {
        self.tag_probs
            .iter()
            .find(|(t, _)| t == tag)
            .map_or(0.0, |(_, p)| *p)
    }

    /// Probability mass on `category`, summed over tags.
    pub fn category_prob(&self, category: &str) -> f64 {
        self.tag_probs
            .iter()
            .filter(|(t, _)| t.category == category)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn has_category(&self, category: &str) -> bool {
        self.tag_probs.iter().any(|(t, _)| t.category == category)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    pub stems: BTreeMap<String, LexiconEntry>,
    pub fullforms: BTreeMap<String, LexiconEntry>,
    /// P(tag | suffix) keyed by `(literal, paradigm class)`.
    pub suffixes: BTreeMap<(String, String), Vec<(Tag, f64)>>,
    /// Distribution used for words with no analysis at all.
    pub unknown_prior: Vec<(Tag, f64)>,
}

/// Formats a probability with 12 significant digits, trailing zeros
/// trimmed.
pub fn format_prob(p: f64) -> String {
    if p == 0.0 || !p.is_finite() {
        return format!("{p}");
    }
    let exp = p.abs().log10().floor() as i32;
    if (-5..=11).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{p:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{p:.11e}");
        let (mantissa, e) = s.split_once('e').expect("exponent");
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{e}")
    }
}

/// Rounds to the value [`format_prob`] would write.
pub fn round_prob(p: f64) -> f64 {
    format_prob(p).parse().expect("formatted probability parses")
}

fn format_dist(dist: &[(Tag, f64)]) -> String {
    dist.iter()
        .map(|(t, p)| format!("{t}={}", format_prob(*p)))
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_dist(s: &str, schema: &TagSchema) -> std::result::Result<Vec<(Tag, f64)>, String> {
    let mut out = Vec::new();
    if s.is_empty() {
        return Ok(out);
    }
    for item in s.split(';') {
        let (tag, p) = item
            .rsplit_once('=')
            .ok_or_else(|| format!("expected tag=prob, got `{item}`"))?;
        let tag = schema
            .parse_tag(tag)
            .map_err(|e| format!("invalid tag `{tag}`: {e}"))?;
        let p: f64 = p
            .parse()
            .map_err(|_| format!("invalid probability `{p}`"))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("probability {p} out of range"));
        }
        out.push((tag, p));
    }
    Ok(out)
}

impl Lexicon {
    pub fn stem(&self, form: &str) -> Option<&LexiconEntry> {
        self.stems.get(form)
    }

    pub fn fullform(&self, form: &str) -> Option<&LexiconEntry> {
        self.fullforms.get(form)
    }

    /// Trained P(tag | suffix), if the suffix occurred in training.
    pub fn suffix_probs(&self, literal: &str, class: &str) -> Option<&[(Tag, f64)]> {
        self.suffixes
            .get(&(literal.to_string(), class.to_string()))
            .map(Vec::as_slice)
    }

    /// Number of distinct `(form, kind)` stem and full-form entries.
    pub fn entry_count(&self) -> usize {
        self.stems.len() + self.fullforms.len()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let classes = |c: &BTreeSet<String>| {
            if c.is_empty() {
                "-".to_string()
            } else {
                c.iter().cloned().collect::<Vec<_>>().join(",")
            }
        };
        for e in self.stems.values().chain(self.fullforms.values()) {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.form,
                e.kind,
                classes(&e.paradigm_classes),
                format_dist(&e.tag_probs)
            ));
        }
        for ((literal, class), dist) in &self.suffixes {
            out.push_str(&format!("{literal}\tsuffix\t{class}\t{}\n", format_dist(dist)));
        }
        if !self.unknown_prior.is_empty() {
            out.push_str(&format!("*\tprior\t-\t{}\n", format_dist(&self.unknown_prior)));
        }
        out
    }

    pub fn parse(text: &str, schema: &TagSchema) -> Result<Self> {
        Self::parse_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)), schema)
    }

    /// Parses numbered lines; used when the lexicon is embedded in a
    /// larger file.
    pub fn parse_lines<'a>(
        lines: impl Iterator<Item = (usize, &'a str)>,
        schema: &TagSchema,
    ) -> Result<Self> {
        let mut lex = Lexicon::default();
        for (lineno, raw) in lines {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: lineno,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(err(format!(
                    "expected 4 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let dist = parse_dist(fields[3], schema).map_err(err)?;
            let classes: BTreeSet<String> = if fields[2] == "-" {
                BTreeSet::new()
            } else {
                fields[2].split(',').map(str::to_string).collect()
            };
            let form = fields[0].to_string();
            match fields[1] {
                kind @ ("stem" | "fullform") => {
                    let kind = if kind == "stem" {
                        EntryKind::Stem
                    } else {
                        EntryKind::Fullform
                    };
                    let entry = LexiconEntry {
                        form: form.clone(),
                        kind,
                        paradigm_classes: classes,
                        tag_probs: dist,
                    };
                    let map = match kind {
                        EntryKind::Stem => &mut lex.stems,
                        EntryKind::Fullform => &mut lex.fullforms,
                    };
                    if map.insert(form.clone(), entry).is_some() {
                        return Err(err(format!("duplicate {kind} entry `{form}`")));
                    }
                }
                "suffix" => {
                    let class = fields[2].to_string();
                    if lex.suffixes.insert((form.clone(), class), dist).is_some() {
                        return Err(err(format!("duplicate suffix entry `{form}`")));
                    }
                }
                "prior" => lex.unknown_prior = dist,
                other => return Err(err(format!("unknown entry kind `{other}`"))),
            }
        }
        Ok(lex)
    }
}
