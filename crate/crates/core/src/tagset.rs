//! Feature-structured tags.
//!
//! A tag is a word category followed by an ordered list of feature-value
//! pairs, written `category` or `category:f=v,f=v,...`. The schema fixes the
//! set of categories, the values of every feature, the features each
//! category may carry, and one canonical feature order shared by all
//! categories. The canonical order makes the chain factorization of a tag
//! (category first, then one factor per feature slot) deterministic.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Category reserved for punctuation tokens.
pub const PUNCT: &str = "punct";

/// One feature-value pair such as `num=pl`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureValue {
    pub feature: String,
    pub value: String,
}

impl FeatureValue {
    pub fn new(feature: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            feature: feature.into(),
            value: value.into(),
        }
    }
}

/// A word category plus its feature-value pairs in canonical order.
///
/// Tags order by their canonical string, which is also the tie-break order
/// used by the decoder.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tag {
    pub category: String,
    pub features: Vec<FeatureValue>,
}

impl Tag {
    /// A tag with no features.
    pub fn bare(category: impl Into<String>) -> Self {
        Self {
            category: category.into(),
            features: Vec::new(),
        }
    }

    pub fn with_features<I, F, V>(category: impl Into<String>, features: I) -> Self
    where
        I: IntoIterator<Item = (F, V)>,
        F: Into<String>,
        V: Into<String>,
    {
        Self {
            category: category.into(),
            features: features
                .into_iter()
                .map(|(f, v)| FeatureValue::new(f, v))
                .collect(),
        }
    }

    /// The category-only projection of this tag.
    pub fn category_tag(&self) -> Tag {
        Tag::bare(self.category.clone())
    }

    pub fn feature(&self, name: &str) -> Option<&str> {
        self.features
            .iter()
            .find(|fv| fv.feature == name)
            .map(|fv| fv.value.as_str())
    }

    fn canonical_chars(&self) -> impl Iterator<Item = char> + '_ {
        let head = self.category.chars();
        let tail = self.features.iter().enumerate().flat_map(|(i, fv)| {
            let sep = if i == 0 { ':' } else { ',' };
            std::iter::once(sep)
                .chain(fv.feature.chars())
                .chain(std::iter::once('='))
                .chain(fv.value.chars())
        });
        head.chain(tail)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.category)?;
        for (i, fv) in self.features.iter().enumerate() {
            let sep = if i == 0 { ':' } else { ',' };
            write!(f, "{sep}{}={}", fv.feature, fv.value)?;
        }
        Ok(())
    }
}

impl Ord for Tag {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_chars().cmp(other.canonical_chars())
    }
}

impl PartialOrd for Tag {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Compact encoding of a schema-valid tag: `[category, slot_1, .., slot_m]`
/// where slot values are `0` for an absent feature and `value_index + 1`
/// otherwise. Slots follow the category's allowed features in canonical
/// order, so all tags of one category have codes of equal length.
pub type TagCode = Vec<u16>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDecl {
    pub name: String,
    pub values: Vec<String>,
}

/// Declares categories, features, values and per-category feature masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSchema {
    categories: Vec<String>,
    features: Vec<FeatureDecl>,
    /// Allowed feature indices per category, ascending (= canonical order).
    masks: Vec<Vec<usize>>,
}

const DEFAULT_SCHEMA: &str = "\
# Default schema for Attic Greek: 24 word categories plus punctuation.
# Feature lines fix the canonical feature order.
feature pers 1 2 3
feature num sg du pl
feature mood ind subj opt imp
feature tense pres impf fut aor perf plup futp
feature voice act mid pass
feature case nom gen dat acc voc
feature gen masc fem neut
category adjk num case gen
category adjp num case gen
category adjs num case gen
category adva
category advs
category arti num case gen
category depn num case gen
category idpn num case gen
category intj
category irpn num case gen
category konj
category name num case gen
category nega
category nume num case gen
category parl
category part num tense voice case gen
category pepn pers num case gen
category popn num case gen
category prae
category repn pers num case gen
category rlpn num case gen
category subs num case gen
category verf pers num mood tense voice
category veri tense voice
category punct
";

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| !c.is_whitespace() && !matches!(c, ':' | ',' | '=' | ';' | '#'))
}

impl TagSchema {
    /// The built-in Greek schema.
    pub fn default_greek() -> Self {
        Self::parse(DEFAULT_SCHEMA).expect("built-in schema is valid")
    }

    /// Parses the schema file format:
    ///
    /// ```text
    /// # comment
    /// feature num sg du pl
    /// category subs num case gen
    /// category prae
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut categories = Vec::new();
        let mut features: Vec<FeatureDecl> = Vec::new();
        let mut raw_masks: Vec<(usize, Vec<String>)> = Vec::new();

        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut words = line.split_whitespace();
            let keyword = words.next().unwrap_or_default();
            let name = words.next().ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("`{keyword}` needs a name"),
            })?;
            if !is_identifier(name) {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("invalid identifier `{name}`"),
                });
            }
            let rest: Vec<String> = words.map(str::to_string).collect();
            match keyword {
                "feature" => {
                    if features.iter().any(|f| f.name == name) {
                        return Err(Error::Parse {
                            line: lineno,
                            message: format!("feature `{name}` declared twice"),
                        });
                    }
                    if rest.is_empty() {
                        return Err(Error::Parse {
                            line: lineno,
                            message: format!("feature `{name}` has no values"),
                        });
                    }
                    let mut seen = HashSet::new();
                    for v in &rest {
                        if !is_identifier(v) || !seen.insert(v.as_str()) {
                            return Err(Error::Parse {
                                line: lineno,
                                message: format!("bad or duplicate value `{v}`"),
                            });
                        }
                    }
                    features.push(FeatureDecl {
                        name: name.to_string(),
                        values: rest,
                    });
                }
                "category" => {
                    if categories.iter().any(|c| c == name) {
                        return Err(Error::Parse {
                            line: lineno,
                            message: format!("category `{name}` declared twice"),
                        });
                    }
                    categories.push(name.to_string());
                    raw_masks.push((lineno, rest));
                }
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("unknown keyword `{other}`"),
                    })
                }
            }
        }

        let mut masks = Vec::with_capacity(raw_masks.len());
        for (lineno, names) in raw_masks {
            let mut mask = Vec::with_capacity(names.len());
            for n in &names {
                let idx = features
                    .iter()
                    .position(|f| &f.name == n)
                    .ok_or_else(|| Error::Parse {
                        line: lineno,
                        message: format!("undeclared feature `{n}`"),
                    })?;
                if mask.contains(&idx) {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("feature `{n}` listed twice"),
                    });
                }
                mask.push(idx);
            }
            mask.sort_unstable();
            masks.push(mask);
        }
        if categories.is_empty() {
            return Err(Error::Parse {
                line: 0,
                message: "schema declares no categories".into(),
            });
        }
        Ok(Self {
            categories,
            features,
            masks,
        })
    }

    /// Writes the schema in its file format (canonical feature order).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.features {
            out.push_str("feature ");
            out.push_str(&f.name);
            for v in &f.values {
                out.push(' ');
                out.push_str(v);
            }
            out.push('\n');
        }
        for (c, mask) in self.categories.iter().zip(&self.masks) {
            out.push_str("category ");
            out.push_str(c);
            for &fi in mask {
                out.push(' ');
                out.push_str(&self.features[fi].name);
            }
            out.push('\n');
        }
        out
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn features(&self) -> &[FeatureDecl] {
        &self.features
    }

    pub fn category_index(&self, category: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == category)
    }

    pub fn has_category(&self, category: &str) -> bool {
        self.category_index(category).is_some()
    }

    /// Feature indices a category may carry, in canonical order.
    pub fn allowed_features(&self, category_index: usize) -> &[usize] {
        &self.masks[category_index]
    }

    /// Whether the category carries no features at all.
    pub fn is_uninflected(&self, category: &str) -> bool {
        self.category_index(category)
            .map(|i| self.masks[i].is_empty())
            .unwrap_or(false)
    }

    /// Parses `category` or `category:f=v,f=v,...`. Features given out of
    /// canonical order are reordered.
    pub fn parse_tag(&self, s: &str) -> Result<Tag> {
        let (category, rest) = match s.split_once(':') {
            Some((c, r)) => (c, Some(r)),
            None => (s, None),
        };
        let ci = self
            .category_index(category)
            .ok_or_else(|| Error::UnknownCategory(category.to_string()))?;
        let mut slots: Vec<(usize, FeatureValue)> = Vec::new();
        if let Some(rest) = rest {
            if rest.is_empty() {
                return Err(Error::MalformedTag(s.to_string()));
            }
            for pair in rest.split(',') {
                let (f, v) = pair
                    .split_once('=')
                    .ok_or_else(|| Error::MalformedTag(s.to_string()))?;
                let fi = self
                    .features
                    .iter()
                    .position(|d| d.name == f)
                    .ok_or_else(|| Error::UnknownFeature(f.to_string()))?;
                if !self.features[fi].values.iter().any(|x| x == v) {
                    return Err(Error::UnknownValue {
                        feature: f.to_string(),
                        value: v.to_string(),
                    });
                }
                if !self.masks[ci].contains(&fi) {
                    return Err(Error::FeatureNotAllowed {
                        category: category.to_string(),
                        feature: f.to_string(),
                    });
                }
                if slots.iter().any(|(i, _)| *i == fi) {
                    return Err(Error::DuplicateFeature(f.to_string()));
                }
                slots.push((fi, FeatureValue::new(f, v)));
            }
        }
        slots.sort_by_key(|(i, _)| *i);
        Ok(Tag {
            category: category.to_string(),
            features: slots.into_iter().map(|(_, fv)| fv).collect(),
        })
    }

    /// Canonical string of a tag; the inverse of [`TagSchema::parse_tag`].
    pub fn format_tag(&self, tag: &Tag) -> String {
        tag.to_string()
    }

    /// Checks a tag against the schema, including canonical feature order.
    pub fn validate(&self, tag: &Tag) -> Result<()> {
        self.encode(tag).map(|_| ())
    }

    /// Encodes a schema-valid tag as a [`TagCode`].
    pub fn encode(&self, tag: &Tag) -> Result<TagCode> {
        let ci = self
            .category_index(&tag.category)
            .ok_or_else(|| Error::UnknownCategory(tag.category.clone()))?;
        let mask = &self.masks[ci];
        let mut code = Vec::with_capacity(1 + mask.len());
        code.push(ci as u16);
        code.resize(1 + mask.len(), 0);
        let mut last_slot: Option<usize> = None;
        for fv in &tag.features {
            let fi = self
                .features
                .iter()
                .position(|d| d.name == fv.feature)
                .ok_or_else(|| Error::UnknownFeature(fv.feature.clone()))?;
            let slot = mask
                .iter()
                .position(|&m| m == fi)
                .ok_or_else(|| Error::FeatureNotAllowed {
                    category: tag.category.clone(),
                    feature: fv.feature.clone(),
                })?;
            let vi = self.features[fi]
                .values
                .iter()
                .position(|v| *v == fv.value)
                .ok_or_else(|| Error::UnknownValue {
                    feature: fv.feature.clone(),
                    value: fv.value.clone(),
                })?;
            match last_slot {
                Some(prev) if prev == slot => {
                    return Err(Error::DuplicateFeature(fv.feature.clone()))
                }
                Some(prev) if prev > slot => return Err(Error::MalformedTag(tag.to_string())),
                _ => {}
            }
            last_slot = Some(slot);
            code[1 + slot] = (vi + 1) as u16;
        }
        Ok(code)
    }

    /// Inverse of [`TagSchema::encode`].
    pub fn decode(&self, code: &[u16]) -> Tag {
        let ci = code[0] as usize;
        let mask = &self.masks[ci];
        let features = mask
            .iter()
            .zip(&code[1..])
            .filter(|(_, &v)| v != 0)
            .map(|(&fi, &v)| {
                let decl = &self.features[fi];
                FeatureValue::new(decl.name.clone(), decl.values[v as usize - 1].clone())
            })
            .collect();
        Tag {
            category: self.categories[ci].clone(),
            features,
        }
    }

    /// Number of outcomes of slot `slot` of a category: its values plus
    /// "absent".
    pub fn slot_arity(&self, category_index: usize, slot: usize) -> usize {
        self.features[self.masks[category_index][slot]].values.len() + 1
    }

    /// Every schema-valid tag, in canonical string order.
    pub fn all_tags(&self) -> Vec<Tag> {
        let mut out = Vec::new();
        for ci in 0..self.categories.len() {
            let arities: Vec<usize> = (0..self.masks[ci].len())
                .map(|s| self.slot_arity(ci, s))
                .collect();
            let mut code: TagCode = vec![0; 1 + arities.len()];
            code[0] = ci as u16;
            loop {
                out.push(self.decode(&code));
                // odometer over slot values
                let mut exhausted = true;
                for k in (0..arities.len()).rev() {
                    code[1 + k] += 1;
                    if (code[1 + k] as usize) < arities[k] {
                        exhausted = false;
                        break;
                    }
                    code[1 + k] = 0;
                }
                if exhausted {
                    break;
                }
            }
        }
        out.sort();
        out
    }
}
