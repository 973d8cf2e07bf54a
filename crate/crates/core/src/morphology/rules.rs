//! Prefix and suffix rules.
//!
//! A rule file holds one rule per line, fields separated by tabs:
//!
//! ```text
//! # suffix rules: -pattern  paradigm-class  tag,tag,...
//! -σαντος	w-verb	part:num=sg,tense=aor,voice=act,case=gen,gen=masc,part:num=sg,tense=aor,voice=act,case=gen,gen=neut
//! -(ο|ου)ς	o-noun	subs:num=sg,case=nom,gen=masc
//! # prefix rules: pattern-  label  strip|keep
//! ἐ-	augment	strip
//! ```
//!
//! In a tag list a comma followed by `feature=value` continues the current
//! tag; anything else starts a new tag.
//!
//! Patterns describe finite sets of literals: characters, classes `[αε]`,
//! groups with alternatives `(ο|ου|)`, `?` after an atom, and `\` escapes.
//! Each pattern is expanded to its literals, which are normalized and
//! loaded into a trie (reversed for suffixes) for anchored matching.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::tagset::{Tag, TagSchema};
use crate::text::normalize;

/// Upper bound on the literals one pattern may expand to.
pub const MAX_EXPANSION: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SuffixRule {
    /// Source pattern without the leading `-`.
    pub pattern: String,
    pub paradigm_class: String,
    /// Candidate tags with their prior weights (uniform; training replaces
    /// them with observed relative frequencies per suffix).
    pub tags: Vec<(Tag, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixRule {
    /// Source pattern without the trailing `-`.
    pub pattern: String,
    pub label: String,
    pub strippable: bool,
}

/// One literal suffix with everything the rules say about it for one
/// paradigm class. Rules sharing a literal and class are merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suffix {
    pub literal: String,
    pub class: String,
    /// Sorted, deduplicated.
    pub tags: Vec<Tag>,
}

impl Suffix {
    pub fn char_len(&self) -> usize {
        self.literal.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Trie {
    nodes: Vec<TrieNode>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct TrieNode {
    children: BTreeMap<char, usize>,
    terminals: Vec<usize>,
}

impl Default for Trie {
    fn default() -> Self {
        Self {
            nodes: vec![TrieNode::default()],
        }
    }
}

impl Trie {
    fn insert(&mut self, chars: impl Iterator<Item = char>, id: usize) {
        let mut node = 0;
        for c in chars {
            node = match self.nodes[node].children.get(&c) {
                Some(&n) => n,
                None => {
                    self.nodes.push(TrieNode::default());
                    let n = self.nodes.len() - 1;
                    self.nodes[node].children.insert(c, n);
                    n
                }
            };
        }
        self.nodes[node].terminals.push(id);
    }

    /// Walks `chars`, reporting `(depth_in_chars, id)` for every terminal
    /// passed, depth 0 included.
    fn walk(&self, chars: impl Iterator<Item = char>) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut node = 0;
        let mut depth = 0;
        let mut chars = chars;
        loop {
            out.extend(self.nodes[node].terminals.iter().map(|&id| (depth, id)));
            match chars.next().and_then(|c| self.nodes[node].children.get(&c)) {
                Some(&next) => {
                    node = next;
                    depth += 1;
                }
                None => break,
            }
        }
        out
    }
}

/// A match of a suffix literal at the end of a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuffixMatch {
    /// Byte offset where the suffix starts.
    pub start: usize,
    pub suffix: usize,
}

/// Compiled prefix and suffix rules.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleSet {
    suffix_rules: Vec<SuffixRule>,
    prefix_rules: Vec<PrefixRule>,
    suffixes: Vec<Suffix>,
    /// `(literal, strippable)` per expanded prefix literal.
    prefixes: Vec<(String, bool)>,
    suffix_trie: Trie,
    prefix_trie: Trie,
}

impl RuleSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Compiles rules. Tags are validated against `schema`.
    pub fn new(
        suffix_rules: Vec<SuffixRule>,
        prefix_rules: Vec<PrefixRule>,
        schema: &TagSchema,
    ) -> Result<Self> {
        let mut merged: BTreeMap<(String, String), BTreeSet<Tag>> = BTreeMap::new();
        for rule in &suffix_rules {
            for (tag, _) in &rule.tags {
                schema.validate(tag)?;
            }
            for literal in expand_pattern(&rule.pattern)? {
                merged
                    .entry((normalize(&literal), rule.paradigm_class.clone()))
                    .or_default()
                    .extend(rule.tags.iter().map(|(t, _)| t.clone()));
            }
        }
        let mut suffix_trie = Trie::default();
        let suffixes: Vec<Suffix> = merged
            .into_iter()
            .map(|((literal, class), tags)| Suffix {
                literal,
                class,
                tags: tags.into_iter().collect(),
            })
            .collect();
        for (i, s) in suffixes.iter().enumerate() {
            suffix_trie.insert(s.literal.chars().rev(), i);
        }

        let mut literals: BTreeMap<String, bool> = BTreeMap::new();
        for rule in &prefix_rules {
            for literal in expand_pattern(&rule.pattern)? {
                let literal = normalize(&literal);
                if literal.is_empty() {
                    return Err(Error::Pattern {
                        pattern: rule.pattern.clone(),
                        message: "prefix patterns must not match the empty string".into(),
                    });
                }
                *literals.entry(literal).or_insert(false) |= rule.strippable;
            }
        }
        let mut prefix_trie = Trie::default();
        let prefixes: Vec<(String, bool)> = literals.into_iter().collect();
        for (i, (p, _)) in prefixes.iter().enumerate() {
            prefix_trie.insert(p.chars(), i);
        }

        Ok(Self {
            suffix_rules,
            prefix_rules,
            suffixes,
            prefixes,
            suffix_trie,
            prefix_trie,
        })
    }

    /// Parses the rule file format described in the module docs.
    pub fn parse(text: &str, schema: &TagSchema) -> Result<Self> {
        let mut suffix_rules = Vec::new();
        let mut prefix_rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: lineno,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let (pattern, second, third) = (fields[0], fields[1], fields[2]);
            if let Some(p) = pattern.strip_prefix('-') {
                if second.is_empty() {
                    return Err(err("empty paradigm class".into()));
                }
                let tags = parse_tag_list(third, schema).map_err(|e| err(e.to_string()))?;
                if tags.is_empty() {
                    return Err(err("suffix rule lists no tags".into()));
                }
                let w = 1.0 / tags.len() as f64;
                // validate the pattern early so the line number is reported
                expand_pattern(p).map_err(|e| err(e.to_string()))?;
                suffix_rules.push(SuffixRule {
                    pattern: p.to_string(),
                    paradigm_class: second.to_string(),
                    tags: tags.into_iter().map(|t| (t, w)).collect(),
                });
            } else if let Some(p) = pattern.strip_suffix('-') {
                let strippable = match third {
                    "strip" => true,
                    "keep" => false,
                    other => return Err(err(format!("expected `strip` or `keep`, got `{other}`"))),
                };
                expand_pattern(p).map_err(|e| err(e.to_string()))?;
                prefix_rules.push(PrefixRule {
                    pattern: p.to_string(),
                    label: second.to_string(),
                    strippable,
                });
            } else {
                return Err(err(format!(
                    "pattern `{pattern}` must start (suffix) or end (prefix) with `-`"
                )));
            }
        }
        Self::new(suffix_rules, prefix_rules, schema)
    }

    /// Writes the rules back in file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.suffix_rules {
            let tags: Vec<String> = r.tags.iter().map(|(t, _)| t.to_string()).collect();
            out.push_str(&format!(
                "-{}\t{}\t{}\n",
                r.pattern,
                r.paradigm_class,
                tags.join(",")
            ));
        }
        for r in &self.prefix_rules {
            let mode = if r.strippable { "strip" } else { "keep" };
            out.push_str(&format!("{}-\t{}\t{}\n", r.pattern, r.label, mode));
        }
        out
    }

    pub fn suffix_rules(&self) -> &[SuffixRule] {
        &self.suffix_rules
    }

    pub fn prefix_rules(&self) -> &[PrefixRule] {
        &self.prefix_rules
    }

    pub fn suffixes(&self) -> &[Suffix] {
        &self.suffixes
    }

    pub fn suffix(&self, id: usize) -> &Suffix {
        &self.suffixes[id]
    }

    /// Suffix literals ending `word`, longest first; ties in class order.
    pub fn suffix_matches(&self, word: &str) -> Vec<SuffixMatch> {
        let mut hits = self.suffix_trie.walk(word.chars().rev());
        hits.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        hits.into_iter()
            .map(|(_, id)| SuffixMatch {
                start: word.len() - self.suffixes[id].literal.len(),
                suffix: id,
            })
            .collect()
    }

    /// Strippable prefix literals starting `word`, shortest first, that
    /// leave a non-empty remainder. Returns byte lengths.
    pub fn strippable_prefixes(&self, word: &str) -> Vec<usize> {
        let mut lens: Vec<usize> = self
            .prefix_trie
            .walk(word.chars())
            .into_iter()
            .filter(|&(_, id)| self.prefixes[id].1)
            .map(|(_, id)| self.prefixes[id].0.len())
            .filter(|&len| len < word.len())
            .collect();
        lens.sort_unstable();
        lens.dedup();
        lens
    }
}

/// Parses a comma-separated tag list where `feature=value` pieces continue
/// the preceding tag.
pub fn parse_tag_list(s: &str, schema: &TagSchema) -> Result<Vec<Tag>> {
    let mut groups: Vec<String> = Vec::new();
    for piece in s.split(',') {
        let continues = !piece.contains(':') && piece.contains('=');
        match groups.last_mut() {
            Some(last) if continues => {
                last.push(',');
                last.push_str(piece);
            }
            _ if continues => return Err(Error::MalformedTag(s.to_string())),
            _ => groups.push(piece.to_string()),
        }
    }
    groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| schema.parse_tag(g))
        .collect()
}

/// Expands a finite pattern into its literal strings, sorted.
pub fn expand_pattern(pattern: &str) -> Result<Vec<String>> {
    let chars: Vec<char> = pattern.chars().collect();
    let mut parser = PatternParser {
        chars: &chars,
        pos: 0,
        pattern,
    };
    let set = parser.alternation()?;
    if parser.pos != chars.len() {
        return Err(parser.error("unbalanced `)`"));
    }
    Ok(set.into_iter().collect())
}

struct PatternParser<'a> {
    chars: &'a [char],
    pos: usize,
    pattern: &'a str,
}

impl PatternParser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Pattern {
            pattern: self.pattern.to_string(),
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn alternation(&mut self) -> Result<BTreeSet<String>> {
        let mut set = self.sequence()?;
        while self.peek() == Some('|') {
            self.pos += 1;
            set.extend(self.sequence()?);
            self.check_size(set.len())?;
        }
        Ok(set)
    }

    fn sequence(&mut self) -> Result<BTreeSet<String>> {
        let mut acc: BTreeSet<String> = BTreeSet::from([String::new()]);
        while let Some(c) = self.peek() {
            if c == '|' || c == ')' {
                break;
            }
            let mut atom = self.atom()?;
            if self.peek() == Some('?') {
                self.pos += 1;
                atom.insert(String::new());
            }
            if matches!(self.peek(), Some('*' | '+' | '{')) {
                return Err(self.error("unbounded repetition is not supported"));
            }
            self.check_size(acc.len().saturating_mul(atom.len()))?;
            acc = acc
                .iter()
                .flat_map(|a| atom.iter().map(move |b| format!("{a}{b}")))
                .collect();
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<BTreeSet<String>> {
        let c = self.peek().expect("caller checked");
        self.pos += 1;
        match c {
            '(' => {
                let inner = self.alternation()?;
                if self.peek() != Some(')') {
                    return Err(self.error("missing `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            '[' => {
                let mut set = BTreeSet::new();
                loop {
                    match self.peek() {
                        None => return Err(self.error("missing `]`")),
                        Some(']') => {
                            self.pos += 1;
                            break;
                        }
                        Some('\\') => {
                            self.pos += 1;
                            let e = self.peek().ok_or_else(|| self.error("dangling `\\`"))?;
                            self.pos += 1;
                            set.insert(e.to_string());
                        }
                        Some(x) => {
                            self.pos += 1;
                            set.insert(x.to_string());
                        }
                    }
                }
                if set.is_empty() {
                    return Err(self.error("empty character class"));
                }
                Ok(set)
            }
            '\\' => {
                let e = self.peek().ok_or_else(|| self.error("dangling `\\`"))?;
                self.pos += 1;
                Ok(BTreeSet::from([e.to_string()]))
            }
            '?' | '*' | '+' | '{' => Err(self.error("quantifier without an atom")),
            ']' => Err(self.error("unbalanced `]`")),
            '^' | '$' | '.' => Err(self.error(
                "anchors and wildcards are implicit or unsupported; escape them with `\\`",
            )),
            other => Ok(BTreeSet::from([other.to_string()])),
        }
    }

    fn check_size(&self, n: usize) -> Result<()> {
        if n > MAX_EXPANSION {
            Err(self.error(&format!("expands to more than {MAX_EXPANSION} literals")))
        } else {
            Ok(())
        }
    }
}
