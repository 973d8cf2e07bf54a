//! Tokenization, normalization and the annotated corpus format.
//!
//! The annotated corpus is line oriented: `surface<TAB>tag` per token, a
//! blank line ends a sequence, and lines starting with `#` are comments.

use std::collections::BTreeSet;
use std::io::BufRead;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::tagset::{Tag, TagSchema};

/// A word or punctuation token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub norm: String,
    pub index: usize,
}

impl Token {
    pub fn new(surface: impl Into<String>, index: usize) -> Self {
        let surface = surface.into();
        let norm = normalize(&surface);
        Self {
            surface,
            norm,
            index,
        }
    }

    /// True when the token holds no letters or digits.
    pub fn is_punctuation(&self) -> bool {
        !self.surface.chars().any(char::is_alphanumeric)
    }
}

/// A token sequence, with gold tags when read from an annotated corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sequence {
    pub tokens: Vec<Token>,
    pub gold_tags: Option<Vec<Tag>>,
}

impl Sequence {
    /// An untagged sequence from surface forms.
    pub fn from_surfaces<S: AsRef<str>>(surfaces: &[S]) -> Self {
        Self {
            tokens: surfaces
                .iter()
                .enumerate()
                .map(|(i, s)| Token::new(s.as_ref(), i))
                .collect(),
            gold_tags: None,
        }
    }

    /// A tagged sequence from `(surface, tag)` pairs.
    pub fn tagged<S: AsRef<str>>(pairs: &[(S, Tag)]) -> Self {
        Self {
            tokens: pairs
                .iter()
                .enumerate()
                .map(|(i, (s, _))| Token::new(s.as_ref(), i))
                .collect(),
            gold_tags: Some(pairs.iter().map(|(_, t)| t.clone()).collect()),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token/tag pairs; `None` for untagged sequences.
    pub fn pairs(&self) -> Option<impl Iterator<Item = (&Token, &Tag)>> {
        self.gold_tags
            .as_ref()
            .map(|tags| self.tokens.iter().zip(tags.iter()))
    }
}

/// Which combining marks `normalize` removes. The default removes none, so
/// accent variants stay distinct.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NormalizeConfig {
    pub strip_marks: BTreeSet<char>,
}

impl NormalizeConfig {
    /// Removes every mark in the Combining Diacritical Marks block
    /// (accents, breathings, diaeresis, iota subscript).
    pub fn accent_stripping() -> Self {
        Self {
            strip_marks: ('\u{0300}'..='\u{036F}').collect(),
        }
    }
}

/// NFC composition and lowercasing with the default (accent-preserving)
/// configuration.
pub fn normalize(surface: &str) -> String {
    normalize_with(surface, &NormalizeConfig::default())
}

pub fn normalize_with(surface: &str, config: &NormalizeConfig) -> String {
    let stripped: String = if config.strip_marks.is_empty() {
        surface.to_string()
    } else {
        surface
            .nfd()
            .filter(|c| !config.strip_marks.contains(c))
            .collect()
    };
    stripped.nfc().collect::<String>().to_lowercase().nfc().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizeConfig {
    /// Punctuation characters that end a sequence.
    pub delimiters: Vec<char>,
    pub normalize: NormalizeConfig,
}

impl Default for TokenizeConfig {
    fn default() -> Self {
        Self {
            // period, semicolon, Greek question mark, question mark
            delimiters: vec!['.', ';', '\u{037E}', '?'],
            normalize: NormalizeConfig::default(),
        }
    }
}

fn is_elision_mark(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{02BC}' | '\u{1FBD}' | '\u{1FBF}')
}

fn is_punct_char(c: char) -> bool {
    !c.is_alphanumeric() && !is_combining_mark(c) && !is_elision_mark(c)
}

/// Splits a whitespace-free chunk into leading punctuation, core, trailing
/// punctuation, one token per punctuation character.
fn split_chunk(chunk: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in chunk.char_indices() {
        if !is_punct_char(c) {
            break;
        }
        out.push(&chunk[i..i + c.len_utf8()]);
        start = i + c.len_utf8();
    }
    if start == chunk.len() {
        return out;
    }
    let rest = &chunk[start..];
    let mut end = rest.len();
    let mut trailing = Vec::new();
    for (i, c) in rest.char_indices().rev() {
        if !is_punct_char(c) {
            break;
        }
        trailing.push(&rest[i..i + c.len_utf8()]);
        end = i;
    }
    out.push(&rest[..end]);
    out.extend(trailing.into_iter().rev());
    out
}

/// Tokenizes with the default configuration.
pub fn tokenize(text: &str) -> Vec<Sequence> {
    tokenize_with(text, &TokenizeConfig::default())
}

/// Splits on whitespace, peels punctuation off word edges, and closes a
/// sequence after a run of delimiter tokens.
pub fn tokenize_with(text: &str, config: &TokenizeConfig) -> Vec<Sequence> {
    let is_delim = |s: &str| {
        let mut cs = s.chars();
        matches!((cs.next(), cs.next()), (Some(c), None) if config.delimiters.contains(&c))
    };
    let mut sequences = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    let mut after_delim = false;
    for chunk in text.split_whitespace() {
        for piece in split_chunk(chunk) {
            let delim = is_delim(piece);
            if after_delim && !delim && !current.is_empty() {
                sequences.push(Sequence {
                    tokens: std::mem::take(&mut current),
                    gold_tags: None,
                });
            }
            let index = current.len();
            current.push(Token {
                surface: piece.to_string(),
                norm: normalize_with(piece, &config.normalize),
                index,
            });
            after_delim = delim;
        }
    }
    if !current.is_empty() {
        sequences.push(Sequence {
            tokens: current,
            gold_tags: None,
        });
    }
    sequences
}

/// Reads an annotated corpus, parsing every tag against `schema`.
pub fn read_annotated_corpus<R: BufRead>(reader: R, schema: &TagSchema) -> Result<Vec<Sequence>> {
    let mut sequences = Vec::new();
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    let flush = |tokens: &mut Vec<Token>, tags: &mut Vec<Tag>, out: &mut Vec<Sequence>| {
        if !tokens.is_empty() {
            out.push(Sequence {
                tokens: std::mem::take(tokens),
                gold_tags: Some(std::mem::take(tags)),
            });
        }
    };
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            flush(&mut tokens, &mut tags, &mut sequences);
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 2 tab-separated fields, found {}", fields.len()),
            });
        }
        if fields[0].is_empty() {
            return Err(Error::Parse {
                line: lineno,
                message: "empty surface form".into(),
            });
        }
        let tag = schema.parse_tag(fields[1]).map_err(|e| Error::Parse {
            line: lineno,
            message: format!("invalid tag `{}`: {e}", fields[1]),
        })?;
        let index = tokens.len();
        tokens.push(Token::new(fields[0], index));
        tags.push(tag);
    }
    flush(&mut tokens, &mut tags, &mut sequences);
    Ok(sequences)
}

pub fn parse_annotated_corpus(text: &str, schema: &TagSchema) -> Result<Vec<Sequence>> {
    read_annotated_corpus(text.as_bytes(), schema)
}

/// Writes sequences in the annotated corpus format. Every sequence must
/// carry gold tags.
pub fn write_annotated_corpus(sequences: &[Sequence]) -> Result<String> {
    let mut out = String::new();
    for (si, seq) in sequences.iter().enumerate() {
        let tags = seq.gold_tags.as_ref().ok_or(Error::MissingGoldTags(si))?;
        if tags.len() != seq.tokens.len() {
            return Err(Error::LengthMismatch {
                tokens: seq.tokens.len(),
                tags: tags.len(),
            });
        }
        for (tok, tag) in seq.tokens.iter().zip(tags) {
            out.push_str(&tok.surface);
            out.push('\t');
            out.push_str(&tag.to_string());
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes flat `(token, tag)` pairs, starting a new sequence whenever a
/// token index restarts at zero.
pub fn write_tagged_pairs(pairs: &[(Token, Tag)]) -> String {
    let mut out = String::new();
    for (i, (tok, tag)) in pairs.iter().enumerate() {
        if i > 0 && tok.index == 0 {
            out.push('\n');
        }
        out.push_str(&tok.surface);
        out.push('\t');
        out.push_str(&tag.to_string());
        out.push('\n');
    }
    if !pairs.is_empty() {
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surfaces(seq: &Sequence) -> Vec<&str> {
        seq.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \n\t").is_empty());
    }

    #[test]
    fn whitespace_split_with_punctuation() {
        let seqs = tokenize("a b.");
        assert_eq!(seqs.len(), 1);
        assert_eq!(surfaces(&seqs[0]), ["a", "b", "."]);
    }

    #[test]
    fn two_sentences() {
        // delimiters at byte offsets 1 and 4
        let seqs = tokenize("x. y.");
        assert_eq!(seqs.len(), 2);
        assert_eq!(surfaces(&seqs[0]), ["x", "."]);
        assert_eq!(surfaces(&seqs[1]), ["y", "."]);
        assert_eq!(seqs[1].tokens[0].index, 0);
        assert_eq!(seqs[1].tokens[1].index, 1);
    }

    #[test]
    fn delimiter_runs_stay_together() {
        let seqs = tokenize("x... y?");
        assert_eq!(seqs.len(), 2);
        assert_eq!(surfaces(&seqs[0]), ["x", ".", ".", "."]);
    }

    #[test]
    fn leading_and_interior_punctuation() {
        let seqs = tokenize("«λόγος», a.b");
        assert_eq!(surfaces(&seqs[0]), ["«", "λόγος", "»", ",", "a.b"]);
    }

    #[test]
    fn greek_question_mark_and_elision() {
        let seqs = tokenize("τί φῄς\u{037E} δ’ ἐγώ.");
        assert_eq!(seqs.len(), 2);
        assert_eq!(surfaces(&seqs[1]), ["δ’", "ἐγώ", "."]);
    }

    #[test]
    fn custom_delimiters() {
        let cfg = TokenizeConfig {
            delimiters: vec!['!'],
            ..TokenizeConfig::default()
        };
        let seqs = tokenize_with("a. b! c", &cfg);
        assert_eq!(seqs.len(), 2);
        assert_eq!(surfaces(&seqs[0]), ["a", ".", "b", "!"]);
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize("ΛΟΓΟΣ"), "λογος");
        assert_eq!(normalize("λόγος"), "λόγος");
        assert_eq!(
            normalize_with("λόγος", &NormalizeConfig::accent_stripping()),
            "λογος"
        );
        // decomposed input composes
        assert_eq!(normalize("λο\u{0301}γος"), "λόγος");
        assert_eq!(
            normalize_with("Ἀθῆναι", &NormalizeConfig::accent_stripping()),
            "αθηναι"
        );
    }

    #[test]
    fn read_two_lines() {
        let schema = TagSchema::default_greek();
        let seqs = parse_annotated_corpus("w1\tsubs\nw2\tverf\n\n", &schema).unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(seqs[0].len(), 2);
        assert!(parse_annotated_corpus("", &schema).unwrap().is_empty());
    }

    #[test]
    fn read_errors() {
        let schema = TagSchema::default_greek();
        let err = parse_annotated_corpus("a\tsubs\nb subs\n", &schema).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_annotated_corpus("# c\na\tbogus:x=y\n", &schema).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("bogus:x=y"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_and_multiple_blank_lines() {
        let schema = TagSchema::default_greek();
        let text = "# header\na\tsubs\n\n\n# mid\nb\tprae\nc\tsubs\n";
        let seqs = parse_annotated_corpus(text, &schema).unwrap();
        assert_eq!(seqs.len(), 2);
        assert_eq!(seqs[1].len(), 2);
        assert_eq!(
            write_annotated_corpus(&seqs).unwrap(),
            "a\tsubs\n\nb\tprae\nc\tsubs\n\n"
        );
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,24}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once.clone());
            let cfg = NormalizeConfig::accent_stripping();
            let stripped = normalize_with(&s, &cfg);
            prop_assert_eq!(normalize_with(&stripped, &cfg), stripped);
        }

        #[test]
        fn tokens_cover_all_non_whitespace(s in "[a-zα-ω .,;?!«»\n]{0,40}") {
            let seqs = tokenize(&s);
            let joined: String = seqs
                .iter()
                .flat_map(|q| q.tokens.iter().map(|t| t.surface.as_str()))
                .collect();
            let expected: String = s.chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(joined, expected);
            for q in &seqs {
                for (i, t) in q.tokens.iter().enumerate() {
                    prop_assert_eq!(t.index, i);
                    if t.surface.chars().any(char::is_alphabetic) {
                        prop_assert!(!t.norm.is_empty());
                    }
                }
            }
        }
    }
}
