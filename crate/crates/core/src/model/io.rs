//! Model file format.
//!
//! A self-contained text file; everything needed to tag is embedded:
//!
//! ```text
//! morphtag-model 1 lambda <λ1> <λ2> <λ3>
//! smoothing raw | smoothing backoff <κ1> <κ2> <κ3>
//! [schema]
//! ...schema file...
//! [rules]
//! ...rule file...
//! [lexicon]
//! ...lexicon file...
//! [trigrams]
//! <tag-2>	<tag-1>	<tag>	<count>
//! [end]
//! ```
//!
//! Trigram lines are sorted; `<s>` is the boundary pseudo-tag. Weights are
//! written in shortest round-trip form, so load(save(m)) is exact.

use std::collections::{BTreeMap, BTreeSet};

use super::{check_weights, ChainSmoothing, Model, BOUNDARY};
use crate::error::{Error, Result};
use crate::morphology::{Lexicon, RuleSet};
use crate::tagset::{Tag, TagSchema};

const MAGIC: &str = "morphtag-model";
const VERSION: &str = "1";
const BOUNDARY_NAME: &str = "<s>";
const SECTIONS: [&str; 5] = ["[schema]", "[rules]", "[lexicon]", "[trigrams]", "[end]"];

fn format_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Shifts line numbers of errors from an embedded section to file lines.
fn shift(e: Error, offset: usize) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse {
            line: line + offset,
            message,
        },
        other => other,
    }
}

fn parse_weights(words: &[&str], line: usize) -> Result<[f64; 3]> {
    if words.len() != 3 {
        return Err(format_error(line, "expected three weights"));
    }
    let mut w = [0.0; 3];
    for (slot, word) in w.iter_mut().zip(words) {
        *slot = word
            .parse()
            .map_err(|_| format_error(line, format!("invalid weight `{word}`")))?;
    }
    check_weights(w).map_err(|e| format_error(line, e.to_string()))
}

impl Model {
    pub fn to_text(&self) -> String {
        let [l1, l2, l3] = self.lambda;
        let mut out = format!("{MAGIC} {VERSION} lambda {l1} {l2} {l3}\n");
        match self.smoothing {
            ChainSmoothing::Raw => out.push_str("smoothing raw\n"),
            ChainSmoothing::Backoff([k1, k2, k3]) => {
                out.push_str(&format!("smoothing backoff {k1} {k2} {k3}\n"))
            }
        }
        out.push_str("[schema]\n");
        out.push_str(&self.schema.to_text());
        out.push_str("[rules]\n");
        out.push_str(&self.rules.to_text());
        out.push_str("[lexicon]\n");
        out.push_str(&self.lexicon.to_text());
        out.push_str("[trigrams]\n");
        let name = |sym: u32| {
            if sym == BOUNDARY {
                BOUNDARY_NAME.to_string()
            } else {
                self.tags[sym as usize - 1].to_string()
            }
        };
        let lines: BTreeSet<String> = self
            .trigrams
            .iter()
            .map(|(&[a, b, c], n)| format!("{}\t{}\t{}\t{n}\n", name(a), name(b), name(c)))
            .collect();
        for l in lines {
            out.push_str(&l);
        }
        out.push_str("[end]\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let header: Vec<&str> = lines.first().copied().unwrap_or("").split(' ').collect();
        if header.len() != 6 || header[0] != MAGIC || header[2] != "lambda" {
            return Err(format_error(1, "not a model file"));
        }
        if header[1] != VERSION {
            return Err(format_error(
                1,
                format!("unsupported model version `{}`", header[1]),
            ));
        }
        let lambda = parse_weights(&header[3..], 1)?;
        let smoothing_line: Vec<&str> = lines.get(1).copied().unwrap_or("").split(' ').collect();
        let smoothing = match smoothing_line.as_slice() {
            ["smoothing", "raw"] => ChainSmoothing::Raw,
            ["smoothing", "backoff", rest @ ..] => ChainSmoothing::Backoff(parse_weights(rest, 2)?),
            _ => return Err(format_error(2, "expected a smoothing line")),
        };

        // locate the section headers in order
        let mut starts = Vec::with_capacity(SECTIONS.len());
        let mut from = 2;
        for name in SECTIONS {
            let pos = lines[from..]
                .iter()
                .position(|l| *l == name)
                .ok_or_else(|| format_error(lines.len(), format!("missing section {name}")))?;
            starts.push(from + pos);
            from += pos + 1;
        }
        if starts[0] != 2 {
            return Err(format_error(3, "expected [schema]"));
        }
        if lines[starts[4] + 1..].iter().any(|l| !l.is_empty()) {
            return Err(format_error(starts[4] + 2, "content after [end]"));
        }
        let body = |k: usize| -> (usize, String) {
            let (a, b) = (starts[k] + 1, starts[k + 1]);
            let mut s = lines[a..b].join("\n");
            s.push('\n');
            (a, s)
        };

        let (offset, schema_text) = body(0);
        let schema = TagSchema::parse(&schema_text).map_err(|e| shift(e, offset))?;
        let (offset, rules_text) = body(1);
        let rules = RuleSet::parse(&rules_text, &schema).map_err(|e| shift(e, offset))?;
        let (a, b) = (starts[2] + 1, starts[3]);
        let lexicon = Lexicon::parse_lines(
            lines[a..b].iter().enumerate().map(|(i, l)| (a + i + 1, *l)),
            &schema,
        )?;

        let mut raw = Vec::new();
        let mut distinct = BTreeSet::new();
        for (i, line) in lines[starts[3] + 1..starts[4]].iter().enumerate() {
            let lineno = starts[3] + i + 2;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(format_error(lineno, "expected 4 tab-separated fields"));
            }
            let mut tags: [Option<Tag>; 3] = [None, None, None];
            for (slot, field) in tags.iter_mut().zip(&fields[..3]) {
                if *field != BOUNDARY_NAME {
                    *slot = Some(
                        schema
                            .parse_tag(field)
                            .map_err(|e| format_error(lineno, format!("invalid tag `{field}`: {e}")))?,
                    );
                }
            }
            let count: u64 = fields[3]
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| format_error(lineno, format!("invalid count `{}`", fields[3])))?;
            let Some(t) = tags[2].clone() else {
                return Err(format_error(lineno, "boundary cannot be predicted"));
            };
            distinct.insert(t);
            raw.push((lineno, tags, count));
        }
        let tags: Vec<Tag> = distinct.into_iter().collect();
        let sym = |t: &Option<Tag>, lineno: usize| -> Result<u32> {
            match t {
                None => Ok(BOUNDARY),
                Some(t) => tags
                    .binary_search(t)
                    .map(|i| i as u32 + 1)
                    .map_err(|_| format_error(lineno, format!("history tag `{t}` never predicted"))),
            }
        };
        let mut trigrams = BTreeMap::new();
        for (lineno, t, n) in &raw {
            let key = [sym(&t[0], *lineno)?, sym(&t[1], *lineno)?, sym(&t[2], *lineno)?];
            if trigrams.insert(key, *n).is_some() {
                return Err(format_error(*lineno, "duplicate trigram"));
            }
        }
        Self::assemble(schema, rules, lexicon, tags, trigrams, lambda, smoothing)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_text())
    }

    /// Reads a model file; I/O failures are reported as [`Error::Format`].
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}
