//! Most probable tag sequence under the trigram model.
//!
//! Viterbi search over states `(t_{i-1}, t_i)` in log space. Each position
//! only considers the tags its token can carry (non-zero lexical
//! probability). Among equally scored sequences the lexicographically
//! smallest one wins, comparing canonical tag strings from the first
//! position on; the exhaustive [`brute_force_best`] applies the same rule
//! and serves as the test oracle.
//!
//! Scores are accumulated as `((s + ln P(t_i | ..)) + ln P(w_i | t_i))` in
//! every code path, so equal sequences get bit-identical scores.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::tagset::{Tag, TagCode};
use crate::text::{tokenize, Sequence, Token};

/// Largest number of sequences [`brute_force_best`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// What the decoder needs from a model, in log space.
pub trait SequenceModel {
    /// Precomputed form of a tag for transition lookups.
    type Key: Clone;

    /// Tags `token` may carry with their log emission probabilities.
    /// Entries that are not finite are ignored.
    fn candidates(&self, token: &Token) -> Vec<(Tag, f64)>;

    fn key(&self, tag: &Tag) -> Result<Self::Key>;

    /// ln P(tag | prev2, prev1); `None` is the sequence boundary.
    fn ln_transition(&self, tag: &Self::Key, prev1: Option<&Self::Key>, prev2: Option<&Self::Key>) -> f64;
}

/// A tag of the model together with its history symbol.
#[derive(Debug, Clone)]
pub struct ModelKey {
    sym: u32,
    code: TagCode,
}

impl SequenceModel for Model {
    type Key = ModelKey;

    fn candidates(&self, token: &Token) -> Vec<(Tag, f64)> {
        self.emissions(token)
            .into_iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(t, p)| (t, p.ln()))
            .collect()
    }

    fn key(&self, tag: &Tag) -> Result<ModelKey> {
        let code = self.schema().encode(tag)?;
        Ok(ModelKey {
            sym: self.sym_of_code(&code),
            code,
        })
    }

    fn ln_transition(&self, tag: &ModelKey, prev1: Option<&ModelKey>, prev2: Option<&ModelKey>) -> f64 {
        let sym = |k: Option<&ModelKey>| k.map_or(0, |k| k.sym);
        self.transition_coded(&tag.code, sym(prev1), sym(prev2)).ln()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecodeOptions {
    /// Keep only this many best states per position. Approximate; `None`
    /// searches exactly.
    pub beam: Option<usize>,
}

struct Column<K> {
    tags: Vec<Tag>,
    keys: Vec<K>,
    ln_emit: Vec<f64>,
}

fn columns<M: SequenceModel>(model: &M, tokens: &[Token]) -> Result<Vec<Column<M::Key>>> {
    tokens
        .iter()
        .map(|tok| {
            let mut cands: Vec<(Tag, f64)> = model
                .candidates(tok)
                .into_iter()
                .filter(|(_, l)| l.is_finite())
                .collect();
            cands.sort_by(|a, b| a.0.cmp(&b.0));
            cands.dedup_by(|a, b| a.0 == b.0);
            if cands.is_empty() {
                return Err(Error::NoPath);
            }
            let keys = cands
                .iter()
                .map(|(t, _)| model.key(t))
                .collect::<Result<_>>()?;
            let (tags, ln_emit) = cands.into_iter().unzip();
            Ok(Column {
                tags,
                keys,
                ln_emit,
            })
        })
        .collect()
}

/// One live state of the trellis: the pair `(prev, cur)` of candidate
/// indices at positions `i-1` and `i`.
#[derive(Debug, Clone, Copy)]
struct Cell {
    prev: Option<usize>,
    cur: usize,
    score: f64,
    /// Index of the predecessor cell at position `i-1`.
    back: Option<usize>,
}

/// The Viterbi lattice of one sequence.
pub struct Trellis {
    tags: Vec<Vec<Tag>>,
    cells: Vec<Vec<Cell>>,
}

impl Trellis {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// States at `position` as `(previous tag, tag, best log score)`; the
    /// previous tag is `None` at the first position.
    pub fn states(&self, position: usize) -> Vec<(Option<&Tag>, &Tag, f64)> {
        let prev_tags = position.checked_sub(1).map(|p| &self.tags[p]);
        self.cells[position]
            .iter()
            .map(|c| {
                let prev = c.prev.map(|p| &prev_tags.expect("not first")[p]);
                (prev, &self.tags[position][c.cur], c.score)
            })
            .collect()
    }

    /// Lexicographic comparison of the best paths ending in cells `a` and
    /// `b` at `position`.
    fn compare_paths(&self, position: usize, mut a: usize, mut b: usize) -> Ordering {
        let mut order = Ordering::Equal;
        let mut k = position;
        loop {
            if a == b {
                return order;
            }
            let (ca, cb) = (self.cells[k][a], self.cells[k][b]);
            let here = ca.cur.cmp(&cb.cur);
            if here != Ordering::Equal {
                order = here;
            }
            match (ca.back, cb.back) {
                (Some(pa), Some(pb)) => {
                    a = pa;
                    b = pb;
                    k -= 1;
                }
                _ => return order,
            }
        }
    }

    fn best_last(&self) -> Option<usize> {
        let last = self.cells.len().checked_sub(1)?;
        let mut best: Option<usize> = None;
        for (i, c) in self.cells[last].iter().enumerate() {
            best = match best {
                None => Some(i),
                Some(b) => {
                    let bs = self.cells[last][b].score;
                    if c.score > bs
                        || (c.score == bs && self.compare_paths(last, i, b) == Ordering::Less)
                    {
                        Some(i)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best
    }

    fn path(&self, mut cell: usize) -> Vec<Tag> {
        let mut out = Vec::with_capacity(self.cells.len());
        for k in (0..self.cells.len()).rev() {
            let c = self.cells[k][cell];
            out.push(self.tags[k][c.cur].clone());
            cell = c.back.unwrap_or(0);
        }
        out.reverse();
        out
    }
}

/// Builds the full Viterbi lattice for `tokens`.
pub fn build_trellis<M: SequenceModel>(
    model: &M,
    tokens: &[Token],
    options: &DecodeOptions,
) -> Result<Trellis> {
    let cols = columns(model, tokens)?;
    let mut trellis = Trellis {
        tags: Vec::with_capacity(cols.len()),
        cells: Vec::with_capacity(cols.len()),
    };
    for (i, col) in cols.iter().enumerate() {
        let mut cells: Vec<Cell> = Vec::new();
        if i == 0 {
            for (b, key) in col.keys.iter().enumerate() {
                let score = 0.0 + model.ln_transition(key, None, None);
                let score = score + col.ln_emit[b];
                if score > f64::NEG_INFINITY {
                    cells.push(Cell {
                        prev: None,
                        cur: b,
                        score,
                        back: None,
                    });
                }
            }
        } else {
            let prev_col = &cols[i - 1];
            let width = col.keys.len();
            // dense (prev, cur) → cell slot
            let mut slot: Vec<Option<Cell>> = vec![None; prev_col.keys.len() * width];
            for (ci, c) in trellis.cells[i - 1].iter().enumerate() {
                let a = c.cur;
                let z = c.prev.map(|z| &cols[i - 2].keys[z]);
                for (b, key) in col.keys.iter().enumerate() {
                    let score = c.score + model.ln_transition(key, Some(&prev_col.keys[a]), z);
                    let score = score + col.ln_emit[b];
                    if score == f64::NEG_INFINITY || score.is_nan() {
                        continue;
                    }
                    let entry = &mut slot[a * width + b];
                    let replace = match entry {
                        None => true,
                        Some(old) => {
                            score > old.score
                                || (score == old.score
                                    && trellis.compare_paths(i - 1, ci, old.back.expect("has back"))
                                        == Ordering::Less)
                        }
                    };
                    if replace {
                        *entry = Some(Cell {
                            prev: Some(a),
                            cur: b,
                            score,
                            back: Some(ci),
                        });
                    }
                }
            }
            cells = slot.into_iter().flatten().collect();
        }
        if let Some(width) = options.beam {
            if cells.len() > width {
                let mut order: Vec<usize> = (0..cells.len()).collect();
                order.sort_by(|&x, &y| cells[y].score.total_cmp(&cells[x].score).then(x.cmp(&y)));
                order.truncate(width.max(1));
                order.sort_unstable();
                cells = order.into_iter().map(|k| cells[k]).collect();
            }
        }
        if cells.is_empty() {
            return Err(Error::NoPath);
        }
        trellis.tags.push(col.tags.clone());
        trellis.cells.push(cells);
    }
    Ok(trellis)
}

/// The most probable tag sequence for `tokens`.
pub fn tag_sequence<M: SequenceModel>(model: &M, tokens: &[Token]) -> Result<Vec<Tag>> {
    tag_sequence_with(model, tokens, &DecodeOptions::default())
}

pub fn tag_sequence_with<M: SequenceModel>(
    model: &M,
    tokens: &[Token],
    options: &DecodeOptions,
) -> Result<Vec<Tag>> {
    if tokens.is_empty() {
        return Ok(Vec::new());
    }
    let trellis = build_trellis(model, tokens, options)?;
    let best = trellis.best_last().ok_or(Error::NoPath)?;
    Ok(trellis.path(best))
}

fn score_keys<M: SequenceModel>(model: &M, keys: &[&M::Key], ln_emit: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..keys.len() {
        let prev1 = i.checked_sub(1).map(|p| keys[p]);
        let prev2 = i.checked_sub(2).map(|p| keys[p]);
        acc = acc + model.ln_transition(keys[i], prev1, prev2);
        acc = acc + ln_emit[i];
    }
    acc
}

/// ln P(tags, tokens) under the model; −∞ when a tag is not a candidate of
/// its token or a transition has probability zero.
pub fn sequence_log_prob<M: SequenceModel>(model: &M, tokens: &[Token], tags: &[Tag]) -> Result<f64> {
    if tokens.len() != tags.len() {
        return Err(Error::LengthMismatch {
            tokens: tokens.len(),
            tags: tags.len(),
        });
    }
    let keys = tags.iter().map(|t| model.key(t)).collect::<Result<Vec<_>>>()?;
    let mut ln_emit = Vec::with_capacity(tags.len());
    for (tok, tag) in tokens.iter().zip(tags) {
        let l = model
            .candidates(tok)
            .into_iter()
            .find(|(t, l)| t == tag && l.is_finite())
            .map_or(f64::NEG_INFINITY, |(_, l)| l);
        ln_emit.push(l);
    }
    let refs: Vec<&M::Key> = keys.iter().collect();
    Ok(score_keys(model, &refs, &ln_emit))
}

/// Exhaustive argmax over all candidate sequences, with the same scoring
/// and tie-breaking as [`tag_sequence`]. Refuses instances with more than
/// [`BRUTE_FORCE_LIMIT`] sequences.
pub fn brute_force_best<M: SequenceModel>(model: &M, tokens: &[Token]) -> Result<Vec<Tag>> {
    if tokens.is_empty() {
        return Ok(Vec::new());
    }
    let cols = columns(model, tokens)?;
    let mut size: u128 = 1;
    for c in &cols {
        size = size.saturating_mul(c.tags.len() as u128);
        if size > BRUTE_FORCE_LIMIT {
            return Err(Error::SearchSpaceTooLarge(size));
        }
    }
    // odometer over candidate indices, last position fastest: lexicographic
    let mut idx = vec![0usize; cols.len()];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let keys: Vec<&M::Key> = idx.iter().zip(&cols).map(|(&k, c)| &c.keys[k]).collect();
        let emit: Vec<f64> = idx.iter().zip(&cols).map(|(&k, c)| c.ln_emit[k]).collect();
        let score = score_keys(model, &keys, &emit);
        if score > f64::NEG_INFINITY && best.as_ref().map_or(true, |(s, _)| score > *s) {
            best = Some((score, idx.clone()));
        }
        let mut pos = cols.len();
        loop {
            if pos == 0 {
                let (_, idx) = best.ok_or(Error::NoPath)?;
                return Ok(idx
                    .iter()
                    .zip(&cols)
                    .map(|(&k, c)| c.tags[k].clone())
                    .collect());
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < cols[pos].tags.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Tokenizes `text` and tags each sequence independently.
pub fn tag_text(model: &Model, text: &str) -> Result<Vec<(Token, Tag)>> {
    tag_text_with(model, text, &DecodeOptions::default())
}

pub fn tag_text_with(model: &Model, text: &str, options: &DecodeOptions) -> Result<Vec<(Token, Tag)>> {
    let mut out = Vec::new();
    for seq in tokenize(text) {
        out.extend(tag_tokens(model, seq, options)?);
    }
    Ok(out)
}

fn tag_tokens(model: &Model, seq: Sequence, options: &DecodeOptions) -> Result<Vec<(Token, Tag)>> {
    let tags = tag_sequence_with(model, &seq.tokens, options)?;
    Ok(seq.tokens.into_iter().zip(tags).collect())
}

#[cfg(test)]
mod tests;
