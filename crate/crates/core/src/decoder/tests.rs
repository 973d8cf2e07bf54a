use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::model::TrainOptions;
use crate::morphology::RuleSet;
use crate::tagset::TagSchema;

/// A model given directly by tables of log probabilities.
struct TableModel {
    tags: Vec<Tag>,
    emit: HashMap<String, Vec<(Tag, f64)>>,
    trans: HashMap<(Option<usize>, Option<usize>, usize), f64>,
}

impl SequenceModel for TableModel {
    type Key = usize;

    fn candidates(&self, token: &Token) -> Vec<(Tag, f64)> {
        self.emit.get(&token.norm).cloned().unwrap_or_default()
    }

    fn key(&self, tag: &Tag) -> Result<usize> {
        self.tags
            .iter()
            .position(|t| t == tag)
            .ok_or_else(|| Error::UnknownCategory(tag.category.clone()))
    }

    fn ln_transition(&self, tag: &usize, prev1: Option<&usize>, prev2: Option<&usize>) -> f64 {
        self.trans[&(prev2.copied(), prev1.copied(), *tag)]
    }
}

const NAMES: [&str; 4] = ["adva", "konj", "subs", "verf"];

/// Random instance with dyadic log probabilities, so sums are exact and
/// ties are common.
fn random_instance(seed: u64) -> (TableModel, Vec<Token>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_tags = rng.gen_range(1..=4);
    let len = rng.gen_range(0..=6);
    let tags: Vec<Tag> = NAMES[..n_tags].iter().map(|n| Tag::bare(*n)).collect();
    let ln = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.1) {
            f64::NEG_INFINITY
        } else {
            -(rng.gen_range(0..6) as f64) / 4.0
        }
    };
    let mut trans = HashMap::new();
    let hist: Vec<Option<usize>> = std::iter::once(None).chain((0..n_tags).map(Some)).collect();
    for &h2 in &hist {
        for &h1 in &hist {
            for t in 0..n_tags {
                trans.insert((h2, h1, t), ln(&mut rng));
            }
        }
    }
    let mut emit = HashMap::new();
    let mut tokens = Vec::new();
    for i in 0..len {
        let word = format!("w{i}");
        let mut cands = Vec::new();
        for t in &tags {
            if rng.gen_bool(0.7) {
                cands.push((t.clone(), ln(&mut rng)));
            }
        }
        emit.insert(word.clone(), cands);
        tokens.push(Token::new(word, i));
    }
    (TableModel { tags, emit, trans }, tokens)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn viterbi_equals_brute_force(seed in any::<u64>()) {
        let (m, tokens) = random_instance(seed);
        let fast = tag_sequence(&m, &tokens);
        let slow = brute_force_best(&m, &tokens);
        prop_assert_eq!(&fast, &slow);
        if let Ok(best) = fast {
            let score = sequence_log_prob(&m, &tokens, &best).unwrap();
            prop_assert!(score > f64::NEG_INFINITY);
        }
    }

    #[test]
    fn wide_beam_is_exact(seed in any::<u64>()) {
        let (m, tokens) = random_instance(seed);
        let exact = tag_sequence(&m, &tokens);
        let beam = tag_sequence_with(&m, &tokens, &DecodeOptions { beam: Some(16) });
        prop_assert_eq!(exact, beam);
    }
}

fn two_tag_model(t: [[f64; 2]; 3], e: [[f64; 2]; 2]) -> (TableModel, Vec<Token>) {
    // t[0]: P(x | <s>,<s>); t[1]: P(x | <s>, adva); t[2]: P(x | <s>, konj)
    let tags = vec![Tag::bare("adva"), Tag::bare("konj")];
    let mut trans = HashMap::new();
    for x in 0..2 {
        trans.insert((None, None, x), t[0][x].ln());
        trans.insert((None, Some(0), x), t[1][x].ln());
        trans.insert((None, Some(1), x), t[2][x].ln());
    }
    let mut emit = HashMap::new();
    for (i, row) in e.iter().enumerate() {
        emit.insert(
            format!("w{i}"),
            tags.iter().cloned().zip(row.iter().map(|p| p.ln())).collect(),
        );
    }
    let tokens = (0..2).map(|i| Token::new(format!("w{i}"), i)).collect();
    (TableModel { tags, emit, trans }, tokens)
}

#[test]
fn hand_enumeration_two_by_two() {
    let (m, tokens) = two_tag_model(
        [[0.6, 0.4], [0.3, 0.7], [0.9, 0.1]],
        [[0.5, 0.5], [0.2, 0.8]],
    );
    // aa: .6*.5*.3*.2 = .018   ak: .6*.5*.7*.8 = .168
    // ka: .4*.5*.9*.2 = .036   kk: .4*.5*.1*.8 = .016
    let expected = vec![Tag::bare("adva"), Tag::bare("konj")];
    assert_eq!(brute_force_best(&m, &tokens).unwrap(), expected);
    assert_eq!(tag_sequence(&m, &tokens).unwrap(), expected);
    let p = sequence_log_prob(&m, &tokens, &expected).unwrap().exp();
    assert!((p - 0.168).abs() < 1e-12);
}

#[test]
fn ties_prefer_lexicographically_smaller_tags() {
    let (m, tokens) = two_tag_model(
        [[0.5, 0.5], [0.5, 0.5], [0.5, 0.5]],
        [[0.5, 0.5], [0.5, 0.5]],
    );
    let expected = vec![Tag::bare("adva"), Tag::bare("adva")];
    assert_eq!(tag_sequence(&m, &tokens).unwrap(), expected);
    assert_eq!(brute_force_best(&m, &tokens).unwrap(), expected);
}

#[test]
fn empty_and_single_token() {
    let (m, _) = random_instance(7);
    assert_eq!(tag_sequence(&m, &[]).unwrap(), Vec::<Tag>::new());
    let (m, tokens) = two_tag_model(
        [[0.01, 0.99], [0.5, 0.5], [0.5, 0.5]],
        [[1.0, 0.0], [0.5, 0.5]],
    );
    // point mass on adva wins against the transition preference
    assert_eq!(tag_sequence(&m, &tokens[..1]).unwrap(), vec![Tag::bare("adva")]);
}

#[test]
fn brute_force_guard() {
    let tags: Vec<Tag> = NAMES.iter().map(|n| Tag::bare(*n)).collect();
    let cands: Vec<(Tag, f64)> = tags.iter().map(|t| (t.clone(), -1.0)).collect();
    let mut emit = HashMap::new();
    emit.insert("w".to_string(), cands);
    let m = TableModel {
        tags,
        emit,
        trans: HashMap::new(),
    };
    let tokens: Vec<Token> = (0..11).map(|i| Token::new("w", i)).collect();
    assert_eq!(
        brute_force_best(&m, &tokens).unwrap_err(),
        Error::SearchSpaceTooLarge(4u128.pow(10))
    );
}

#[test]
fn impossible_input_has_no_path() {
    let (m, _) = two_tag_model([[0.5, 0.5]; 3], [[0.5, 0.5]; 2]);
    let unknown = [Token::new("zzz", 0)];
    assert_eq!(tag_sequence(&m, &unknown).unwrap_err(), Error::NoPath);
    assert_eq!(brute_force_best(&m, &unknown).unwrap_err(), Error::NoPath);
}

#[test]
fn trellis_states_are_finite_pairs() {
    for seed in 0..50 {
        let (m, tokens) = random_instance(seed);
        let Ok(trellis) = build_trellis(&m, &tokens, &DecodeOptions::default()) else {
            continue;
        };
        assert_eq!(trellis.len(), tokens.len());
        for i in 0..trellis.len() {
            for (prev, _, score) in trellis.states(i) {
                assert!(score.is_finite() && score <= 0.0);
                assert_eq!(prev.is_none(), i == 0);
            }
        }
    }
}

fn schema() -> TagSchema {
    TagSchema::default_greek()
}

fn corpus() -> Vec<Sequence> {
    let s = schema();
    let text = "ὁ\tarti:num=sg,case=nom,gen=masc\n\
                ἀνήρ\tsubs:num=sg,case=nom,gen=masc\n\
                λέγει\tverf:pers=3,num=sg,mood=ind,tense=pres,voice=act\n\
                .\tpunct\n\
                \n\
                ἡ\tarti:num=sg,case=nom,gen=fem\n\
                γυνή\tsubs:num=sg,case=nom,gen=fem\n\
                λέγει\tverf:pers=3,num=sg,mood=ind,tense=pres,voice=act\n\
                καί\tkonj\n\
                ὁ\tarti:num=sg,case=nom,gen=masc\n\
                ἀνήρ\tsubs:num=sg,case=nom,gen=masc\n\
                .\tpunct\n";
    crate::text::parse_annotated_corpus(text, &s).unwrap()
}

fn model() -> Model {
    Model::train(&corpus(), RuleSet::empty(), schema(), &TrainOptions::default()).unwrap()
}

#[test]
fn real_model_agrees_with_oracle_and_beats_perturbations() {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for s in corpus() {
        let best = tag_sequence(&m, &s.tokens).unwrap();
        let score = m.sequence_log_prob(&s.tokens, &best).unwrap();
        let cands: Vec<Vec<(Tag, f64)>> = s.tokens.iter().map(|t| m.candidates(t)).collect();
        let total: u128 = cands.iter().map(|c| c.len() as u128).product();
        if total <= BRUTE_FORCE_LIMIT {
            assert_eq!(brute_force_best(&m, &s.tokens).unwrap(), best);
        }
        for _ in 0..100 {
            let mut other = best.clone();
            let i = rng.gen_range(0..other.len());
            other[i] = cands[i][rng.gen_range(0..cands[i].len())].0.clone();
            assert!(score >= m.sequence_log_prob(&s.tokens, &other).unwrap());
        }
    }
}

#[test]
fn tag_text_decodes_sequences_independently() {
    let m = model();
    assert!(tag_text(&m, "").unwrap().is_empty());
    let first = tag_text(&m, "ὁ ἀνήρ λέγει.").unwrap();
    let second = tag_text(&m, "ἡ γυνή λέγει.").unwrap();
    let both = tag_text(&m, "ὁ ἀνήρ λέγει. ἡ γυνή λέγει.").unwrap();
    let tags = |v: &[(Token, Tag)]| v.iter().map(|(_, t)| t.clone()).collect::<Vec<_>>();
    let mut expected = tags(&first);
    expected.extend(tags(&second));
    assert_eq!(tags(&both), expected);
    assert_eq!(both.len(), 8);
    assert_eq!(first[1].1.to_string(), "subs:num=sg,case=nom,gen=masc");
}

#[test]
fn sequence_log_prob_rejects_mismatch() {
    let m = model();
    let tokens = [Token::new("ὁ", 0)];
    assert!(matches!(
        m.sequence_log_prob(&tokens, &[]),
        Err(Error::LengthMismatch { .. })
    ));
    let impossible = m
        .sequence_log_prob(&tokens, &[Tag::bare("punct")])
        .unwrap();
    assert_eq!(impossible, f64::NEG_INFINITY);
}
