use proptest::prelude::*;

use super::*;

fn counts(id: &str, cells: &[(&str, u64)]) -> CategoryCounts {
    CategoryCounts::new(
        id,
        cells.iter().map(|(c, n)| (c.to_string(), *n)).collect(),
    )
}

/// A group where text `i` deviates in exactly `alpha[i]` categories.
///
/// Each deviation is a category private to one text with 9 occurrences:
/// χ² ≥ 12 for its owner and about 9/n < 3.841 for the other n − 1 texts.
/// The rest of each text is spread evenly over ten shared categories, whose
/// χ² stays far below the threshold.
fn group_with_alpha(alpha: &[usize]) -> Vec<CategoryCounts> {
    const TOTAL: u64 = 100_000;
    alpha
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let mut cells: BTreeMap<String, u64> = (0..a)
                .map(|k| (format!("p{i:02}_{k:02}"), 9))
                .collect();
            let rest = TOTAL - 9 * a as u64;
            for b in 0..10 {
                cells.insert(format!("base{b}"), rest / 10 + if b == 0 { rest % 10 } else { 0 });
            }
            CategoryCounts::new(format!("t{i}"), cells)
        })
        .collect()
}

#[test]
fn count_histogram() {
    let tagged: Vec<(Token, Tag)> = ["subs", "subs", "verf", "punct"]
        .iter()
        .enumerate()
        .map(|(i, c)| (Token::new("w", i), Tag::bare(*c)))
        .collect();
    let c = count_categories(&tagged, "t", &default_excluded());
    assert_eq!(c.get("subs"), 2);
    assert_eq!(c.get("verf"), 1);
    assert_eq!(c.get("punct"), 0);
    assert_eq!(c.total, 3);
    let empty = count_categories(&[], "e", &default_excluded());
    assert_eq!(empty.total, 0);
    assert!(empty.counts.is_empty());
}

#[test]
fn cell_arithmetic() {
    assert_eq!(chi_square_cell(30, 100, 0.2).unwrap(), 6.25);
    assert_eq!(chi_square_cell(25, 100, 0.25).unwrap(), 0.0);
    assert_eq!(chi_square_cell(1, 0, 0.5), Err(Error::ZeroTotal));
    assert_eq!(chi_square_cell(1, 2, 0.0), Err(Error::InvalidProbability(0.0)));
    assert_eq!(chi_square_cell(1, 2, 1.0), Err(Error::InvalidProbability(1.0)));
    assert!(chi_square_cell(3, 2, 0.5).is_err());
}

#[test]
fn rho_pattern() {
    for x in 1..20 {
        let alpha = [x, x - 1, x, x, x - 1, x + 3];
        let (_, _, r) = rho(&alpha);
        let r = r.unwrap();
        let expected = [-0.124, -0.868, -0.124, -0.124, -0.868, 2.109];
        for (a, b) in r.iter().zip(expected) {
            assert!((a - b).abs() < 1e-3, "{r:?}");
        }
    }
}

#[test]
fn group_test_reproduces_alpha_and_flags_outlier() {
    let group = group_with_alpha(&[7, 6, 7, 7, 6, 10]);
    let r = run_test(&group, &TestConfig::default()).unwrap();
    assert_eq!(r.alpha, vec![7, 6, 7, 7, 6, 10]);
    assert_eq!(r.flagged, vec!["t5".to_string()]);
    let rho = r.rho.as_ref().unwrap();
    assert!((rho[5] - 2.109).abs() < 1e-3);
    assert!((r.mu - (43.0 / 6.0)).abs() < 1e-12);
}

#[test]
fn identical_texts_are_degenerate() {
    let t = |id| counts(id, &[("subs", 5), ("verf", 3), ("konj", 2)]);
    let r = run_test(&[t("a"), t("b"), t("c")], &TestConfig::default()).unwrap();
    assert!(r.is_degenerate());
    assert_eq!(r.sigma, 0.0);
    assert!(r.flagged.is_empty());
    assert!(r.chi2.iter().flatten().all(|x| *x == Some(0.0)));
    let (table, csv) = render_report(&r);
    assert!(table.lines().last().unwrap().contains("undef"));
    assert!(csv.ends_with("rho,undef,undef,undef\n"));
}

#[test]
fn group_errors() {
    let a = counts("a", &[("subs", 1)]);
    let b = counts("b", &[("subs", 1)]);
    assert_eq!(
        run_test(&[a.clone(), b.clone()], &TestConfig::default()).unwrap_err(),
        Error::TooFewTexts { required: 3, got: 2 }
    );
    let empty = counts("c", &[("subs", 0)]);
    assert_eq!(
        run_test(&[a.clone(), b.clone(), empty], &TestConfig::default()).unwrap_err(),
        Error::EmptyText("c".into())
    );
    let dup = counts("a", &[("subs", 2)]);
    assert_eq!(
        run_test(&[a.clone(), b.clone(), dup], &TestConfig::default()).unwrap_err(),
        Error::DuplicateTextId("a".into())
    );
    let c = counts("c", &[("subs", 1)]);
    let bad = TestConfig {
        threshold: 0.0,
        exclude_self: false,
    };
    assert!(run_test(&[a, b, c], &bad).is_err());
}

#[test]
fn constant_categories_are_dropped() {
    let g = vec![
        counts("a", &[("subs", 5), ("verf", 5), ("intj", 0)]),
        counts("b", &[("subs", 3), ("verf", 7), ("intj", 0)]),
        counts("c", &[("subs", 6), ("verf", 4), ("intj", 0)]),
    ];
    let r = run_test(&g, &TestConfig::default()).unwrap();
    assert_eq!(r.dropped, vec!["intj".to_string()]);
    assert_eq!(r.categories, vec!["subs".to_string(), "verf".to_string()]);
    let sum: f64 = r.pooled_probs.values().sum();
    assert!((sum - 1.0).abs() < 1e-9);
}

#[test]
fn exclude_self_changes_reference() {
    let g = vec![
        counts("a", &[("subs", 50), ("verf", 50)]),
        counts("b", &[("subs", 50), ("verf", 50)]),
        counts("c", &[("subs", 90), ("verf", 10)]),
    ];
    let with = run_test(&g, &TestConfig::default()).unwrap();
    let without = run_test(
        &g,
        &TestConfig {
            threshold: DEFAULT_THRESHOLD,
            exclude_self: true,
        },
    )
    .unwrap();
    // against the other two texts only, c looks even more deviant
    assert!(without.chi2[2][0].unwrap() > with.chi2[2][0].unwrap());
    // p = 0.5 for text c's reference: (90-50)²/50 + (10-50)²/50
    assert_eq!(without.chi2[2][0], Some(64.0));
}

#[test]
fn sig3_formatting() {
    for (x, s) in [
        (0.0909, "0.0909"),
        (21.7, "21.7"),
        (0.000453, "0.000453"),
        (69.0, "69.0"),
        (9.996, "10.0"),
        (0.0, "0"),
        (6.25, "6.25"),
        (1234.4, "1234"),
    ] {
        assert_eq!(format_sig3(x), s, "{x}");
    }
}

#[test]
fn counts_csv_round_trip() {
    let g = vec![
        counts("a", &[("subs", 5), ("verf", 0)]),
        counts("b", &[("konj", 2), ("subs", 3)]),
    ];
    let csv = write_counts_csv(&g);
    assert_eq!(csv, "category,a,b\nkonj,0,2\nsubs,5,3\nverf,0,0\n");
    let back = read_counts_csv(&csv).unwrap();
    assert_eq!(write_counts_csv(&back), csv);
    assert_eq!(back[1].total, 5);
    assert!(read_counts_csv("category,a,a\nsubs,1,1\n").is_err());
    assert!(read_counts_csv("category,a\nsubs,x\n").is_err());
    assert!(read_counts_csv("cat,a\n").is_err());
}

#[test]
fn report_csv_round_trip() {
    let g = group_with_alpha(&[2, 1, 2, 2, 1, 5]);
    let r = run_test(&g, &TestConfig::default()).unwrap();
    let csv = render_csv(&r);
    let back = parse_report_csv(&csv).unwrap();
    assert_eq!(back.texts, r.texts);
    assert_eq!(back.categories, r.categories);
    assert_eq!(back.chi2, r.chi2);
    assert_eq!(back.alpha, r.alpha);
    assert_eq!(back.rho, r.rho);
}

proptest! {
    #[test]
    fn chi2_scales_linearly(m in 0u64..50, extra in 1u64..50, p in 0.01f64..0.99, k in 2u64..20) {
        let n = m + extra;
        let base = chi_square_cell(m, n, p).unwrap();
        let scaled = chi_square_cell(m * k, n * k, p).unwrap();
        prop_assert!(base >= 0.0);
        let expected = base * k as f64;
        prop_assert!((scaled - expected).abs() <= 1e-9 * expected.max(1e-300) + 1e-12);
    }

    #[test]
    fn rho_is_shift_invariant_and_centered(alpha in prop::collection::vec(0usize..30, 3..10), shift in 0usize..20) {
        let (mu, sigma, r) = rho(&alpha);
        let shifted: Vec<usize> = alpha.iter().map(|a| a + shift).collect();
        let (mu2, sigma2, r2) = rho(&shifted);
        prop_assert!(sigma >= 0.0);
        prop_assert!((alpha.iter().map(|&a| a as f64 - mu).sum::<f64>()).abs() < 1e-9);
        prop_assert!((mu2 - mu - shift as f64).abs() < 1e-9);
        prop_assert!((sigma2 - sigma).abs() < 1e-9);
        match (r, r2) {
            (Some(r), Some(r2)) => {
                prop_assert!(r.iter().sum::<f64>().abs() < 1e-9);
                for (a, b) in r.iter().zip(&r2) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
            (None, None) => {}
            _ => prop_assert!(false, "degeneracy must not depend on shift"),
        }
    }

    #[test]
    fn flags_are_exactly_rho_at_least_two(alpha in prop::collection::vec(0usize..8, 3..9)) {
        let g = group_with_alpha(&alpha);
        let r = run_test(&g, &TestConfig::default()).unwrap();
        prop_assert_eq!(&r.alpha, &alpha);
        let expected: Vec<String> = match &r.rho {
            Some(rho) => r.texts.iter().zip(rho).filter(|(_, &x)| x >= 2.0).map(|(t, _)| t.clone()).collect(),
            None => Vec::new(),
        };
        prop_assert_eq!(r.flagged, expected);
    }

    #[test]
    fn counts_ignore_order(cats in prop::collection::vec(0usize..4, 0..30), seed in any::<u64>()) {
        let names = ["subs", "verf", "konj", "punct"];
        let mut tagged: Vec<(Token, Tag)> = cats.iter().enumerate().map(|(i, &c)| (Token::new("w", i), Tag::bare(names[c]))).collect();
        let a = count_categories(&tagged, "t", &default_excluded());
        // deterministic shuffle
        let len = tagged.len();
        if len > 1 {
            let mut s = seed;
            for i in (1..len).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                tagged.swap(i, (s >> 33) as usize % (i + 1));
            }
        }
        let b = count_categories(&tagged, "t", &default_excluded());
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.total, a.counts.values().sum::<u64>());
    }
}
