use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use avlem::corpus::synthetic::{generate_synthetic, SynthConfig};
use avlem::corpus::{split_train_test, Corpus, ReviewFormat, Split, SplitConfig, Stopwords};

fn small_world() -> impl Strategy<Value = (SynthConfig, u64)> {
    (3usize..12, 4usize..30, 4usize..10, 4usize..12, any::<u64>()).prop_map(
        |(users, items, aspects, values, seed)| {
            let config = SynthConfig {
                users,
                items,
                aspects,
                values,
                vocab: 40,
                reviews_per_user: 4,
                review_len: 8,
                ..SynthConfig::default()
            };
            (config, seed)
        },
    )
}

/// Recomputes every split property from the corpus alone.
fn check_split(corpus: &Corpus, split: &Split, config: SplitConfig) -> Result<(), TestCaseError> {
    let n = corpus.reviews.len();
    let train: BTreeSet<usize> = split.train_reviews.iter().copied().collect();
    let test: BTreeSet<usize> = split.test_reviews.iter().copied().collect();
    prop_assert_eq!(train.len(), split.train_reviews.len());
    prop_assert_eq!(test.len(), split.test_reviews.len());
    prop_assert!(train.is_disjoint(&test));
    prop_assert_eq!(train.len() + test.len(), n);
    prop_assert!(train.iter().chain(&test).all(|&k| k < n));

    let mut per_user: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for (k, r) in corpus.reviews.iter().enumerate() {
        let e = per_user.entry(r.user).or_default();
        e.0 += 1;
        if train.contains(&k) {
            e.1 += 1;
        }
    }
    for (total, kept) in per_user.values() {
        let want = ((config.review_frac * *total as f64).round() as usize).clamp(1, *total);
        prop_assert_eq!(*kept, want);
    }

    let test_queries: BTreeSet<u32> = split.test_queries.iter().copied().collect();
    for qs in &corpus.item_queries {
        if !qs.is_empty() {
            prop_assert!(qs.iter().any(|q| !test_queries.contains(q)));
        }
    }

    let mut expected: BTreeMap<(u32, u32), BTreeSet<u32>> = BTreeMap::new();
    for &k in &test {
        let r = &corpus.reviews[k];
        for &q in &corpus.item_queries[r.item as usize] {
            if test_queries.contains(&q) {
                expected.entry((r.user, q)).or_default().insert(r.item);
            }
        }
    }
    let got: BTreeMap<(u32, u32), BTreeSet<u32>> = split
        .test_pairs
        .iter()
        .map(|p| ((p.user, p.query), p.relevant.iter().copied().collect()))
        .collect();
    prop_assert_eq!(got, expected);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn split_invariants_hold((config, seed) in small_world(), frac in 0.3f64..0.95, qfrac in 0.0f64..0.8) {
        let synth = generate_synthetic(&config, seed)
            .map_err(|e| TestCaseError::reject(e.to_string()))?;
        let sc = SplitConfig { review_frac: frac, query_test_frac: qfrac };
        let split = split_train_test(&synth.corpus, seed, sc).unwrap();
        check_split(&synth.corpus, &split, sc)?;
        prop_assert!(split.validate(&synth.corpus).is_ok());
        prop_assert_eq!(&split, &split_train_test(&synth.corpus, seed, sc).unwrap());
        check_split(&synth.corpus, &synth.split, SplitConfig::default())?;
    }

    #[test]
    fn corpus_and_split_round_trip((config, seed) in small_world()) {
        let synth = generate_synthetic(&config, seed)
            .map_err(|e| TestCaseError::reject(e.to_string()))?;
        let dir = tempfile::tempdir().unwrap();
        synth.corpus.write_dir(dir.path()).unwrap();
        let back = Corpus::load_dir(dir.path(), ReviewFormat::Canonical, &Stopwords::none()).unwrap();
        prop_assert_eq!(&back, &synth.corpus);

        let path = dir.path().join("split.json");
        synth.split.save(&path).unwrap();
        let split = Split::load(&path).unwrap();
        prop_assert_eq!(&split, &synth.split);
        prop_assert!(split.validate(&back).is_ok());
    }
}
