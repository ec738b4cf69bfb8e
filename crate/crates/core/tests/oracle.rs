mod common;

use common::*;
use doccluster::similarity::{cosine_similarity, fuzzy_similarity, similarity, MeasureKind};
use doccluster::vectorize::{build_vocabulary, vectorize_corpus, TfMode};

#[test]
fn tfidf_matches_dense_reference() {
    for seed in 0..150 {
        let mut r = rng(seed);
        let streams = random_streams(&mut r, 10, 50);
        for mode in [TfMode::Smooth, TfMode::PaperLiteral] {
            for min_df in [1, 2] {
                let Ok(vocab) = build_vocabulary(&streams, min_df) else {
                    continue;
                };
                let dense = dense_tfidf(&streams, min_df, mode);
                match vectorize_corpus(&streams, &vocab, mode) {
                    Ok(m) => {
                        if let Err(e) = compare_to_dense(&m, &dense) {
                            panic!("seed {seed} {mode:?} min_df {min_df}: {e}");
                        }
                    }
                    // only acceptable when the reference has no rows either
                    Err(_) => assert!(dense.rows.is_empty(), "seed {seed}"),
                }
            }
        }
    }
}

#[test]
fn similarities_match_dense_reference_on_rows() {
    for seed in 0..150 {
        let mut r = rng(1000 + seed);
        let streams = random_streams(&mut r, 10, 50);
        let Ok(vocab) = build_vocabulary(&streams, 1) else {
            continue;
        };
        let Ok(m) = vectorize_corpus(&streams, &vocab, TfMode::Smooth) else {
            continue;
        };
        let dim = m.dim();
        for a in &m.rows {
            for b in &m.rows {
                let (da, db) = (a.vector.to_dense(dim), b.vector.to_dense(dim));
                let c = cosine_similarity(&a.vector, &b.vector).unwrap();
                let f = fuzzy_similarity(&a.vector, &b.vector).unwrap();
                assert!((c - dense_cosine(&da, &db)).abs() <= TOL);
                assert!((f - dense_fuzzy(&da, &db)).abs() <= TOL);
            }
        }
    }
}

#[test]
fn similarities_match_dense_reference_on_random_vectors() {
    let mut r = rng(99);
    let mut checked = 0;
    while checked < 2000 {
        let dim = 1 + (checked % 40);
        let a = random_vector(&mut r, dim);
        let b = random_vector(&mut r, dim);
        if a.is_empty() || b.is_empty() {
            assert!(similarity(MeasureKind::Cosine, &a, &b).is_err());
            assert_eq!(
                similarity(MeasureKind::Fuzzy, &a, &b).is_err(),
                a.is_empty() && b.is_empty()
            );
            continue;
        }
        let (da, db) = (a.to_dense(dim), b.to_dense(dim));
        assert!((cosine_similarity(&a, &b).unwrap() - dense_cosine(&da, &db)).abs() <= TOL);
        assert!((fuzzy_similarity(&a, &b).unwrap() - dense_fuzzy(&da, &db)).abs() <= TOL);
        checked += 1;
    }
}
