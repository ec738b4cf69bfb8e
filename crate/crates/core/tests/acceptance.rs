//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero if any
//! criterion fails.

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use doccluster::corpus_io::{load_corpus, LoadOptions};
use doccluster::kmeans::{run_kmeans, KMeansConfig};
use doccluster::preprocess::{preprocess_corpus, StemRuleSet, StopwordList, TokenStream};
use doccluster::report::{elapsed_between, ClockTime};
use doccluster::similarity::{cosine_similarity, fuzzy_similarity, MeasureKind};
use doccluster::synth::{purity, Labels};
use doccluster::vectorize::{build_vocabulary, tf_idf_weight, vectorize_corpus, TfMode};
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn clock_elapsed() -> Outcome {
    let cases = [
        ("9:07:09 PM", "9: 25:59 PM", 1130),
        ("9:30:17 PM", "9:45:7 PM", 890),
    ];
    for (start, end, expected) in cases {
        let s: ClockTime = start.parse().map_err(|e| format!("{e}"))?;
        let e: ClockTime = end.parse().map_err(|e| format!("{e}"))?;
        let got = elapsed_between(s, e).map_err(|e| e.to_string())?;
        ensure(got == expected, || {
            format!("{start} → {end}: {got} s, expected {expected}")
        })?;
    }
    Ok("1130 s and 890 s".into())
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut corpora = 0;
    let mut comparisons = 0usize;
    for seed in 0..120 {
        let mut r = rng(seed);
        let streams = random_streams(&mut r, 10, 50);
        let Ok(vocab) = build_vocabulary(&streams, 1) else {
            continue;
        };
        let dense = dense_tfidf(&streams, 1, TfMode::Smooth);
        let Ok(m) = vectorize_corpus(&streams, &vocab, TfMode::Smooth) else {
            ensure(dense.rows.is_empty(), || {
                format!("seed {seed}: vectorize failed")
            })?;
            continue;
        };
        compare_to_dense(&m, &dense).map_err(|e| format!("seed {seed}: {e}"))?;
        let dim = m.dim();
        for a in &m.rows {
            for b in &m.rows {
                let (da, db) = (a.vector.to_dense(dim), b.vector.to_dense(dim));
                let c = cosine_similarity(&a.vector, &b.vector).map_err(|e| e.to_string())?;
                let f = fuzzy_similarity(&a.vector, &b.vector).map_err(|e| e.to_string())?;
                ensure((c - dense_cosine(&da, &db)).abs() <= TOL, || {
                    format!("seed {seed}: cosine {c}")
                })?;
                ensure((f - dense_fuzzy(&da, &db)).abs() <= TOL, || {
                    format!("seed {seed}: fuzzy {f}")
                })?;
                comparisons += 1;
            }
        }
        corpora += 1;
    }
    let elapsed = started.elapsed();
    ensure(corpora >= 100, || format!("only {corpora} usable corpora"))?;
    ensure(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{corpora} corpora, {comparisons} similarity pairs, {elapsed:.2?}"
    ))
}

fn separable_corpus_purity() -> Outcome {
    let started = Instant::now();
    let mut notes = Vec::new();
    for (overlap, floor) in [(0.0, 1.0), (0.3, 0.90)] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let g = separable_corpus(dir.path(), overlap);
        let corpus =
            load_corpus(&g.corpus_dir, &LoadOptions::default()).map_err(|e| e.to_string())?;
        let streams = preprocess_corpus(&corpus, &StopwordList::builtin(), &StemRuleSet::builtin());
        let vocab = build_vocabulary(&streams, 2).map_err(|e| e.to_string())?;
        let m = vectorize_corpus(&streams, &vocab, TfMode::Smooth).map_err(|e| e.to_string())?;
        let labels = Labels::read(&g.labels_path).map_err(|e| e.to_string())?;
        let ids: Vec<String> = m.rows.iter().map(|r| r.doc_id.clone()).collect();
        ensure(ids.len() == 1000, || {
            format!("{} clustered docs", ids.len())
        })?;
        for measure in MeasureKind::ALL {
            let model = run_kmeans(&m, &KMeansConfig::new(5, measure).with_seed(0))
                .map_err(|e| e.to_string())?;
            let p = purity(&model, &ids, &labels).map_err(|e| e.to_string())?;
            ensure(model.converged, || {
                format!("overlap {overlap} {measure}: did not converge")
            })?;
            ensure(p >= floor, || {
                format!("overlap {overlap} {measure}: purity {p:.4} < {floor}")
            })?;
            notes.push(format!("{overlap}/{measure}={p:.3}"));
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("purity {} in {elapsed:.2?}", notes.join(" ")))
}

fn invariant_suite() -> Outcome {
    let mut done = 0;
    let mut seed = 0;
    while done < 50 {
        seed += 1;
        let Some((m, cfg)) = random_config(seed) else {
            continue;
        };
        check_run(&m, &cfg).map_err(|e| format!("config seed {seed}: {e}"))?;
        done += 1;
    }
    check_similarity_pairs(2024, 10_000)?;
    Ok("50 configurations, 10000 pairs per measure".into())
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("timing");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn comparison_protocol() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let g = separable_corpus(dir.path(), 0.0);
    let mut reports = Vec::new();
    let mut verdict = String::new();
    for threads in ["1", "4"] {
        let out_dir = dir.path().join(format!("out-{threads}"));
        let out = Command::new(env!("CARGO_BIN_EXE_doccluster"))
            .args([
                "--threads",
                threads,
                "compare",
                "--k",
                "5",
                "--seed",
                "0",
                "--input",
            ])
            .arg(&g.corpus_dir)
            .arg("--out")
            .arg(&out_dir)
            .arg("--labels")
            .arg(&g.labels_path)
            .output()
            .map_err(|e| e.to_string())?;
        let stdout = String::from_utf8_lossy(&out.stdout);
        ensure(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
        for row in [
            "Start Time",
            "End Time",
            "Total Time",
            "cosine",
            "fuzzy",
            "Verdict:",
        ] {
            ensure(stdout.contains(row), || {
                format!("table lacks {row:?}:\n{stdout}")
            })?;
        }
        verdict = stdout
            .lines()
            .find(|l| l.starts_with("Verdict:"))
            .unwrap_or_default()
            .to_string();
        reports.push(read_report(&out_dir)?);
    }
    ensure(reports[0] == reports[1], || {
        "report.json differs between --threads 1 and 4".into()
    })?;
    Ok(format!("table printed, reports identical; {verdict}"))
}

fn read_report(dir: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(dir.join("report.json")).map_err(|e| e.to_string())?;
    let mut v: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    strip_timing(&mut v);
    Ok(v)
}

fn no_wa_token() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let texts = [
        "It was a dark night. The dog was barking.",
        "WAS it worth it? Was, was, was!",
        "Nothing was written; things were said.",
    ];
    for (i, t) in texts.iter().enumerate() {
        fs::write(dir.path().join(format!("d{i}.txt")), t).map_err(|e| e.to_string())?;
    }
    let corpus = load_corpus(dir.path(), &LoadOptions::default()).map_err(|e| e.to_string())?;
    ensure(
        corpus
            .documents
            .iter()
            .any(|d| d.text.split_whitespace().any(|w| w == "was")),
        || "fixture lacks \"was\"".into(),
    )?;
    let streams = preprocess_corpus(&corpus, &StopwordList::builtin(), &StemRuleSet::builtin());
    let tokens: usize = streams.iter().map(|s| s.tokens.len()).sum();
    for s in &streams {
        ensure(!s.tokens.iter().any(|t| t == "wa"), || {
            format!("{} contains \"wa\": {:?}", s.doc_id, s.tokens)
        })?;
    }
    Ok(format!(
        "{} streams, {tokens} tokens scanned",
        streams.len()
    ))
}

fn paper_literal_mode() -> Outcome {
    for (n, df) in [(4, 1), (10, 3), (1000, 999)] {
        let w = tf_idf_weight(1, n, df, TfMode::PaperLiteral).map_err(|e| e.to_string())?;
        ensure(w == 0.0, || format!("tf=1 weight {w}"))?;
    }
    let stream = |id: &str, text: &str| TokenStream {
        doc_id: id.into(),
        tokens: text.split_whitespace().map(String::from).collect(),
    };
    let streams = [
        stream("repeat-a", "alpha alpha beta beta"),
        stream("repeat-b", "beta beta gamma gamma"),
        stream("repeat-c", "alpha alpha gamma gamma"),
        stream("unique", "alpha beta gamma"),
    ];
    let vocab = build_vocabulary(&streams, 1).map_err(|e| e.to_string())?;
    let m = vectorize_corpus(&streams, &vocab, TfMode::PaperLiteral).map_err(|e| e.to_string())?;
    ensure(m.empty_docs == ["unique"], || {
        format!("empty_docs {:?}", m.empty_docs)
    })?;
    ensure(m.rows.len() == 3, || format!("{} rows", m.rows.len()))?;
    let smooth = vectorize_corpus(&streams, &vocab, TfMode::Smooth).map_err(|e| e.to_string())?;
    ensure(smooth.empty_docs.is_empty(), || {
        "smooth mode dropped a document".into()
    })?;
    Ok("tf=1 → 0; unique-term document in empty_docs".into())
}

fn main() {
    let criteria: [Criterion; 7] = [
        (
            "clock arithmetic reproduces 1130 s and 890 s",
            clock_elapsed,
        ),
        (
            "sparse TF-IDF and similarities match dense oracle",
            oracle_equivalence,
        ),
        (
            "separable synthetic corpus is recovered",
            separable_corpus_purity,
        ),
        ("k-means and similarity invariants", invariant_suite),
        ("compare table and reproducible report", comparison_protocol),
        ("no \"wa\" token from \"was\"", no_wa_token),
        ("paper-literal weighting", paper_literal_mode),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS — {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL — {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
