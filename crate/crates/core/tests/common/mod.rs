//! Dense brute-force reference implementations and fixtures shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use doccluster::kmeans::{assign, run_kmeans, InitMethod, KMeansConfig};
use doccluster::preprocess::TokenStream;
use doccluster::similarity::{similarity, MeasureKind};
use doccluster::synth::{generate, SynthSpec};
use doccluster::vectorize::{
    build_vocabulary, vectorize_corpus, SparseVector, TermDocMatrix, TfMode,
};
use doccluster::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-9;

/// Reference TF-IDF: every quantity recomputed from scratch on dense arrays.
pub struct DenseModel {
    pub terms: Vec<String>,
    /// doc_id → unit row, only for documents with a positive weight.
    pub rows: Vec<(String, Vec<f64>)>,
    pub empty: Vec<String>,
}

pub fn dense_tfidf(streams: &[TokenStream], min_df: usize, mode: TfMode) -> DenseModel {
    let n = streams.len();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for s in streams {
        let uniq: BTreeSet<&str> = s.tokens.iter().map(String::as_str).collect();
        for t in uniq {
            *df.entry(t).or_default() += 1;
        }
    }
    let terms: Vec<String> = df
        .iter()
        .filter(|&(_, &d)| d >= min_df)
        .map(|(t, _)| t.to_string())
        .collect();

    let mut rows = Vec::new();
    let mut empty = Vec::new();
    for s in streams {
        let mut row = vec![0.0; terms.len()];
        for (i, term) in terms.iter().enumerate() {
            let tf = s.tokens.iter().filter(|t| *t == term).count();
            if tf == 0 {
                continue;
            }
            let idf = (n as f64 / df[term.as_str()] as f64).log10();
            let tfw = match mode {
                TfMode::Smooth => 1.0 + (tf as f64).log10(),
                TfMode::PaperLiteral => (tf as f64).log10(),
            };
            row[i] = tfw * idf;
        }
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            rows.push((s.doc_id.clone(), row.iter().map(|x| x / norm).collect()));
        } else {
            empty.push(s.doc_id.clone());
        }
    }
    DenseModel { terms, rows, empty }
}

pub fn dense_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub fn dense_fuzzy(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| x.min(*y)).sum();
    let den: f64 = a.iter().zip(b).map(|(x, y)| x.max(*y)).sum();
    num / den
}

/// Compares a sparse matrix against the dense reference; returns the first
/// mismatch as a message.
pub fn compare_to_dense(m: &TermDocMatrix, d: &DenseModel) -> Result<(), String> {
    if m.vocabulary.terms() != d.terms.as_slice() {
        return Err(format!(
            "vocabulary {:?} != {:?}",
            m.vocabulary.terms(),
            d.terms
        ));
    }
    if m.empty_docs != d.empty {
        return Err(format!("empty docs {:?} != {:?}", m.empty_docs, d.empty));
    }
    if m.rows.len() != d.rows.len() {
        return Err("row count differs".into());
    }
    for (row, (id, dense)) in m.rows.iter().zip(&d.rows) {
        if &row.doc_id != id {
            return Err(format!("row order: {} vs {id}", row.doc_id));
        }
        let got = row.vector.to_dense(d.terms.len());
        for (j, (g, e)) in got.iter().zip(dense).enumerate() {
            if (g - e).abs() > TOL {
                return Err(format!("{id}[{j}]: {g} vs {e}"));
            }
        }
    }
    Ok(())
}

/// Random token streams: up to `max_docs` documents over up to `max_terms`
/// distinct terms, with repeated tokens so tf > 1 occurs.
pub fn random_streams(rng: &mut ChaCha8Rng, max_docs: usize, max_terms: usize) -> Vec<TokenStream> {
    let n_docs = rng.gen_range(2..=max_docs);
    let n_terms = rng.gen_range(2..=max_terms);
    (0..n_docs)
        .map(|d| {
            let len = rng.gen_range(0..30);
            // a skewed draw gives some terms a high document frequency
            let tokens = (0..len)
                .map(|_| {
                    let r: f64 = rng.gen();
                    format!("t{:02}", ((r * r) * n_terms as f64) as usize)
                })
                .collect();
            TokenStream {
                doc_id: format!("d{d:02}.txt"),
                tokens,
            }
        })
        .collect()
}

/// Nonnegative sparse vector of dimension `dim`, roughly half zeros; may be
/// all zero.
pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> SparseVector {
    let dense: Vec<f64> = (0..dim)
        .map(|_| {
            if rng.gen_bool(0.5) {
                rng.gen_range(0.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    SparseVector::from_dense(&dense)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The 5 × 200 synthetic corpus used for the separability checks.
pub fn separable_corpus(dir: &Path, overlap: f64) -> doccluster::synth::GeneratedCorpus {
    let spec = SynthSpec {
        overlap,
        seed: 7,
        ..SynthSpec::default()
    };
    generate(&spec, dir).expect("generate synthetic corpus")
}

pub fn random_matrix(seed: u64) -> Option<TermDocMatrix> {
    let mut r = rng(seed);
    let streams = random_streams(&mut r, 40, 30);
    let vocab = build_vocabulary(&streams, 1).ok()?;
    vectorize_corpus(&streams, &vocab, TfMode::Smooth).ok()
}

/// Checks every invariant of a finished run; returns a description of the
/// first violation.
pub fn check_run(m: &TermDocMatrix, cfg: &KMeansConfig) -> Result<(), String> {
    let model = match run_kmeans(m, cfg) {
        Ok(model) => model,
        Err(Error::TooFewDistinct { .. }) => return Ok(()),
        Err(e) => return Err(e.to_string()),
    };
    if model.iterations_run > cfg.max_iterations {
        return Err(format!(
            "ran {} > {} iterations",
            model.iterations_run, cfg.max_iterations
        ));
    }
    if model.assignment.len() != m.rows.len() || model.assignment.iter().any(|&c| c >= cfg.k) {
        return Err("assignment is not a partition into k clusters".into());
    }
    if model.cluster_sizes().contains(&0) {
        return Err("empty cluster".into());
    }
    if model.converged && assign(m, &model.centroids, cfg.measure) != model.assignment {
        return Err("converged assignment is not a fixed point".into());
    }
    for s in &model.iteration_log {
        if let Some(before) = s.objective_before {
            if s.objective < before - TOL {
                return Err(format!(
                    "pass {}: objective fell {before} -> {}",
                    s.pass, s.objective
                ));
            }
        }
    }
    for (c, centroid) in model.centroids.iter().enumerate() {
        if !centroid.is_unit(TOL) {
            return Err(format!("centroid {c} has norm {}", centroid.norm()));
        }
        if centroid.entries().iter().any(|&(_, w)| w < 0.0) {
            return Err(format!("centroid {c} has a negative weight"));
        }
    }
    Ok(())
}

/// One of the seeded random configurations: `(matrix, config)` for `seed`,
/// or `None` when that seed yields no usable matrix.
pub fn random_config(seed: u64) -> Option<(TermDocMatrix, KMeansConfig)> {
    let m = random_matrix(seed)?;
    let mut r = rng(seed ^ 0xABCD);
    let measure = if seed.is_multiple_of(2) {
        MeasureKind::Cosine
    } else {
        MeasureKind::Fuzzy
    };
    let init = if seed.is_multiple_of(5) {
        InitMethod::FirstK
    } else {
        InitMethod::PlusPlus
    };
    let k = r.gen_range(1..=m.rows.len().min(6));
    let cfg = KMeansConfig::new(k, measure)
        .with_seed(seed)
        .with_init(init)
        .with_max_iterations(r.gen_range(1..=20))
        .with_restarts(r.gen_range(1..=3));
    Some((m, cfg))
}

/// Symmetry (bitwise) and range over `n` random nonzero pairs per measure.
pub fn check_similarity_pairs(seed: u64, n: usize) -> Result<(), String> {
    let mut r = rng(seed);
    for measure in MeasureKind::ALL {
        let mut pairs = 0;
        while pairs < n {
            let dim = r.gen_range(1..60);
            let a = random_vector(&mut r, dim);
            let b = random_vector(&mut r, dim);
            if a.is_empty() || b.is_empty() {
                continue;
            }
            let ab = similarity(measure, &a, &b).map_err(|e| e.to_string())?;
            let ba = similarity(measure, &b, &a).map_err(|e| e.to_string())?;
            if ab.to_bits() != ba.to_bits() {
                return Err(format!("{measure}: asymmetric {ab} vs {ba}"));
            }
            if !(-TOL..=1.0 + TOL).contains(&ab) {
                return Err(format!("{measure}: {ab} outside [0, 1]"));
            }
            pairs += 1;
        }
    }
    Ok(())
}
