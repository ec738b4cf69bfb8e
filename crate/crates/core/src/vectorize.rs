//! Vocabulary construction, log-tf · log-idf weighting and unit-length
//! sparse document vectors.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::TokenStream;

/// Sparse vector with strictly increasing indices and strictly positive values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Validating constructor.
    pub fn new(entries: Vec<(usize, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::Contract(format!(
                    "sparse indices not strictly increasing at {} -> {}",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(i, v)) = entries.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Contract(format!(
                "weight at index {i} is {v}, expected > 0"
            )));
        }
        Ok(SparseVector { entries })
    }

    /// Builds from arbitrary (index, value) pairs: sorts, sums duplicates and
    /// drops non-positive results.
    pub fn from_unsorted(pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut map: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, v) in pairs {
            *map.entry(i).or_insert(0.0) += v;
        }
        SparseVector {
            entries: map.into_iter().filter(|&(_, v)| v > 0.0).collect(),
        }
    }

    /// Keeps the strictly positive components of a dense vector.
    pub fn from_dense(dense: &[f64]) -> Self {
        SparseVector {
            entries: dense
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v > 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    /// Divides every component by the L2 norm.
    pub fn normalized(&self) -> Result<SparseVector> {
        let norm = self.norm();
        if self.entries.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(SparseVector {
            entries: self
                .entries
                .iter()
                .map(|&(i, v)| (i, v / norm))
                .filter(|&(_, v)| v > 0.0)
                .collect(),
        })
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// Bitwise equality of indices and values.
    pub fn bits_eq(&self, other: &SparseVector) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.0 == b.0 && a.1.to_bits() == b.1.to_bits())
    }

    pub(crate) fn bit_key(&self) -> Vec<(usize, u64)> {
        self.entries
            .iter()
            .map(|&(i, v)| (i, v.to_bits()))
            .collect()
    }
}

/// A document's TF-IDF vector.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedVector {
    pub doc_id: String,
    pub vector: SparseVector,
    pub norm_applied: bool,
}

pub fn unit_normalize(v: &WeightedVector) -> Result<WeightedVector> {
    Ok(WeightedVector {
        doc_id: v.doc_id.clone(),
        vector: v.vector.normalized()?,
        norm_applied: true,
    })
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
pub enum TfMode {
    /// (1 + log10 tf) · log10(N / N_i)
    #[default]
    #[value(name = "smooth")]
    Smooth,
    /// log10 tf · log10(N / N_i); terms seen once get weight 0
    #[value(name = "paper-literal")]
    PaperLiteral,
}

impl TfMode {
    pub fn label(self) -> &'static str {
        match self {
            TfMode::Smooth => "smooth",
            TfMode::PaperLiteral => "paper-literal",
        }
    }
}

/// Log-scaled term frequency times log inverse document frequency, base 10.
pub fn tf_idf_weight(tf: usize, n_docs: usize, doc_freq: usize, mode: TfMode) -> Result<f64> {
    if n_docs == 0 || doc_freq == 0 || doc_freq > n_docs {
        return Err(Error::Contract(format!(
            "document frequency {doc_freq} outside 1..={n_docs}"
        )));
    }
    if tf == 0 {
        return Ok(0.0);
    }
    let idf = (n_docs as f64 / doc_freq as f64).log10();
    let tf_part = match mode {
        TfMode::Smooth => 1.0 + (tf as f64).log10(),
        TfMode::PaperLiteral => (tf as f64).log10(),
    };
    Ok((tf_part * idf).max(0.0))
}

/// Pruned, lexicographically ordered term dictionary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index_of: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    n_docs: usize,
    min_df: usize,
}

impl Vocabulary {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index_of.get(term).copied()
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Keeps terms that occur in at least `min_df` documents. Occurrences within
/// one document count once.
pub fn build_vocabulary(streams: &[TokenStream], min_df: usize) -> Result<Vocabulary> {
    if min_df == 0 {
        return Err(Error::Config("min_df must be at least 1".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in streams {
        let distinct: HashSet<&str> = s.tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    let (terms, doc_freq): (Vec<String>, Vec<usize>) = counts
        .into_iter()
        .filter(|&(_, df)| df >= min_df)
        .map(|(t, df)| (t.to_string(), df))
        .unzip();
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary { min_df });
    }
    let index_of = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(Vocabulary {
        terms,
        index_of,
        doc_freq,
        n_docs: streams.len(),
        min_df,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermDocMatrix {
    pub vocabulary: Vocabulary,
    pub tf_mode: TfMode,
    /// One unit-normalized row per non-empty document, in corpus order.
    pub rows: Vec<WeightedVector>,
    /// Documents with no positive weight left after pruning and weighting.
    pub empty_docs: Vec<String>,
}

impl TermDocMatrix {
    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn vectors(&self) -> Vec<&SparseVector> {
        self.rows.iter().map(|r| &r.vector).collect()
    }

    /// `doc_id<TAB>index:weight,...` per row, weights at 9 significant digits.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&row.doc_id);
            out.push('\t');
            for (n, &(i, w)) in row.vector.entries().iter().enumerate() {
                if n > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{i}:{}", format_sig9(w));
            }
            out.push('\n');
        }
        out
    }
}

fn weigh_stream(stream: &TokenStream, vocab: &Vocabulary, mode: TfMode) -> Result<SparseVector> {
    let mut tf: HashMap<usize, usize> = HashMap::new();
    for t in &stream.tokens {
        if let Some(i) = vocab.index_of(t) {
            *tf.entry(i).or_insert(0) += 1;
        }
    }
    let mut entries = Vec::with_capacity(tf.len());
    for (i, count) in tf {
        let w = tf_idf_weight(count, vocab.n_docs, vocab.doc_freq[i], mode)?;
        if w > 0.0 {
            entries.push((i, w));
        }
    }
    entries.sort_unstable_by_key(|&(i, _)| i);
    SparseVector::new(entries)
}

pub fn vectorize_corpus(
    streams: &[TokenStream],
    vocab: &Vocabulary,
    mode: TfMode,
) -> Result<TermDocMatrix> {
    let weighted: Vec<Result<SparseVector>> = streams
        .par_iter()
        .map(|s| weigh_stream(s, vocab, mode))
        .collect();

    let mut rows = Vec::new();
    let mut empty_docs = Vec::new();
    for (stream, raw) in streams.iter().zip(weighted) {
        let raw = WeightedVector {
            doc_id: stream.doc_id.clone(),
            vector: raw?,
            norm_applied: false,
        };
        match unit_normalize(&raw) {
            Ok(row) => rows.push(row),
            Err(Error::ZeroVector) => empty_docs.push(stream.doc_id.clone()),
            Err(e) => return Err(e),
        }
    }
    Ok(TermDocMatrix {
        vocabulary: vocab.clone(),
        tf_mode: mode,
        rows,
        empty_docs,
    })
}

/// `%.9g`-style formatting.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
