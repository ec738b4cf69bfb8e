//! Cosine and fuzzy (sigma-count Jaccard) similarity over sparse vectors.
//!
//! A unit-normalized TF-IDF vector has every component in (0, 1], so it can be
//! read as a fuzzy set over the vocabulary with those components as
//! membership degrees. Fuzzy intersection is the pointwise minimum, union the
//! pointwise maximum, and cardinality the sigma-count (sum of memberships):
//!
//! ```text
//! fuzzy(a, b) = Σ_t min(a_t, b_t) / Σ_t max(a_t, b_t)
//! ```
//!
//! Both measures walk the merged support of the two vectors in ascending index
//! order, so `sim(a, b)` and `sim(b, a)` perform the same floating-point
//! operations in the same order and agree bitwise.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorize::SparseVector;

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Cosine,
    Fuzzy,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 2] = [MeasureKind::Cosine, MeasureKind::Fuzzy];

    pub fn label(self) -> &'static str {
        match self {
            MeasureKind::Cosine => "cosine",
            MeasureKind::Fuzzy => "fuzzy",
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" => Ok(MeasureKind::Cosine),
            "fuzzy" => Ok(MeasureKind::Fuzzy),
            other => Err(Error::Config(format!("unknown measure {other:?}"))),
        }
    }
}

/// Calls `f(a_t, b_t)` for every index in the union of both supports, in
/// ascending order, with 0 standing in for an absent component.
#[inline]
fn merge_walk(a: &SparseVector, b: &SparseVector, mut f: impl FnMut(f64, f64)) {
    let (a, b) = (a.entries(), b.entries());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (ia, va) = a[i];
        let (ib, vb) = b[j];
        if ia == ib {
            f(va, vb);
            i += 1;
            j += 1;
        } else if ia < ib {
            f(va, 0.0);
            i += 1;
        } else {
            f(0.0, vb);
            j += 1;
        }
    }
    for &(_, va) in &a[i..] {
        f(va, 0.0);
    }
    for &(_, vb) in &b[j..] {
        f(0.0, vb);
    }
}

pub fn dot(a: &SparseVector, b: &SparseVector) -> f64 {
    let (a, b) = (a.entries(), b.entries());
    let (mut i, mut j) = (0, 0);
    let mut sum = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Equal => {
                sum += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    sum
}

/// `a·b / (‖a‖‖b‖)`.
pub fn cosine_similarity(a: &SparseVector, b: &SparseVector) -> Result<f64> {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot(a, b) / (na * nb))
}

/// Sigma-count Jaccard: `Σ min / Σ max` over the merged support.
pub fn fuzzy_similarity(a: &SparseVector, b: &SparseVector) -> Result<f64> {
    let mut inter = 0.0;
    let mut union = 0.0;
    merge_walk(a, b, |x, y| {
        inter += x.min(y);
        union += x.max(y);
    });
    if union == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(inter / union)
}

pub fn similarity(kind: MeasureKind, a: &SparseVector, b: &SparseVector) -> Result<f64> {
    match kind {
        MeasureKind::Cosine => cosine_similarity(a, b),
        MeasureKind::Fuzzy => fuzzy_similarity(a, b),
    }
}

/// Pre-computed norm for repeated cosine comparisons against the same vector.
pub(crate) fn similarity_with_norms(
    kind: MeasureKind,
    a: &SparseVector,
    a_norm: f64,
    b: &SparseVector,
    b_norm: f64,
) -> f64 {
    match kind {
        MeasureKind::Cosine => dot(a, b) / (a_norm * b_norm),
        MeasureKind::Fuzzy => {
            let mut inter = 0.0;
            let mut union = 0.0;
            merge_walk(a, b, |x, y| {
                inter += x.min(y);
                union += x.max(y);
            });
            inter / union
        }
    }
}
