//! Similarity-maximizing K-means over unit-normalized sparse vectors.
//!
//! Each round assigns every document to its most similar centroid (lowest
//! cluster id on ties), then replaces each centroid by the normalized
//! arithmetic mean of its members. The loop stops when an assignment pass
//! reproduces the previous assignment exactly.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::{similarity_with_norms, MeasureKind};
use crate::vectorize::{format_sig9, SparseVector, TermDocMatrix};

pub const DEFAULT_MAX_ITERATIONS: usize = 100;
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    /// The first k rows in corpus order.
    #[value(name = "firstk")]
    FirstK,
    /// Seeded greedy k-means++: each round draws `2 + ln k` candidates with
    /// weight `1 - max similarity to the chosen seeds` and keeps the one
    /// that raises total best similarity the most.
    #[default]
    #[value(name = "plusplus")]
    PlusPlus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub measure: MeasureKind,
    pub seed: u64,
    pub max_iterations: usize,
    pub init: InitMethod,
    /// Independent seeded runs; the one with the highest objective wins.
    /// Ignored for `FirstK`, which is deterministic.
    pub restarts: usize,
}

impl KMeansConfig {
    pub fn new(k: usize, measure: MeasureKind) -> Self {
        KMeansConfig {
            k,
            measure,
            seed: 0,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            init: InitMethod::default(),
            restarts: DEFAULT_RESTARTS,
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    fn effective_restarts(&self) -> usize {
        match self.init {
            InitMethod::FirstK => 1,
            InitMethod::PlusPlus => self.restarts,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init(mut self, init: InitMethod) -> Self {
        self.init = init;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn validate(&self, n_rows: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.k > n_rows {
            return Err(Error::Config(format!(
                "k = {} exceeds the number of non-empty documents ({n_rows})",
                self.k
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationStat {
    /// 1-based assignment pass number.
    pub pass: usize,
    pub changed_docs: usize,
    /// Total similarity of every document to its newly chosen centroid.
    pub objective: f64,
    /// Total similarity of the previous assignment against the same
    /// centroids; absent on the first pass.
    pub objective_before: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub measure: MeasureKind,
    /// Unit-normalized, nonnegative centroids; `centroids[c]` is the
    /// normalized mean of the members of cluster `c`.
    pub centroids: Vec<SparseVector>,
    /// Row index → cluster id.
    pub assignment: Vec<usize>,
    /// Assign→update rounds that changed at least one assignment. The pass
    /// that detects convergence is not counted.
    pub iterations_run: usize,
    pub converged: bool,
    /// Objective after every assignment pass, including the confirming pass.
    pub objective_trace: Vec<f64>,
    pub iteration_log: Vec<IterationStat>,
    /// Total similarity of the returned assignment to the returned centroids.
    pub objective: f64,
    /// Which restart produced this model.
    pub restart: usize,
}

impl ClusterModel {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// `iter<TAB>changed_docs<TAB>objective` per assignment pass.
    pub fn iteration_log_text(&self) -> String {
        let mut out = String::new();
        for s in &self.iteration_log {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                s.pass,
                s.changed_docs,
                format_sig9(s.objective)
            );
        }
        out
    }
}

fn norms(vectors: &[&SparseVector]) -> Vec<f64> {
    vectors.iter().map(|v| v.norm()).collect()
}

pub fn init_centroids(matrix: &TermDocMatrix, config: &KMeansConfig) -> Result<Vec<SparseVector>> {
    init_from_rows(&matrix.vectors(), config)
}

pub(crate) fn init_from_rows(
    rows: &[&SparseVector],
    config: &KMeansConfig,
) -> Result<Vec<SparseVector>> {
    init_with_stream(rows, config, 0)
}

/// `stream` selects an independent random sequence for the same seed.
fn init_with_stream(
    rows: &[&SparseVector],
    config: &KMeansConfig,
    stream: u64,
) -> Result<Vec<SparseVector>> {
    config.validate(rows.len())?;
    let k = config.k;
    let distinct: HashSet<Vec<(usize, u64)>> = rows.iter().map(|r| r.bit_key()).collect();
    if distinct.len() < k {
        return Err(Error::TooFewDistinct {
            k,
            rows: rows.len(),
            distinct: distinct.len(),
            duplicates: rows.len() - distinct.len(),
        });
    }

    match config.init {
        InitMethod::FirstK => Ok(rows[..k].iter().map(|&r| r.clone()).collect()),
        InitMethod::PlusPlus => Ok(plus_plus(rows, config, stream)),
    }
}

fn plus_plus(rows: &[&SparseVector], config: &KMeansConfig, stream: u64) -> Vec<SparseVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    let row_norms = norms(rows);
    let n = rows.len();

    // group[i]: lowest index of a row bitwise equal to row i
    let mut first_of: HashMap<Vec<(usize, u64)>, usize> = HashMap::new();
    let group: Vec<usize> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| *first_of.entry(r.bit_key()).or_insert(i))
        .collect();

    let mut chosen: Vec<usize> = Vec::with_capacity(config.k);
    let mut chosen_groups: HashSet<usize> = HashSet::new();
    let mut best = vec![f64::NEG_INFINITY; n];

    let local_trials = 2 + (config.k as f64).ln().floor() as usize;
    let mut pick = rng.gen_range(0..n);
    loop {
        chosen.push(pick);
        chosen_groups.insert(group[pick]);
        if chosen.len() == config.k {
            break;
        }
        let seed_row = rows[pick];
        let seed_norm = row_norms[pick];
        let sims: Vec<f64> = rows
            .par_iter()
            .zip(&row_norms)
            .map(|(r, &rn)| similarity_with_norms(config.measure, r, rn, seed_row, seed_norm))
            .collect();
        for (b, s) in best.iter_mut().zip(sims) {
            *b = b.max(s);
        }

        let weights: Vec<f64> = (0..n)
            .map(|i| {
                if chosen_groups.contains(&group[i]) {
                    0.0
                } else {
                    (1.0 - best[i]).max(0.0)
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        pick = if total > 0.0 {
            let candidates: Vec<usize> = (0..local_trials)
                .map(|_| draw_weighted(&weights, total, &mut rng))
                .collect();
            best_candidate(rows, &row_norms, &best, &candidates, config.measure)
        } else {
            // Remaining distinct rows are numerically parallel to a seed.
            (0..n)
                .find(|&i| !chosen_groups.contains(&group[i]))
                .expect("distinct row count checked above")
        };
    }
    chosen.into_iter().map(|i| rows[i].clone()).collect()
}

/// Index drawn with probability `weights[i] / total`.
fn draw_weighted(weights: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last_positive = i;
        acc += w;
        if acc > target {
            return i;
        }
    }
    last_positive
}

/// Candidate that maximizes the total best similarity once added; first
/// candidate wins ties.
fn best_candidate(
    rows: &[&SparseVector],
    row_norms: &[f64],
    best: &[f64],
    candidates: &[usize],
    measure: MeasureKind,
) -> usize {
    let mut winner = candidates[0];
    let mut winner_score = f64::NEG_INFINITY;
    for &c in candidates {
        let score: f64 = rows
            .par_iter()
            .zip(row_norms)
            .map(|(r, &rn)| similarity_with_norms(measure, r, rn, rows[c], row_norms[c]))
            .collect::<Vec<f64>>()
            .iter()
            .zip(best)
            .map(|(s, b)| s.max(*b))
            .sum();
        if score > winner_score {
            winner_score = score;
            winner = c;
        }
    }
    winner
}

struct Scored {
    assignment: Vec<usize>,
    best: Vec<f64>,
    previous: Option<Vec<f64>>,
}

fn assign_scored(
    rows: &[&SparseVector],
    row_norms: &[f64],
    centroids: &[SparseVector],
    measure: MeasureKind,
    previous: Option<&[usize]>,
) -> Scored {
    let centroid_norms: Vec<f64> = centroids.iter().map(SparseVector::norm).collect();
    let per_doc: Vec<(usize, f64, f64)> = rows
        .par_iter()
        .zip(row_norms)
        .enumerate()
        .map(|(d, (row, &rn))| {
            let mut best_c = 0;
            let mut best_s = f64::NEG_INFINITY;
            let mut prev_s = f64::NAN;
            for (c, (centroid, &cn)) in centroids.iter().zip(&centroid_norms).enumerate() {
                let s = similarity_with_norms(measure, row, rn, centroid, cn);
                if s > best_s {
                    best_s = s;
                    best_c = c;
                }
                if previous.map(|p| p[d]) == Some(c) {
                    prev_s = s;
                }
            }
            (best_c, best_s, prev_s)
        })
        .collect();

    Scored {
        assignment: per_doc.iter().map(|t| t.0).collect(),
        best: per_doc.iter().map(|t| t.1).collect(),
        previous: previous.map(|_| per_doc.iter().map(|t| t.2).collect()),
    }
}

/// Most similar centroid per row; ties go to the lowest cluster id.
pub fn assign(
    matrix: &TermDocMatrix,
    centroids: &[SparseVector],
    measure: MeasureKind,
) -> Vec<usize> {
    let rows = matrix.vectors();
    assign_rows(&rows, centroids, measure)
}

pub(crate) fn assign_rows(
    rows: &[&SparseVector],
    centroids: &[SparseVector],
    measure: MeasureKind,
) -> Vec<usize> {
    assign_scored(rows, &norms(rows), centroids, measure, None).assignment
}

/// Normalized member means. An empty cluster is reseeded with the document
/// least similar to its own new centroid, preferring documents whose cluster
/// keeps at least one other member, then lowest index.
pub fn update_centroids(
    matrix: &TermDocMatrix,
    assignment: &[usize],
    k: usize,
    measure: MeasureKind,
) -> Vec<SparseVector> {
    update_from_rows(&matrix.vectors(), assignment, k, measure, matrix.dim())
}

pub(crate) fn update_from_rows(
    rows: &[&SparseVector],
    assignment: &[usize],
    k: usize,
    measure: MeasureKind,
    dim: usize,
) -> Vec<SparseVector> {
    assert_eq!(
        rows.len(),
        assignment.len(),
        "assignment must cover every row"
    );
    let mut sizes = vec![0usize; k];
    for &c in assignment {
        sizes[c] += 1;
    }

    // Accumulate in row order so sums do not depend on scheduling.
    let mut centroids: Vec<Option<SparseVector>> = (0..k)
        .into_par_iter()
        .map(|c| {
            if sizes[c] == 0 {
                return None;
            }
            let mut sum = vec![0.0; dim];
            for (row, _) in rows.iter().zip(assignment).filter(|(_, &a)| a == c) {
                for &(i, v) in row.entries() {
                    sum[i] += v;
                }
            }
            let count = sizes[c] as f64;
            for s in &mut sum {
                *s /= count;
            }
            SparseVector::from_dense(&sum).normalized().ok()
        })
        .collect();

    let empty: Vec<usize> = (0..k).filter(|&c| centroids[c].is_none()).collect();
    if !empty.is_empty() {
        let row_norms = norms(rows);
        let mut scored: Vec<(f64, usize)> = rows
            .iter()
            .enumerate()
            .map(|(d, row)| {
                let s = match &centroids[assignment[d]] {
                    Some(cv) => similarity_with_norms(measure, row, row_norms[d], cv, cv.norm()),
                    None => f64::NEG_INFINITY,
                };
                (s, d)
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut used = vec![false; rows.len()];
        for c in empty {
            let donor = scored
                .iter()
                .find(|&&(_, d)| !used[d] && sizes[assignment[d]] > 1)
                .or_else(|| scored.iter().find(|&&(_, d)| !used[d]))
                .map(|&(_, d)| d)
                .expect("k <= rows guarantees a donor");
            used[donor] = true;
            sizes[assignment[donor]] -= 1;
            sizes[c] += 1;
            centroids[c] = Some(rows[donor].clone());
        }
    }
    centroids
        .into_iter()
        .map(|c| c.expect("every centroid filled"))
        .collect()
}

pub fn run_kmeans(matrix: &TermDocMatrix, config: &KMeansConfig) -> Result<ClusterModel> {
    run_on_rows(&matrix.vectors(), matrix.dim(), config)
}

/// Runs every restart and keeps the highest objective; the earliest restart
/// wins ties.
pub(crate) fn run_on_rows(
    rows: &[&SparseVector],
    dim: usize,
    config: &KMeansConfig,
) -> Result<ClusterModel> {
    config.validate(rows.len())?;
    let mut best: Option<ClusterModel> = None;
    for restart in 0..config.effective_restarts() {
        let model = run_once(rows, dim, config, restart)?;
        if best.as_ref().is_none_or(|b| model.objective > b.objective) {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn run_once(
    rows: &[&SparseVector],
    dim: usize,
    config: &KMeansConfig,
    restart: usize,
) -> Result<ClusterModel> {
    let initial = init_with_stream(rows, config, restart as u64)?;
    let row_norms = norms(rows);
    let measure = config.measure;

    let first = assign_scored(rows, &row_norms, &initial, measure, None);
    let mut assignment = first.assignment;
    let mut trace = vec![first.best.iter().sum::<f64>()];
    let mut log = vec![IterationStat {
        pass: 1,
        changed_docs: rows.len(),
        objective: trace[0],
        objective_before: None,
    }];
    let mut iterations_run = 1;
    let mut converged = false;
    let mut centroids;
    let objective;

    loop {
        centroids = update_from_rows(rows, &assignment, config.k, measure, dim);
        let next = assign_scored(rows, &row_norms, &centroids, measure, Some(&assignment));
        let changed = next
            .assignment
            .iter()
            .zip(&assignment)
            .filter(|(a, b)| a != b)
            .count();
        let obj: f64 = next.best.iter().sum();
        let before: f64 = next
            .previous
            .as_deref()
            .expect("previous scored")
            .iter()
            .sum();
        trace.push(obj);
        log.push(IterationStat {
            pass: log.len() + 1,
            changed_docs: changed,
            objective: obj,
            objective_before: Some(before),
        });
        if changed == 0 {
            converged = true;
            objective = obj;
            break;
        }
        if iterations_run >= config.max_iterations {
            objective = before;
            break;
        }
        assignment = next.assignment;
        iterations_run += 1;
    }

    Ok(ClusterModel {
        k: config.k,
        measure,
        centroids,
        assignment,
        iterations_run,
        converged,
        objective_trace: trace,
        iteration_log: log,
        objective,
        restart,
    })
}
