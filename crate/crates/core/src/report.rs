//! Timing, cluster manifests and the side-by-side measure comparison.
//!
//! Elapsed times always come from [`Instant`]. Wall-clock times of day are
//! kept only for display in the comparison table.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use chrono::Timelike;
use serde::{Deserialize, Serialize};

use crate::corpus_io::LoadWarning;
use crate::error::{Error, Result};
use crate::kmeans::{ClusterModel, InitMethod, IterationStat};
use crate::similarity::MeasureKind;
use crate::vectorize::{format_sig9, TfMode};

const SECONDS_PER_DAY: u32 = 24 * 3600;

/// Time of day with one-second resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockTime {
    seconds_of_day: u32,
}

impl ClockTime {
    pub fn from_hms(hour: u32, minute: u32, second: u32) -> Result<Self> {
        if hour > 23 || minute > 59 || second > 59 {
            return Err(Error::ClockParse(format!("{hour}:{minute}:{second}")));
        }
        Ok(ClockTime {
            seconds_of_day: hour * 3600 + minute * 60 + second,
        })
    }

    pub fn now() -> Self {
        let t = chrono::Local::now();
        ClockTime {
            seconds_of_day: t.num_seconds_from_midnight() % SECONDS_PER_DAY,
        }
    }

    pub fn hour(self) -> u32 {
        self.seconds_of_day / 3600
    }

    pub fn minute(self) -> u32 {
        self.seconds_of_day / 60 % 60
    }

    pub fn second(self) -> u32 {
        self.seconds_of_day % 60
    }

    pub fn seconds_of_day(self) -> u32 {
        self.seconds_of_day
    }
}

/// `H:MM:SS AM` / `H:MM:SS PM`.
impl fmt::Display for ClockTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (h, suffix) = match self.hour() {
            0 => (12, "AM"),
            h @ 1..=11 => (h, "AM"),
            12 => (12, "PM"),
            h => (h - 12, "PM"),
        };
        write!(f, "{h}:{:02}:{:02} {suffix}", self.minute(), self.second())
    }
}

/// Accepts `H:MM:SS` (24 h) or `H:MM:SS AM|PM`. Spaces around the fields and
/// single-digit minutes or seconds are tolerated, e.g. `9: 25:59 PM` or
/// `9:45:7 PM`.
impl FromStr for ClockTime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ClockParse(s.to_string());
        let trimmed = s.trim();
        let upper = trimmed.to_ascii_uppercase();
        let (body, meridiem) = if let Some(b) = upper.strip_suffix("AM") {
            (b, Some(false))
        } else if let Some(b) = upper.strip_suffix("PM") {
            (b, Some(true))
        } else {
            (upper.as_str(), None)
        };
        let fields: Vec<u32> = body
            .split(':')
            .map(|p| p.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let [h, m, sec] = fields[..] else {
            return Err(bad());
        };
        let hour = match meridiem {
            None => h,
            Some(_) if h == 0 || h > 12 => return Err(bad()),
            Some(false) => h % 12,
            Some(true) => h % 12 + 12,
        };
        ClockTime::from_hms(hour, m, sec).map_err(|_| bad())
    }
}

impl Serialize for ClockTime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClockTime {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Whole seconds from `start` to `end` on the same day.
pub fn elapsed_between(start: ClockTime, end: ClockTime) -> Result<u64> {
    if end < start {
        return Err(Error::ClockOrder {
            start: start.to_string(),
            end: end.to_string(),
        });
    }
    Ok(u64::from(end.seconds_of_day - start.seconds_of_day))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub start_wall: ClockTime,
    pub end_wall: ClockTime,
    /// Monotonic elapsed time, whole seconds.
    pub elapsed_seconds: u64,
    /// Monotonic elapsed time, milliseconds.
    pub elapsed_millis: u64,
}

impl Timing {
    pub fn measure<T>(f: impl FnOnce() -> T) -> (T, Timing) {
        let start_wall = ClockTime::now();
        let started = Instant::now();
        let value = f();
        let elapsed = started.elapsed();
        let end_wall = ClockTime::now();
        let timing = Timing {
            start_wall,
            end_wall,
            elapsed_seconds: elapsed.as_secs(),
            elapsed_millis: elapsed.as_millis() as u64,
        };
        (value, timing)
    }

    /// Display timestamps and monotonic elapsed time agree within 2 s. Runs
    /// that cross midnight are not checked.
    pub fn clocks_agree(&self) -> bool {
        match elapsed_between(self.start_wall, self.end_wall) {
            Ok(wall) => wall.abs_diff(self.elapsed_seconds) <= 2,
            Err(_) => true,
        }
    }

    pub fn seconds_display(&self) -> String {
        format!(
            "{}.{:03}",
            self.elapsed_millis / 1000,
            self.elapsed_millis % 1000
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedRun {
    pub measure: MeasureKind,
    pub timing: Timing,
    pub model: ClusterModel,
    /// Member doc ids per cluster, sorted.
    pub clusters: Vec<Vec<String>>,
    pub purity: Option<f64>,
}

impl TimedRun {
    pub fn new(
        measure: MeasureKind,
        timing: Timing,
        model: ClusterModel,
        doc_ids: &[String],
    ) -> Self {
        let clusters = cluster_members(&model, doc_ids);
        TimedRun {
            measure,
            timing,
            model,
            clusters,
            purity: None,
        }
    }
}

pub fn cluster_members(model: &ClusterModel, doc_ids: &[String]) -> Vec<Vec<String>> {
    let mut clusters = vec![Vec::new(); model.k];
    for (d, &c) in model.assignment.iter().enumerate() {
        clusters[c].push(doc_ids[d].clone());
    }
    for members in &mut clusters {
        members.sort();
    }
    clusters
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimingProtocol {
    /// Preparation timed once; each measure's clustering phase timed alone.
    Phases,
    /// Each measure timed over a full load → preprocess → vectorize →
    /// cluster run.
    WholeRun,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSettings {
    pub k: usize,
    pub seed: u64,
    pub init: InitMethod,
    pub restarts: usize,
    pub max_iterations: usize,
    pub min_df: usize,
    pub tf_mode: TfMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub corpus_root: PathBuf,
    /// Documents loaded from disk.
    pub n_docs: usize,
    /// Documents with a non-empty vector, i.e. clustered.
    pub n_clustered: usize,
    pub vocabulary_size: usize,
    pub settings: RunSettings,
    pub protocol: TimingProtocol,
    /// Load + preprocess + vectorize, when timed separately.
    pub preparation: Option<Timing>,
    pub runs: Vec<TimedRun>,
    pub empty_docs: Vec<String>,
    pub load_warnings: Vec<LoadWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub measure: MeasureKind,
    pub total_seconds: u64,
    pub total_millis: u64,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Faster {
        measure: MeasureKind,
        margin_millis: u64,
    },
    Tie,
}

impl RunReport {
    pub fn comparison(&self) -> Vec<ComparisonRow> {
        self.runs
            .iter()
            .map(|r| ComparisonRow {
                measure: r.measure,
                total_seconds: r.timing.elapsed_seconds,
                total_millis: r.timing.elapsed_millis,
                iterations: r.model.iterations_run,
                converged: r.model.converged,
                objective: r.model.objective,
            })
            .collect()
    }

    /// Fastest measure versus the runner-up; `None` with fewer than two runs.
    /// Differences under one second are a tie.
    pub fn verdict(&self) -> Option<Verdict> {
        if self.runs.len() < 2 {
            return None;
        }
        let mut by_time: Vec<&TimedRun> = self.runs.iter().collect();
        by_time.sort_by_key(|r| (r.timing.elapsed_millis, r.measure));
        let margin = by_time[1].timing.elapsed_millis - by_time[0].timing.elapsed_millis;
        Some(if margin < 1000 {
            Verdict::Tie
        } else {
            Verdict::Faster {
                measure: by_time[0].measure,
                margin_millis: margin,
            }
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ReportJson::from(self);
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }
}

const LABEL_WIDTH: usize = 16;
const COLUMN_WIDTH: usize = 14;

/// Fixed-width comparison table, one column per measure.
pub fn render_comparison(report: &RunReport) -> Result<String> {
    if report.runs.is_empty() {
        return Err(Error::NoRuns);
    }
    let mut out = String::new();
    out.push_str(&format!(
        "Comparison of similarity measures: k = {}, {} documents clustered ({} timing)\n",
        report.settings.k,
        report.n_clustered,
        match report.protocol {
            TimingProtocol::Phases => "clustering phase",
            TimingProtocol::WholeRun => "whole run",
        }
    ));
    let mut row = |label: &str, cells: Vec<String>| {
        out.push_str(&format!("{label:<LABEL_WIDTH$}"));
        for c in cells {
            out.push_str(&format!("{c:>COLUMN_WIDTH$}"));
        }
        out.push('\n');
    };
    let runs = &report.runs;
    row(
        "",
        runs.iter().map(|r| r.measure.label().to_string()).collect(),
    );
    row(
        "Start Time",
        runs.iter()
            .map(|r| r.timing.start_wall.to_string())
            .collect(),
    );
    row(
        "End Time",
        runs.iter().map(|r| r.timing.end_wall.to_string()).collect(),
    );
    row(
        "Total Time (s)",
        runs.iter().map(|r| r.timing.seconds_display()).collect(),
    );
    row(
        "Iterations",
        runs.iter()
            .map(|r| r.model.iterations_run.to_string())
            .collect(),
    );
    row(
        "Converged",
        runs.iter()
            .map(|r| if r.model.converged { "yes" } else { "no" }.to_string())
            .collect(),
    );
    row(
        "Objective",
        runs.iter()
            .map(|r| format_sig9(r.model.objective))
            .collect(),
    );
    if runs.iter().any(|r| r.purity.is_some()) {
        row(
            "Purity",
            runs.iter()
                .map(|r| {
                    r.purity
                        .map(|p| format!("{p:.4}"))
                        .unwrap_or_else(|| "-".into())
                })
                .collect(),
        );
    }
    match report.verdict() {
        None => {}
        Some(Verdict::Tie) => out.push_str("Verdict: tie (difference under 1 s)\n"),
        Some(Verdict::Faster {
            measure,
            margin_millis,
        }) => out.push_str(&format!(
            "Verdict: {measure} is faster by {}.{:03} s\n",
            margin_millis / 1000,
            margin_millis % 1000
        )),
    }
    Ok(out)
}

#[derive(Serialize)]
struct ReportJson<'a> {
    corpus_root: String,
    n_docs: usize,
    n_clustered: usize,
    vocabulary_size: usize,
    settings: &'a RunSettings,
    protocol: TimingProtocol,
    empty_docs: &'a [String],
    load_warnings: &'a [LoadWarning],
    runs: Vec<RunJson<'a>>,
    /// Everything that varies between reruns lives under `timing` keys.
    timing: ReportTimingJson,
}

#[derive(Serialize)]
struct ReportTimingJson {
    preparation: Option<Timing>,
    verdict: Option<String>,
}

#[derive(Serialize)]
struct RunJson<'a> {
    measure: MeasureKind,
    timing: Timing,
    iterations: usize,
    converged: bool,
    objective: f64,
    purity: Option<f64>,
    cluster_sizes: Vec<usize>,
    iteration_log: &'a [IterationStat],
    clusters: &'a [Vec<String>],
}

impl<'a> From<&'a RunReport> for ReportJson<'a> {
    fn from(r: &'a RunReport) -> Self {
        ReportJson {
            corpus_root: r.corpus_root.display().to_string(),
            n_docs: r.n_docs,
            n_clustered: r.n_clustered,
            vocabulary_size: r.vocabulary_size,
            settings: &r.settings,
            protocol: r.protocol,
            empty_docs: &r.empty_docs,
            load_warnings: &r.load_warnings,
            runs: r
                .runs
                .iter()
                .map(|run| RunJson {
                    measure: run.measure,
                    timing: run.timing,
                    iterations: run.model.iterations_run,
                    converged: run.model.converged,
                    objective: run.model.objective,
                    purity: run.purity,
                    cluster_sizes: run.model.cluster_sizes(),
                    iteration_log: &run.model.iteration_log,
                    clusters: &run.clusters,
                })
                .collect(),
            timing: ReportTimingJson {
                preparation: r.preparation,
                verdict: r.verdict().map(|v| match v {
                    Verdict::Tie => "tie".to_string(),
                    Verdict::Faster { measure, .. } => measure.to_string(),
                }),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ManifestMode {
    /// One `manifest.tsv` listing `cluster_id<TAB>doc_id`.
    #[default]
    File,
    /// `Cluster0` … `Cluster{k-1}` directories holding the member documents.
    Folders,
}

#[derive(Debug, Clone, Default)]
pub struct ManifestOptions {
    pub mode: ManifestMode,
    /// Replace existing manifest output.
    pub force: bool,
    /// Symlink documents instead of copying them (folders mode).
    pub link: bool,
}

pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestSummary {
    pub written: Vec<PathBuf>,
    pub cluster_sizes: Vec<usize>,
}

/// Manifest text: a `# ClusterN<TAB>size` header per cluster (empty clusters
/// included), then `cluster_id<TAB>doc_id` lines sorted by cluster then id.
pub fn manifest_text(clusters: &[Vec<String>]) -> String {
    let mut out = String::new();
    for (c, members) in clusters.iter().enumerate() {
        out.push_str(&format!("# Cluster{c}\t{}\n", members.len()));
        for id in members {
            out.push_str(&format!("{c}\t{id}\n"));
        }
    }
    out
}

fn is_cluster_dir_name(name: &str) -> bool {
    name.strip_prefix("Cluster")
        .map(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
        .unwrap_or(false)
}

pub fn write_manifests(
    model: &ClusterModel,
    doc_ids: &[String],
    corpus_root: &Path,
    out_dir: &Path,
    options: &ManifestOptions,
) -> Result<ManifestSummary> {
    let clusters = cluster_members(model, doc_ids);
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let written = match options.mode {
        ManifestMode::File => {
            let path = out_dir.join(MANIFEST_FILE);
            if path.exists() && !options.force {
                return Err(Error::OutputExists(path));
            }
            fs::write(&path, manifest_text(&clusters)).map_err(|e| Error::io(&path, e))?;
            vec![path]
        }
        ManifestMode::Folders => write_folders(&clusters, corpus_root, out_dir, options)?,
    };
    Ok(ManifestSummary {
        written,
        cluster_sizes: clusters.iter().map(Vec::len).collect(),
    })
}

fn write_folders(
    clusters: &[Vec<String>],
    corpus_root: &Path,
    out_dir: &Path,
    options: &ManifestOptions,
) -> Result<Vec<PathBuf>> {
    let existing: Vec<PathBuf> = fs::read_dir(out_dir)
        .map_err(|e| Error::io(out_dir, e))?
        .filter_map(|e| e.ok())
        .filter(|e| {
            e.file_name()
                .to_str()
                .map(is_cluster_dir_name)
                .unwrap_or(false)
        })
        .map(|e| e.path())
        .collect();
    if let Some(first) = existing.iter().min() {
        if !options.force {
            return Err(Error::OutputExists(first.clone()));
        }
        for dir in &existing {
            fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }

    let mut written = Vec::with_capacity(clusters.len());
    for (c, members) in clusters.iter().enumerate() {
        let dir = out_dir.join(format!("Cluster{c}"));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for id in members {
            let rel: PathBuf = id.split('/').collect();
            let src = corpus_root.join(&rel);
            let dst = dir.join(&rel);
            if let Some(parent) = dst.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            place(&src, &dst, options.link)?;
        }
        written.push(dir);
    }
    Ok(written)
}

#[cfg(unix)]
fn place(src: &Path, dst: &Path, link: bool) -> Result<()> {
    if link {
        let target = fs::canonicalize(src).map_err(|e| Error::io(src, e))?;
        std::os::unix::fs::symlink(target, dst).map_err(|e| Error::io(dst, e))
    } else {
        fs::copy(src, dst)
            .map(|_| ())
            .map_err(|e| Error::io(dst, e))
    }
}

#[cfg(not(unix))]
fn place(src: &Path, dst: &Path, _link: bool) -> Result<()> {
    fs::copy(src, dst)
        .map(|_| ())
        .map_err(|e| Error::io(dst, e))
}
