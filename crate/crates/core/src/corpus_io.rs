//! Directory-tree ingestion of plain-text documents.
//!
//! Files are discovered recursively, decoded as UTF-8 and returned ordered by
//! their root-relative path, so the result does not depend on the order the
//! filesystem enumerates entries or on how many threads load them.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_FILE_BYTES: u64 = 16 * 1024 * 1024;

/// One loaded text file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    /// Root-relative path with `/` separators.
    pub id: String,
    pub text: String,
    pub byte_len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoadWarning {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub root: PathBuf,
    pub documents: Vec<Document>,
    pub load_warnings: Vec<LoadWarning>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Absolute (root-joined) path of a document.
    pub fn path_of(&self, id: &str) -> PathBuf {
        id.split('/')
            .fold(self.root.clone(), |p, part| p.join(part))
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Accepted file suffixes, without the leading dot, compared case-insensitively.
    pub extensions: BTreeSet<String>,
    /// Replace undecodable bytes and control characters with U+FFFD instead of
    /// skipping the file.
    pub lossy: bool,
    pub max_file_bytes: u64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            extensions: BTreeSet::from(["txt".to_string()]),
            lossy: false,
            max_file_bytes: DEFAULT_MAX_FILE_BYTES,
        }
    }
}

impl LoadOptions {
    pub fn with_extensions<I, S>(mut self, extensions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.extensions = extensions
            .into_iter()
            .map(|e| e.as_ref().trim_start_matches('.').to_ascii_lowercase())
            .filter(|e| !e.is_empty())
            .collect();
        self
    }

    fn accepts(&self, path: &Path) -> bool {
        path.extension()
            .and_then(|e| e.to_str())
            .map(|e| self.extensions.contains(&e.to_ascii_lowercase()))
            .unwrap_or(false)
    }
}

/// Load every matching regular file under `root`.
pub fn load_corpus(root: &Path, options: &LoadOptions) -> Result<Corpus> {
    let meta = fs::metadata(root).map_err(|_| Error::BadRoot(root.to_path_buf()))?;
    if !meta.is_dir() {
        return Err(Error::BadRoot(root.to_path_buf()));
    }
    fs::read_dir(root).map_err(|_| Error::BadRoot(root.to_path_buf()))?;

    let mut warnings = Vec::new();
    let mut candidates = Vec::new();
    for entry in WalkDir::new(root).follow_links(false) {
        let entry = match entry {
            Ok(e) => e,
            Err(err) => {
                let path = err
                    .path()
                    .map(|p| display_relative(root, p))
                    .unwrap_or_default();
                warnings.push(LoadWarning {
                    path,
                    reason: err.to_string(),
                });
                continue;
            }
        };
        if !entry.file_type().is_file() || !options.accepts(entry.path()) {
            continue;
        }
        match relative_id(root, entry.path()) {
            Some(id) => candidates.push((id, entry.into_path())),
            None => warnings.push(LoadWarning {
                path: display_relative(root, entry.path()),
                reason: "file name is not valid UTF-8".into(),
            }),
        }
    }

    let loaded: Vec<std::result::Result<Document, LoadWarning>> = candidates
        .into_par_iter()
        .map(|(id, path)| load_one(id, &path, options))
        .collect();

    let mut documents = Vec::with_capacity(loaded.len());
    for item in loaded {
        match item {
            Ok(doc) => documents.push(doc),
            Err(w) => warnings.push(w),
        }
    }
    documents.sort_by(|a, b| a.id.cmp(&b.id));
    warnings.sort_by(|a, b| a.path.cmp(&b.path));

    if documents.is_empty() {
        return Err(Error::EmptyCorpus(root.to_path_buf()));
    }
    Ok(Corpus {
        root: root.to_path_buf(),
        documents,
        load_warnings: warnings,
    })
}

fn load_one(
    id: String,
    path: &Path,
    options: &LoadOptions,
) -> std::result::Result<Document, LoadWarning> {
    let warn = |reason: String| LoadWarning {
        path: id.clone(),
        reason,
    };
    let len = fs::metadata(path).map_err(|e| warn(e.to_string()))?.len();
    if len > options.max_file_bytes {
        return Err(warn(format!(
            "file is {len} bytes, over the {} byte cap",
            options.max_file_bytes
        )));
    }
    let bytes = fs::read(path).map_err(|e| warn(e.to_string()))?;
    let text = decode(&bytes, options.lossy).map_err(warn)?;
    Ok(Document {
        id,
        text,
        byte_len: bytes.len() as u64,
    })
}

fn is_bad_control(c: char) -> bool {
    c.is_control() && !c.is_whitespace()
}

/// Strict UTF-8 decoding; control characters other than whitespace count as
/// a decoding failure.
pub fn decode(bytes: &[u8], lossy: bool) -> std::result::Result<String, String> {
    if lossy {
        let text = String::from_utf8_lossy(bytes);
        return Ok(text
            .chars()
            .map(|c| if is_bad_control(c) { '\u{FFFD}' } else { c })
            .collect());
    }
    let text = std::str::from_utf8(bytes).map_err(|e| format!("not valid UTF-8: {e}"))?;
    if let Some((pos, c)) = text.char_indices().find(|&(_, c)| is_bad_control(c)) {
        return Err(format!(
            "control character U+{:04X} at byte {pos}",
            c as u32
        ));
    }
    Ok(text.to_string())
}

fn relative_id(root: &Path, path: &Path) -> Option<String> {
    let rel = path.strip_prefix(root).ok()?;
    let parts: Option<Vec<&str>> = rel.components().map(|c| c.as_os_str().to_str()).collect();
    Some(parts?.join("/"))
}

fn display_relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}
