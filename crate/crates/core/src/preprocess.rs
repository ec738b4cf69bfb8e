//! Text normalization: filtering, tokenization, stopword removal and suffix
//! stemming, applied in that order.
//!
//! Stopwords are removed before stemming. Stemming first would turn a
//! stopword such as `was` into `wa`, which is neither a stopword nor a real
//! term, and it would leak into the vocabulary.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::corpus_io::{Corpus, Document};
use crate::error::{Error, Result};

const BUILTIN_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const BUILTIN_STEM_RULES: &str = include_str!("../data/stem_rules.tsv");

/// Lowercase, and replace every character that is not a letter or digit
/// with a space. Whitespace runs collapse to one space with no leading or
/// trailing space.
pub fn filter_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if !c.is_alphanumeric() {
            pending_space = true;
            continue;
        }
        for l in c.to_lowercase().filter(|l| l.is_alphanumeric()) {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(l);
        }
    }
    out
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
    source: String,
}

impl StopwordList {
    /// The shipped 119-word English list.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_STOPWORDS, "builtin").expect("builtin stopword list is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// One word per line; `#` starts a comment; blank lines are ignored.
    /// Entries are lowercased.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut words = HashSet::new();
        for (n, line) in text.lines().enumerate() {
            let word = strip_comment(line).trim();
            if word.is_empty() {
                continue;
            }
            let lower = word.to_lowercase();
            if !lower.chars().all(char::is_alphanumeric) {
                return Err(Error::Parse {
                    path: PathBuf::from(source),
                    line: n + 1,
                    message: format!("stopword {word:?} contains non-alphanumeric characters"),
                });
            }
            words.insert(lower);
        }
        Ok(StopwordList {
            words,
            source: source.to_string(),
        })
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopwordList {
            words: words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
            source: "inline".into(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

pub fn remove_stopwords(tokens: Vec<String>, stops: &StopwordList) -> Vec<String> {
    tokens.into_iter().filter(|t| !stops.contains(t)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StemRule {
    pub suffix: String,
    pub replacement: String,
    /// Minimum number of characters that must remain before the suffix.
    pub min_stem_len: usize,
}

impl StemRule {
    fn is_guard(&self) -> bool {
        self.suffix == self.replacement
    }

    fn matches(&self, token: &str) -> bool {
        token.ends_with(&self.suffix)
            && token[..token.len() - self.suffix.len()].chars().count() >= self.min_stem_len
    }
}

/// Ordered suffix-rewrite rules, longest suffix first.
///
/// A rule whose replacement equals its suffix is a guard: it matches, leaves
/// the token alone and stops shorter rules from firing (`ss` protects
/// `class` from the plural `s` rule). Every other rule must shorten the
/// token, so repeated application terminates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StemRuleSet {
    rules: Vec<StemRule>,
}

impl StemRuleSet {
    /// The shipped 67-rule English suffix set.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_STEM_RULES, "builtin").expect("builtin stem rules are valid")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// `suffix<TAB>replacement<TAB>min_stem_len` per line; `#` comments.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let body = strip_comment(line);
            if body.trim().is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: PathBuf::from(source),
                line: n + 1,
                message,
            };
            let fields: Vec<&str> = body.trim_end_matches(['\r', '\n']).split('\t').collect();
            if fields.len() != 3 {
                return Err(err(format!(
                    "expected 3 tab-separated fields, got {}",
                    fields.len()
                )));
            }
            let min_stem_len = fields[2]
                .trim()
                .parse()
                .map_err(|_| err(format!("bad min_stem_len {:?}", fields[2])))?;
            let rule = StemRule {
                suffix: fields[0].trim().to_string(),
                replacement: fields[1].trim().to_string(),
                min_stem_len,
            };
            Self::validate(&rule).map_err(err)?;
            rules.push(rule);
        }
        Ok(Self::from_rules(rules))
    }

    fn validate(rule: &StemRule) -> std::result::Result<(), String> {
        let ok = |s: &str| s.chars().all(|c| c.is_alphanumeric() && !c.is_uppercase());
        if rule.suffix.is_empty() || !ok(&rule.suffix) {
            return Err(format!(
                "suffix {:?} must be non-empty lowercase alphanumeric",
                rule.suffix
            ));
        }
        if !ok(&rule.replacement) {
            return Err(format!(
                "replacement {:?} must be lowercase alphanumeric",
                rule.replacement
            ));
        }
        if !rule.is_guard() && rule.replacement.chars().count() >= rule.suffix.chars().count() {
            return Err(format!(
                "rule {} -> {} does not shorten the token",
                rule.suffix, rule.replacement
            ));
        }
        Ok(())
    }

    /// Sorts stably by descending suffix length.
    pub fn from_rules(mut rules: Vec<StemRule>) -> Self {
        rules.sort_by_key(|r| std::cmp::Reverse(r.suffix.chars().count()));
        StemRuleSet { rules }
    }

    pub fn rules(&self) -> &[StemRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Single rewrite by the first (longest) matching rule, or `None` when no
    /// rule matches or a guard matches.
    pub fn apply_once(&self, token: &str) -> Option<String> {
        let rule = self.rules.iter().find(|r| r.matches(token))?;
        if rule.is_guard() {
            return None;
        }
        let stem = &token[..token.len() - rule.suffix.len()];
        Some(format!("{stem}{}", rule.replacement))
    }

    /// Rewrites until no rule applies. Output is a fixed point, so stemming is
    /// idempotent.
    pub fn stem_token(&self, token: &str) -> String {
        let mut current = token.to_string();
        while let Some(next) = self.apply_once(&current) {
            current = next;
        }
        current
    }
}

pub fn stem(tokens: Vec<String>, rules: &StemRuleSet) -> Vec<String> {
    tokens.into_iter().map(|t| rules.stem_token(&t)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

/// filter → tokenize → remove stopwords → stem.
pub fn preprocess_text(text: &str, stops: &StopwordList, rules: &StemRuleSet) -> Vec<String> {
    stem(remove_stopwords(tokenize(&filter_text(text)), stops), rules)
}

pub fn preprocess_document(
    doc: &Document,
    stops: &StopwordList,
    rules: &StemRuleSet,
) -> TokenStream {
    TokenStream {
        doc_id: doc.id.clone(),
        tokens: preprocess_text(&doc.text, stops, rules),
    }
}

/// Preprocesses every document in parallel; output follows corpus order.
pub fn preprocess_corpus(
    corpus: &Corpus,
    stops: &StopwordList,
    rules: &StemRuleSet,
) -> Vec<TokenStream> {
    corpus
        .documents
        .par_iter()
        .map(|d| preprocess_document(d, stops, rules))
        .collect()
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}
