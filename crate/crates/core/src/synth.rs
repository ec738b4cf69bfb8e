//! Seeded synthetic corpora with known topic labels.
//!
//! Every topic owns a private vocabulary; an optional shared vocabulary is
//! mixed in with probability `overlap` per token. Words are built from
//! consonant-vowel syllables ending in `a`, `o` or `u`, so they pass through
//! filtering, stopword removal and the shipped stem rules unchanged.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kmeans::ClusterModel;

pub const CORPUS_DIR: &str = "corpus";
pub const LABELS_FILE: &str = "labels.tsv";

const CONSONANTS: &[u8] = b"bdfgkmnprtvz";
const VOWELS: &[u8] = b"aou";
const TOKENS_PER_LINE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Rank-inverse (Zipf, exponent 1) term frequencies.
    #[default]
    Zipf,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSpec {
    pub n_topics: usize,
    pub docs_per_topic: usize,
    pub vocab_per_topic: usize,
    pub shared_vocab: usize,
    pub doc_length: usize,
    /// Probability that a token comes from the shared vocabulary.
    pub overlap: f64,
    pub seed: u64,
    pub sampling: Sampling,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_topics: 5,
            docs_per_topic: 200,
            vocab_per_topic: 300,
            shared_vocab: 200,
            doc_length: 150,
            overlap: 0.0,
            seed: 0,
            sampling: Sampling::Zipf,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_topics", self.n_topics),
            ("docs_per_topic", self.docs_per_topic),
            ("vocab_per_topic", self.vocab_per_topic),
            ("doc_length", self.doc_length),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::Config(format!(
                "overlap {} outside [0, 1]",
                self.overlap
            )));
        }
        if self.overlap > 0.0 && self.shared_vocab == 0 {
            return Err(Error::Config(
                "overlap > 0 needs a non-empty shared vocabulary".into(),
            ));
        }
        Ok(())
    }

    pub fn n_docs(&self) -> usize {
        self.n_topics * self.docs_per_topic
    }

    fn total_words(&self) -> usize {
        self.n_topics * self.vocab_per_topic + self.shared_vocab
    }

    fn word_width(&self) -> usize {
        let base = CONSONANTS.len() * VOWELS.len();
        let mut width = 3;
        while base.pow(width as u32) < self.total_words() {
            width += 1;
        }
        width
    }

    pub fn topic_word(&self, topic: usize, rank: usize) -> String {
        syllable_word(topic * self.vocab_per_topic + rank, self.word_width())
    }

    pub fn shared_word(&self, rank: usize) -> String {
        syllable_word(
            self.n_topics * self.vocab_per_topic + rank,
            self.word_width(),
        )
    }

    pub fn doc_id(&self, topic: usize, j: usize) -> String {
        let width = self.n_docs().to_string().len().max(5);
        format!("doc_{:0width$}.txt", j * self.n_topics + topic)
    }
}

/// Fixed-width base-36 rendering of `index` with one syllable per digit.
fn syllable_word(mut index: usize, width: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    let mut digits = vec![0usize; width];
    for d in digits.iter_mut().rev() {
        *d = index % base;
        index /= base;
    }
    let mut word = String::with_capacity(2 * width);
    for d in digits {
        word.push(CONSONANTS[d / VOWELS.len()] as char);
        word.push(VOWELS[d % VOWELS.len()] as char);
    }
    word
}

struct Sampler {
    cumulative: Vec<f64>,
}

impl Sampler {
    fn new(n: usize, sampling: Sampling) -> Self {
        let mut acc = 0.0;
        let cumulative = (0..n)
            .map(|r| {
                acc += match sampling {
                    Sampling::Zipf => 1.0 / (r as f64 + 1.0),
                    Sampling::Uniform => 1.0,
                };
                acc
            })
            .collect();
        Sampler { cumulative }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty sampler");
        let target = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= target)
            .min(self.cumulative.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedCorpus {
    pub corpus_dir: PathBuf,
    pub labels_path: PathBuf,
    pub n_files: usize,
}

/// Writes `out_dir/corpus/*.txt` and `out_dir/labels.tsv`. The corpus
/// directory must not already contain files.
pub fn generate(spec: &SynthSpec, out_dir: &Path) -> Result<GeneratedCorpus> {
    spec.validate()?;
    let corpus_dir = out_dir.join(CORPUS_DIR);
    let labels_path = out_dir.join(LABELS_FILE);
    if corpus_dir.exists() {
        let mut entries = fs::read_dir(&corpus_dir).map_err(|e| Error::io(&corpus_dir, e))?;
        if entries.next().is_some() {
            return Err(Error::OutputExists(corpus_dir));
        }
    }
    fs::create_dir_all(&corpus_dir).map_err(|e| Error::io(&corpus_dir, e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let topic_sampler = Sampler::new(spec.vocab_per_topic, spec.sampling);
    let shared_sampler =
        (spec.shared_vocab > 0).then(|| Sampler::new(spec.shared_vocab, spec.sampling));

    let mut labels = BTreeMap::new();
    for j in 0..spec.docs_per_topic {
        for topic in 0..spec.n_topics {
            let mut text = String::new();
            for n in 0..spec.doc_length {
                let shared = rng.gen::<f64>() < spec.overlap;
                let word = match (&shared_sampler, shared) {
                    (Some(s), true) => spec.shared_word(s.draw(&mut rng)),
                    _ => spec.topic_word(topic, topic_sampler.draw(&mut rng)),
                };
                if n > 0 {
                    text.push(if n % TOKENS_PER_LINE == 0 { '\n' } else { ' ' });
                }
                text.push_str(&word);
            }
            text.push('\n');
            let id = spec.doc_id(topic, j);
            let path = corpus_dir.join(&id);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            labels.insert(id, topic);
        }
    }

    let labels = Labels(labels);
    fs::write(&labels_path, labels.to_tsv()).map_err(|e| Error::io(&labels_path, e))?;
    Ok(GeneratedCorpus {
        corpus_dir,
        labels_path,
        n_files: spec.n_docs(),
    })
}

/// Ground-truth topic per document id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Labels(pub BTreeMap<String, usize>);

impl Labels {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                message,
            };
            let (id, topic) = line
                .split_once('\t')
                .ok_or_else(|| err("expected doc_id<TAB>topic".into()))?;
            let topic = topic
                .trim()
                .parse()
                .map_err(|_| err(format!("bad topic index {topic:?}")))?;
            map.insert(id.to_string(), topic);
        }
        Ok(Labels(map))
    }

    pub fn to_tsv(&self) -> String {
        self.0
            .iter()
            .map(|(id, t)| format!("{id}\t{t}\n"))
            .collect()
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.0.get(id).copied()
    }
}

/// Fraction of documents that belong to their cluster's majority topic.
pub fn purity(model: &ClusterModel, doc_ids: &[String], labels: &Labels) -> Result<f64> {
    purity_of(&model.assignment, model.k, doc_ids, labels)
}

pub fn purity_of(
    assignment: &[usize],
    k: usize,
    doc_ids: &[String],
    labels: &Labels,
) -> Result<f64> {
    if assignment.is_empty() {
        return Err(Error::Contract("purity of an empty assignment".into()));
    }
    let mut tables: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); k];
    for (&c, id) in assignment.iter().zip(doc_ids) {
        let topic = labels
            .get(id)
            .ok_or_else(|| Error::MissingLabel(id.clone()))?;
        *tables[c].entry(topic).or_insert(0) += 1;
    }
    let majority: usize = tables
        .iter()
        .map(|t| t.values().copied().max().unwrap_or(0))
        .sum();
    Ok(majority as f64 / assignment.len() as f64)
}
