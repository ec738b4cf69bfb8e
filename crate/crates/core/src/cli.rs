//! Command-line front end: `generate`, `cluster` and `compare`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::corpus_io::{load_corpus, Corpus, LoadOptions, DEFAULT_MAX_FILE_BYTES};
use crate::error::{Error, Result};
use crate::kmeans::{
    run_kmeans, InitMethod, KMeansConfig, DEFAULT_MAX_ITERATIONS, DEFAULT_RESTARTS,
};
use crate::preprocess::{preprocess_corpus, StemRuleSet, StopwordList};
use crate::report::{
    render_comparison, write_manifests, ManifestMode, ManifestOptions, RunReport, RunSettings,
    TimedRun, Timing, TimingProtocol,
};
use crate::similarity::MeasureKind;
use crate::synth::{generate, purity, Labels, Sampling, SynthSpec};
use crate::vectorize::{build_vocabulary, vectorize_corpus, TermDocMatrix, TfMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const REPORT_FILE: &str = "report.json";
pub const MATRIX_FILE: &str = "matrix.tsv";

#[derive(Debug, Parser)]
#[command(
    name = "doccluster",
    version,
    about = "K-means document clustering with cosine and fuzzy similarity"
)]
pub struct Cli {
    /// Cap on worker threads; output is identical for any value.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic corpus and its ground-truth labels.
    Generate(GenerateArgs),
    /// Cluster a corpus with one similarity measure.
    Cluster(ClusterArgs),
    /// Cluster a corpus with both measures and compare their timings.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output directory; receives corpus/ and labels.tsv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub topics: u32,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(1..))]
    pub docs_per_topic: u32,
    #[arg(long, default_value_t = 300, value_parser = clap::value_parser!(u32).range(1..))]
    pub vocab_per_topic: u32,
    #[arg(long, default_value_t = 200)]
    pub shared_vocab: u32,
    /// Tokens per document.
    #[arg(long, default_value_t = 150, value_parser = clap::value_parser!(u32).range(1..))]
    pub doc_length: u32,
    /// Probability of drawing a token from the shared vocabulary.
    #[arg(long, default_value_t = 0.0)]
    pub overlap: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Sampling::Zipf)]
    pub sampling: Sampling,
    /// Remove an existing corpus/ directory first.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Corpus root directory.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory for manifests and report.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of clusters.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub k: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Minimum document frequency for a term to stay in the vocabulary.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    pub min_df: u32,
    #[arg(long, value_enum, default_value_t = TfMode::Smooth)]
    pub tf_mode: TfMode,
    #[arg(long, value_enum, default_value_t = InitMethod::PlusPlus)]
    pub init: InitMethod,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS as u32, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_iters: u32,
    /// Seeded k-means++ restarts; the highest-objective run is kept.
    #[arg(long, default_value_t = DEFAULT_RESTARTS as u32, value_parser = clap::value_parser!(u32).range(1..))]
    pub restarts: u32,
    /// Stopword file (one word per line) replacing the built-in list.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Stem-rule file (suffix<TAB>replacement<TAB>min_stem_len).
    #[arg(long)]
    pub stem_rules: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ManifestMode::File)]
    pub manifest_mode: ManifestMode,
    /// Symlink documents into ClusterN folders instead of copying.
    #[arg(long)]
    pub link: bool,
    /// Overwrite existing output.
    #[arg(long)]
    pub force: bool,
    /// Ground-truth labels (doc_id<TAB>topic) for a purity score.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Comma-separated file suffixes to load.
    #[arg(long, value_delimiter = ',', default_value = "txt")]
    pub extensions: Vec<String>,
    /// Decode invalid UTF-8 with replacement characters instead of skipping.
    #[arg(long)]
    pub lossy: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_FILE_BYTES)]
    pub max_file_bytes: u64,
    /// Also write the weighted term-document matrix to matrix.tsv.
    #[arg(long)]
    pub dump_matrix: bool,
    /// Also write iterations-<measure>.tsv (pass, changed docs, objective).
    #[arg(long)]
    pub iteration_log: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    Cosine,
    Fuzzy,
    Both,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, value_enum, default_value_t = MeasureArg::Cosine)]
    pub measure: MeasureArg,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Time each measure over a full load-to-clusters run instead of the
    /// clustering phase alone.
    #[arg(long)]
    pub paper_timing: bool,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(message) = usage_problem(&cli) {
        let _ = Cli::command()
            .error(clap::error::ErrorKind::ArgumentConflict, message)
            .print();
        return EXIT_USAGE;
    }
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn usage_problem(cli: &Cli) -> Option<String> {
    let pipeline = match &cli.command {
        Command::Cluster(a) => &a.pipeline,
        Command::Compare(a) => &a.pipeline,
        Command::Generate(g) => {
            return (!(0.0..=1.0).contains(&g.overlap))
                .then(|| format!("--overlap {} must lie in [0, 1]", g.overlap));
        }
    };
    if pipeline.link && pipeline.manifest_mode != ManifestMode::Folders {
        return Some("--link requires --manifest-mode folders".into());
    }
    if pipeline
        .extensions
        .iter()
        .all(|e| e.trim_start_matches('.').is_empty())
    {
        return Some("--extensions must name at least one suffix".into());
    }
    None
}

fn execute(cli: &Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(usize::from(n));
    }
    let pool = builder.build()?;
    pool.install(|| match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Cluster(args) => match args.measure {
            MeasureArg::Cosine => cmd_cluster(&args.pipeline, MeasureKind::Cosine),
            MeasureArg::Fuzzy => cmd_cluster(&args.pipeline, MeasureKind::Fuzzy),
            MeasureArg::Both => cmd_compare(&args.pipeline, false),
        },
        Command::Compare(args) => cmd_compare(&args.pipeline, args.paper_timing),
    })
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let spec = SynthSpec {
        n_topics: args.topics as usize,
        docs_per_topic: args.docs_per_topic as usize,
        vocab_per_topic: args.vocab_per_topic as usize,
        shared_vocab: args.shared_vocab as usize,
        doc_length: args.doc_length as usize,
        overlap: args.overlap,
        seed: args.seed,
        sampling: args.sampling,
    };
    spec.validate()?;
    let corpus_dir = args.out.join(crate::synth::CORPUS_DIR);
    if args.force && corpus_dir.exists() {
        fs::remove_dir_all(&corpus_dir).map_err(|e| Error::io(&corpus_dir, e))?;
    }
    let g = generate(&spec, &args.out)?;
    println!(
        "wrote {} documents to {} and labels to {}",
        g.n_files,
        g.corpus_dir.display(),
        g.labels_path.display()
    );
    Ok(())
}

/// Loaded corpus plus its weighted matrix.
pub struct Prepared {
    pub corpus: Corpus,
    pub matrix: TermDocMatrix,
}

impl Prepared {
    pub fn doc_ids(&self) -> Vec<String> {
        self.matrix.rows.iter().map(|r| r.doc_id.clone()).collect()
    }
}

struct Resources {
    load: LoadOptions,
    stops: StopwordList,
    rules: StemRuleSet,
    labels: Option<Labels>,
}

impl Resources {
    fn new(args: &PipelineArgs) -> Result<Self> {
        Ok(Resources {
            load: LoadOptions {
                lossy: args.lossy,
                max_file_bytes: args.max_file_bytes,
                ..LoadOptions::default()
            }
            .with_extensions(&args.extensions),
            stops: match &args.stopwords {
                Some(p) => StopwordList::from_file(p)?,
                None => StopwordList::builtin(),
            },
            rules: match &args.stem_rules {
                Some(p) => StemRuleSet::from_file(p)?,
                None => StemRuleSet::builtin(),
            },
            labels: args.labels.as_deref().map(Labels::read).transpose()?,
        })
    }
}

/// load → preprocess → vectorize.
fn prepare(args: &PipelineArgs, res: &Resources) -> Result<Prepared> {
    let corpus = load_corpus(&args.input, &res.load)?;
    let streams = preprocess_corpus(&corpus, &res.stops, &res.rules);
    let vocab = build_vocabulary(&streams, args.min_df as usize)?;
    let matrix = vectorize_corpus(&streams, &vocab, args.tf_mode)?;
    if matrix.rows.is_empty() {
        return Err(Error::NoVectors);
    }
    Ok(Prepared { corpus, matrix })
}

fn kmeans_config(args: &PipelineArgs, measure: MeasureKind) -> KMeansConfig {
    KMeansConfig::new(args.k as usize, measure)
        .with_seed(args.seed)
        .with_init(args.init)
        .with_max_iterations(args.max_iters as usize)
        .with_restarts(args.restarts as usize)
}

fn settings(args: &PipelineArgs) -> RunSettings {
    RunSettings {
        k: args.k as usize,
        seed: args.seed,
        init: args.init,
        restarts: args.restarts as usize,
        max_iterations: args.max_iters as usize,
        min_df: args.min_df as usize,
        tf_mode: args.tf_mode,
    }
}

fn check_output(args: &PipelineArgs) -> Result<()> {
    let report = args.out.join(REPORT_FILE);
    if report.exists() && !args.force {
        return Err(Error::OutputExists(report));
    }
    Ok(())
}

/// Runs the pipeline for the given measures and assembles the report.
pub fn build_report(
    args: &PipelineArgs,
    measures: &[MeasureKind],
    paper_timing: bool,
) -> Result<(RunReport, Prepared)> {
    let res = Resources::new(args)?;
    let mut runs = Vec::with_capacity(measures.len());
    let (prepared, preparation) = if paper_timing {
        let mut last = None;
        for &measure in measures {
            let (outcome, timing) = Timing::measure(|| -> Result<_> {
                let prepared = prepare(args, &res)?;
                let model = run_kmeans(&prepared.matrix, &kmeans_config(args, measure))?;
                Ok((prepared, model))
            });
            let (prepared, model) = outcome?;
            runs.push(TimedRun::new(measure, timing, model, &prepared.doc_ids()));
            last = Some(prepared);
        }
        (last.expect("at least one measure"), None)
    } else {
        let (prepared, timing) = Timing::measure(|| prepare(args, &res));
        let prepared = prepared?;
        for &measure in measures {
            let (model, timing) =
                Timing::measure(|| run_kmeans(&prepared.matrix, &kmeans_config(args, measure)));
            runs.push(TimedRun::new(measure, timing, model?, &prepared.doc_ids()));
        }
        (prepared, Some(timing))
    };

    if let Some(labels) = &res.labels {
        let ids = prepared.doc_ids();
        for run in &mut runs {
            run.purity = Some(purity(&run.model, &ids, labels)?);
        }
    }

    let report = RunReport {
        corpus_root: prepared.corpus.root.clone(),
        n_docs: prepared.corpus.len(),
        n_clustered: prepared.matrix.rows.len(),
        vocabulary_size: prepared.matrix.dim(),
        settings: settings(args),
        protocol: if paper_timing {
            TimingProtocol::WholeRun
        } else {
            TimingProtocol::Phases
        },
        preparation,
        runs,
        empty_docs: prepared.matrix.empty_docs.clone(),
        load_warnings: prepared.corpus.load_warnings.clone(),
    };
    Ok((report, prepared))
}

fn write_outputs(
    args: &PipelineArgs,
    report: &RunReport,
    prepared: &Prepared,
    per_measure_dirs: bool,
) -> Result<()> {
    let options = ManifestOptions {
        mode: args.manifest_mode,
        force: args.force,
        link: args.link,
    };
    let ids = prepared.doc_ids();
    for run in &report.runs {
        let dir = if per_measure_dirs {
            args.out.join(run.measure.label())
        } else {
            args.out.clone()
        };
        write_manifests(&run.model, &ids, &prepared.corpus.root, &dir, &options)?;
        if args.iteration_log {
            let path = args.out.join(format!("iterations-{}.tsv", run.measure));
            write_file(&path, &run.model.iteration_log_text())?;
        }
    }
    if args.dump_matrix {
        write_file(&args.out.join(MATRIX_FILE), &prepared.matrix.dump())?;
    }
    write_file(&args.out.join(REPORT_FILE), &report.to_json()?)?;
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn print_warnings(report: &RunReport) {
    for w in &report.load_warnings {
        eprintln!("warning: skipped {}: {}", w.path, w.reason);
    }
    if !report.empty_docs.is_empty() {
        eprintln!(
            "warning: {} document(s) had no weighted terms and were not clustered",
            report.empty_docs.len()
        );
    }
}

pub fn cmd_cluster(args: &PipelineArgs, measure: MeasureKind) -> Result<()> {
    check_output(args)?;
    let (report, prepared) = build_report(args, &[measure], false)?;
    print_warnings(&report);
    write_outputs(args, &report, &prepared, false)?;
    print!("{}", render_comparison(&report)?);
    println!("report: {}", args.out.join(REPORT_FILE).display());
    Ok(())
}

pub fn cmd_compare(args: &PipelineArgs, paper_timing: bool) -> Result<()> {
    check_output(args)?;
    let (report, prepared) = build_report(args, &MeasureKind::ALL, paper_timing)?;
    print_warnings(&report);
    write_outputs(args, &report, &prepared, true)?;
    print!("{}", render_comparison(&report)?);
    println!("report: {}", args.out.join(REPORT_FILE).display());
    Ok(())
}
