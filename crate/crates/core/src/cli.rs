//! The `termvec` command line: building model directories and querying them.
//!
//! Every report has two renderings selected by `--tsv`: a human-oriented text
//! layout and a tab-separated one where each line is a typed row. Exit codes
//! distinguish usage errors (2, from the parser), input errors (3), and data
//! errors (4).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::corpus::{CorpusSource, Document, Stoplist};
use crate::error::{Error, ErrorClass, Result};
use crate::eval::{
    cosine, discrimination_stats, kfold_significance, load_benchmark, spearman,
    sum_phrase_vectors, DenseVector, EmbeddingSet, KfoldReport,
};
use crate::model::Model;
use crate::passages::{
    build_passage_vector, doc_term_strings, longest_common_string, passage_eligible,
    passage_shared_terms, passage_text, passage_weighted_score, shared_rare_terms,
    shared_title_words, PassageVector, RareTermInventory,
};
use crate::pipeline::{build_model, BuildParams, BuildReport};
use crate::store::{format_sig6, load_model, save_model, MANIFEST_FILE};
use crate::terms::{AbbreviationLexicon, TermId, TermTable};
use crate::vectors::{score_percentile, TermMetric};

/// Stoplist applied when `--stoplist` is not given.
const DEFAULT_STOPLIST: &str = include_str!("../data/stoplist.txt");

/// Shortest substring the character-level overlap metric counts.
const MIN_COMMON_STRING: usize = 3;

/// Parses arguments, runs the selected command, and maps errors to exit codes.
pub fn main() -> ExitCode {
    // Die quietly when a downstream pager or `head` closes the pipe, like
    // any other filter, instead of panicking on EPIPE.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.class() {
                ErrorClass::Input => ExitCode::from(3),
                ErrorClass::Data => ExitCode::from(4),
            }
        }
    }
}

#[derive(Parser)]
#[command(
    name = "termvec",
    version,
    about = "Transparent term and passage vectors from title/abstract corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model directory from a corpus TSV
    Build(BuildArgs),
    /// Rank the nearest neighbors of a term
    Neighbors(NeighborsArgs),
    /// Score the similarity of two terms
    Termsim(TermsimArgs),
    /// Score the similarity of two documents
    Docsim(DocsimArgs),
    /// Correlate model metrics with a human-judged benchmark
    Bench(BenchArgs),
    /// Score labeled positive/negative document pairs
    Pairs(PairsArgs),
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Build(args) => cmd_build(args),
        Command::Neighbors(args) => cmd_neighbors(args),
        Command::Termsim(args) => cmd_termsim(args),
        Command::Docsim(args) => cmd_docsim(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Pairs(args) => cmd_pairs(args),
    }
}

#[derive(Args)]
struct ModelArg {
    /// Model directory
    #[arg(long, env = "TERMVEC_MODEL", value_name = "DIR")]
    model: PathBuf,
}

// ---------------------------------------------------------------- build

#[derive(Args)]
struct BuildArgs {
    /// Corpus TSV: doc_id<TAB>title<TAB>abstract, one document per line
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Output model directory
    #[arg(long, value_name = "DIR")]
    output: PathBuf,
    /// Stopword file, one word per line (default: built-in list)
    #[arg(long, value_name = "FILE")]
    stoplist: Option<PathBuf>,
    /// Abbreviation lexicon TSV: SURFACE<TAB>article_count (default: none)
    #[arg(long, value_name = "FILE")]
    lexicon: Option<PathBuf>,
    /// Replace the output directory if it already exists
    #[arg(long)]
    force: bool,
    /// Minimum title document frequency for word selection
    #[arg(long, default_value_t = 100, value_name = "N")]
    min_title_df: u32,
    /// Minimum abstract document frequency for word selection
    #[arg(long, default_value_t = 25, value_name = "N")]
    min_abstract_df: u32,
    /// Minimum lexicon article count for abbreviation candidates
    #[arg(long, default_value_t = 25, value_name = "N")]
    min_lexicon_count: u32,
    /// Minimum direct odds between adjacent words for bigram selection
    #[arg(long, default_value_t = 10.0, value_name = "ODDS")]
    bigram_min_odds: f64,
    /// Minimum abstract document frequency for trigram selection
    #[arg(long, default_value_t = 1000, value_name = "N")]
    trigram_min_abstracts: u32,
    /// Fraction of the rarer component bigram's df a trigram must reach
    #[arg(long, default_value_t = 0.30, value_name = "FRAC")]
    trigram_ratio: f64,
    /// Pairs per bin when converting co-occurrence counts to odds
    #[arg(long, default_value_t = 500, value_name = "N")]
    bin_size: usize,
    /// Maximum entries kept per term or passage vector
    #[arg(long, default_value_t = 300, value_name = "N")]
    max_dims: usize,
    /// Minimum odds for a context term to enter a vector
    #[arg(long, default_value_t = 1.25, value_name = "ODDS")]
    min_odds: f64,
    /// Minimum pre-stoplist word count for passage eligibility
    #[arg(long, default_value_t = 25, value_name = "N")]
    passage_min_words: usize,
    /// Worker threads for parallel stages (0 = all cores)
    #[arg(long, default_value_t = 0, value_name = "N")]
    workers: usize,
    /// Skip storing the pair table (disables the direct metric on reload)
    #[arg(long)]
    no_pairs: bool,
    /// Precompute and store a passage vector for every document
    #[arg(long)]
    passages: bool,
    /// Emit the build report as TSV
    #[arg(long)]
    tsv: bool,
}

fn require(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Invalid(msg.to_string()))
    }
}

fn cmd_build(args: BuildArgs) -> Result<()> {
    require(args.bin_size >= 1, "--bin-size must be at least 1")?;
    require(args.max_dims >= 1, "--max-dims must be at least 1")?;
    require(
        args.min_odds.is_finite() && args.min_odds > 0.0,
        "--min-odds must be a positive number",
    )?;
    require(
        args.bigram_min_odds.is_finite() && args.bigram_min_odds > 0.0,
        "--bigram-min-odds must be a positive number",
    )?;
    require(
        args.trigram_ratio.is_finite() && args.trigram_ratio > 0.0,
        "--trigram-ratio must be a positive number",
    )?;
    require(
        args.passage_min_words >= 1,
        "--passage-min-words must be at least 1",
    )?;

    let stoplist = match &args.stoplist {
        Some(p) => Stoplist::from_path(p)?,
        None => Stoplist::from_words(DEFAULT_STOPLIST.lines()),
    };
    let lexicon = match &args.lexicon {
        Some(p) => AbbreviationLexicon::from_path(p)?,
        None => AbbreviationLexicon::empty(),
    };

    if args.output.exists() {
        if !args.force {
            return Err(Error::OutputExists(args.output.clone()));
        }
        replace_output_dir(&args.output)?;
    }

    let params = BuildParams {
        min_title_df: args.min_title_df,
        min_abstract_df: args.min_abstract_df,
        min_lexicon_count: args.min_lexicon_count,
        bigram_min_odds: args.bigram_min_odds,
        trigram_min_abstracts: args.trigram_min_abstracts,
        trigram_ratio: args.trigram_ratio,
        bin_size: args.bin_size,
        max_dims: args.max_dims,
        min_odds: args.min_odds,
        passage_min_words: args.passage_min_words,
        workers: args.workers,
        store_pairs: !args.no_pairs,
        precompute_passages: args.passages,
        ..BuildParams::default()
    };

    let corpus = CorpusSource::file(&args.corpus);
    let (model, report) = build_model(&corpus, stoplist, lexicon, params)?;
    save_model(&model, &args.output)?;
    print_build_report(&model, &report, &args.output, args.tsv);
    Ok(())
}

/// `--force` only ever deletes something that looks like one of our model
/// directories (or an empty directory), so a mistyped path cannot wipe
/// unrelated data.
fn replace_output_dir(dir: &Path) -> Result<()> {
    let is_model = dir.join(MANIFEST_FILE).is_file();
    let is_empty = dir.is_dir()
        && fs::read_dir(dir)
            .map(|mut d| d.next().is_none())
            .unwrap_or(false);
    if !(is_model || is_empty) {
        return Err(Error::Invalid(format!(
            "refusing to replace {}: not a model directory",
            dir.display()
        )));
    }
    fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn print_build_report(model: &Model, report: &BuildReport, dir: &Path, tsv: bool) {
    let kinds = model.kind_counts();
    if tsv {
        println!("docs\t{}", report.docs);
        println!("basic_words\t{}", report.basic_words);
        println!("basic_pairs\t{}", report.basic_pairs);
        println!("terms\t{}", kinds.total());
        println!("words\t{}", kinds.words);
        println!("bigrams\t{}", kinds.bigrams);
        println!("trigrams\t{}", kinds.trigrams);
        println!("abbreviations\t{}", kinds.abbreviations);
        println!("pairs\t{}", report.full_pairs);
        println!("vectors\t{}", model.vectors.len());
        if let Some(p) = &model.passages {
            println!("passages\t{}", p.len());
        }
        for (label, secs) in &report.phases {
            println!("phase\t{label}\t{secs:.3}");
        }
        if let Some(bytes) = report.peak_rss_bytes {
            println!("peak_rss_bytes\t{bytes}");
        }
        println!("model_dir\t{}", dir.display());
    } else {
        println!("built model at {}", dir.display());
        println!(
            "corpus: {} documents ({})",
            thousands(report.docs),
            model.manifest.corpus_digest
        );
        println!(
            "pass 1 (token scan, basic word model): {} words, {} scored pairs",
            thousands(report.basic_words as u64),
            thousands(report.basic_pairs as u64)
        );
        println!(
            "pass 2 (full vocabulary recount): {} terms ({} words, {} bigrams, {} trigrams, and {} abbreviations)",
            thousands(kinds.total() as u64),
            thousands(kinds.words as u64),
            thousands(kinds.bigrams as u64),
            thousands(kinds.trigrams as u64),
            thousands(kinds.abbreviations as u64)
        );
        let passages = match &model.passages {
            Some(p) => format!(", {} passage vectors", thousands(p.len() as u64)),
            None => String::new(),
        };
        println!(
            "scored {} term pairs, kept {} term vectors{}",
            thousands(report.full_pairs as u64),
            thousands(model.vectors.len() as u64),
            passages
        );
        println!("phases:");
        for (label, secs) in &report.phases {
            println!("  {label:<24} {secs:>9.2}s");
        }
        if let Some(bytes) = report.peak_rss_bytes {
            println!("peak memory: {}", human_bytes(bytes));
        }
    }
}

// ------------------------------------------------------------- neighbors

#[derive(Args)]
struct NeighborsArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Query term surface
    term: String,
    /// Ranking metric
    #[arg(long, default_value = "weighted", value_parser = parse_metric, value_name = "METRIC")]
    metric: TermMetric,
    /// Neighbors to keep
    #[arg(short, long, default_value_t = 300, value_name = "N")]
    k: usize,
    /// Random term pairs sampled for the percentile baseline
    #[arg(long, default_value_t = 10_000, value_name = "N")]
    samples: usize,
    /// Seed for the percentile sample
    #[arg(long, default_value_t = 42, value_name = "SEED")]
    seed: u64,
    /// Emit rows as TSV
    #[arg(long)]
    tsv: bool,
}

fn parse_metric(s: &str) -> std::result::Result<TermMetric, String> {
    TermMetric::parse(s)
        .ok_or_else(|| format!("unknown metric {s:?} (expected direct, shared, or weighted)"))
}

fn cmd_neighbors(args: NeighborsArgs) -> Result<()> {
    require(args.samples >= 1, "--samples must be at least 1")?;
    let model = load_model(&args.model.model)?;
    let owner = model.resolve_term(&args.term)?;
    let rows = model.neighbors(owner, args.metric, args.k)?;
    let distribution = model.metric_distribution(args.metric, args.samples, args.seed)?;

    if args.tsv {
        println!("rank\tsurface\tscore\tpercentile");
        for (rank, (id, score)) in rows.iter().enumerate() {
            let pct = score_percentile(&distribution, *score)?;
            println!(
                "{}\t{}\t{}\t{:.1}",
                rank + 1,
                model.table.get(*id).surface,
                format_sig6(*score),
                pct
            );
        }
        return Ok(());
    }

    println!(
        "neighbors of {:?} by {} odds ({} sampled pairs for percentiles)",
        args.term,
        args.metric.code(),
        thousands(args.samples as u64)
    );
    if rows.is_empty() {
        println!("  none above the score floor");
        return Ok(());
    }
    let width = rows
        .iter()
        .map(|(id, _)| model.table.get(*id).surface.len())
        .max()
        .unwrap_or(0)
        .max("surface".len());
    println!("{:>4}  {:<width$}  {:>12}  {:>10}", "rank", "surface", "score", "percentile");
    for (rank, (id, score)) in rows.iter().enumerate() {
        let pct = score_percentile(&distribution, *score)?;
        println!(
            "{:>4}  {:<width$}  {:>12}  {:>9.1}%",
            rank + 1,
            model.table.get(*id).surface,
            format_sig6(*score),
            pct
        );
    }
    Ok(())
}

// --------------------------------------------------------------- termsim

#[derive(Args)]
struct TermsimArgs {
    #[command(flatten)]
    model: ModelArg,
    /// First term surface
    term_a: String,
    /// Second term surface
    term_b: String,
    /// Emit rows as TSV
    #[arg(long)]
    tsv: bool,
}

fn cmd_termsim(args: TermsimArgs) -> Result<()> {
    let model = load_model(&args.model.model)?;
    let a = model.resolve_term(&args.term_a)?;
    let b = model.resolve_term(&args.term_b)?;

    let direct = match model.pairs {
        Some(_) => Some(model.direct(a, b)?.unwrap_or(0.0)),
        None => None,
    };
    let shared = model.shared(a, b);
    let weighted = model.weighted(a, b)?;

    let direct_cell = match direct {
        Some(v) => format_sig6(v),
        None => "-".to_string(),
    };
    if args.tsv {
        println!("metric\tvalue");
        println!("direct\t{direct_cell}");
        println!("shared\t{shared}");
        println!("weighted\t{}", format_sig6(weighted));
    } else {
        println!("similarity of {:?} and {:?}", args.term_a, args.term_b);
        println!("  direct    {direct_cell}");
        println!("  shared    {shared}");
        println!("  weighted  {}", format_sig6(weighted));
        if direct.is_none() {
            println!("note: pair table not stored; direct metric unavailable");
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- docsim

#[derive(Args)]
struct DocsimArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Corpus TSV holding the documents' raw text
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// First document id
    doc_a: String,
    /// Second document id
    doc_b: String,
    /// Emit rows as TSV
    #[arg(long)]
    tsv: bool,
}

fn cmd_docsim(args: DocsimArgs) -> Result<()> {
    let model = load_model(&args.model.model)?;
    let corpus = CorpusSource::file(&args.corpus);
    let wanted: HashSet<&str> = [args.doc_a.as_str(), args.doc_b.as_str()].into();
    let docs = collect_docs(&corpus, &model, &wanted)?;
    let da = require_doc(&docs, &args.doc_a)?;
    let db = require_doc(&docs, &args.doc_b)?;
    let min_words = model.manifest.params.passage_min_words;
    ensure_eligible(da, min_words)?;
    ensure_eligible(db, min_words)?;

    let params = &model.manifest.params;
    let pa = build_passage_vector(da, &model.table, &model.vectors, params.max_dims);
    let pb = build_passage_vector(db, &model.table, &model.vectors, params.max_dims);

    let mut candidates = doc_term_strings(da);
    candidates.extend(doc_term_strings(db));
    let inventory = RareTermInventory::build(
        &corpus,
        &model.stoplist,
        &model.lexicon,
        &model.table,
        &candidates,
        params.min_abstract_df,
    )?;

    let shared = passage_shared_terms(&pa, &pb);
    let weighted = passage_weighted_score(&pa, &pb, &model.table, &params.weights)?;
    let title = shared_title_words(da, db);
    let rare = shared_rare_terms(da, db, &inventory, &params.weights);
    let common = longest_common_string(&passage_text(da), &passage_text(db), MIN_COMMON_STRING);

    if args.tsv {
        println!("dims\t{}\t{}", args.doc_a, pa.len());
        println!("dims\t{}\t{}", args.doc_b, pb.len());
        println!("metric\tpassage_shared\t{shared}");
        println!("metric\tpassage_weighted\t{}", format_sig6(weighted));
        println!("metric\ttitle_words\t{title}");
        println!("metric\trare_terms\t{}", format_sig6(rare));
        println!("metric\tcommon_string\t{common}");
    } else {
        println!(
            "passage similarity of {:?} ({} dims) and {:?} ({} dims)",
            args.doc_a,
            pa.len(),
            args.doc_b,
            pb.len()
        );
        println!("  passage_shared    {shared}");
        println!("  passage_weighted  {}", format_sig6(weighted));
        println!("  title_words       {title}");
        println!("  rare_terms        {}", format_sig6(rare));
        println!("  common_string     {common}");
    }
    Ok(())
}

/// Scans the corpus once, keeping only the documents whose ids are wanted.
fn collect_docs(
    corpus: &CorpusSource,
    model: &Model,
    wanted: &HashSet<&str>,
) -> Result<HashMap<String, Document>> {
    let mut found = HashMap::new();
    corpus.for_each(&model.stoplist, &model.lexicon, |doc| {
        if wanted.contains(doc.doc_id.as_str()) {
            found.insert(doc.doc_id.clone(), doc);
        }
        Ok(())
    })?;
    Ok(found)
}

fn require_doc<'a>(docs: &'a HashMap<String, Document>, id: &str) -> Result<&'a Document> {
    docs.get(id).ok_or_else(|| Error::UnknownDoc(id.to_string()))
}

fn ensure_eligible(doc: &Document, min_words: usize) -> Result<()> {
    if passage_eligible(doc, min_words) {
        return Ok(());
    }
    let reason = if doc.raw_abstract.trim().is_empty() {
        "abstract is empty".to_string()
    } else {
        format!("word count {} below minimum {}", doc.word_count(), min_words)
    };
    Err(Error::IneligibleDoc {
        doc_id: doc.doc_id.clone(),
        reason,
    })
}

// ------------------------------------------------------------------ bench

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Benchmark TSV: term_1<TAB>term_2<TAB>human_score
    #[arg(long, value_name = "FILE")]
    benchmark: PathBuf,
    /// Surface mapping overrides: raw<TAB>model_surface
    #[arg(long, value_name = "FILE")]
    mapping: Option<PathBuf>,
    /// Dense embeddings (surface c1 .. cd per line) adding a cosine column
    #[arg(long, value_name = "FILE")]
    embeddings: Option<PathBuf>,
    /// Folds for the significance test
    #[arg(long, default_value_t = 5, value_name = "K")]
    k: usize,
    /// Seed for the fold shuffle
    #[arg(long, default_value_t = 42, value_name = "SEED")]
    seed: u64,
    /// Use Welch's t-test instead of the pooled-variance test
    #[arg(long)]
    welch: bool,
    /// Emit typed rows as TSV
    #[arg(long)]
    tsv: bool,
}

struct ScoreColumn {
    name: &'static str,
    values: Vec<f64>,
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    require(args.k >= 2, "--k must be at least 2")?;
    let model = load_model(&args.model.model)?;
    let bench = load_benchmark(&args.benchmark, args.mapping.as_deref(), &model.table)?;
    let embeddings = match &args.embeddings {
        Some(p) => Some(EmbeddingSet::from_path(p)?),
        None => None,
    };
    let has_direct = model.pairs.is_some();

    let mut human = Vec::new();
    let mut direct = Vec::new();
    let mut shared = Vec::new();
    let mut weighted = Vec::new();
    let mut cos = Vec::new();
    let mut excluded_embedding = 0usize;
    for pair in bench.pairs.iter().filter(|p| p.included()) {
        let (a, b) = (pair.mapped_a.unwrap(), pair.mapped_b.unwrap());
        let emb_pair = match &embeddings {
            Some(set) => {
                match (
                    phrase_embedding(set, &model.table, a),
                    phrase_embedding(set, &model.table, b),
                ) {
                    (Some(va), Some(vb)) => Some((va, vb)),
                    _ => {
                        excluded_embedding += 1;
                        continue;
                    }
                }
            }
            None => None,
        };
        human.push(pair.human_score);
        if has_direct {
            direct.push(model.direct(a, b)?.unwrap_or(0.0));
        }
        shared.push(model.shared(a, b) as f64);
        weighted.push(model.weighted(a, b)?);
        if let Some((va, vb)) = emb_pair {
            cos.push(cosine(&va, &vb)?);
        }
    }

    let mut columns = Vec::new();
    if has_direct {
        columns.push(ScoreColumn { name: "direct", values: direct });
    }
    columns.push(ScoreColumn { name: "shared", values: shared });
    columns.push(ScoreColumn { name: "weighted", values: weighted });
    if embeddings.is_some() {
        columns.push(ScoreColumn { name: "cosine", values: cos });
    }

    let scored = human.len();
    let mut notes = Vec::new();
    if !has_direct {
        notes.push("pair table not stored; direct metric omitted".to_string());
    }

    if args.tsv {
        println!("count\ttotal\t{}", bench.total());
        println!("count\tmapped\t{}", bench.mapped());
        println!("count\texcluded_unmapped\t{}", bench.excluded());
        if embeddings.is_some() {
            println!("count\texcluded_embedding\t{excluded_embedding}");
        }
        println!("count\tscored\t{scored}");
        println!("count\tmalformed\t{}", bench.malformed.len());
        for (line, msg) in &bench.malformed {
            println!("malformed\t{line}\t{msg}");
        }
    } else {
        println!("benchmark report: {}", args.benchmark.display());
        let embedding_note = if embeddings.is_some() {
            format!(", {excluded_embedding} excluded by embeddings")
        } else {
            String::new()
        };
        println!(
            "pairs: {} total, {} mapped, {} excluded (no model term){}, {} malformed rows",
            bench.total(),
            bench.mapped(),
            bench.excluded(),
            embedding_note,
            bench.malformed.len()
        );
        for (line, msg) in bench.malformed.iter().take(5) {
            println!("  malformed line {line}: {msg}");
        }
        if bench.malformed.len() > 5 {
            println!("  ... and {} more", bench.malformed.len() - 5);
        }
        println!("scored: {scored}");
    }

    if scored < 2 {
        let msg = "fewer than 2 scored pairs; correlations skipped".to_string();
        if args.tsv {
            println!("note\t{msg}");
        } else {
            println!("note: {msg}");
        }
        return Ok(());
    }

    // Per-metric correlation with the human scores.
    if args.tsv {
        for col in &columns {
            println!(
                "spearman\thuman\t{}\t{}",
                col.name,
                spearman_cell(&human, &col.values)
            );
        }
    } else {
        println!("spearman vs human (n={scored}):");
        for col in &columns {
            println!("  {:<9} {}", col.name, spearman_cell(&human, &col.values));
        }
    }

    // Full cross-metric matrix, human included.
    let mut names: Vec<&str> = vec!["human"];
    let mut series: Vec<&[f64]> = vec![&human];
    for col in &columns {
        names.push(col.name);
        series.push(&col.values);
    }
    if args.tsv {
        for i in 0..names.len() {
            for j in (i + 1)..names.len() {
                println!(
                    "matrix\t{}\t{}\t{}",
                    names[i],
                    names[j],
                    spearman_cell(series[i], series[j])
                );
            }
        }
    } else {
        println!("cross-metric spearman:");
        print_matrix(&names, &series);
    }

    // K-fold significance for every unordered metric pair.
    let variant = if args.welch { "welch" } else { "pooled" };
    if !args.tsv {
        println!(
            "{}-fold significance (seed {}, {} t-test):",
            args.k, args.seed, variant
        );
    }
    for i in 0..columns.len() {
        for j in (i + 1)..columns.len() {
            let a = &columns[i];
            let b = &columns[j];
            match kfold_significance(&human, &a.values, &b.values, args.k, args.seed, args.welch) {
                Ok(report) => print_kfold(a.name, b.name, &report, args.tsv),
                Err(e) => {
                    if args.tsv {
                        println!("kfold_error\t{}\t{}\t{e}", a.name, b.name);
                    } else {
                        println!("  {} vs {}: skipped ({e})", a.name, b.name);
                    }
                }
            }
        }
    }

    for msg in &notes {
        if args.tsv {
            println!("note\t{msg}");
        } else {
            println!("note: {msg}");
        }
    }
    Ok(())
}

/// Embedding for a model term: the sum over its space-separated words,
/// falling back to their lowercase forms; `None` when any word is missing
/// or the sum has zero magnitude.
fn phrase_embedding(set: &EmbeddingSet, table: &TermTable, id: TermId) -> Option<DenseVector> {
    let surface = &table.get(id).surface;
    let words: Vec<&str> = surface.split(' ').collect();
    let summed = sum_phrase_vectors(&words, set).or_else(|| {
        let lower: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
        let refs: Vec<&str> = lower.iter().map(String::as_str).collect();
        sum_phrase_vectors(&refs, set)
    })?;
    if summed.components.iter().all(|c| *c == 0.0) {
        return None;
    }
    Some(summed)
}

fn print_kfold(a: &str, b: &str, report: &KfoldReport, tsv: bool) {
    let t = &report.test;
    if tsv {
        println!(
            "kfold\t{a}\t{b}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            report.k,
            format_sig6(report.a.mean),
            format_sig6(report.a.sem),
            format_sig6(report.b.mean),
            format_sig6(report.b.sem),
            format_sig6(t.t),
            format_sig6(t.df),
            format_sig6(t.p),
            u8::from(t.degenerate)
        );
    } else {
        let flag = if t.degenerate { " (degenerate)" } else { "" };
        println!(
            "  {a} vs {b}: rho {:.4} ±{:.4} vs {:.4} ±{:.4}, t {:.4}, df {}, p {}{flag}",
            report.a.mean,
            report.a.sem,
            report.b.mean,
            report.b.sem,
            t.t,
            format_sig6(t.df),
            format_sig6(t.p)
        );
    }
}

// ------------------------------------------------------------------ pairs

#[derive(Args)]
struct PairsArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Pair file: doc_id_1<TAB>doc_id_2<TAB>label with label pos or neg
    #[arg(long, value_name = "FILE")]
    pairs: PathBuf,
    /// Corpus TSV holding the documents' raw text
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Document embeddings (doc_id c1 .. cd per line) adding a cosine column
    #[arg(long, value_name = "FILE")]
    embeddings: Option<PathBuf>,
    /// Use Welch's t-test instead of the pooled-variance test
    #[arg(long)]
    welch: bool,
    /// Emit typed rows as TSV
    #[arg(long)]
    tsv: bool,
}

struct DocPairRow {
    a: String,
    b: String,
    positive: bool,
}

fn load_doc_pairs(path: &Path) -> Result<(Vec<DocPairRow>, Vec<(usize, String)>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut malformed = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            malformed.push((line_no, format!("expected 3 fields, got {}", fields.len())));
            continue;
        }
        let positive = match fields[2] {
            "pos" => true,
            "neg" => false,
            other => {
                malformed.push((line_no, format!("label {other:?} is not pos or neg")));
                continue;
            }
        };
        rows.push(DocPairRow {
            a: fields[0].to_string(),
            b: fields[1].to_string(),
            positive,
        });
    }
    Ok((rows, malformed))
}

fn cmd_pairs(args: PairsArgs) -> Result<()> {
    let model = load_model(&args.model.model)?;
    let (rows, malformed) = load_doc_pairs(&args.pairs)?;
    let corpus = CorpusSource::file(&args.corpus);
    let wanted: HashSet<&str> = rows
        .iter()
        .flat_map(|r| [r.a.as_str(), r.b.as_str()])
        .collect();
    let docs = collect_docs(&corpus, &model, &wanted)?;
    let embeddings = match &args.embeddings {
        Some(p) => Some(EmbeddingSet::from_path(p)?),
        None => None,
    };
    let params = &model.manifest.params;

    let mut skipped_unknown: Vec<(&DocPairRow, &str)> = Vec::new();
    let mut excluded_ineligible = 0usize;
    let mut excluded_embedding = 0usize;
    let mut scored_rows: Vec<&DocPairRow> = Vec::new();
    for row in &rows {
        let missing = [&row.a, &row.b]
            .into_iter()
            .find(|id| !docs.contains_key(*id));
        if let Some(id) = missing {
            skipped_unknown.push((row, id));
            continue;
        }
        let eligible = [&row.a, &row.b]
            .into_iter()
            .all(|id| passage_eligible(&docs[id], params.passage_min_words));
        if !eligible {
            excluded_ineligible += 1;
            continue;
        }
        if let Some(set) = &embeddings {
            let has_both = [&row.a, &row.b]
                .into_iter()
                .all(|id| doc_embedding(set, id).is_some());
            if !has_both {
                excluded_embedding += 1;
                continue;
            }
        }
        scored_rows.push(row);
    }

    // Passage vectors and the rare-string inventory cover only scored docs.
    let needed: BTreeSet<&str> = scored_rows
        .iter()
        .flat_map(|r| [r.a.as_str(), r.b.as_str()])
        .collect();
    let mut candidates = HashSet::new();
    for id in &needed {
        candidates.extend(doc_term_strings(&docs[*id]));
    }
    let inventory = RareTermInventory::build(
        &corpus,
        &model.stoplist,
        &model.lexicon,
        &model.table,
        &candidates,
        params.min_abstract_df,
    )?;
    let vectors: HashMap<&str, PassageVector> = needed
        .iter()
        .map(|id| {
            (
                *id,
                build_passage_vector(&docs[*id], &model.table, &model.vectors, params.max_dims),
            )
        })
        .collect();

    let mut metric_names = vec![
        "passage_shared",
        "passage_weighted",
        "title_words",
        "rare_terms",
        "common_string",
    ];
    if embeddings.is_some() {
        metric_names.push("cosine");
    }
    let n_metrics = metric_names.len();
    let mut pos: Vec<Vec<f64>> = vec![Vec::new(); n_metrics];
    let mut neg: Vec<Vec<f64>> = vec![Vec::new(); n_metrics];
    for row in &scored_rows {
        let da = &docs[&row.a];
        let db = &docs[&row.b];
        let pa = &vectors[row.a.as_str()];
        let pb = &vectors[row.b.as_str()];
        let mut values = vec![
            passage_shared_terms(pa, pb) as f64,
            passage_weighted_score(pa, pb, &model.table, &params.weights)?,
            shared_title_words(da, db) as f64,
            shared_rare_terms(da, db, &inventory, &params.weights),
            longest_common_string(&passage_text(da), &passage_text(db), MIN_COMMON_STRING) as f64,
        ];
        if let Some(set) = &embeddings {
            let va = doc_embedding(set, &row.a).expect("checked above");
            let vb = doc_embedding(set, &row.b).expect("checked above");
            values.push(cosine(&va, &vb)?);
        }
        let bucket = if row.positive { &mut pos } else { &mut neg };
        for (i, v) in values.into_iter().enumerate() {
            bucket[i].push(v);
        }
    }
    let n_pos = pos[0].len();
    let n_neg = neg[0].len();

    if args.tsv {
        println!("count\trows\t{}", rows.len() + malformed.len());
        println!("count\tmalformed\t{}", malformed.len());
        println!("count\tparsed\t{}", rows.len());
        println!("count\tskipped_unknown\t{}", skipped_unknown.len());
        println!("count\texcluded_ineligible\t{excluded_ineligible}");
        if embeddings.is_some() {
            println!("count\texcluded_embedding\t{excluded_embedding}");
        }
        println!("count\tscored_pos\t{n_pos}");
        println!("count\tscored_neg\t{n_neg}");
        for (line, msg) in &malformed {
            println!("malformed\t{line}\t{msg}");
        }
        for (row, id) in &skipped_unknown {
            println!("skipped\t{}\t{}\t{id}", row.a, row.b);
        }
    } else {
        println!("document pair report: {}", args.pairs.display());
        println!(
            "rows: {} parsed ({} malformed), {} unknown-id, {} ineligible{}",
            rows.len(),
            malformed.len(),
            skipped_unknown.len(),
            excluded_ineligible,
            if embeddings.is_some() {
                format!(", {excluded_embedding} without embeddings")
            } else {
                String::new()
            }
        );
        for (line, msg) in malformed.iter().take(5) {
            println!("  malformed line {line}: {msg}");
        }
        if malformed.len() > 5 {
            println!("  ... and {} more", malformed.len() - 5);
        }
        for (row, id) in skipped_unknown.iter().take(5) {
            println!("  skipped ({}, {}): {id:?} not in corpus", row.a, row.b);
        }
        if skipped_unknown.len() > 5 {
            println!("  ... and {} more", skipped_unknown.len() - 5);
        }
        println!("scored: {n_pos} pos, {n_neg} neg");
    }

    if n_pos == 0 || n_neg == 0 {
        let msg = "need at least one scored pair of each label; statistics skipped".to_string();
        if args.tsv {
            println!("note\t{msg}");
        } else {
            println!("note: {msg}");
        }
        return Ok(());
    }

    // Per-metric sample statistics and discrimination ratio.
    if !args.tsv {
        println!(
            "{:<17} {:>24} {:>24} {:>9} {:>9} {:>12}",
            "metric", "pos mean ± sd (nonzero)", "neg mean ± sd (nonzero)", "ratio", "t", "p"
        );
    }
    for (i, name) in metric_names.iter().enumerate() {
        let d = discrimination_stats(&pos[i], &neg[i])?;
        let ratio = if d.ratio_infinite {
            "inf".to_string()
        } else if d.ratio.is_nan() {
            "-".to_string()
        } else {
            format!("{:.4}", d.ratio)
        };
        let (t_cell, p_cell) = match &d.test {
            Some(t) => (format!("{:.4}", t.t), format_sig6(t.p)),
            None => ("-".to_string(), "-".to_string()),
        };
        if args.tsv {
            for (label, stats) in [("pos", &d.pos), ("neg", &d.neg)] {
                println!(
                    "stats\t{name}\t{label}\t{}\t{}\t{}\t{}",
                    stats.n,
                    format_sig6(stats.mean),
                    format_sig6(stats.sd),
                    stats.nonzero
                );
            }
            println!("discrimination\t{name}\t{ratio}\t{t_cell}\t{p_cell}");
        } else {
            let pos_cell = format!(
                "{:.4} ± {:.4} ({}/{})",
                d.pos.mean, d.pos.sd, d.pos.nonzero, d.pos.n
            );
            let neg_cell = format!(
                "{:.4} ± {:.4} ({}/{})",
                d.neg.mean, d.neg.sd, d.neg.nonzero, d.neg.n
            );
            println!(
                "{name:<17} {pos_cell:>24} {neg_cell:>24} {ratio:>9} {t_cell:>9} {p_cell:>12}"
            );
        }
    }

    // Cross-metric agreement within each scope.
    let combined: Vec<Vec<f64>> = (0..n_metrics)
        .map(|i| pos[i].iter().chain(&neg[i]).copied().collect())
        .collect();
    for (scope, data) in [("combined", &combined), ("pos", &pos), ("neg", &neg)] {
        let series: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        if args.tsv {
            for i in 0..n_metrics {
                for j in (i + 1)..n_metrics {
                    println!(
                        "matrix\t{scope}\t{}\t{}\t{}",
                        metric_names[i],
                        metric_names[j],
                        spearman_cell(series[i], series[j])
                    );
                }
            }
        } else {
            println!("cross-metric spearman ({scope}, n={}):", series[0].len());
            print_matrix(&metric_names, &series);
        }
    }
    Ok(())
}

/// Embedding for a document id; `None` when missing or zero-magnitude.
fn doc_embedding(set: &EmbeddingSet, doc_id: &str) -> Option<DenseVector> {
    let v = set.get(doc_id)?;
    if v.components.iter().all(|c| *c == 0.0) {
        return None;
    }
    Some(v)
}

// ---------------------------------------------------------------- helpers

/// Spearman rho as a 4-decimal cell, or "-" when undefined (constant input,
/// too few points).
fn spearman_cell(a: &[f64], b: &[f64]) -> String {
    match spearman(a, b) {
        Ok(rho) => format!("{rho:.4}"),
        Err(_) => "-".to_string(),
    }
}

fn print_matrix(names: &[&str], series: &[&[f64]]) {
    let width = names.iter().map(|n| n.len()).max().unwrap_or(6).max(7);
    print!("  {:width$}", "");
    for name in names {
        print!("  {name:>width$}");
    }
    println!();
    for (i, name) in names.iter().enumerate() {
        print!("  {name:<width$}");
        for j in 0..names.len() {
            let cell = if i == j {
                "1".to_string()
            } else {
                spearman_cell(series[i], series[j])
            };
            print!("  {cell:>width$}");
        }
        println!();
    }
}

/// Decimal digit grouping: 1234567 -> "1,234,567".
fn thousands(n: u64) -> String {
    let digits = n.to_string();
    let bytes = digits.as_bytes();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, b) in bytes.iter().enumerate() {
        if i > 0 && (bytes.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(*b as char);
    }
    out
}

fn human_bytes(bytes: u64) -> String {
    const MIB: f64 = 1024.0 * 1024.0;
    const GIB: f64 = 1024.0 * MIB;
    let b = bytes as f64;
    if b >= GIB {
        format!("{:.2} GiB", b / GIB)
    } else {
        format!("{:.1} MiB", b / MIB)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thousands_groups_digits() {
        assert_eq!(thousands(0), "0");
        assert_eq!(thousands(999), "999");
        assert_eq!(thousands(1000), "1,000");
        assert_eq!(thousands(26_759_399), "26,759,399");
        assert_eq!(thousands(1_000_000_000), "1,000,000,000");
    }

    #[test]
    fn human_bytes_picks_unit() {
        assert_eq!(human_bytes(512 * 1024 * 1024), "512.0 MiB");
        assert_eq!(human_bytes(8 * 1024 * 1024 * 1024), "8.00 GiB");
    }

    #[test]
    fn metric_parser_accepts_known_names() {
        assert_eq!(parse_metric("direct"), Ok(TermMetric::Direct));
        assert_eq!(parse_metric("shared"), Ok(TermMetric::Shared));
        assert_eq!(parse_metric("weighted"), Ok(TermMetric::Weighted));
        assert!(parse_metric("euclidean").is_err());
    }

    #[test]
    fn cli_structure_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
