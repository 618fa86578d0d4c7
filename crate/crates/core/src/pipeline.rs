//! Two-pass model construction. The first pass works token-by-token: it
//! selects content words and, from the resulting basic word model, the
//! n-grams and abbreviations worth promoting to terms. The second pass
//! recounts everything under greedy recognition of the full vocabulary and
//! scores every co-occurring pair.

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;

use crate::cooccur::{compute_direct_odds, compute_geomeans, count_frequencies, PairTable};
use crate::corpus::{CorpusSource, Stoplist};
use crate::error::{Error, Result};
use crate::model::{Model, ModelManifest, FORMAT_VERSION};
use crate::passages::build_passage_vector;
use crate::terms::{
    select_abbreviations, select_bigrams, select_trigrams, select_words, AbbreviationLexicon,
    NgramCandidate, Term, TermKind, TermTable,
};
use crate::terms::TokenCounts;
use crate::vectors::{build_all_vectors, KindWeights};

/// Every tunable the build pipeline consumes. Defaults match the reference
/// PubMed-scale configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildParams {
    /// Minimum title document frequency for word selection.
    pub min_title_df: u32,
    /// Minimum abstract document frequency for word selection.
    pub min_abstract_df: u32,
    /// Minimum lexicon article count for abbreviation candidates.
    pub min_lexicon_count: u32,
    /// Minimum basic-model direct odds between adjacent words for bigrams.
    pub bigram_min_odds: f64,
    /// Minimum abstract document frequency for trigrams.
    pub trigram_min_abstracts: u32,
    /// Trigram df_total must reach this fraction of its rarer half's df_total.
    pub trigram_ratio: f64,
    /// Pairs per bin when converting co-occurrence counts to odds.
    pub bin_size: usize,
    /// Maximum entries kept per term or passage vector.
    pub max_dims: usize,
    /// Minimum odds for a context term to enter a vector.
    pub min_odds: f64,
    /// Minimum pre-stoplist word count for passage eligibility.
    pub passage_min_words: usize,
    /// Per-kind weights for weighted implicit similarity.
    pub weights: KindWeights,
    /// Worker threads for the parallel stages; 0 uses the global default.
    pub workers: usize,
    /// Keep the pair table in the model (needed for the direct metric).
    pub store_pairs: bool,
    /// Precompute passage vectors for every document at build time.
    pub precompute_passages: bool,
}

impl Default for BuildParams {
    fn default() -> BuildParams {
        BuildParams {
            min_title_df: 100,
            min_abstract_df: 25,
            min_lexicon_count: 25,
            bigram_min_odds: 10.0,
            trigram_min_abstracts: 1000,
            trigram_ratio: 0.30,
            bin_size: 500,
            max_dims: 300,
            min_odds: 1.25,
            passage_min_words: 25,
            weights: KindWeights::default(),
            workers: 0,
            store_pairs: true,
            precompute_passages: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BuildReport {
    pub docs: u64,
    pub basic_words: usize,
    pub basic_pairs: usize,
    pub full_pairs: usize,
    /// (phase label, elapsed seconds) in execution order.
    pub phases: Vec<(String, f64)>,
    pub peak_rss_bytes: Option<u64>,
}

fn phase<T>(
    report: &mut BuildReport,
    label: &'static str,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| Error::Phase {
        phase: label,
        source: Box::new(e),
    })?;
    report
        .phases
        .push((label.to_string(), start.elapsed().as_secs_f64()));
    Ok(out)
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// High-water-mark resident set size of this process, if the platform
/// exposes it.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    for line in status.lines() {
        if let Some(rest) = line.strip_prefix("VmHWM:") {
            let kb: u64 = rest.trim().trim_end_matches("kB").trim().parse().ok()?;
            return Some(kb * 1024);
        }
    }
    None
}

/// Word terms plus promoted n-grams and abbreviations, sorted by surface so
/// ids are reproducible. Dfs are the selection-time counts; the full
/// recognition pass replaces them.
fn assemble_table(
    words: &TermTable,
    abbrevs: &BTreeSet<String>,
    bigrams: &[NgramCandidate],
    trigrams: &[NgramCandidate],
) -> Result<TermTable> {
    let mut terms: Vec<Term> = words.iter().map(|(_, t)| t.clone()).collect();
    let surface_of = |c: &NgramCandidate| {
        c.words
            .iter()
            .map(|&id| words.get(id).surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };
    for (candidates, kind) in [(bigrams, TermKind::Bigram), (trigrams, TermKind::Trigram)] {
        for c in candidates {
            terms.push(Term {
                surface: surface_of(c),
                kind,
                df_title: c.dfs.title,
                df_abstract: c.dfs.abstr,
                df_total: c.dfs.total,
            });
        }
    }
    for s in abbrevs {
        terms.push(Term {
            surface: s.clone(),
            kind: TermKind::Abbreviation,
            df_title: 0,
            df_abstract: 0,
            df_total: 0,
        });
    }
    terms.sort_unstable_by(|a, b| a.surface.cmp(&b.surface));
    TermTable::from_terms(terms)
}

/// Runs the full build over `corpus` and returns the model plus a report of
/// phase timings and headline counts.
pub fn build_model(
    corpus: &CorpusSource,
    stoplist: Stoplist,
    lexicon: AbbreviationLexicon,
    params: BuildParams,
) -> Result<(Model, BuildReport)> {
    let mut report = BuildReport::default();

    let digest = phase(&mut report, "corpus digest", || corpus.digest())?;

    let counts = phase(&mut report, "token scan", || {
        TokenCounts::scan(corpus, &stoplist, &lexicon)
    })?;
    report.docs = counts.doc_count;

    let basic_words = phase(&mut report, "word selection", || {
        select_words(&counts, params.min_title_df, params.min_abstract_df)
    })?;
    report.basic_words = basic_words.len();

    let basic_pairs = phase(&mut report, "basic co-occurrence", || {
        let (dfs, counter) = count_frequencies(corpus, &stoplist, &lexicon, &basic_words)?;
        let totals: Vec<u32> = dfs.iter().map(|d| d.total).collect();
        let mut records = compute_geomeans(&counter, &totals);
        compute_direct_odds(&mut records, params.bin_size);
        Ok(PairTable::new(records))
    })?;
    report.basic_pairs = basic_pairs.len();

    let abbrevs = phase(&mut report, "abbreviation selection", || {
        Ok(select_abbreviations(
            &counts,
            &lexicon,
            params.min_lexicon_count,
        ))
    })?;

    let bigrams = phase(&mut report, "bigram selection", || {
        select_bigrams(
            corpus,
            &stoplist,
            &lexicon,
            &basic_words,
            &abbrevs,
            |a, b| basic_pairs.lookup(a, b).map(|r| r.odds),
            params.bigram_min_odds,
        )
    })?;

    let trigrams = phase(&mut report, "trigram selection", || {
        select_trigrams(
            corpus,
            &stoplist,
            &lexicon,
            &basic_words,
            &abbrevs,
            &bigrams,
            params.trigram_min_abstracts,
            params.trigram_ratio,
        )
    })?;

    let table = phase(&mut report, "vocabulary assembly", || {
        assemble_table(&basic_words, &abbrevs, &bigrams, &trigrams)
    })?;

    let (table, pair_table) = phase(&mut report, "full count", || {
        let (dfs, counter) = count_frequencies(corpus, &stoplist, &lexicon, &table)?;
        // Selection-time dfs give way to counts under greedy recognition,
        // where n-grams consume the positions of their component words.
        let terms = table
            .iter()
            .zip(&dfs)
            .map(|((_, t), d)| Term {
                surface: t.surface.clone(),
                kind: t.kind,
                df_title: d.title,
                df_abstract: d.abstr,
                df_total: d.total,
            })
            .collect();
        let table = TermTable::from_terms(terms)?;
        let totals: Vec<u32> = dfs.iter().map(|d| d.total).collect();
        let mut records = compute_geomeans(&counter, &totals);
        compute_direct_odds(&mut records, params.bin_size);
        Ok((table, PairTable::new(records)))
    })?;
    report.full_pairs = pair_table.len();

    let vectors = phase(&mut report, "vector ranking", || {
        in_pool(params.workers, || {
            build_all_vectors(&pair_table, &table, params.max_dims, params.min_odds)
        })
    })?;

    let passages = if params.precompute_passages {
        Some(phase(&mut report, "passage precompute", || {
            let mut docs = Vec::new();
            corpus.for_each(&stoplist, &lexicon, |d| {
                docs.push(d);
                Ok(())
            })?;
            in_pool(params.workers, || {
                docs.par_iter()
                    .map(|d| build_passage_vector(d, &table, &vectors, params.max_dims))
                    .collect()
            })
        })?)
    } else {
        None
    };

    report.peak_rss_bytes = peak_rss_bytes();

    let store_pairs = params.store_pairs;
    let model = Model {
        manifest: ModelManifest {
            format_version: FORMAT_VERSION.to_string(),
            corpus_digest: digest,
            params,
        },
        stoplist,
        lexicon,
        table,
        pairs: store_pairs.then_some(pair_table),
        vectors,
        passages,
    };
    Ok((model, report))
}
