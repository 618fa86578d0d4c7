//! On-disk model format: a directory of TSV files with LF line endings,
//! written through a staging directory so a failed save never leaves a
//! half-written model. Serialization is deterministic byte-for-byte, and a
//! loaded model saves back to an identical directory.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::cooccur::{PairRecord, PairTable};
use crate::corpus::Stoplist;
use crate::error::{Error, Result};
use crate::model::{Model, ModelManifest, FORMAT_VERSION};
use crate::passages::PassageVector;
use crate::pipeline::BuildParams;
use crate::terms::{AbbreviationLexicon, Term, TermId, TermKind, TermTable};
use crate::vectors::{KindWeights, TermVector};

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const STOPLIST_FILE: &str = "stoplist.txt";
pub const LEXICON_FILE: &str = "lexicon.tsv";
pub const TERMS_FILE: &str = "terms.tsv";
pub const VECTORS_FILE: &str = "vectors.tsv";
pub const PAIRS_FILE: &str = "pairs.tsv";
pub const PASSAGES_FILE: &str = "passages.tsv";

/// Formats a float to 6 significant digits, rounding ties to even:
/// positional notation while the exponent stays in [-4, 5], scientific
/// (`1.23457e6`) outside that range, trailing zeros trimmed.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let neg = v < 0.0;
    let s = format!("{:.5e}", v.abs());
    let (mantissa, exp) = s.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("exponent");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    debug_assert_eq!(digits.len(), 6);
    let body = if (-4..6).contains(&exp) {
        if exp >= 0 {
            let point = (exp + 1) as usize;
            let frac = digits[point..].trim_end_matches('0');
            if frac.is_empty() {
                digits[..point].to_string()
            } else {
                format!("{}.{}", &digits[..point], frac)
            }
        } else {
            let zeros = "0".repeat((-exp - 1) as usize);
            let mut frac = format!("{zeros}{digits}");
            frac.truncate(frac.trim_end_matches('0').len());
            format!("0.{frac}")
        }
    } else {
        let frac = digits[1..].trim_end_matches('0');
        if frac.is_empty() {
            format!("{}e{exp}", &digits[..1])
        } else {
            format!("{}.{}e{exp}", &digits[..1], frac)
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

fn staging_dir(dir: &Path) -> Result<PathBuf> {
    let name = dir.file_name().ok_or_else(|| {
        Error::Invalid(format!("bad model directory path {}", dir.display()))
    })?;
    let mut name = name.to_os_string();
    name.push(".tmp");
    Ok(dir.with_file_name(name))
}

struct FileWriter {
    path: PathBuf,
    inner: BufWriter<File>,
}

impl FileWriter {
    fn create(path: PathBuf) -> Result<FileWriter> {
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(FileWriter {
            inner: BufWriter::new(file),
            path,
        })
    }

    fn line(&mut self, s: &str) -> Result<()> {
        self.inner
            .write_all(s.as_bytes())
            .and_then(|()| self.inner.write_all(b"\n"))
            .map_err(|e| Error::io(&self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn count_or_dash(n: Option<usize>) -> String {
    n.map_or_else(|| "-".to_string(), |n| n.to_string())
}

fn manifest_rows(model: &Model) -> Vec<(&'static str, String)> {
    let p = &model.manifest.params;
    let k = model.kind_counts();
    vec![
        ("format_version", model.manifest.format_version.clone()),
        ("corpus_digest", model.manifest.corpus_digest.clone()),
        ("min_title_df", p.min_title_df.to_string()),
        ("min_abstract_df", p.min_abstract_df.to_string()),
        ("min_lexicon_count", p.min_lexicon_count.to_string()),
        ("bigram_min_odds", format_sig6(p.bigram_min_odds)),
        ("trigram_min_abstracts", p.trigram_min_abstracts.to_string()),
        ("trigram_ratio", format_sig6(p.trigram_ratio)),
        ("bin_size", p.bin_size.to_string()),
        ("max_dims", p.max_dims.to_string()),
        ("min_odds", format_sig6(p.min_odds)),
        ("passage_min_words", p.passage_min_words.to_string()),
        ("weight_word", format_sig6(p.weights.word)),
        ("weight_abbreviation", format_sig6(p.weights.abbreviation)),
        ("weight_bigram", format_sig6(p.weights.bigram)),
        ("weight_trigram", format_sig6(p.weights.trigram)),
        ("n_stoplist", model.stoplist.len().to_string()),
        ("n_lexicon", model.lexicon.len().to_string()),
        ("n_words", k.words.to_string()),
        ("n_bigrams", k.bigrams.to_string()),
        ("n_trigrams", k.trigrams.to_string()),
        ("n_abbreviations", k.abbreviations.to_string()),
        ("n_terms", model.table.len().to_string()),
        ("n_pairs", count_or_dash(model.pairs.as_ref().map(PairTable::len))),
        ("n_vectors", model.vectors.len().to_string()),
        (
            "n_passages",
            count_or_dash(model.passages.as_ref().map(Vec::len)),
        ),
    ]
}

fn write_vector_entries(line: &mut String, entries: &[(TermId, f64)]) {
    use std::fmt::Write as _;
    for (i, &(ctx, value)) in entries.iter().enumerate() {
        if i > 0 {
            line.push(' ');
        }
        let _ = write!(line, "{ctx}:{}", format_sig6(value));
    }
}

/// Writes `model` to `dir`, which must not already exist. All files are
/// first written into a sibling `<dir>.tmp` staging directory that is
/// renamed into place only once complete.
pub fn save_model(model: &Model, dir: &Path) -> Result<()> {
    if dir.exists() {
        return Err(Error::OutputExists(dir.to_path_buf()));
    }
    let staging = staging_dir(dir)?;
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    fs::create_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;

    let mut w = FileWriter::create(staging.join(MANIFEST_FILE))?;
    for (key, value) in manifest_rows(model) {
        w.line(&format!("{key}\t{value}"))?;
    }
    w.finish()?;

    let mut w = FileWriter::create(staging.join(STOPLIST_FILE))?;
    for word in model.stoplist.words_sorted() {
        w.line(word)?;
    }
    w.finish()?;

    let mut w = FileWriter::create(staging.join(LEXICON_FILE))?;
    for (surface, count) in model.lexicon.entries_sorted() {
        w.line(&format!("{surface}\t{count}"))?;
    }
    w.finish()?;

    let mut w = FileWriter::create(staging.join(TERMS_FILE))?;
    for (id, t) in model.table.iter() {
        w.line(&format!(
            "{id}\t{}\t{}\t{}\t{}\t{}",
            t.surface,
            t.kind.code(),
            t.df_title,
            t.df_abstract,
            t.df_total
        ))?;
    }
    w.finish()?;

    let mut w = FileWriter::create(staging.join(VECTORS_FILE))?;
    let mut line = String::new();
    for v in &model.vectors {
        line.clear();
        use std::fmt::Write as _;
        let _ = write!(line, "{}\t", v.owner);
        write_vector_entries(&mut line, &v.entries);
        w.line(&line)?;
    }
    w.finish()?;

    if let Some(pairs) = &model.pairs {
        let mut w = FileWriter::create(staging.join(PAIRS_FILE))?;
        for r in pairs.records() {
            w.line(&format!(
                "{}\t{}\t{}\t{}\t{}",
                r.a,
                r.b,
                r.co_df,
                format_sig6(r.geomean),
                format_sig6(r.odds)
            ))?;
        }
        w.finish()?;
    }

    if let Some(passages) = &model.passages {
        let mut w = FileWriter::create(staging.join(PASSAGES_FILE))?;
        let mut line = String::new();
        for p in passages {
            line.clear();
            line.push_str(&p.doc_id);
            line.push('\t');
            write_vector_entries(&mut line, &p.entries);
            w.line(&line)?;
        }
        w.finish()?;
    }

    fs::rename(&staging, dir).map_err(|e| Error::io(dir, e))
}

struct ManifestCounts {
    stoplist: usize,
    lexicon: usize,
    words: usize,
    bigrams: usize,
    trigrams: usize,
    abbreviations: usize,
    terms: usize,
    pairs: Option<usize>,
    vectors: usize,
    passages: Option<usize>,
}

fn corrupt(file: &str, msg: impl Into<String>) -> Error {
    Error::ModelCorrupt {
        file: file.to_string(),
        msg: msg.into(),
    }
}

fn malformed(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn load_manifest(path: &Path) -> Result<(ModelManifest, ManifestCounts)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map: HashMap<String, String> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let (key, value) = row
            .split_once('\t')
            .ok_or_else(|| malformed(path, idx + 1, "expected key<TAB>value"))?;
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(malformed(path, idx + 1, format!("duplicate key {key:?}")));
        }
    }

    let version = map
        .remove("format_version")
        .ok_or_else(|| corrupt(MANIFEST_FILE, "missing key \"format_version\""))?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION.to_string(),
        });
    }

    let mut take = |key: &str| {
        map.remove(key)
            .ok_or_else(|| corrupt(MANIFEST_FILE, format!("missing key {key:?}")))
    };
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| corrupt(MANIFEST_FILE, format!("bad value {value:?} for {key:?}")))
    }
    fn opt_count(key: &str, value: &str) -> Result<Option<usize>> {
        if value == "-" {
            Ok(None)
        } else {
            num(key, value).map(Some)
        }
    }
    macro_rules! field {
        ($key:literal) => {{
            let v = take($key)?;
            num($key, &v)?
        }};
    }

    let corpus_digest = take("corpus_digest")?;
    let params = BuildParams {
        min_title_df: field!("min_title_df"),
        min_abstract_df: field!("min_abstract_df"),
        min_lexicon_count: field!("min_lexicon_count"),
        bigram_min_odds: field!("bigram_min_odds"),
        trigram_min_abstracts: field!("trigram_min_abstracts"),
        trigram_ratio: field!("trigram_ratio"),
        bin_size: field!("bin_size"),
        max_dims: field!("max_dims"),
        min_odds: field!("min_odds"),
        passage_min_words: field!("passage_min_words"),
        weights: KindWeights {
            word: field!("weight_word"),
            abbreviation: field!("weight_abbreviation"),
            bigram: field!("weight_bigram"),
            trigram: field!("weight_trigram"),
        },
        // Runtime knobs are not model properties; file presence determines
        // the optional stores.
        workers: 0,
        store_pairs: true,
        precompute_passages: false,
    };
    let counts = ManifestCounts {
        stoplist: field!("n_stoplist"),
        lexicon: field!("n_lexicon"),
        words: field!("n_words"),
        bigrams: field!("n_bigrams"),
        trigrams: field!("n_trigrams"),
        abbreviations: field!("n_abbreviations"),
        terms: field!("n_terms"),
        pairs: {
            let v = take("n_pairs")?;
            opt_count("n_pairs", &v)?
        },
        vectors: field!("n_vectors"),
        passages: {
            let v = take("n_passages")?;
            opt_count("n_passages", &v)?
        },
    };
    if let Some(unknown) = map.keys().min() {
        return Err(corrupt(MANIFEST_FILE, format!("unknown key {unknown:?}")));
    }
    Ok((
        ModelManifest {
            format_version: FORMAT_VERSION.to_string(),
            corpus_digest,
            params,
        },
        counts,
    ))
}

fn check_count(file: &str, what: &str, found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(corrupt(
            file,
            format!("{what}: manifest says {expected}, file has {found}"),
        ));
    }
    Ok(())
}

/// Non-empty data lines with 1-based line numbers (tolerates CRLF on read;
/// saves always emit LF).
fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter_map(|(i, l)| {
            let l = l.trim_end_matches('\r');
            (!l.is_empty()).then(|| (i + 1, l.to_string()))
        })
        .collect())
}

fn load_terms(path: &Path) -> Result<Vec<Term>> {
    let mut terms = Vec::new();
    for (lineno, row) in data_lines(path)? {
        let fields: Vec<&str> = row.split('\t').collect();
        if fields.len() != 6 {
            return Err(malformed(
                path,
                lineno,
                format!("expected 6 tab-separated fields, got {}", fields.len()),
            ));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| malformed(path, lineno, format!("bad term id {:?}", fields[0])))?;
        if id != terms.len() {
            return Err(malformed(
                path,
                lineno,
                format!("term ids must be dense and ascending; expected {}", terms.len()),
            ));
        }
        let kind = TermKind::parse(fields[2])
            .ok_or_else(|| malformed(path, lineno, format!("unknown kind {:?}", fields[2])))?;
        let df = |f: &str| -> Result<u32> {
            f.parse()
                .map_err(|_| malformed(path, lineno, format!("bad document frequency {f:?}")))
        };
        terms.push(Term {
            surface: fields[1].to_string(),
            kind,
            df_title: df(fields[3])?,
            df_abstract: df(fields[4])?,
            df_total: df(fields[5])?,
        });
    }
    Ok(terms)
}

fn parse_entries(
    path: &Path,
    lineno: usize,
    text: &str,
    n_terms: usize,
) -> Result<Vec<(TermId, f64)>> {
    let mut entries = Vec::new();
    if text.is_empty() {
        return Ok(entries);
    }
    for item in text.split(' ') {
        let (id, value) = item
            .split_once(':')
            .ok_or_else(|| malformed(path, lineno, format!("expected id:value, got {item:?}")))?;
        let id: TermId = id
            .parse()
            .map_err(|_| malformed(path, lineno, format!("bad term id {id:?}")))?;
        if id as usize >= n_terms {
            return Err(malformed(
                path,
                lineno,
                format!("term id {id} out of range (model has {n_terms} terms)"),
            ));
        }
        let value: f64 = value
            .parse()
            .map_err(|_| malformed(path, lineno, format!("bad value {value:?}")))?;
        if !value.is_finite() {
            return Err(malformed(path, lineno, format!("non-finite value {value:?}")));
        }
        entries.push((id, value));
    }
    Ok(entries)
}

fn load_vectors(path: &Path, n_terms: usize) -> Result<Vec<TermVector>> {
    let mut vectors: Vec<TermVector> = Vec::with_capacity(n_terms);
    for (lineno, row) in data_lines(path)? {
        let (owner, rest) = row
            .split_once('\t')
            .ok_or_else(|| malformed(path, lineno, "expected term_id<TAB>entries"))?;
        let owner: TermId = owner
            .parse()
            .map_err(|_| malformed(path, lineno, format!("bad term id {owner:?}")))?;
        if owner as usize != vectors.len() {
            return Err(malformed(
                path,
                lineno,
                format!("vector owners must be dense and ascending; expected {}", vectors.len()),
            ));
        }
        let entries = parse_entries(path, lineno, rest, n_terms)?;
        vectors.push(TermVector { owner, entries });
    }
    Ok(vectors)
}

fn load_pairs(path: &Path, n_terms: usize) -> Result<Vec<PairRecord>> {
    let mut records = Vec::new();
    for (lineno, row) in data_lines(path)? {
        let fields: Vec<&str> = row.split('\t').collect();
        if fields.len() != 5 {
            return Err(malformed(
                path,
                lineno,
                format!("expected 5 tab-separated fields, got {}", fields.len()),
            ));
        }
        let id = |f: &str| -> Result<TermId> {
            let id: TermId = f
                .parse()
                .map_err(|_| malformed(path, lineno, format!("bad term id {f:?}")))?;
            if id as usize >= n_terms {
                return Err(malformed(
                    path,
                    lineno,
                    format!("term id {id} out of range (model has {n_terms} terms)"),
                ));
            }
            Ok(id)
        };
        let float = |f: &str| -> Result<f64> {
            let v: f64 = f
                .parse()
                .map_err(|_| malformed(path, lineno, format!("bad value {f:?}")))?;
            if !v.is_finite() {
                return Err(malformed(path, lineno, format!("non-finite value {f:?}")));
            }
            Ok(v)
        };
        records.push(PairRecord {
            a: id(fields[0])?,
            b: id(fields[1])?,
            co_df: fields[2]
                .parse()
                .map_err(|_| malformed(path, lineno, format!("bad count {:?}", fields[2])))?,
            geomean: float(fields[3])?,
            odds: float(fields[4])?,
        });
    }
    Ok(records)
}

fn load_passages(path: &Path, n_terms: usize) -> Result<Vec<PassageVector>> {
    let mut passages = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (lineno, row) in data_lines(path)? {
        let (doc_id, rest) = row
            .split_once('\t')
            .ok_or_else(|| malformed(path, lineno, "expected doc_id<TAB>entries"))?;
        if seen.insert(doc_id.to_string(), lineno).is_some() {
            return Err(malformed(path, lineno, format!("duplicate doc_id {doc_id:?}")));
        }
        passages.push(PassageVector {
            doc_id: doc_id.to_string(),
            entries: parse_entries(path, lineno, rest, n_terms)?,
        });
    }
    Ok(passages)
}

/// Loads a model directory, verifying version, manifest counts, and
/// referential integrity of every stored id.
pub fn load_model(dir: &Path) -> Result<Model> {
    let (manifest, counts) = load_manifest(&dir.join(MANIFEST_FILE))?;

    let stoplist = Stoplist::from_path(&dir.join(STOPLIST_FILE))?;
    check_count(STOPLIST_FILE, "stoplist words", stoplist.len(), counts.stoplist)?;

    let lexicon = AbbreviationLexicon::from_path(&dir.join(LEXICON_FILE))?;
    check_count(LEXICON_FILE, "lexicon entries", lexicon.len(), counts.lexicon)?;

    let terms = load_terms(&dir.join(TERMS_FILE))?;
    check_count(TERMS_FILE, "terms", terms.len(), counts.terms)?;
    let table = TermTable::from_terms(terms)
        .map_err(|e| corrupt(TERMS_FILE, e.to_string()))?;
    for (kind, expected, what) in [
        (TermKind::Word, counts.words, "word terms"),
        (TermKind::Bigram, counts.bigrams, "bigram terms"),
        (TermKind::Trigram, counts.trigrams, "trigram terms"),
        (TermKind::Abbreviation, counts.abbreviations, "abbreviation terms"),
    ] {
        check_count(TERMS_FILE, what, table.kind_count(kind), expected)?;
    }

    let vectors = load_vectors(&dir.join(VECTORS_FILE), table.len())?;
    check_count(VECTORS_FILE, "vectors", vectors.len(), counts.vectors)?;
    if vectors.len() != table.len() {
        return Err(corrupt(
            VECTORS_FILE,
            format!("{} vectors for {} terms", vectors.len(), table.len()),
        ));
    }

    let pairs = match counts.pairs {
        Some(expected) => {
            let records = load_pairs(&dir.join(PAIRS_FILE), table.len())?;
            check_count(PAIRS_FILE, "pairs", records.len(), expected)?;
            Some(PairTable::new(records))
        }
        None => None,
    };

    let passages = match counts.passages {
        Some(expected) => {
            let rows = load_passages(&dir.join(PASSAGES_FILE), table.len())?;
            check_count(PASSAGES_FILE, "passages", rows.len(), expected)?;
            Some(rows)
        }
        None => None,
    };

    Ok(Model {
        manifest,
        stoplist,
        lexicon,
        table,
        pairs,
        vectors,
        passages,
    })
}
