//! Corpus parsing, tokenization, and stoplisting.
//!
//! Corpus files are UTF-8, one record per line: `doc_id<TAB>title<TAB>abstract`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::terms::AbbreviationLexicon;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub title_tokens: Vec<String>,
    pub abstract_tokens: Vec<String>,
    pub raw_title: String,
    pub raw_abstract: String,
}

impl Document {
    pub fn new(
        doc_id: String,
        raw_title: String,
        raw_abstract: String,
        stoplist: &Stoplist,
        lexicon: &AbbreviationLexicon,
    ) -> Document {
        let title_tokens = apply_stoplist(&tokenize(&raw_title), stoplist, lexicon);
        let abstract_tokens = apply_stoplist(&tokenize(&raw_abstract), stoplist, lexicon);
        Document {
            doc_id,
            title_tokens,
            abstract_tokens,
            raw_title,
            raw_abstract,
        }
    }

    /// Word budget used by the passage eligibility rule: tokens in title+abstract
    /// before stoplisting.
    pub fn word_count(&self) -> usize {
        tokenize(&self.raw_title).len() + tokenize(&self.raw_abstract).len()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stoplist {
    entries: HashSet<String>,
}

impl Stoplist {
    pub fn empty() -> Stoplist {
        Stoplist::default()
    }

    pub fn from_words<I, S>(words: I) -> Stoplist
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entries = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        Stoplist { entries }
    }

    /// Reads a stoplist file: one lowercase token per line.
    pub fn from_path(path: &Path) -> Result<Stoplist> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = HashSet::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let word = line.trim();
            if !word.is_empty() {
                entries.insert(word.to_lowercase());
            }
        }
        Ok(Stoplist { entries })
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words_sorted(&self) -> Vec<&str> {
        let mut words: Vec<&str> = self.entries.iter().map(String::as_str).collect();
        words.sort_unstable();
        words
    }
}

/// True for tokens kept in original case by the tokenizer: entirely uppercase
/// letters, length ≥ 2 (candidate abbreviations).
pub fn is_allcaps(token: &str) -> bool {
    let mut n = 0;
    for c in token.chars() {
        if !(c.is_alphabetic() && c.is_uppercase()) {
            return false;
        }
        n += 1;
    }
    n >= 2
}

/// Splits text on any character that is not a letter, digit, or hyphen; strips
/// leading/trailing hyphens; lowercases unless the token is all-uppercase letters
/// of length ≥ 2; drops single-character and pure-digit tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() || c == '-' {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            push_token(&text[s..i], &mut out);
        }
    }
    if let Some(s) = start {
        push_token(&text[s..], &mut out);
    }
    out
}

fn push_token(run: &str, out: &mut Vec<String>) {
    let token = run.trim_matches('-');
    if token.chars().nth(1).is_none() {
        return; // empty or single character
    }
    if token.bytes().all(|b| b.is_ascii_digit()) {
        return;
    }
    if is_allcaps(token) {
        out.push(token.to_string());
    } else {
        out.push(token.to_lowercase());
    }
}

/// Removes stoplisted tokens. All-caps candidate abbreviations bypass the
/// stoplist only when present in the lexicon; otherwise they are lowercased
/// and stoplisted like any other token.
pub fn apply_stoplist(
    tokens: &[String],
    stoplist: &Stoplist,
    lexicon: &AbbreviationLexicon,
) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        if is_allcaps(t) {
            if lexicon.contains(t) {
                out.push(t.clone());
                continue;
            }
            let low = t.to_lowercase();
            if !stoplist.contains(&low) {
                out.push(low);
            }
        } else if !stoplist.contains(t) {
            out.push(t.clone());
        }
    }
    out
}

/// Streams `doc_id<TAB>title<TAB>abstract` records. Malformed lines yield
/// record-level errors carrying the line number; duplicate doc_ids yield an
/// error the caller should treat as fatal.
pub fn parse_corpus<'a, R: BufRead + 'a>(
    reader: R,
    source: &str,
    stoplist: &'a Stoplist,
    lexicon: &'a AbbreviationLexicon,
) -> impl Iterator<Item = Result<Document>> + 'a {
    let source = source.to_string();
    let mut seen: HashSet<String> = HashSet::new();
    reader.lines().enumerate().map(move |(idx, line)| {
        let line_no = idx + 1;
        let mut line = line.map_err(|e| Error::io(&source, e))?;
        if line_no == 1 && line.starts_with('\u{feff}') {
            line.drain(..'\u{feff}'.len_utf8());
        }
        let line = line.strip_suffix('\r').map(str::to_string).unwrap_or(line);
        let mut fields = line.split('\t');
        let (doc_id, title, abstr) = match (
            fields.next(),
            fields.next(),
            fields.next(),
            fields.next(),
        ) {
            (Some(id), Some(t), Some(a), None) => (id, t, a),
            _ => {
                return Err(Error::Malformed {
                    path: source.clone(),
                    line: line_no,
                    msg: "expected doc_id<TAB>title<TAB>abstract".to_string(),
                })
            }
        };
        if doc_id.is_empty() {
            return Err(Error::Malformed {
                path: source.clone(),
                line: line_no,
                msg: "empty doc_id".to_string(),
            });
        }
        if !seen.insert(doc_id.to_string()) {
            return Err(Error::DuplicateDocId(doc_id.to_string()));
        }
        Ok(Document::new(
            doc_id.to_string(),
            title.to_string(),
            abstr.to_string(),
            stoplist,
            lexicon,
        ))
    })
}

/// A re-streamable corpus: a file on disk or an in-memory record list.
#[derive(Debug, Clone)]
pub enum CorpusSource {
    File(PathBuf),
    Memory(Vec<(String, String, String)>),
}

impl CorpusSource {
    pub fn file(path: impl Into<PathBuf>) -> CorpusSource {
        CorpusSource::File(path.into())
    }

    /// Runs `f` over every document in order, aborting on the first error.
    pub fn for_each<F>(
        &self,
        stoplist: &Stoplist,
        lexicon: &AbbreviationLexicon,
        mut f: F,
    ) -> Result<()>
    where
        F: FnMut(Document) -> Result<()>,
    {
        match self {
            CorpusSource::File(path) => {
                let file = File::open(path).map_err(|e| Error::io(path, e))?;
                let reader = BufReader::new(file);
                let name = path.display().to_string();
                for doc in parse_corpus(reader, &name, stoplist, lexicon) {
                    f(doc?)?;
                }
                Ok(())
            }
            CorpusSource::Memory(records) => {
                let mut seen = HashSet::new();
                for (id, title, abstr) in records {
                    if !seen.insert(id.as_str()) {
                        return Err(Error::DuplicateDocId(id.clone()));
                    }
                    f(Document::new(
                        id.clone(),
                        title.clone(),
                        abstr.clone(),
                        stoplist,
                        lexicon,
                    ))?;
                }
                Ok(())
            }
        }
    }

    /// SHA-256 over the corpus content, hex-encoded.
    pub fn digest(&self) -> Result<String> {
        let mut hasher = Sha256::new();
        match self {
            CorpusSource::File(path) => {
                let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
                let mut buf = [0u8; 65536];
                loop {
                    let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
                    if n == 0 {
                        break;
                    }
                    hasher.update(&buf[..n]);
                }
            }
            CorpusSource::Memory(records) => {
                for (id, title, abstr) in records {
                    hasher.update(id.as_bytes());
                    hasher.update(b"\t");
                    hasher.update(title.as_bytes());
                    hasher.update(b"\t");
                    hasher.update(abstr.as_bytes());
                    hasher.update(b"\n");
                }
            }
        }
        Ok(format!("sha256:{:x}", hasher.finalize()))
    }
}
