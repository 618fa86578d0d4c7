//! Model vocabulary: words, bigrams, trigrams, abbreviations — selection by
//! document-frequency thresholds and recognition with component-word exclusion.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::{is_allcaps, CorpusSource, Document, Stoplist};
use crate::error::{Error, Result};

pub type TermId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    Word,
    Bigram,
    Trigram,
    Abbreviation,
}

impl TermKind {
    pub fn code(self) -> &'static str {
        match self {
            TermKind::Word => "word",
            TermKind::Bigram => "bigram",
            TermKind::Trigram => "trigram",
            TermKind::Abbreviation => "abbrev",
        }
    }

    pub fn parse(code: &str) -> Option<TermKind> {
        match code {
            "word" => Some(TermKind::Word),
            "bigram" => Some(TermKind::Bigram),
            "trigram" => Some(TermKind::Trigram),
            "abbrev" => Some(TermKind::Abbreviation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub surface: String,
    pub kind: TermKind,
    pub df_title: u32,
    pub df_abstract: u32,
    pub df_total: u32,
}

/// Immutable vocabulary with dense ids assigned in surface order.
#[derive(Debug, Clone, Default)]
pub struct TermTable {
    terms: Vec<Term>,
    surface_index: HashMap<String, TermId>,
    has_bigrams: bool,
    has_trigrams: bool,
}

impl TermTable {
    pub fn from_terms(terms: Vec<Term>) -> Result<TermTable> {
        let mut surface_index = HashMap::with_capacity(terms.len());
        let mut has_bigrams = false;
        let mut has_trigrams = false;
        for (i, term) in terms.iter().enumerate() {
            let parts = term.surface.split(' ').count();
            let shape_ok = match term.kind {
                TermKind::Word => parts == 1 && !term.surface.is_empty(),
                TermKind::Bigram => parts == 2,
                TermKind::Trigram => parts == 3,
                TermKind::Abbreviation => is_allcaps(&term.surface),
            };
            if !shape_ok {
                return Err(Error::Invalid(format!(
                    "term {:?} has invalid surface for kind {}",
                    term.surface,
                    term.kind.code()
                )));
            }
            if surface_index
                .insert(term.surface.clone(), i as TermId)
                .is_some()
            {
                return Err(Error::Invalid(format!(
                    "duplicate term surface {:?}",
                    term.surface
                )));
            }
            has_bigrams |= term.kind == TermKind::Bigram;
            has_trigrams |= term.kind == TermKind::Trigram;
        }
        Ok(TermTable {
            terms,
            surface_index,
            has_bigrams,
            has_trigrams,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, id: TermId) -> &Term {
        &self.terms[id as usize]
    }

    pub fn term_id(&self, surface: &str) -> Option<TermId> {
        self.surface_index.get(surface).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, &Term)> {
        self.terms.iter().enumerate().map(|(i, t)| (i as TermId, t))
    }

    pub fn kind_count(&self, kind: TermKind) -> usize {
        self.terms.iter().filter(|t| t.kind == kind).count()
    }

    /// Abbreviation surfaces, for reconstructing the preprocessing keep-set
    /// when only the model (not the build lexicon) is available.
    pub fn abbreviation_surfaces(&self) -> Vec<String> {
        self.terms
            .iter()
            .filter(|t| t.kind == TermKind::Abbreviation)
            .map(|t| t.surface.clone())
            .collect()
    }

    fn lookup_kind(&self, surface: &str, kind: TermKind) -> Option<TermId> {
        self.surface_index
            .get(surface)
            .copied()
            .filter(|&id| self.terms[id as usize].kind == kind)
    }

    /// Terms sharing the longest prefix with `surface`, for error messages.
    pub fn prefix_suggestions(&self, surface: &str, k: usize) -> Vec<String> {
        let lower = surface.to_lowercase();
        for take in (1..=lower.chars().count().min(8)).rev() {
            let prefix: String = lower.chars().take(take).collect();
            let mut hits: Vec<&str> = self
                .terms
                .iter()
                .map(|t| t.surface.as_str())
                .filter(|s| s.to_lowercase().starts_with(&prefix))
                .collect();
            if !hits.is_empty() {
                hits.sort_unstable();
                return hits.into_iter().take(k).map(str::to_string).collect();
            }
        }
        Vec::new()
    }
}

/// ADAM-style abbreviation lexicon: `SURFACE<TAB>article_count` per line.
#[derive(Debug, Clone, Default)]
pub struct AbbreviationLexicon {
    entries: HashMap<String, u32>,
}

impl AbbreviationLexicon {
    pub fn empty() -> AbbreviationLexicon {
        AbbreviationLexicon::default()
    }

    pub fn from_entries<I>(entries: I) -> AbbreviationLexicon
    where
        I: IntoIterator<Item = (String, u32)>,
    {
        let entries = entries
            .into_iter()
            .filter(|(s, _)| is_allcaps(s))
            .collect();
        AbbreviationLexicon { entries }
    }

    /// Keep-set with no meaningful counts (query-time use from a loaded model).
    pub fn from_surfaces<I, S>(surfaces: I) -> AbbreviationLexicon
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        AbbreviationLexicon::from_entries(
            surfaces.into_iter().map(|s| (s.as_ref().to_string(), 0)),
        )
    }

    pub fn from_path(path: &Path) -> Result<AbbreviationLexicon> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = HashMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (surface, count) = line.split_once('\t').ok_or_else(|| Error::Malformed {
                path: path.display().to_string(),
                line: idx + 1,
                msg: "expected SURFACE<TAB>article_count".to_string(),
            })?;
            let count: u32 = count.trim().parse().map_err(|_| Error::Malformed {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("bad article_count {count:?}"),
            })?;
            // Rows whose surface is not an all-caps candidate cannot name
            // abbreviations; they are ignored rather than rejected.
            if is_allcaps(surface) {
                entries.insert(surface.to_string(), count);
            }
        }
        Ok(AbbreviationLexicon { entries })
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.entries.contains_key(surface)
    }

    pub fn count(&self, surface: &str) -> Option<u32> {
        self.entries.get(surface).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries_sorted(&self) -> Vec<(&str, u32)> {
        let mut entries: Vec<(&str, u32)> =
            self.entries.iter().map(|(s, &c)| (s.as_str(), c)).collect();
        entries.sort_unstable();
        entries
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FieldDfs {
    pub title: u32,
    pub abstr: u32,
    pub total: u32,
}

/// Token-level counts from one corpus pass: lowercase word document
/// frequencies plus total occurrence counts split by case class.
#[derive(Debug, Default)]
pub struct TokenCounts {
    pub doc_count: u64,
    pub df: HashMap<String, FieldDfs>,
    pub occurrences_word: HashMap<String, u64>,
    pub occurrences_allcaps: HashMap<String, u64>,
}

impl TokenCounts {
    pub fn scan(
        corpus: &CorpusSource,
        stoplist: &Stoplist,
        lexicon: &AbbreviationLexicon,
    ) -> Result<TokenCounts> {
        let mut counts = TokenCounts::default();
        corpus.for_each(stoplist, lexicon, |doc| {
            counts.add_document(&doc, stoplist);
            Ok(())
        })?;
        Ok(counts)
    }

    pub fn add_document(&mut self, doc: &Document, stoplist: &Stoplist) {
        self.doc_count += 1;
        let mut in_title: HashSet<String> = HashSet::new();
        let mut in_abstract: HashSet<String> = HashSet::new();
        for (tokens, field_set) in [
            (&doc.title_tokens, &mut in_title),
            (&doc.abstract_tokens, &mut in_abstract),
        ] {
            for t in tokens.iter() {
                if is_allcaps(t) {
                    *self.occurrences_allcaps.entry(t.clone()).or_insert(0) += 1;
                    // For word counting the basic model is case-blind: the
                    // lowercase form re-enters unless stoplisted.
                    let low = t.to_lowercase();
                    if !stoplist.contains(&low) {
                        field_set.insert(low);
                    }
                } else {
                    *self.occurrences_word.entry(t.clone()).or_insert(0) += 1;
                    field_set.insert(t.clone());
                }
            }
        }
        for w in in_title.iter() {
            let e = self.df.entry(w.clone()).or_default();
            e.title += 1;
            e.total += 1;
        }
        for w in in_abstract.iter() {
            let e = self.df.entry(w.clone()).or_default();
            e.abstr += 1;
            if !in_title.contains(w) {
                e.total += 1;
            }
        }
    }
}

/// Words whose title df and abstract df both meet their thresholds, as a
/// Word-only table with token-level dfs.
pub fn select_words(
    counts: &TokenCounts,
    min_title_df: u32,
    min_abstract_df: u32,
) -> Result<TermTable> {
    let mut selected: Vec<(&String, &FieldDfs)> = counts
        .df
        .iter()
        .filter(|(_, d)| d.title >= min_title_df && d.abstr >= min_abstract_df)
        .collect();
    selected.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let terms = selected
        .into_iter()
        .map(|(surface, d)| Term {
            surface: surface.clone(),
            kind: TermKind::Word,
            df_title: d.title,
            df_abstract: d.abstr,
            df_total: d.total,
        })
        .collect();
    TermTable::from_terms(terms)
}

/// All-caps tokens listed often enough in the lexicon and whose lowercase
/// word form occurs more often in the corpus than the all-caps form.
pub fn select_abbreviations(
    counts: &TokenCounts,
    lexicon: &AbbreviationLexicon,
    min_lexicon_count: u32,
) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (surface, &caps_occ) in counts.occurrences_allcaps.iter() {
        match lexicon.count(surface) {
            Some(c) if c >= min_lexicon_count => {}
            _ => continue,
        }
        let word_occ = counts
            .occurrences_word
            .get(&surface.to_lowercase())
            .copied()
            .unwrap_or(0);
        if word_occ > caps_occ {
            out.insert(surface.clone());
        }
    }
    out
}

/// An n-gram candidate: component word ids into the word table plus the
/// document frequencies observed during the selection scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramCandidate {
    pub words: Vec<TermId>,
    pub dfs: FieldDfs,
}

/// Maps each token to its word id in `words`, if any. All-caps tokens that
/// were selected as abbreviations are blocked from word participation.
fn word_id_stream(
    tokens: &[String],
    words: &TermTable,
    abbrevs: &BTreeSet<String>,
) -> Vec<Option<TermId>> {
    tokens
        .iter()
        .map(|t| {
            if is_allcaps(t) {
                if abbrevs.contains(t) {
                    None
                } else {
                    words.term_id(&t.to_lowercase())
                }
            } else {
                words.term_id(t)
            }
        })
        .collect()
}

/// Adjacent word pairs (within one field) whose basic-model direct odds meet
/// `min_odds`, with dfs counted over documents containing the adjacency.
pub fn select_bigrams<F>(
    corpus: &CorpusSource,
    stoplist: &Stoplist,
    lexicon: &AbbreviationLexicon,
    words: &TermTable,
    abbrevs: &BTreeSet<String>,
    odds: F,
    min_odds: f64,
) -> Result<Vec<NgramCandidate>>
where
    F: Fn(TermId, TermId) -> Option<f64>,
{
    let mut eligible: HashMap<(TermId, TermId), bool> = HashMap::new();
    let mut dfs: BTreeMap<(TermId, TermId), FieldDfs> = BTreeMap::new();
    corpus.for_each(stoplist, lexicon, |doc| {
        let mut in_title: HashSet<(TermId, TermId)> = HashSet::new();
        let mut in_abstract: HashSet<(TermId, TermId)> = HashSet::new();
        for (tokens, field_set) in [
            (&doc.title_tokens, &mut in_title),
            (&doc.abstract_tokens, &mut in_abstract),
        ] {
            let ids = word_id_stream(tokens, words, abbrevs);
            for w in ids.windows(2) {
                if let (Some(a), Some(b)) = (w[0], w[1]) {
                    let ok = *eligible.entry((a, b)).or_insert_with(|| {
                        odds(a.min(b), a.max(b)).is_some_and(|o| o >= min_odds)
                    });
                    if ok {
                        field_set.insert((a, b));
                    }
                }
            }
        }
        for key in in_title.iter() {
            let e = dfs.entry(*key).or_default();
            e.title += 1;
            e.total += 1;
        }
        for key in in_abstract.iter() {
            let e = dfs.entry(*key).or_default();
            e.abstr += 1;
            if !in_title.contains(key) {
                e.total += 1;
            }
        }
        Ok(())
    })?;
    Ok(dfs
        .into_iter()
        .map(|((a, b), dfs)| NgramCandidate {
            words: vec![a, b],
            dfs,
        })
        .collect())
}

/// Trigrams ABC where AB and BC are selected bigrams, df_abstract(ABC) meets
/// its threshold, and df_total(ABC) ≥ min_ratio × min(df_total(AB), df_total(BC)).
pub fn select_trigrams(
    corpus: &CorpusSource,
    stoplist: &Stoplist,
    lexicon: &AbbreviationLexicon,
    words: &TermTable,
    abbrevs: &BTreeSet<String>,
    bigrams: &[NgramCandidate],
    min_abstract_df: u32,
    min_ratio: f64,
) -> Result<Vec<NgramCandidate>> {
    let bigram_dfs: HashMap<(TermId, TermId), u32> = bigrams
        .iter()
        .map(|c| ((c.words[0], c.words[1]), c.dfs.total))
        .collect();
    let mut dfs: BTreeMap<(TermId, TermId, TermId), FieldDfs> = BTreeMap::new();
    corpus.for_each(stoplist, lexicon, |doc| {
        let mut in_title: HashSet<(TermId, TermId, TermId)> = HashSet::new();
        let mut in_abstract: HashSet<(TermId, TermId, TermId)> = HashSet::new();
        for (tokens, field_set) in [
            (&doc.title_tokens, &mut in_title),
            (&doc.abstract_tokens, &mut in_abstract),
        ] {
            let ids = word_id_stream(tokens, words, abbrevs);
            for w in ids.windows(3) {
                if let (Some(a), Some(b), Some(c)) = (w[0], w[1], w[2]) {
                    if bigram_dfs.contains_key(&(a, b)) && bigram_dfs.contains_key(&(b, c)) {
                        field_set.insert((a, b, c));
                    }
                }
            }
        }
        for key in in_title.iter() {
            let e = dfs.entry(*key).or_default();
            e.title += 1;
            e.total += 1;
        }
        for key in in_abstract.iter() {
            let e = dfs.entry(*key).or_default();
            e.abstr += 1;
            if !in_title.contains(key) {
                e.total += 1;
            }
        }
        Ok(())
    })?;
    Ok(dfs
        .into_iter()
        .filter(|((a, b, c), d)| {
            if d.abstr < min_abstract_df {
                return false;
            }
            let ab = bigram_dfs[&(*a, *b)];
            let bc = bigram_dfs[&(*b, *c)];
            f64::from(d.total) >= min_ratio * f64::from(ab.min(bc))
        })
        .map(|((a, b, c), dfs)| NgramCandidate {
            words: vec![a, b, c],
            dfs,
        })
        .collect())
}

fn scan_field(tokens: &[String], table: &TermTable, out: &mut BTreeSet<TermId>) {
    // Per-token word form: all-caps tokens lowercase unless they are
    // Abbreviation terms, in which case they have no word form at all
    // (their instances are excluded from word and n-gram matching).
    let lowered: Vec<Option<String>> = tokens
        .iter()
        .map(|t| is_allcaps(t).then(|| t.to_lowercase()))
        .collect();
    let forms: Vec<Option<&str>> = tokens
        .iter()
        .zip(&lowered)
        .map(|(t, low)| match low {
            Some(low) => {
                if table.lookup_kind(t, TermKind::Abbreviation).is_some() {
                    None
                } else {
                    Some(low.as_str())
                }
            }
            None => Some(t.as_str()),
        })
        .collect();
    let n = tokens.len();
    let mut key = String::new();
    let mut i = 0;
    while i < n {
        if table.has_trigrams && i + 3 <= n {
            if let (Some(a), Some(b), Some(c)) = (forms[i], forms[i + 1], forms[i + 2]) {
                key.clear();
                key.push_str(a);
                key.push(' ');
                key.push_str(b);
                key.push(' ');
                key.push_str(c);
                if let Some(id) = table.lookup_kind(&key, TermKind::Trigram) {
                    out.insert(id);
                    i += 3;
                    continue;
                }
            }
        }
        if table.has_bigrams && i + 2 <= n {
            if let (Some(a), Some(b)) = (forms[i], forms[i + 1]) {
                key.clear();
                key.push_str(a);
                key.push(' ');
                key.push_str(b);
                if let Some(id) = table.lookup_kind(&key, TermKind::Bigram) {
                    out.insert(id);
                    i += 2;
                    continue;
                }
            }
        }
        match forms[i] {
            None => {
                // Blocked word form means the token is an Abbreviation term.
                if let Some(id) = table.lookup_kind(&tokens[i], TermKind::Abbreviation) {
                    out.insert(id);
                }
            }
            Some(w) => {
                if let Some(id) = table.lookup_kind(w, TermKind::Word) {
                    out.insert(id);
                }
            }
        }
        i += 1;
    }
}

/// Greedy longest-match recognition over title then abstract, returning the
/// per-field sets of term ids (sorted ascending).
pub fn recognize_fields(doc: &Document, table: &TermTable) -> (Vec<TermId>, Vec<TermId>) {
    let mut title = BTreeSet::new();
    let mut abstr = BTreeSet::new();
    scan_field(&doc.title_tokens, table, &mut title);
    scan_field(&doc.abstract_tokens, table, &mut abstr);
    (title.into_iter().collect(), abstr.into_iter().collect())
}

/// The document's distinct term occurrence set (title ∪ abstract), sorted.
pub fn recognize_terms(doc: &Document, table: &TermTable) -> Vec<TermId> {
    let (title, abstr) = recognize_fields(doc, table);
    let mut set: BTreeSet<TermId> = title.into_iter().collect();
    set.extend(abstr);
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(title: &str, abstr: &str, stop: &Stoplist, lexicon: &AbbreviationLexicon) -> Document {
        Document::new("d".to_string(), title.to_string(), abstr.to_string(), stop, lexicon)
    }

    fn word(surface: &str) -> Term {
        Term {
            surface: surface.to_string(),
            kind: TermKind::Word,
            df_title: 0,
            df_abstract: 0,
            df_total: 0,
        }
    }

    fn term(surface: &str, kind: TermKind) -> Term {
        Term {
            surface: surface.to_string(),
            kind,
            df_title: 0,
            df_abstract: 0,
            df_total: 0,
        }
    }

    fn table(terms: Vec<Term>) -> TermTable {
        TermTable::from_terms(terms).unwrap()
    }

    #[test]
    fn select_words_boundaries() {
        let mut counts = TokenCounts::default();
        counts.df.insert(
            "included".to_string(),
            FieldDfs { title: 100, abstr: 25, total: 110 },
        );
        counts.df.insert(
            "excluded".to_string(),
            FieldDfs { title: 99, abstr: 500, total: 510 },
        );
        counts.df.insert(
            "alsoout".to_string(),
            FieldDfs { title: 200, abstr: 24, total: 210 },
        );
        let t = select_words(&counts, 100, 25).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get(0).surface, "included");
    }

    #[test]
    fn select_words_toy_corpus_title_vocabulary() {
        let stop = Stoplist::from_words(["the", "of"]);
        let lexicon = AbbreviationLexicon::empty();
        let corpus = CorpusSource::Memory(vec![
            ("d1".into(), "The gene expression".into(), "unrelated body text".into()),
            ("d2".into(), "Expression of proteins".into(), "more body".into()),
            ("d3".into(), "Protein binding".into(), "".into()),
        ]);
        let counts = TokenCounts::scan(&corpus, &stop, &lexicon).unwrap();
        let t = select_words(&counts, 1, 0).unwrap();
        let got: BTreeSet<String> =
            t.iter().map(|(_, term)| term.surface.clone()).collect();
        let want: BTreeSet<String> = ["gene", "expression", "proteins", "protein", "binding"]
            .into_iter()
            .map(str::to_string)
            .collect();
        assert_eq!(got, want);
        // df spot checks: "expression" is in two titles.
        let id = t.term_id("expression").unwrap();
        assert_eq!(t.get(id).df_title, 2);
        assert_eq!(t.get(id).df_abstract, 0);
        assert_eq!(t.get(id).df_total, 2);
    }

    #[test]
    fn select_abbreviations_rules() {
        let mut counts = TokenCounts::default();
        counts.occurrences_allcaps.insert("ACT".to_string(), 200);
        counts.occurrences_word.insert("act".to_string(), 500);
        counts.occurrences_allcaps.insert("DNA".to_string(), 90000);
        counts.occurrences_word.insert("dna".to_string(), 3);
        counts.occurrences_allcaps.insert("XYZ".to_string(), 10);
        counts.occurrences_word.insert("xyz".to_string(), 50);
        let lexicon = AbbreviationLexicon::from_entries([
            ("ACT".to_string(), 30),
            ("DNA".to_string(), 500),
            // XYZ absent from lexicon
        ]);
        let selected = select_abbreviations(&counts, &lexicon, 25);
        assert!(selected.contains("ACT"));
        assert!(!selected.contains("DNA"), "lowercase not more frequent");
        assert!(!selected.contains("XYZ"), "absent from lexicon");
    }

    #[test]
    fn select_abbreviations_lexicon_count_threshold() {
        let mut counts = TokenCounts::default();
        counts.occurrences_allcaps.insert("AB".to_string(), 5);
        counts.occurrences_word.insert("ab".to_string(), 50);
        let lex24 = AbbreviationLexicon::from_entries([("AB".to_string(), 24)]);
        let lex25 = AbbreviationLexicon::from_entries([("AB".to_string(), 25)]);
        assert!(select_abbreviations(&counts, &lex24, 25).is_empty());
        assert!(select_abbreviations(&counts, &lex25, 25).contains("AB"));
    }

    #[test]
    fn select_bigrams_threshold() {
        let stop = Stoplist::empty();
        let lexicon = AbbreviationLexicon::empty();
        let corpus = CorpusSource::Memory(vec![
            ("d1".into(), "peanut butter allergy".into(), "".into()),
            ("d2".into(), "peanut butter report".into(), "peanut butter".into()),
            ("d3".into(), "butter peanut".into(), "".into()),
        ]);
        let words = table(vec![
            word("allergy"),
            word("butter"),
            word("peanut"),
            word("report"),
        ]);
        let butter = words.term_id("butter").unwrap();
        let peanut = words.term_id("peanut").unwrap();
        let odds = |a: TermId, b: TermId| -> Option<f64> {
            if (a, b) == (butter.min(peanut), butter.max(peanut)) {
                Some(15.0)
            } else {
                Some(1.0)
            }
        };
        let got = select_bigrams(
            &corpus,
            &stop,
            &lexicon,
            &words,
            &BTreeSet::new(),
            odds,
            10.0,
        )
        .unwrap();
        // Both orders occur adjacently; each is its own candidate.
        assert_eq!(got.len(), 2);
        let pb = got.iter().find(|c| c.words == vec![peanut, butter]).unwrap();
        assert_eq!(pb.dfs.title, 2);
        assert_eq!(pb.dfs.abstr, 1);
        assert_eq!(pb.dfs.total, 2);
        let bp = got.iter().find(|c| c.words == vec![butter, peanut]).unwrap();
        assert_eq!(bp.dfs.total, 1);
    }

    #[test]
    fn select_bigrams_rejects_below_threshold() {
        let stop = Stoplist::empty();
        let lexicon = AbbreviationLexicon::empty();
        let corpus = CorpusSource::Memory(vec![(
            "d1".into(),
            "peanut butter".into(),
            "".into(),
        )]);
        let words = table(vec![word("butter"), word("peanut")]);
        let got = select_bigrams(
            &corpus,
            &stop,
            &lexicon,
            &words,
            &BTreeSet::new(),
            |_, _| Some(9.99),
            10.0,
        )
        .unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn select_trigrams_rules() {
        // Direct rule checks on synthetic dfs, bypassing the corpus scan.
        let bigram_dfs: Vec<NgramCandidate> = vec![
            NgramCandidate { words: vec![0, 1], dfs: FieldDfs { title: 0, abstr: 3000, total: 3000 } },
            NgramCandidate { words: vec![1, 2], dfs: FieldDfs { title: 0, abstr: 2000, total: 2000 } },
        ];
        // ABC observed in 1000 abstracts: 1000 ≥ 0.30 × min(3000, 2000) = 600 → included.
        assert!(trigram_passes(&bigram_dfs, 1000, 1000, 0.30));
        // 999 abstracts → excluded regardless of ratio.
        assert!(!trigram_passes(&bigram_dfs, 999, 999, 0.30));
    }

    fn trigram_passes(bigrams: &[NgramCandidate], abstr: u32, total: u32, ratio: f64) -> bool {
        let ab = bigrams[0].dfs.total;
        let bc = bigrams[1].dfs.total;
        abstr >= 1000 && f64::from(total) >= ratio * f64::from(ab.min(bc))
    }

    #[test]
    fn select_trigrams_corpus_scan() {
        let stop = Stoplist::empty();
        let lexicon = AbbreviationLexicon::empty();
        let corpus = CorpusSource::Memory(vec![
            ("d1".into(), "".into(), "cold spring harbor laboratory".into()),
            ("d2".into(), "".into(), "cold spring harbor".into()),
            ("d3".into(), "cold spring harbor".into(), "cold spring weather".into()),
        ]);
        let words = table(vec![
            word("cold"),
            word("harbor"),
            word("laboratory"),
            word("spring"),
            word("weather"),
        ]);
        let cold = words.term_id("cold").unwrap();
        let spring = words.term_id("spring").unwrap();
        let harbor = words.term_id("harbor").unwrap();
        let bigrams = vec![
            NgramCandidate { words: vec![cold, spring], dfs: FieldDfs { title: 1, abstr: 3, total: 3 } },
            NgramCandidate { words: vec![spring, harbor], dfs: FieldDfs { title: 1, abstr: 2, total: 2 } },
        ];
        let got = select_trigrams(
            &corpus, &stop, &lexicon, &words, &BTreeSet::new(), &bigrams, 2, 0.30,
        )
        .unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].words, vec![cold, spring, harbor]);
        assert_eq!(got[0].dfs.abstr, 2);
        assert_eq!(got[0].dfs.total, 3);
        // "spring harbor laboratory": bigram "harbor laboratory" missing → never formed.
        // Raising the abstract threshold excludes the trigram.
        let none = select_trigrams(
            &corpus, &stop, &lexicon, &words, &BTreeSet::new(), &bigrams, 3, 0.30,
        )
        .unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn recognize_trigram_consumes_components() {
        let stop = Stoplist::empty();
        let lexicon = AbbreviationLexicon::empty();
        let t = table(vec![
            word("cold"),
            term("cold spring", TermKind::Bigram),
            term("cold spring harbor", TermKind::Trigram),
            word("harbor"),
            word("spring"),
        ]);
        let d = doc("Cold spring harbor", "", &stop, &lexicon);
        let got = recognize_terms(&d, &t);
        assert_eq!(got, vec![t.term_id("cold spring harbor").unwrap()]);
    }

    #[test]
    fn recognize_bigram_preferred_over_words() {
        let stop = Stoplist::empty();
        let lexicon = AbbreviationLexicon::empty();
        let t = table(vec![
            word("cold"),
            term("cold spring", TermKind::Bigram),
            word("spring"),
        ]);
        let d = doc("cold spring", "", &stop, &lexicon);
        assert_eq!(
            recognize_terms(&d, &t),
            vec![t.term_id("cold spring").unwrap()]
        );
    }

    #[test]
    fn recognize_abbreviation_exact_case() {
        let stop = Stoplist::empty();
        let lexicon = AbbreviationLexicon::from_entries([("ACT".to_string(), 30)]);
        let t = table(vec![word("act"), term("ACT", TermKind::Abbreviation)]);
        let d = doc("ACT", "", &stop, &lexicon);
        assert_eq!(recognize_terms(&d, &t), vec![t.term_id("ACT").unwrap()]);
        let d2 = doc("act", "", &stop, &lexicon);
        assert_eq!(recognize_terms(&d2, &t), vec![t.term_id("act").unwrap()]);
    }

    #[test]
    fn recognize_allcaps_falls_back_to_word() {
        // RCT is all-caps but not an Abbreviation term: it participates as "rct".
        let stop = Stoplist::empty();
        let lexicon = AbbreviationLexicon::from_entries([("RCT".to_string(), 30)]);
        let t = table(vec![word("rct"), word("trial")]);
        let d = doc("RCT trial", "", &stop, &lexicon);
        let mut want = vec![t.term_id("rct").unwrap(), t.term_id("trial").unwrap()];
        want.sort_unstable();
        assert_eq!(recognize_terms(&d, &t), want);
    }

    #[test]
    fn recognize_abbreviation_blocked_from_ngrams() {
        let stop = Stoplist::empty();
        let lexicon = AbbreviationLexicon::from_entries([("ACT".to_string(), 30)]);
        let t = table(vec![
            term("ACT", TermKind::Abbreviation),
            word("act"),
            term("act fast", TermKind::Bigram),
            word("fast"),
        ]);
        let d = doc("ACT fast", "", &stop, &lexicon);
        let mut want = vec![t.term_id("ACT").unwrap(), t.term_id("fast").unwrap()];
        want.sort_unstable();
        assert_eq!(recognize_terms(&d, &t), want);
        // Lowercase "act fast" still matches the bigram.
        let d2 = doc("act fast", "", &stop, &lexicon);
        assert_eq!(recognize_terms(&d2, &t), vec![t.term_id("act fast").unwrap()]);
    }

    #[test]
    fn recognize_overlap_leftmost_wins() {
        let stop = Stoplist::empty();
        let lexicon = AbbreviationLexicon::empty();
        let t = table(vec![
            term("a1 b1", TermKind::Bigram),
            term("b1 c1", TermKind::Bigram),
            word("a1"),
            word("b1"),
            word("c1"),
        ]);
        let d = doc("a1 b1 c1", "", &stop, &lexicon);
        let mut want = vec![t.term_id("a1 b1").unwrap(), t.term_id("c1").unwrap()];
        want.sort_unstable();
        assert_eq!(recognize_terms(&d, &t), want);
    }

    #[test]
    fn recognize_fields_and_union() {
        let stop = Stoplist::empty();
        let lexicon = AbbreviationLexicon::empty();
        let t = table(vec![word("alpha"), word("beta"), word("gamma")]);
        let d = doc("alpha beta", "beta gamma", &stop, &lexicon);
        let (title, abstr) = recognize_fields(&d, &t);
        assert_eq!(title, vec![t.term_id("alpha").unwrap(), t.term_id("beta").unwrap()]);
        assert_eq!(abstr, vec![t.term_id("beta").unwrap(), t.term_id("gamma").unwrap()]);
        assert_eq!(recognize_terms(&d, &t).len(), 3);
    }

    #[test]
    fn recognition_set_semantics() {
        let stop = Stoplist::empty();
        let lexicon = AbbreviationLexicon::empty();
        let t = table(vec![word("gene")]);
        let d = doc("gene gene gene", "gene", &stop, &lexicon);
        assert_eq!(recognize_terms(&d, &t).len(), 1);
    }

    #[test]
    fn table_rejects_duplicates_and_bad_shapes() {
        assert!(TermTable::from_terms(vec![word("x2"), word("x2")]).is_err());
        assert!(TermTable::from_terms(vec![term("notcaps", TermKind::Abbreviation)]).is_err());
        assert!(TermTable::from_terms(vec![term("one two three", TermKind::Bigram)]).is_err());
    }

    #[test]
    fn prefix_suggestions_for_unknown_terms() {
        let t = table(vec![word("gene"), word("genome"), word("genetic"), word("protein")]);
        let got = t.prefix_suggestions("genomics", 5);
        assert!(got.contains(&"genome".to_string()));
        assert!(!got.contains(&"protein".to_string()));
    }

    #[test]
    fn lexicon_file_round_trip() {
        let dir = std::env::temp_dir().join(format!("termvec-lex-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("adam.tsv");
        std::fs::write(&path, "ACT\t30\nDNA\t500\nnotcaps\t10\n").unwrap();
        let lex = AbbreviationLexicon::from_path(&path).unwrap();
        assert_eq!(lex.count("ACT"), Some(30));
        assert_eq!(lex.count("DNA"), Some(500));
        assert_eq!(lex.len(), 2, "non-all-caps rows ignored");
        std::fs::write(&path, "ACT\tnotanumber\n").unwrap();
        assert!(AbbreviationLexicon::from_path(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
