//! Passage vectors — a document's title+abstract as a ranked term vector —
//! plus the implicit passage metrics and the three direct article-pair
//! metrics (shared title words, longest common string, shared rare terms).

use std::collections::{HashMap, HashSet};

use crate::corpus::{CorpusSource, Document, Stoplist};
use crate::error::{Error, Result};
use crate::stem::stem;
use crate::terms::{recognize_terms, AbbreviationLexicon, TermId, TermTable};
use crate::vectors::{shared_entry_count, KindWeights, TermVector};

pub const DEFAULT_MIN_PASSAGE_WORDS: usize = 25;

/// A document as a ranked list of (term, accumulated ln-odds) entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageVector {
    pub doc_id: String,
    pub entries: Vec<(TermId, f64)>,
}

impl PassageVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn value_of(&self, term: TermId) -> Option<f64> {
        self.entries.iter().find(|(t, _)| *t == term).map(|(_, v)| *v)
    }
}

/// Accumulates ln(odds) over the vectors of the document's recognized terms
/// (each distinct term contributes once), ranks by value descending with the
/// (df_total descending, term_id ascending) tie-break, keeps `max_dims`.
///
/// A document recognizing no terms yields an empty vector; callers flag it.
pub fn build_passage_vector(
    doc: &Document,
    table: &TermTable,
    vectors: &[TermVector],
    max_dims: usize,
) -> PassageVector {
    debug_assert_eq!(vectors.len(), table.len());
    // recognize_terms returns ascending ids, fixing the accumulation order.
    let recognized = recognize_terms(doc, table);
    let mut values: HashMap<TermId, f64> = HashMap::new();
    for &r in &recognized {
        for &(t, odds) in &vectors[r as usize].entries {
            *values.entry(t).or_insert(0.0) += odds.ln();
        }
    }
    let mut entries: Vec<(TermId, f64)> = values.into_iter().collect();
    entries.sort_unstable_by(|x, y| {
        y.1.partial_cmp(&x.1)
            .unwrap()
            .then_with(|| table.get(y.0).df_total.cmp(&table.get(x.0).df_total))
            .then_with(|| x.0.cmp(&y.0))
    });
    entries.truncate(max_dims);
    PassageVector {
        doc_id: doc.doc_id.clone(),
        entries,
    }
}

/// Documents below this bar are flagged and excluded from evaluation runs:
/// an abstract must be present and title+abstract must reach `min_words`.
pub fn passage_eligible(doc: &Document, min_words: usize) -> bool {
    !doc.raw_abstract.trim().is_empty() && doc.word_count() >= min_words
}

/// Number of terms common to both passage vectors.
pub fn passage_shared_terms(pa: &PassageVector, pb: &PassageVector) -> usize {
    shared_entry_count(&pa.entries, &pb.entries)
}

/// Σ over shared terms of weight(kind) × min(value in pa, value in pb).
/// Stored values already incorporate the logarithm; none is applied here.
pub fn passage_weighted_score(
    pa: &PassageVector,
    pb: &PassageVector,
    table: &TermTable,
    weights: &KindWeights,
) -> Result<f64> {
    let n = table.len() as u32;
    if pa.entries.iter().chain(&pb.entries).any(|&(t, _)| t >= n) {
        return Err(Error::ModelMismatch);
    }
    let b_values: HashMap<TermId, f64> = pb.entries.iter().copied().collect();
    let mut shared: Vec<(TermId, f64)> = pa
        .entries
        .iter()
        .filter_map(|&(t, va)| b_values.get(&t).map(|&vb| (t, va.min(vb))))
        .collect();
    shared.sort_unstable_by_key(|&(t, _)| t);
    // fold(0.0, ..): f64's Sum identity is -0.0, unwanted for empty overlaps.
    Ok(shared
        .iter()
        .map(|&(t, v)| weights.weight(table.get(t).kind) * v)
        .fold(0.0, |acc, x| acc + x))
}

/// Count of stems shared by the two stoplisted title token streams.
pub fn shared_title_words(da: &Document, db: &Document) -> usize {
    let stems_a: HashSet<String> = da.title_tokens.iter().map(|t| stem(t)).collect();
    let stems_b: HashSet<String> = db.title_tokens.iter().map(|t| stem(t)).collect();
    stems_a.intersection(&stems_b).count()
}

/// The text a document exposes to character-level comparison: lowercased
/// title + " " + abstract with whitespace runs collapsed to single spaces.
pub fn passage_text(doc: &Document) -> String {
    format!("{} {}", doc.raw_title, doc.raw_abstract)
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Length in characters (spaces included) of the longest common contiguous
/// substring, or 0 when it is shorter than `min_len`.
pub fn longest_common_string(ta: &str, tb: &str, min_len: usize) -> usize {
    let a: Vec<char> = ta.chars().collect();
    let b: Vec<char> = tb.chars().collect();
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // Rolling rows over the shorter string keep memory at O(min(|a|,|b|)).
    let (rows, cols) = if a.len() >= b.len() { (&a, &b) } else { (&b, &a) };
    let mut prev = vec![0u32; cols.len() + 1];
    let mut cur = vec![0u32; cols.len() + 1];
    let mut best = 0u32;
    for &rc in rows.iter() {
        for (j, &cc) in cols.iter().enumerate() {
            cur[j + 1] = if rc == cc { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let best = best as usize;
    if best >= min_len {
        best
    } else {
        0
    }
}

/// The token, adjacent-pair, and adjacent-triple strings of a document's
/// stoplisted token streams (title and abstract).
pub fn doc_term_strings(doc: &Document) -> HashSet<String> {
    let mut out = HashSet::new();
    for tokens in [&doc.title_tokens, &doc.abstract_tokens] {
        for w in tokens.iter() {
            out.insert(w.clone());
        }
        for w in tokens.windows(2) {
            out.insert(format!("{} {}", w[0], w[1]));
        }
        for w in tokens.windows(3) {
            out.insert(format!("{} {} {}", w[0], w[1], w[2]));
        }
    }
    out
}

/// Strings rare enough to be discriminative: abstract document frequency in
/// [1, max_abstract_df), and not a model term. Built for a candidate set
/// (typically the strings of the documents under comparison) so the counting
/// pass stays memory-bounded on large corpora.
#[derive(Debug, Default)]
pub struct RareTermInventory {
    items: HashSet<String>,
}

impl RareTermInventory {
    pub fn build(
        corpus: &CorpusSource,
        stoplist: &Stoplist,
        lexicon: &AbbreviationLexicon,
        table: &TermTable,
        candidates: &HashSet<String>,
        max_abstract_df: u32,
    ) -> Result<RareTermInventory> {
        let mut dfs: HashMap<&str, u32> =
            candidates.iter().map(|s| (s.as_str(), 0)).collect();
        let mut key = String::new();
        corpus.for_each(stoplist, lexicon, |doc| {
            let tokens = &doc.abstract_tokens;
            let mut seen: HashSet<&str> = HashSet::new();
            for w in tokens.iter() {
                if let Some((k, _)) = dfs.get_key_value(w.as_str()) {
                    seen.insert(k);
                }
            }
            for n in [2usize, 3] {
                for w in tokens.windows(n) {
                    key.clear();
                    for (i, t) in w.iter().enumerate() {
                        if i > 0 {
                            key.push(' ');
                        }
                        key.push_str(t);
                    }
                    if let Some((k, _)) = dfs.get_key_value(key.as_str()) {
                        seen.insert(k);
                    }
                }
            }
            let seen: Vec<&str> = seen.into_iter().collect();
            for k in seen {
                *dfs.get_mut(k).unwrap() += 1;
            }
            Ok(())
        })?;
        let items = candidates
            .iter()
            .filter(|s| {
                let df = dfs[s.as_str()];
                df >= 1 && df < max_abstract_df && table.term_id(s).is_none()
            })
            .cloned()
            .collect();
        Ok(RareTermInventory { items })
    }

    pub fn contains(&self, s: &str) -> bool {
        self.items.contains(s)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Σ over rare strings present in both documents of the weight for their
/// length class (single token → word, pair → bigram, triple → trigram).
pub fn shared_rare_terms(
    da: &Document,
    db: &Document,
    inventory: &RareTermInventory,
    weights: &KindWeights,
) -> f64 {
    let ia = doc_term_strings(da);
    let ib = doc_term_strings(db);
    let mut shared: Vec<&String> = ia
        .intersection(&ib)
        .filter(|s| inventory.contains(s))
        .collect();
    shared.sort_unstable();
    // fold(0.0, ..): f64's Sum identity is -0.0, unwanted for empty overlaps.
    shared
        .iter()
        .map(|s| match s.matches(' ').count() {
            0 => weights.word,
            1 => weights.bigram,
            _ => weights.trigram,
        })
        .fold(0.0, |acc, x| acc + x)
}
