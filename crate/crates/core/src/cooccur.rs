//! Document/co-document frequency counting and the geomean-binned direct
//! odds ratio.
//!
//! Pairs are stored once with `a < b`. The binned list is ordered by
//! ascending geomean; ties break on (term_a, term_b). Sorting uses the exact
//! integer product df_a × df_b so the order never depends on float rounding.

use std::collections::HashMap;

use crate::corpus::{CorpusSource, Stoplist};
use crate::error::{Error, Result};
use crate::terms::{recognize_fields, AbbreviationLexicon, FieldDfs, TermId, TermTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRecord {
    pub a: TermId,
    pub b: TermId,
    pub co_df: u32,
    pub geomean: f64,
    pub odds: f64,
}

fn pack(a: TermId, b: TermId) -> u64 {
    (u64::from(a) << 32) | u64::from(b)
}

/// Upper bound on dense triangular entries (1 GiB of u32 counts). Larger
/// vocabularies fall back to a hash map keyed by the packed pair.
const DENSE_LIMIT: usize = 256 * 1024 * 1024;

/// Accumulates co-document counts for unordered term pairs.
#[derive(Debug)]
pub enum PairCounter {
    Dense { n: usize, counts: Vec<u32> },
    Sparse(HashMap<u64, u32>),
}

impl PairCounter {
    pub fn new(n_terms: usize) -> PairCounter {
        let entries = n_terms.saturating_mul(n_terms.saturating_sub(1)) / 2;
        if entries <= DENSE_LIMIT {
            PairCounter::Dense {
                n: n_terms,
                counts: vec![0; entries],
            }
        } else {
            PairCounter::Sparse(HashMap::new())
        }
    }

    pub fn new_sparse() -> PairCounter {
        PairCounter::Sparse(HashMap::new())
    }

    fn dense_index(n: usize, a: usize, b: usize) -> usize {
        a * (2 * n - a - 1) / 2 + (b - a - 1)
    }

    /// Adds one co-occurrence for every unordered pair in `ids`
    /// (strictly increasing term ids).
    pub fn add_set(&mut self, ids: &[TermId]) {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        match self {
            PairCounter::Dense { n, counts } => {
                let n = *n;
                for (i, &a) in ids.iter().enumerate() {
                    let base = Self::dense_index(n, a as usize, a as usize + 1);
                    for &b in &ids[i + 1..] {
                        counts[base + (b - a - 1) as usize] += 1;
                    }
                }
            }
            PairCounter::Sparse(map) => {
                for (i, &a) in ids.iter().enumerate() {
                    for &b in &ids[i + 1..] {
                        *map.entry(pack(a, b)).or_insert(0) += 1;
                    }
                }
            }
        }
    }

    pub fn get(&self, a: TermId, b: TermId) -> u32 {
        let (a, b) = (a.min(b), a.max(b));
        if a == b {
            return 0;
        }
        match self {
            PairCounter::Dense { n, counts } => {
                counts[Self::dense_index(*n, a as usize, b as usize)]
            }
            PairCounter::Sparse(map) => map.get(&pack(a, b)).copied().unwrap_or(0),
        }
    }

    pub fn nonzero_len(&self) -> usize {
        match self {
            PairCounter::Dense { counts, .. } => counts.iter().filter(|&&c| c > 0).count(),
            PairCounter::Sparse(map) => map.len(),
        }
    }

    fn for_each_nonzero<F: FnMut(TermId, TermId, u32)>(&self, mut f: F) {
        match self {
            PairCounter::Dense { n, counts } => {
                let n = *n;
                let mut idx = 0;
                for a in 0..n {
                    for b in (a + 1)..n {
                        let c = counts[idx];
                        if c > 0 {
                            f(a as TermId, b as TermId, c);
                        }
                        idx += 1;
                    }
                }
            }
            PairCounter::Sparse(map) => {
                for (&key, &c) in map.iter() {
                    f((key >> 32) as TermId, key as TermId, c);
                }
            }
        }
    }
}

/// One streaming pass: recognition per document, per-field dfs, and pair
/// co-document counts over the title∪abstract term set.
pub fn count_frequencies(
    corpus: &CorpusSource,
    stoplist: &Stoplist,
    lexicon: &AbbreviationLexicon,
    table: &TermTable,
) -> Result<(Vec<FieldDfs>, PairCounter)> {
    let mut dfs = vec![FieldDfs::default(); table.len()];
    let mut pairs = PairCounter::new(table.len());
    corpus.for_each(stoplist, lexicon, |doc| {
        let (title, abstr) = recognize_fields(&doc, table);
        for &id in &title {
            dfs[id as usize].title += 1;
            dfs[id as usize].total += 1;
        }
        let mut union = title.clone();
        for &id in &abstr {
            dfs[id as usize].abstr += 1;
            if title.binary_search(&id).is_err() {
                dfs[id as usize].total += 1;
                union.push(id);
            }
        }
        union.sort_unstable();
        pairs.add_set(&union);
        Ok(())
    })?;
    Ok((dfs, pairs))
}

/// Expands counted pairs into records with geomean set, sorted ascending by
/// (geomean, term_a, term_b); odds left at 0 until binning.
pub fn compute_geomeans(pairs: &PairCounter, df_total: &[u32]) -> Vec<PairRecord> {
    let mut records = Vec::with_capacity(pairs.nonzero_len());
    pairs.for_each_nonzero(|a, b, co_df| {
        let da = df_total[a as usize];
        let db = df_total[b as usize];
        records.push(PairRecord {
            a,
            b,
            co_df,
            geomean: (f64::from(da) * f64::from(db)).sqrt(),
            odds: 0.0,
        });
    });
    sort_binned(&mut records, df_total);
    records
}

/// The canonical binned order: ascending df product (exact integer), then
/// (term_a, term_b).
pub fn sort_binned(records: &mut [PairRecord], df_total: &[u32]) {
    records.sort_unstable_by_key(|r| {
        (
            u64::from(df_total[r.a as usize]) * u64::from(df_total[r.b as usize]),
            r.a,
            r.b,
        )
    });
}

/// Assigns direct odds in place: consecutive bins of `bin_size` over the
/// sorted records; each record's odds = co_df / mean co_df of its bin.
pub fn compute_direct_odds(records: &mut [PairRecord], bin_size: usize) {
    assert!(bin_size > 0, "bin_size must be positive");
    for bin in records.chunks_mut(bin_size) {
        let sum: u64 = bin.iter().map(|r| u64::from(r.co_df)).sum();
        let avg = sum as f64 / bin.len() as f64;
        for r in bin.iter_mut() {
            r.odds = f64::from(r.co_df) / avg;
        }
    }
}

/// Immutable pair store in binned order with a key index for lookups.
#[derive(Debug, Default)]
pub struct PairTable {
    records: Vec<PairRecord>,
    index: Vec<(u64, u32)>,
}

impl PairTable {
    /// `records` must already be in binned order with odds set.
    pub fn new(records: Vec<PairRecord>) -> PairTable {
        let mut index: Vec<(u64, u32)> = records
            .iter()
            .enumerate()
            .map(|(i, r)| (pack(r.a, r.b), i as u32))
            .collect();
        index.sort_unstable_by_key(|&(k, _)| k);
        PairTable { records, index }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in binned (ascending geomean) order.
    pub fn records(&self) -> &[PairRecord] {
        &self.records
    }

    pub fn lookup(&self, a: TermId, b: TermId) -> Option<&PairRecord> {
        if a == b {
            return None;
        }
        let key = pack(a.min(b), a.max(b));
        self.index
            .binary_search_by_key(&key, |&(k, _)| k)
            .ok()
            .map(|i| &self.records[self.index[i].1 as usize])
    }

    /// Direct odds for the unordered pair, `None` when the pair never
    /// co-occurs. Unknown ids are an error distinct from pair absence.
    pub fn direct_similarity(
        &self,
        a: TermId,
        b: TermId,
        n_terms: usize,
    ) -> Result<Option<f64>> {
        if (a as usize) >= n_terms || (b as usize) >= n_terms {
            return Err(Error::ModelMismatch);
        }
        Ok(self.lookup(a, b).map(|r| r.odds))
    }
}
