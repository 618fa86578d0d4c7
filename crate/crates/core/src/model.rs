//! The assembled model: vocabulary, pair statistics, term vectors, optional
//! precomputed passage vectors, and the preprocessing resources (stoplist,
//! abbreviation lexicon) recognition depends on.

use crate::cooccur::PairTable;
use crate::corpus::Stoplist;
use crate::error::{Error, Result};
use crate::passages::PassageVector;
use crate::pipeline::BuildParams;
use crate::terms::{AbbreviationLexicon, TermId, TermKind, TermTable};
use crate::vectors::{
    implicit_shared_terms, implicit_weighted_score, neighbors, sample_metric_distribution,
    TermMetric, TermVector,
};

pub const FORMAT_VERSION: &str = "termvec-1";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelManifest {
    pub format_version: String,
    pub corpus_digest: String,
    pub params: BuildParams,
}

#[derive(Debug)]
pub struct Model {
    pub manifest: ModelManifest,
    pub stoplist: Stoplist,
    pub lexicon: AbbreviationLexicon,
    pub table: TermTable,
    pub pairs: Option<PairTable>,
    pub vectors: Vec<TermVector>,
    pub passages: Option<Vec<PassageVector>>,
}

impl Model {
    /// Looks up a surface, suggesting near matches on failure.
    pub fn resolve_term(&self, surface: &str) -> Result<TermId> {
        self.table.term_id(surface).ok_or_else(|| Error::UnknownTerm {
            term: surface.to_string(),
            suggestions: self.table.prefix_suggestions(surface, 5),
        })
    }

    pub fn term_vector(&self, id: TermId) -> &TermVector {
        &self.vectors[id as usize]
    }

    fn pair_table(&self) -> Result<&PairTable> {
        self.pairs.as_ref().ok_or(Error::PairsNotStored)
    }

    /// Direct odds for a pair; `None` when the terms never co-occur.
    pub fn direct(&self, a: TermId, b: TermId) -> Result<Option<f64>> {
        self.pair_table()?.direct_similarity(a, b, self.table.len())
    }

    pub fn shared(&self, a: TermId, b: TermId) -> usize {
        implicit_shared_terms(&self.vectors[a as usize], &self.vectors[b as usize])
    }

    pub fn weighted(&self, a: TermId, b: TermId) -> Result<f64> {
        implicit_weighted_score(
            &self.vectors[a as usize],
            &self.vectors[b as usize],
            &self.table,
            &self.manifest.params.weights,
        )
    }

    pub fn neighbors(
        &self,
        owner: TermId,
        metric: TermMetric,
        k: usize,
    ) -> Result<Vec<(TermId, f64)>> {
        let empty = PairTable::default();
        let pairs = match metric {
            TermMetric::Direct => self.pair_table()?,
            _ => self.pairs.as_ref().unwrap_or(&empty),
        };
        neighbors(
            owner,
            metric,
            k,
            pairs,
            &self.vectors,
            &self.table,
            &self.manifest.params.weights,
        )
    }

    /// Background score distribution over random term pairs, for percentiles.
    pub fn metric_distribution(
        &self,
        metric: TermMetric,
        samples: usize,
        seed: u64,
    ) -> Result<Vec<f64>> {
        let empty = PairTable::default();
        let pairs = match metric {
            TermMetric::Direct => self.pair_table()?,
            _ => self.pairs.as_ref().unwrap_or(&empty),
        };
        sample_metric_distribution(
            metric,
            samples,
            seed,
            pairs,
            &self.vectors,
            &self.table,
            &self.manifest.params.weights,
        )
    }

    pub fn kind_counts(&self) -> KindCounts {
        KindCounts {
            words: self.table.kind_count(TermKind::Word),
            bigrams: self.table.kind_count(TermKind::Bigram),
            trigrams: self.table.kind_count(TermKind::Trigram),
            abbreviations: self.table.kind_count(TermKind::Abbreviation),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KindCounts {
    pub words: usize,
    pub bigrams: usize,
    pub trigrams: usize,
    pub abbreviations: usize,
}

impl KindCounts {
    pub fn total(&self) -> usize {
        self.words + self.bigrams + self.trigrams + self.abbreviations
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooccur::PairRecord;
    use crate::terms::Term;

    fn tiny_model() -> Model {
        let table = TermTable::from_terms(vec![
            Term { surface: "alpha".into(), kind: TermKind::Word, df_title: 1, df_abstract: 1, df_total: 2 },
            Term { surface: "beta".into(), kind: TermKind::Word, df_title: 1, df_abstract: 1, df_total: 2 },
            Term { surface: "gamma".into(), kind: TermKind::Word, df_title: 1, df_abstract: 1, df_total: 2 },
        ])
        .unwrap();
        let pairs = PairTable::new(vec![PairRecord {
            a: 0,
            b: 1,
            co_df: 2,
            geomean: 2.0,
            odds: 2.0,
        }]);
        let vectors = vec![
            TermVector { owner: 0, entries: vec![(1, 2.0)] },
            TermVector { owner: 1, entries: vec![(0, 2.0)] },
            TermVector { owner: 2, entries: vec![] },
        ];
        Model {
            manifest: ModelManifest {
                format_version: FORMAT_VERSION.to_string(),
                corpus_digest: "sha256:0".to_string(),
                params: BuildParams::default(),
            },
            stoplist: Stoplist::empty(),
            lexicon: AbbreviationLexicon::empty(),
            table,
            pairs: Some(pairs),
            vectors,
            passages: None,
        }
    }

    #[test]
    fn resolve_term_suggests_near_matches() {
        let m = tiny_model();
        assert_eq!(m.resolve_term("beta").unwrap(), 1);
        match m.resolve_term("alphq") {
            Err(Error::UnknownTerm { term, suggestions }) => {
                assert_eq!(term, "alphq");
                assert!(suggestions.contains(&"alpha".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn metrics_respect_missing_pair_store() {
        let mut m = tiny_model();
        assert_eq!(m.direct(0, 1).unwrap(), Some(2.0));
        assert_eq!(m.direct(0, 2).unwrap(), None);
        assert_eq!(m.shared(0, 1), 0, "each vector holds only the other term");
        m.pairs = None;
        assert!(matches!(m.direct(0, 1), Err(Error::PairsNotStored)));
        assert!(matches!(
            m.neighbors(0, TermMetric::Direct, 5),
            Err(Error::PairsNotStored)
        ));
        // Implicit metrics still work without the pair store.
        assert!(m.neighbors(0, TermMetric::Shared, 5).is_ok());
        assert_eq!(m.weighted(0, 1).unwrap(), 0.0);
    }

    #[test]
    fn kind_counts_sum() {
        let m = tiny_model();
        let k = m.kind_counts();
        assert_eq!(k.words, 3);
        assert_eq!(k.total(), 3);
    }
}
