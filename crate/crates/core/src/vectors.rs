//! Term vectors: a term's up-to-300 highest-odds co-occurring contexts, plus
//! the implicit (shared / weighted) term similarity metrics and neighbor
//! queries over them.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cooccur::PairTable;
use crate::error::{Error, Result};
use crate::terms::{TermId, TermKind, TermTable};

pub const DEFAULT_MAX_DIMS: usize = 300;
pub const DEFAULT_MIN_ODDS: f64 = 1.25;

#[derive(Debug, Clone, PartialEq)]
pub struct TermVector {
    pub owner: TermId,
    pub entries: Vec<(TermId, f64)>,
}

impl TermVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn odds_of(&self, context: TermId) -> Option<f64> {
        self.entries
            .iter()
            .find(|(c, _)| *c == context)
            .map(|(_, o)| *o)
    }
}

/// Per-kind weights for the weighted implicit metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindWeights {
    pub word: f64,
    pub abbreviation: f64,
    pub bigram: f64,
    pub trigram: f64,
}

impl Default for KindWeights {
    fn default() -> Self {
        KindWeights {
            word: 1.0,
            abbreviation: 1.0,
            bigram: 2.0,
            trigram: 3.0,
        }
    }
}

impl KindWeights {
    /// All weights 1 — the basic-model variant of the weighted metric.
    pub fn unit() -> KindWeights {
        KindWeights {
            word: 1.0,
            abbreviation: 1.0,
            bigram: 1.0,
            trigram: 1.0,
        }
    }

    pub fn weight(&self, kind: TermKind) -> f64 {
        match kind {
            TermKind::Word => self.word,
            TermKind::Abbreviation => self.abbreviation,
            TermKind::Bigram => self.bigram,
            TermKind::Trigram => self.trigram,
        }
    }
}

/// Ranks candidate contexts: odds descending, then context df_total
/// descending, then context id ascending; drops odds below `min_odds`;
/// truncates to `max_dims`.
pub fn rank_entries(
    mut candidates: Vec<(TermId, f64)>,
    table: &TermTable,
    max_dims: usize,
    min_odds: f64,
) -> Vec<(TermId, f64)> {
    candidates.retain(|&(_, odds)| odds >= min_odds);
    candidates.sort_unstable_by(|x, y| {
        y.1.partial_cmp(&x.1)
            .unwrap()
            .then_with(|| {
                table
                    .get(y.0)
                    .df_total
                    .cmp(&table.get(x.0).df_total)
            })
            .then_with(|| x.0.cmp(&y.0))
    });
    candidates.truncate(max_dims);
    candidates
}

/// Builds one term's vector by scanning the pair table.
pub fn build_term_vector(
    owner: TermId,
    pairs: &PairTable,
    table: &TermTable,
    max_dims: usize,
    min_odds: f64,
) -> Result<TermVector> {
    if (owner as usize) >= table.len() {
        return Err(Error::ModelMismatch);
    }
    let mut candidates = Vec::new();
    for r in pairs.records() {
        if r.a == owner {
            candidates.push((r.b, r.odds));
        } else if r.b == owner {
            candidates.push((r.a, r.odds));
        }
    }
    Ok(TermVector {
        owner,
        entries: rank_entries(candidates, table, max_dims, min_odds),
    })
}

/// Builds every term's vector in one pass over the pair table.
pub fn build_all_vectors(
    pairs: &PairTable,
    table: &TermTable,
    max_dims: usize,
    min_odds: f64,
) -> Vec<TermVector> {
    let mut candidates: Vec<Vec<(TermId, f64)>> = vec![Vec::new(); table.len()];
    for r in pairs.records() {
        if r.odds >= min_odds {
            candidates[r.a as usize].push((r.b, r.odds));
            candidates[r.b as usize].push((r.a, r.odds));
        }
    }
    candidates
        .into_par_iter()
        .enumerate()
        .map(|(owner, cands)| TermVector {
            owner: owner as TermId,
            entries: rank_entries(cands, table, max_dims, min_odds),
        })
        .collect()
}

/// Number of term ids common to two entry lists.
pub(crate) fn shared_entry_count(a: &[(TermId, f64)], b: &[(TermId, f64)]) -> usize {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let set: HashSet<TermId> = small.iter().map(|&(c, _)| c).collect();
    large.iter().filter(|(c, _)| set.contains(c)).count()
}

/// Number of context terms common to both vectors.
pub fn implicit_shared_terms(va: &TermVector, vb: &TermVector) -> usize {
    shared_entry_count(&va.entries, &vb.entries)
}

/// Σ over shared contexts of weight(kind) × ln(min(odds in va, odds in vb)).
pub fn implicit_weighted_score(
    va: &TermVector,
    vb: &TermVector,
    table: &TermTable,
    weights: &KindWeights,
) -> Result<f64> {
    let n = table.len() as u32;
    if va.entries.iter().chain(&vb.entries).any(|&(c, _)| c >= n) {
        return Err(Error::ModelMismatch);
    }
    let b_odds: HashMap<TermId, f64> = vb.entries.iter().copied().collect();
    let mut shared: Vec<(TermId, f64)> = va
        .entries
        .iter()
        .filter_map(|&(c, oa)| b_odds.get(&c).map(|&ob| (c, oa.min(ob))))
        .collect();
    // Fixed accumulation order keeps the sum independent of entry order.
    // fold(0.0, ..) rather than sum(): f64's Sum identity is -0.0, which
    // would surface as "-0" when no contexts are shared.
    shared.sort_unstable_by_key(|&(c, _)| c);
    Ok(shared
        .iter()
        .map(|&(c, o)| weights.weight(table.get(c).kind) * o.ln())
        .fold(0.0, |acc, x| acc + x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermMetric {
    Direct,
    Shared,
    Weighted,
}

impl TermMetric {
    pub fn parse(name: &str) -> Option<TermMetric> {
        match name {
            "direct" => Some(TermMetric::Direct),
            "shared" => Some(TermMetric::Shared),
            "weighted" => Some(TermMetric::Weighted),
            _ => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            TermMetric::Direct => "direct",
            TermMetric::Shared => "shared",
            TermMetric::Weighted => "weighted",
        }
    }
}

/// Top-k terms most similar to `owner` under a metric. Scores of 0 are
/// omitted; ties break on ascending term id.
pub fn neighbors(
    owner: TermId,
    metric: TermMetric,
    k: usize,
    pairs: &PairTable,
    vectors: &[TermVector],
    table: &TermTable,
    weights: &KindWeights,
) -> Result<Vec<(TermId, f64)>> {
    if (owner as usize) >= table.len() {
        return Err(Error::ModelMismatch);
    }
    let mut scored: Vec<(TermId, f64)> = match metric {
        TermMetric::Direct => pairs
            .records()
            .iter()
            .filter_map(|r| {
                if r.a == owner {
                    Some((r.b, r.odds))
                } else if r.b == owner {
                    Some((r.a, r.odds))
                } else {
                    None
                }
            })
            .filter(|&(_, s)| s > 0.0)
            .collect(),
        TermMetric::Shared => {
            let va = &vectors[owner as usize];
            (0..table.len() as TermId)
                .filter(|&c| c != owner)
                .map(|c| (c, implicit_shared_terms(va, &vectors[c as usize]) as f64))
                .filter(|&(_, s)| s > 0.0)
                .collect()
        }
        TermMetric::Weighted => {
            let va = &vectors[owner as usize];
            let mut out = Vec::new();
            for c in 0..table.len() as TermId {
                if c == owner {
                    continue;
                }
                let s = implicit_weighted_score(va, &vectors[c as usize], table, weights)?;
                if s > 0.0 {
                    out.push((c, s));
                }
            }
            out
        }
    };
    scored.sort_unstable_by(|x, y| {
        y.1.partial_cmp(&x.1).unwrap().then_with(|| x.0.cmp(&y.0))
    });
    scored.truncate(k);
    Ok(scored)
}

/// Percentile of `score` within a sampled distribution: the fraction
/// strictly below, × 100.
pub fn score_percentile(distribution: &[f64], score: f64) -> Result<f64> {
    if distribution.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let below = distribution.iter().filter(|&&v| v < score).count();
    Ok(below as f64 / distribution.len() as f64 * 100.0)
}

/// Metric scores over `samples` random distinct term pairs (seeded), for
/// percentile estimation. Direct scores of never-co-occurring pairs are 0.
pub fn sample_metric_distribution(
    metric: TermMetric,
    samples: usize,
    seed: u64,
    pairs: &PairTable,
    vectors: &[TermVector],
    table: &TermTable,
    weights: &KindWeights,
) -> Result<Vec<f64>> {
    let n = table.len() as u32;
    if n < 2 {
        return Err(Error::EmptyDistribution);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let score = match metric {
            TermMetric::Direct => pairs.lookup(a, b).map_or(0.0, |r| r.odds),
            TermMetric::Shared => {
                implicit_shared_terms(&vectors[a as usize], &vectors[b as usize]) as f64
            }
            TermMetric::Weighted => implicit_weighted_score(
                &vectors[a as usize],
                &vectors[b as usize],
                table,
                weights,
            )?,
        };
        out.push(score);
    }
    Ok(out)
}
