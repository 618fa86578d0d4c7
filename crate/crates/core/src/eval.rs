//! Benchmark loading and term mapping, Spearman correlation with tie
//! handling, the seeded k-fold significance procedure, discrimination
//! statistics, and cosine similarity over externally supplied embeddings.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::tokenize;
use crate::error::{Error, Result};
use crate::terms::{TermId, TermTable};

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n−1 denominator); 0 for singletons.
fn sample_var(xs: &[f64], m: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// 1-based ranks with ties assigned the average of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &slot in &idx[i..=j] {
            ranks[slot] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let mx = mean(xs);
    let my = mean(ys);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 {
        return Err(Error::ZeroVariance { side: "first" });
    }
    if vy == 0.0 {
        return Err(Error::ZeroVariance { side: "second" });
    }
    Ok((cov / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson over average ranks. Identical and
/// exactly mirrored rankings short-circuit to ±1 so perfectly monotone
/// inputs are not blurred by square-root rounding.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(Error::TooFewPoints { need: 2, got: xs.len() });
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let constant = |r: &[f64]| r.iter().all(|&v| v == r[0]);
    if constant(&rx) {
        return Err(Error::ZeroVariance { side: "first" });
    }
    if constant(&ry) {
        return Err(Error::ZeroVariance { side: "second" });
    }
    if rx == ry {
        return Ok(1.0);
    }
    // Rank reversal: every position's ranks sum to n+1 (exact in floats —
    // average ranks are half-integers).
    let flip = (rx.len() + 1) as f64;
    if rx.iter().zip(&ry).all(|(a, b)| a + b == flip) {
        return Ok(-1.0);
    }
    pearson(&rx, &ry)
}

/// Two-tailed p for a t statistic.
fn p_two_tailed(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    2.0 * dist.cdf(-t.abs())
}

#[derive(Debug, Clone, Copy)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    /// Both samples had zero variance with unequal means: the statistic is
    /// unbounded and p collapses to 0.
    pub degenerate: bool,
}

/// Unpaired two-tailed t-test: pooled variance with df = nₐ+n_b−2, or the
/// Welch–Satterthwaite variant.
pub fn t_test_unpaired(a: &[f64], b: &[f64], welch: bool) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: a.len().min(b.len()),
        });
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ma = mean(a);
    let mb = mean(b);
    let va = sample_var(a, ma);
    let vb = sample_var(b, mb);
    let (se, df) = if welch {
        let (fa, fb) = (va / na, vb / nb);
        let se2 = fa + fb;
        let df = if se2 == 0.0 {
            na + nb - 2.0
        } else {
            se2 * se2 / (fa * fa / (na - 1.0) + fb * fb / (nb - 1.0))
        };
        (se2.sqrt(), df)
    } else {
        let df = na + nb - 2.0;
        let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
        ((sp2 * (1.0 / na + 1.0 / nb)).sqrt(), df)
    };
    if se == 0.0 {
        return Ok(if ma == mb {
            TTest { t: 0.0, df, p: 1.0, degenerate: false }
        } else {
            TTest {
                t: if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY },
                df,
                p: 0.0,
                degenerate: true,
            }
        });
    }
    let t = (ma - mb) / se;
    Ok(TTest { t, df, p: p_two_tailed(t, df), degenerate: false })
}

#[derive(Debug, Clone)]
pub struct MetricFolds {
    pub rhos: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub sem: f64,
}

fn metric_folds(rhos: Vec<f64>) -> MetricFolds {
    let m = mean(&rhos);
    let sd = sample_var(&rhos, m).sqrt();
    let sem = sd / (rhos.len() as f64).sqrt();
    MetricFolds { rhos, mean: m, sd, sem }
}

#[derive(Debug, Clone)]
pub struct KfoldReport {
    pub k: usize,
    pub a: MetricFolds,
    pub b: MetricFolds,
    pub test: TTest,
}

/// Shuffles the pairs with a seeded generator, splits them into k near-equal
/// folds, computes each metric's Spearman against the human scores per fold,
/// and t-tests the two k-sample correlation sets.
pub fn kfold_significance(
    human: &[f64],
    metric_a: &[f64],
    metric_b: &[f64],
    k: usize,
    seed: u64,
    welch: bool,
) -> Result<KfoldReport> {
    let n = human.len();
    if metric_a.len() != n {
        return Err(Error::LengthMismatch(n, metric_a.len()));
    }
    if metric_b.len() != n {
        return Err(Error::LengthMismatch(n, metric_b.len()));
    }
    if k < 2 || k > n {
        return Err(Error::BadFoldCount { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let base = n / k;
    let extra = n % k;
    let mut rhos_a = Vec::with_capacity(k);
    let mut rhos_b = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let fold = &order[start..start + size];
        start += size;
        let h: Vec<f64> = fold.iter().map(|&i| human[i]).collect();
        let a: Vec<f64> = fold.iter().map(|&i| metric_a[i]).collect();
        let b: Vec<f64> = fold.iter().map(|&i| metric_b[i]).collect();
        rhos_a.push(spearman(&a, &h)?);
        rhos_b.push(spearman(&b, &h)?);
    }
    let test = t_test_unpaired(&rhos_a, &rhos_b, welch)?;
    Ok(KfoldReport {
        k,
        a: metric_folds(rhos_a),
        b: metric_folds(rhos_b),
        test,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub nonzero: usize,
}

impl SampleStats {
    pub fn of(xs: &[f64]) -> SampleStats {
        let m = mean(xs);
        SampleStats {
            n: xs.len(),
            mean: m,
            sd: sample_var(xs, m).sqrt(),
            nonzero: xs.iter().filter(|&&x| x != 0.0).count(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Discrimination {
    pub pos: SampleStats,
    pub neg: SampleStats,
    pub ratio: f64,
    pub ratio_infinite: bool,
    /// Absent when either sample is a singleton.
    pub test: Option<TTest>,
}

/// Separation power of a metric over labeled pairs: mean(pos)/mean(neg) and
/// an unpaired two-tailed t-test.
pub fn discrimination_stats(pos: &[f64], neg: &[f64]) -> Result<Discrimination> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::TooFewPoints { need: 1, got: 0 });
    }
    let pos_stats = SampleStats::of(pos);
    let neg_stats = SampleStats::of(neg);
    let (ratio, ratio_infinite) = if neg_stats.mean == 0.0 {
        if pos_stats.mean == 0.0 {
            // 0/0: no separation evidence in either direction.
            (f64::NAN, false)
        } else {
            (f64::INFINITY, true)
        }
    } else {
        (pos_stats.mean / neg_stats.mean, false)
    };
    let test = if pos.len() >= 2 && neg.len() >= 2 {
        Some(t_test_unpaired(pos, neg, false)?)
    } else {
        None
    };
    Ok(Discrimination {
        pos: pos_stats,
        neg: neg_stats,
        ratio,
        ratio_infinite,
        test,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    pub surface: String,
    pub components: Vec<f64>,
}

pub fn cosine(a: &DenseVector, b: &DenseVector) -> Result<f64> {
    if a.components.len() != b.components.len() {
        return Err(Error::DimensionMismatch(
            a.components.len(),
            b.components.len(),
        ));
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.components.iter().zip(&b.components) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Dense embeddings in the common text interchange format: an optional
/// `count dim` header line, then `surface c1 c2 ... cd` per line.
#[derive(Debug, Default)]
pub struct EmbeddingSet {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingSet {
    pub fn from_path(path: &Path) -> Result<EmbeddingSet> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut dim: Option<usize> = None;
        let mut vectors = HashMap::new();
        let mut saw_data = false;
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if !saw_data && fields.len() == 2 {
                if let (Ok(_), Ok(d)) =
                    (fields[0].parse::<usize>(), fields[1].parse::<usize>())
                {
                    dim = Some(d);
                    saw_data = true;
                    continue;
                }
            }
            saw_data = true;
            let malformed = |msg: String| Error::Malformed {
                path: path.display().to_string(),
                line: line_no,
                msg,
            };
            if fields.len() < 2 {
                return Err(malformed("expected surface plus components".to_string()));
            }
            let comps: Vec<f64> = fields[1..]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| malformed(format!("bad component {s:?}"))))
                .collect::<Result<_>>()?;
            match dim {
                None => dim = Some(comps.len()),
                Some(d) if d != comps.len() => {
                    return Err(malformed(format!(
                        "expected {d} components, got {}",
                        comps.len()
                    )))
                }
                _ => {}
            }
            vectors.insert(fields[0].to_string(), comps);
        }
        Ok(EmbeddingSet {
            dim: dim.unwrap_or(0),
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.vectors.contains_key(surface)
    }

    pub fn get(&self, surface: &str) -> Option<DenseVector> {
        self.vectors.get(surface).map(|c| DenseVector {
            surface: surface.to_string(),
            components: c.clone(),
        })
    }
}

/// Componentwise sum of the constituents' vectors; `None` (pair-exclusion
/// signal) when any constituent is missing from the set.
pub fn sum_phrase_vectors(surfaces: &[&str], embeddings: &EmbeddingSet) -> Option<DenseVector> {
    if surfaces.is_empty() {
        return None;
    }
    let mut sum = vec![0.0; embeddings.dim()];
    for s in surfaces {
        let v = embeddings.vectors.get(*s)?;
        for (acc, c) in sum.iter_mut().zip(v) {
            *acc += c;
        }
    }
    Some(DenseVector {
        surface: surfaces.join(" "),
        components: sum,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkPair {
    pub raw_a: String,
    pub raw_b: String,
    pub human_score: f64,
    pub mapped_a: Option<TermId>,
    pub mapped_b: Option<TermId>,
}

impl BenchmarkPair {
    /// A pair is scored only when both sides mapped into the model.
    pub fn included(&self) -> bool {
        self.mapped_a.is_some() && self.mapped_b.is_some()
    }
}

#[derive(Debug, Default)]
pub struct Benchmark {
    pub pairs: Vec<BenchmarkPair>,
    /// (line number, message) per malformed row; counted in reports.
    pub malformed: Vec<(usize, String)>,
}

impl Benchmark {
    pub fn total(&self) -> usize {
        self.pairs.len()
    }

    pub fn mapped(&self) -> usize {
        self.pairs.iter().filter(|p| p.included()).count()
    }

    pub fn excluded(&self) -> usize {
        self.total() - self.mapped()
    }
}

/// Maps a raw benchmark surface to a model term: mapping-file override first,
/// then the exact surface, then the tokenized form, then its lowercase.
pub fn map_surface(
    raw: &str,
    table: &TermTable,
    overrides: &HashMap<String, String>,
) -> Option<TermId> {
    if let Some(target) = overrides.get(raw) {
        return table.term_id(target);
    }
    if let Some(id) = table.term_id(raw) {
        return Some(id);
    }
    let normalized = tokenize(raw).join(" ");
    if normalized.is_empty() {
        return None;
    }
    table
        .term_id(&normalized)
        .or_else(|| table.term_id(&normalized.to_lowercase()))
}

/// Reads a `raw<TAB>model_surface` mapping file.
pub fn load_mapping(path: &Path) -> Result<HashMap<String, String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut map = HashMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let (raw, target) = line.split_once('\t').ok_or_else(|| Error::Malformed {
            path: path.display().to_string(),
            line: idx + 1,
            msg: "expected raw<TAB>model_surface".to_string(),
        })?;
        map.insert(raw.to_string(), target.to_string());
    }
    Ok(map)
}

/// Loads a `term1<TAB>term2<TAB>score` benchmark and maps it into the model.
/// Malformed rows are skipped and reported, not fatal.
pub fn load_benchmark(
    path: &Path,
    mapping: Option<&Path>,
    table: &TermTable,
) -> Result<Benchmark> {
    let overrides = match mapping {
        Some(p) => load_mapping(p)?,
        None => HashMap::new(),
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bench = Benchmark::default();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            bench
                .malformed
                .push((line_no, "expected term1<TAB>term2<TAB>score".to_string()));
            continue;
        }
        let score: f64 = match fields[2].trim().parse() {
            Ok(s) if f64::is_finite(s) => s,
            _ => {
                bench
                    .malformed
                    .push((line_no, format!("bad score {:?}", fields[2])));
                continue;
            }
        };
        bench.pairs.push(BenchmarkPair {
            raw_a: fields[0].to_string(),
            raw_b: fields[1].to_string(),
            human_score: score,
            mapped_a: map_surface(fields[0], table, &overrides),
            mapped_b: map_surface(fields[1], table, &overrides),
        });
    }
    Ok(bench)
}
