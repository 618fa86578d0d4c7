//! End-to-end tests of the `termvec` binary: exit codes, report shapes, and
//! determinism, driven through the real CLI against a small fixture corpus.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_termvec");

const ONC: [&str; 10] = [
    "tumor", "growth", "cells", "cancer", "therapy", "dna", "damage", "mutation", "receptor",
    "signal",
];
const CARD: [&str; 10] = [
    "cardiac", "heart", "artery", "blood", "pressure", "valve", "rhythm", "muscle", "flow",
    "stroke",
];
const FILL: [&str; 10] = [
    "study", "results", "patients", "act", "clinical", "treatment", "effect", "observed",
    "measured", "compared",
];

/// Tiny fixed-sequence generator so the fixture has co-occurrence variance
/// (uniform rotation would give every pair odds ≈ 1) while staying
/// deterministic across runs and platforms.
struct Lcg(u64);

impl Lcg {
    fn next_f(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 33) as f64 / (1u64 << 31) as f64
    }

    fn chance(&mut self, p: f64) -> bool {
        self.next_f() < p
    }

    fn index(&mut self, n: usize) -> usize {
        (self.next_f() * n as f64) as usize % n
    }
}

/// Thirty eligible documents in two topics plus one too-short document and
/// one with no abstract. Each topic anchors a strong word couple
/// (tumor–growth, cardiac–heart) so high-odds contexts exist.
fn fixture_corpus() -> String {
    let mut rng = Lcg(0x5eed_1234_abcd_0001);
    let mut out = String::new();
    for i in 1usize..=30 {
        let topic: &[&str; 10] = if i <= 15 { &ONC } else { &CARD };
        let mut words: Vec<&str> = Vec::new();
        // The anchor word usually brings its partner along.
        let a0 = rng.chance(0.8);
        let a1 = if a0 { rng.chance(0.9) } else { rng.chance(0.25) };
        if a0 {
            words.push(topic[0]);
        }
        if a1 {
            words.push(topic[1]);
        }
        for k in 2..10 {
            if rng.chance(0.75 - 0.05 * (k as f64 - 2.0)) {
                words.push(topic[k]);
            }
        }
        // Two rotating slots guarantee every topic word at least three
        // titles (and abstracts) per topic, whatever the draws above did.
        for slot in [topic[i % 10], topic[(i + 5) % 10]] {
            if !words.contains(&slot) {
                words.push(slot);
            }
        }
        // Topic words never adjoin each other (fillers separate them), so
        // the only stable n-gram is the planted phrase below.
        let title = format!(
            "{} {} {} {}",
            topic[i % 10],
            FILL[(i * 3) % 10],
            topic[(i + 5) % 10],
            FILL[(i * 3 + 7) % 10]
        );
        // ACT (all-caps) in a few abstracts; the filler word "act" outnumbers
        // it corpus-wide, so ACT is selected as a distinct abbreviation.
        let marker = if i <= 5 { "with ACT assay" } else { "with control assay" };
        let mut abstr = String::from("the");
        for w in &words {
            abstr.push(' ');
            abstr.push_str(w);
            abstr.push(' ');
            abstr.push_str(FILL[rng.index(10)]);
        }
        abstr.push(' ');
        abstr.push_str(marker);
        if rng.chance(0.6) {
            abstr.push_str(" clinical treatment effect");
        }
        // Pad every abstract to a uniform length so all are eligible.
        let mut n = abstr.split(' ').count();
        while n < 34 {
            abstr.push(' ');
            abstr.push_str(FILL[rng.index(10)]);
            n += 1;
        }
        out.push_str(&format!("d{i}\t{title}\t{abstr}\n"));
    }
    out.push_str("short1\ttumor growth note\tbrief note only\n");
    out.push_str("empty1\tcardiac rhythm note\t\n");
    out
}

fn fixture_lexicon() -> &'static str {
    "ACT\t50\nRNA\t40\n"
}

fn fixture_benchmark() -> &'static str {
    "tumor\tgrowth\t9.0\n\
     cells\tcancer\t8.5\n\
     dna\tdamage\t8.0\n\
     therapy\tcancer\t7.5\n\
     cardiac\theart\t8.8\n\
     blood\tpressure\t8.2\n\
     tumor\theart\t1.0\n\
     growth\tvalve\t1.5\n\
     cells\tartery\t2.0\n\
     therapy\trhythm\t1.2\n\
     dna\tstroke\t0.5\n\
     damage\tmuscle\t0.8\n\
     notaword\tgrowth\t3.0\n\
     one-field-line\n"
}

fn fixture_doc_pairs() -> &'static str {
    "d1\td2\tpos\n\
     d3\td4\tpos\n\
     d5\td6\tpos\n\
     d16\td17\tpos\n\
     d1\td16\tneg\n\
     d2\td20\tneg\n\
     d3\td18\tneg\n\
     d4\td19\tneg\n\
     d1\tghost\tpos\n\
     short1\td2\tpos\n\
     d5\td21\tmaybe\n"
}

/// Word embeddings covering the fixture vocabulary except "stroke", so one
/// benchmark row is excluded for lack of a phrase vector.
fn fixture_word_embeddings() -> String {
    let mut out = String::new();
    for (i, w) in ONC.iter().chain(&CARD).chain(&FILL).enumerate() {
        if *w == "stroke" {
            continue;
        }
        let base = i as f64;
        out.push_str(&format!(
            "{w} {} {} {} {}\n",
            base.sin(),
            (base * 2.0).cos(),
            base / 30.0,
            1.0 - base / 60.0
        ));
    }
    out
}

fn fixture_doc_embeddings() -> String {
    let mut out = String::from("32 4\n");
    for i in 1usize..=30 {
        let b = i as f64;
        out.push_str(&format!(
            "d{i} {} {} {} {}\n",
            b.sin(),
            b.cos(),
            (b / 7.0).sin(),
            1.0 / b
        ));
    }
    out.push_str("short1 0.1 0.2 0.3 0.4\nempty1 0.4 0.3 0.2 0.1\n");
    out
}

struct Fixture {
    #[allow(dead_code)]
    dir: TempDir,
    root: PathBuf,
    corpus: PathBuf,
    model: PathBuf,
}

impl Fixture {
    /// Writes the corpus and auxiliary files and builds a model with
    /// thresholds low enough for a 30-document corpus.
    fn new() -> Fixture {
        let dir = TempDir::new().expect("tempdir");
        let root = dir.path().to_path_buf();
        let corpus = root.join("corpus.tsv");
        fs::write(&corpus, fixture_corpus()).unwrap();
        fs::write(root.join("lexicon.tsv"), fixture_lexicon()).unwrap();
        fs::write(root.join("benchmark.tsv"), fixture_benchmark()).unwrap();
        fs::write(root.join("doc_pairs.tsv"), fixture_doc_pairs()).unwrap();
        fs::write(root.join("word_embeddings.txt"), fixture_word_embeddings()).unwrap();
        fs::write(root.join("doc_embeddings.txt"), fixture_doc_embeddings()).unwrap();
        let model = root.join("model");
        let fx = Fixture { dir, root, corpus, model };
        let out = fx.build(&["--output"], "model");
        assert!(out.status.success(), "fixture build failed: {}", text(&out.output.stderr));
        fx
    }

    fn build(&self, extra: &[&str], output_name: &str) -> Run {
        let output = self.root.join(output_name);
        let mut args: Vec<String> = vec![
            "build".into(),
            "--corpus".into(),
            self.corpus.display().to_string(),
            "--lexicon".into(),
            self.root.join("lexicon.tsv").display().to_string(),
            "--min-title-df".into(),
            "2".into(),
            "--min-abstract-df".into(),
            "2".into(),
            "--min-lexicon-count".into(),
            "1".into(),
            "--bigram-min-odds".into(),
            "2.0".into(),
            "--trigram-min-abstracts".into(),
            "5".into(),
            "--trigram-ratio".into(),
            "0.3".into(),
        ];
        for a in extra {
            args.push((*a).to_string());
            if *a == "--output" {
                args.push(output.display().to_string());
            }
        }
        run_args(&args.iter().map(String::as_str).collect::<Vec<_>>())
    }

    fn path(&self, name: &str) -> String {
        self.root.join(name).display().to_string()
    }

    fn model_arg(&self) -> String {
        self.model.display().to_string()
    }
}

struct Run {
    output: Output,
}

impl Run {
    fn stdout(&self) -> String {
        text(&self.output.stdout)
    }

    fn stderr(&self) -> String {
        text(&self.output.stderr)
    }

    fn code(&self) -> i32 {
        self.output.status.code().expect("exit code")
    }
}

impl std::ops::Deref for Run {
    type Target = Output;
    fn deref(&self) -> &Output {
        &self.output
    }
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn run_args(args: &[&str]) -> Run {
    let output = Command::new(BIN)
        .args(args)
        .env_remove("TERMVEC_MODEL")
        .output()
        .expect("spawn termvec");
    Run { output }
}

/// Rows of a typed-TSV report grouped by their first field.
fn rows_by_type(tsv: &str) -> BTreeMap<String, Vec<Vec<String>>> {
    let mut map: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    for line in tsv.lines() {
        let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
        assert!(fields.len() >= 2, "typed row with one field: {line:?}");
        map.entry(fields[0].clone()).or_default().push(fields[1..].to_vec());
    }
    map
}

fn count_of(rows: &BTreeMap<String, Vec<Vec<String>>>, what: &str) -> i64 {
    rows.get("count")
        .into_iter()
        .flatten()
        .find(|r| r[0] == what)
        .unwrap_or_else(|| panic!("missing count row {what:?}"))[1]
        .parse()
        .unwrap()
}

/// Value of a bare `key<TAB>value` report row (the build report's shape).
fn bare_of(rows: &BTreeMap<String, Vec<Vec<String>>>, key: &str) -> i64 {
    rows.get(key).unwrap_or_else(|| panic!("missing row {key:?}"))[0][0]
        .parse()
        .unwrap()
}

fn dir_snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut map = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        map.insert(
            entry.file_name().to_string_lossy().into_owned(),
            fs::read(entry.path()).unwrap(),
        );
    }
    map
}

#[test]
fn build_reports_counts_and_creates_model_files() {
    let fx = Fixture::new();
    let out = fx.build(&["--output", "--tsv", "--passages"], "model_tsv");
    assert_eq!(out.code(), 0, "stderr: {}", out.stderr());
    let rows = rows_by_type(&out.stdout());
    assert_eq!(bare_of(&rows, "docs"), 32);
    assert!(bare_of(&rows, "terms") > 0);
    assert_eq!(bare_of(&rows, "abbreviations"), 1);
    assert_eq!(bare_of(&rows, "passages"), 32);
    assert_eq!(
        bare_of(&rows, "terms"),
        bare_of(&rows, "words")
            + bare_of(&rows, "bigrams")
            + bare_of(&rows, "trigrams")
            + bare_of(&rows, "abbreviations")
    );
    assert_eq!(bare_of(&rows, "vectors"), bare_of(&rows, "terms"));
    let phases: Vec<&str> = rows["phase"].iter().map(|r| r[0].as_str()).collect();
    assert!(phases.contains(&"token scan"), "phases: {phases:?}");
    assert!(phases.contains(&"full count"), "phases: {phases:?}");
    assert!(phases.contains(&"passage precompute"), "phases: {phases:?}");

    for file in [
        "manifest.tsv",
        "stoplist.txt",
        "lexicon.tsv",
        "terms.tsv",
        "vectors.tsv",
        "pairs.tsv",
        "passages.tsv",
    ] {
        let path = fx.root.join("model_tsv").join(file);
        assert!(path.is_file(), "missing {file}");
    }

    // Text mode mentions the kind breakdown in prose.
    let out = fx.build(&["--output"], "model_text");
    let stdout = out.stdout();
    assert!(stdout.contains("words,"), "missing kind breakdown: {stdout}");
    assert!(stdout.contains("and 1 abbreviations)"), "{stdout}");
    assert!(stdout.contains("phases:"), "{stdout}");
}

#[test]
fn build_refuses_then_replaces_existing_output() {
    let fx = Fixture::new();
    // The fixture already built into `model`; a second build must refuse.
    let out = fx.build(&["--output"], "model");
    assert_eq!(out.code(), 3, "stderr: {}", out.stderr());
    assert!(out.stderr().contains("already exists"), "{}", out.stderr());
    // --force replaces it.
    let out = fx.build(&["--output", "--force"], "model");
    assert_eq!(out.code(), 0, "stderr: {}", out.stderr());

    // --force never deletes a directory that is not a model.
    let decoy = fx.root.join("decoy");
    fs::create_dir(&decoy).unwrap();
    fs::write(decoy.join("keep.txt"), "precious").unwrap();
    let out = run_args(&[
        "build",
        "--corpus",
        &fx.path("corpus.tsv"),
        "--output",
        &fx.path("decoy"),
        "--force",
        "--min-title-df",
        "2",
        "--min-abstract-df",
        "2",
    ]);
    assert_eq!(out.code(), 3, "stderr: {}", out.stderr());
    assert!(out.stderr().contains("not a model directory"), "{}", out.stderr());
    assert!(decoy.join("keep.txt").is_file(), "decoy contents were deleted");
}

#[test]
fn build_runs_are_byte_identical() {
    let fx = Fixture::new();
    let a = fx.build(&["--output", "--passages"], "model_a");
    assert_eq!(a.code(), 0, "stderr: {}", a.stderr());
    let b = fx.build(&["--output", "--passages", "--workers", "2"], "model_b");
    assert_eq!(b.code(), 0, "stderr: {}", b.stderr());
    let snap_a = dir_snapshot(&fx.root.join("model_a"));
    let snap_b = dir_snapshot(&fx.root.join("model_b"));
    assert_eq!(
        snap_a.keys().collect::<Vec<_>>(),
        snap_b.keys().collect::<Vec<_>>()
    );
    for (name, bytes) in &snap_a {
        assert_eq!(Some(bytes), snap_b.get(name), "file {name} differs");
    }
}

#[test]
fn build_rejects_bad_inputs() {
    let fx = Fixture::new();
    let out = run_args(&[
        "build",
        "--corpus",
        &fx.path("no_such_corpus.tsv"),
        "--output",
        &fx.path("never_created"),
    ]);
    assert_eq!(out.code(), 3, "stderr: {}", out.stderr());
    assert!(!fx.root.join("never_created").exists());

    let out = fx.build(&["--output", "--bin-size", "0"], "never_created2");
    assert_eq!(out.code(), 3);
    assert!(out.stderr().contains("--bin-size"), "{}", out.stderr());

    // Usage errors (unknown flag) use the parser's own exit code.
    let out = run_args(&["build", "--no-such-flag"]);
    assert_eq!(out.code(), 2);
}

#[test]
fn neighbors_ranks_and_formats() {
    let fx = Fixture::new();
    let out = run_args(&[
        "neighbors",
        "--model",
        &fx.model_arg(),
        "tumor",
        "-k",
        "10",
        "--samples",
        "500",
        "--tsv",
    ]);
    assert_eq!(out.code(), 0, "stderr: {}", out.stderr());
    let stdout = out.stdout();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("rank\tsurface\tscore\tpercentile"));
    let mut prev_score = f64::INFINITY;
    let mut n = 0;
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        assert_eq!(f.len(), 4, "row: {line:?}");
        assert_eq!(f[0].parse::<usize>().unwrap(), i + 1);
        assert!(!f[1].is_empty(), "empty surface in {line:?}");
        n += 1;
        let s: f64 = f[2].parse().unwrap();
        assert!(s <= prev_score, "scores not descending at {line:?}");
        prev_score = s;
        let pct: f64 = f[3].parse().unwrap();
        assert!((0.0..=100.0).contains(&pct));
    }
    assert!(n > 0 && n <= 10);

    // Text mode carries the same rows plus a header line.
    let out = run_args(&[
        "neighbors",
        "--model",
        &fx.model_arg(),
        "tumor",
        "-k",
        "3",
        "--samples",
        "100",
    ]);
    assert_eq!(out.code(), 0);
    assert!(out.stdout().contains("neighbors of \"tumor\""), "{}", out.stdout());

    // Each metric is accepted; an unknown one is a usage error.
    for metric in ["direct", "shared", "weighted"] {
        let out = run_args(&[
            "neighbors",
            "--model",
            &fx.model_arg(),
            "cells",
            "--metric",
            metric,
            "-k",
            "2",
            "--samples",
            "50",
        ]);
        assert_eq!(out.code(), 0, "metric {metric}: {}", out.stderr());
    }
    let out = run_args(&[
        "neighbors",
        "--model",
        &fx.model_arg(),
        "cells",
        "--metric",
        "euclidean",
    ]);
    assert_eq!(out.code(), 2);
}

#[test]
fn unknown_term_suggests_and_exits_4() {
    let fx = Fixture::new();
    let out = run_args(&["neighbors", "--model", &fx.model_arg(), "tumorx"]);
    assert_eq!(out.code(), 4);
    let err = out.stderr();
    assert!(err.contains("unknown term \"tumorx\""), "{err}");
    assert!(err.contains("tumor"), "no suggestion in: {err}");
}

#[test]
fn termsim_prints_three_metrics() {
    let fx = Fixture::new();
    let out = run_args(&["termsim", "--model", &fx.model_arg(), "tumor", "cells", "--tsv"]);
    assert_eq!(out.code(), 0, "stderr: {}", out.stderr());
    let stdout = out.stdout();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "metric\tvalue");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("direct\t"));
    assert!(lines[2].starts_with("shared\t"));
    assert!(lines[3].starts_with("weighted\t"));
    // Values parse (direct may be "-" only without a pair store).
    for line in &lines[1..] {
        let v = line.split('\t').nth(1).unwrap();
        v.parse::<f64>().unwrap_or_else(|_| panic!("unparseable value in {line:?}"));
    }

    // Without a pair store the direct row degrades to "-" plus a note.
    let no_pairs = fx.build(&["--output", "--no-pairs"], "model_np");
    assert_eq!(no_pairs.code(), 0);
    let out = run_args(&[
        "termsim",
        "--model",
        &fx.path("model_np"),
        "tumor",
        "cells",
    ]);
    assert_eq!(out.code(), 0, "stderr: {}", out.stderr());
    let stdout = out.stdout();
    assert!(stdout.contains("direct    -"), "{stdout}");
    assert!(stdout.contains("pair table not stored"), "{stdout}");

    // The direct metric as a ranking however requires the store.
    let out = run_args(&[
        "neighbors",
        "--model",
        &fx.path("model_np"),
        "tumor",
        "--metric",
        "direct",
    ]);
    assert_eq!(out.code(), 4);
    assert!(out.stderr().contains("without pair data"), "{}", out.stderr());
}

#[test]
fn docsim_scores_and_rejects_ineligible() {
    let fx = Fixture::new();
    let out = run_args(&[
        "docsim",
        "--model",
        &fx.model_arg(),
        "--corpus",
        &fx.path("corpus.tsv"),
        "d1",
        "d2",
        "--tsv",
    ]);
    assert_eq!(out.code(), 0, "stderr: {}", out.stderr());
    let rows = rows_by_type(&out.stdout());
    assert_eq!(rows["dims"].len(), 2);
    let metrics: Vec<&str> = rows["metric"].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(
        metrics,
        ["passage_shared", "passage_weighted", "title_words", "rare_terms", "common_string"]
    );
    for row in &rows["metric"] {
        row[1].parse::<f64>().unwrap();
    }

    // Same-topic pairs overlap more than cross-topic ones.
    let weighted_of = |a: &str, b: &str| -> f64 {
        let out = run_args(&[
            "docsim",
            "--model",
            &fx.model_arg(),
            "--corpus",
            &fx.path("corpus.tsv"),
            a,
            b,
            "--tsv",
        ]);
        assert_eq!(out.code(), 0);
        let rows = rows_by_type(&out.stdout());
        let row = rows["metric"].iter().find(|r| r[0] == "passage_weighted").unwrap();
        row[1].parse().unwrap()
    };
    assert!(weighted_of("d1", "d2") > weighted_of("d1", "d16"));

    let out = run_args(&[
        "docsim",
        "--model",
        &fx.model_arg(),
        "--corpus",
        &fx.path("corpus.tsv"),
        "d1",
        "short1",
    ]);
    assert_eq!(out.code(), 4);
    assert!(out.stderr().contains("ineligible"), "{}", out.stderr());

    let out = run_args(&[
        "docsim",
        "--model",
        &fx.model_arg(),
        "--corpus",
        &fx.path("corpus.tsv"),
        "d1",
        "empty1",
    ]);
    assert_eq!(out.code(), 4);
    assert!(out.stderr().contains("abstract is empty"), "{}", out.stderr());

    let out = run_args(&[
        "docsim",
        "--model",
        &fx.model_arg(),
        "--corpus",
        &fx.path("corpus.tsv"),
        "d1",
        "ghost",
    ]);
    assert_eq!(out.code(), 4);
    assert!(out.stderr().contains("not found in corpus"), "{}", out.stderr());
}

#[test]
fn model_flag_falls_back_to_environment() {
    let fx = Fixture::new();
    let out = Command::new(BIN)
        .args(["termsim", "tumor", "cells"])
        .env("TERMVEC_MODEL", &fx.model)
        .output()
        .expect("spawn termvec");
    assert_eq!(out.status.code(), Some(0), "stderr: {}", text(&out.stderr));

    // With neither the flag nor the variable, this is a usage error.
    let out = Command::new(BIN)
        .args(["termsim", "tumor", "cells"])
        .env_remove("TERMVEC_MODEL")
        .output()
        .expect("spawn termvec");
    assert_eq!(out.status.code(), Some(2));

    // A bad model path is an input error.
    let out = run_args(&["termsim", "--model", &fx.path("nope"), "tumor", "cells"]);
    assert_eq!(out.code(), 3);
}

#[test]
fn bench_reports_counts_correlations_and_folds() {
    let fx = Fixture::new();
    let out = run_args(&[
        "bench",
        "--model",
        &fx.model_arg(),
        "--benchmark",
        &fx.path("benchmark.tsv"),
        "--k",
        "3",
        "--tsv",
    ]);
    assert_eq!(out.code(), 0, "stderr: {}", out.stderr());
    let rows = rows_by_type(&out.stdout());
    assert_eq!(count_of(&rows, "total"), 13);
    assert_eq!(count_of(&rows, "malformed"), 1);
    assert_eq!(count_of(&rows, "excluded_unmapped"), 1); // notaword
    assert_eq!(count_of(&rows, "mapped"), 12);
    assert_eq!(count_of(&rows, "scored"), 12);
    let spearman_metrics: Vec<&str> =
        rows["spearman"].iter().map(|r| r[1].as_str()).collect();
    assert_eq!(spearman_metrics, ["direct", "shared", "weighted"]);
    // Same-topic pairs dominate the high human scores, so the implicit
    // metrics correlate positively.
    for row in &rows["spearman"] {
        if row[1] == "shared" || row[1] == "weighted" {
            let rho: f64 = row[2].parse().expect("rho");
            assert!(rho > 0.0, "row {row:?}");
        }
    }
    // Matrix covers every unordered pair over human + metrics.
    assert_eq!(rows["matrix"].len(), 6);
    // A fold row (or an honest skip) exists for every metric pair.
    let folds = rows.get("kfold").map_or(0, Vec::len)
        + rows.get("kfold_error").map_or(0, Vec::len);
    assert_eq!(folds, 3);

    // The mapping file rescues the unmapped surface.
    fs::write(fx.root.join("map.tsv"), "notaword\ttumor\n").unwrap();
    let out = run_args(&[
        "bench",
        "--model",
        &fx.model_arg(),
        "--benchmark",
        &fx.path("benchmark.tsv"),
        "--mapping",
        &fx.path("map.tsv"),
        "--tsv",
    ]);
    assert_eq!(out.code(), 0, "stderr: {}", out.stderr());
    let rows = rows_by_type(&out.stdout());
    assert_eq!(count_of(&rows, "excluded_unmapped"), 0);
    assert_eq!(count_of(&rows, "mapped"), 13);

    // Embeddings add a cosine column and exclude rows without phrase vectors.
    let out = run_args(&[
        "bench",
        "--model",
        &fx.model_arg(),
        "--benchmark",
        &fx.path("benchmark.tsv"),
        "--embeddings",
        &fx.path("word_embeddings.txt"),
        "--tsv",
    ]);
    assert_eq!(out.code(), 0, "stderr: {}", out.stderr());
    let rows = rows_by_type(&out.stdout());
    assert_eq!(count_of(&rows, "excluded_embedding"), 1); // dna–stroke
    assert_eq!(count_of(&rows, "scored"), 11);
    assert!(rows["spearman"].iter().any(|r| r[1] == "cosine"));

    let out = run_args(&[
        "bench",
        "--model",
        &fx.model_arg(),
        "--benchmark",
        &fx.path("no_such.tsv"),
    ]);
    assert_eq!(out.code(), 3);
}

#[test]
fn pairs_reports_discrimination_and_bookkeeping() {
    let fx = Fixture::new();
    let out = run_args(&[
        "pairs",
        "--model",
        &fx.model_arg(),
        "--pairs",
        &fx.path("doc_pairs.tsv"),
        "--corpus",
        &fx.path("corpus.tsv"),
        "--tsv",
    ]);
    assert_eq!(out.code(), 0, "stderr: {}", out.stderr());
    let rows = rows_by_type(&out.stdout());
    assert_eq!(count_of(&rows, "rows"), 11);
    assert_eq!(count_of(&rows, "malformed"), 1); // label "maybe"
    assert_eq!(count_of(&rows, "parsed"), 10);
    assert_eq!(count_of(&rows, "skipped_unknown"), 1); // ghost
    assert_eq!(count_of(&rows, "excluded_ineligible"), 1); // short1
    assert_eq!(count_of(&rows, "scored_pos"), 4);
    assert_eq!(count_of(&rows, "scored_neg"), 4);
    assert_eq!(rows["skipped"].len(), 1);
    assert_eq!(rows["skipped"][0][2], "ghost");

    let metrics = ["passage_shared", "passage_weighted", "title_words", "rare_terms", "common_string"];
    let stats = &rows["stats"];
    for m in metrics {
        for sample in ["pos", "neg"] {
            assert!(
                stats.iter().any(|r| r[0] == m && r[1] == sample),
                "missing stats for {m}/{sample}"
            );
        }
        assert!(
            rows["discrimination"].iter().any(|r| r[0] == m),
            "missing discrimination for {m}"
        );
    }
    // Positive pairs share a topic; the weighted metric must separate them.
    let weighted = rows["discrimination"]
        .iter()
        .find(|r| r[0] == "passage_weighted")
        .unwrap();
    if weighted[1] != "inf" && weighted[1] != "-" {
        let ratio: f64 = weighted[1].parse().unwrap();
        assert!(ratio > 1.0, "weighted ratio {ratio}");
    }
    // Matrices for the three scopes, every unordered metric pair.
    let scopes: Vec<&str> = rows["matrix"].iter().map(|r| r[0].as_str()).collect();
    for scope in ["combined", "pos", "neg"] {
        assert_eq!(
            scopes.iter().filter(|s| **s == scope).count(),
            metrics.len() * (metrics.len() - 1) / 2,
            "matrix rows for {scope}"
        );
    }

    // Document embeddings add a cosine metric.
    let out = run_args(&[
        "pairs",
        "--model",
        &fx.model_arg(),
        "--pairs",
        &fx.path("doc_pairs.tsv"),
        "--corpus",
        &fx.path("corpus.tsv"),
        "--embeddings",
        &fx.path("doc_embeddings.txt"),
        "--tsv",
    ]);
    assert_eq!(out.code(), 0, "stderr: {}", out.stderr());
    let rows = rows_by_type(&out.stdout());
    assert!(rows["discrimination"].iter().any(|r| r[0] == "cosine"));
    assert_eq!(count_of(&rows, "excluded_embedding"), 0);

    // Text mode renders the same report as aligned tables.
    let out = run_args(&[
        "pairs",
        "--model",
        &fx.model_arg(),
        "--pairs",
        &fx.path("doc_pairs.tsv"),
        "--corpus",
        &fx.path("corpus.tsv"),
    ]);
    assert_eq!(out.code(), 0);
    let stdout = out.stdout();
    assert!(stdout.contains("scored: 4 pos, 4 neg"), "{stdout}");
    assert!(stdout.contains("cross-metric spearman (combined"), "{stdout}");
}
