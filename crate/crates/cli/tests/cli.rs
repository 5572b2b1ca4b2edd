use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndarray::array;
use tagtopic::{ingest_triples, planted_two_topic_itm, rank_by_seed, Model, PlsaModel};
use tempfile::TempDir;

fn tagtopic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tagtopic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tagtopic(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workspace(TempDir);

impl Workspace {
    fn new() -> Self {
        Workspace(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, contents).unwrap();
        p
    }

    /// Corpus sampled from the planted two-topic model.
    fn planted_corpus(&self, n_samples: u64) -> PathBuf {
        let spec = self.file(
            "planted.spec",
            &planted_two_topic_itm(n_samples, 3).to_text(),
        );
        let corpus = self.path("planted.tsv");
        ok(&["sample", s(&spec), "-o", s(&corpus)]);
        corpus
    }
}

const FIXTURE: &str = "site-a\talice\tjava\nsite-a\tbob\tjava\nsite-b\tbob\tweather\n";

#[test]
fn ingest_reports_stats() {
    let ws = Workspace::new();
    let input = ws.file("raw.tsv", FIXTURE);
    let out = ws.path("corpus.tsv");
    let stats = ok(&["ingest", s(&input), "-o", s(&out), "--min-tag-freq", "1"]);
    assert_eq!(
        stats,
        "resources\t2\nusers\t2\ntags\t2\ntriples\t3\ntotal\t3\n"
    );

    let again = ws.path("again.tsv");
    assert_eq!(
        ok(&["ingest", s(&out), "-o", s(&again), "--min-tag-freq", "1"]),
        stats
    );
}

#[test]
fn ingest_errors() {
    let ws = Workspace::new();
    let input = ws.file("raw.tsv", FIXTURE);
    let out = ws.path("corpus.tsv");
    // every tag is rarer than the default threshold
    assert_eq!(
        tagtopic(&["ingest", s(&input), "-o", s(&out)])
            .status
            .code(),
        Some(2)
    );
    let bad = ws.file("bad.tsv", "a\tb\n");
    assert_eq!(
        tagtopic(&["ingest", s(&bad), "-o", s(&out)]).status.code(),
        Some(2)
    );
    let args = [
        "ingest",
        s(&input),
        "-o",
        s(&out),
        "--min-tag-freq",
        "5",
        "--max-tag-freq",
        "2",
    ];
    assert_eq!(tagtopic(&args).status.code(), Some(1));
}

#[test]
fn usage_and_help() {
    assert_eq!(tagtopic(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(tagtopic(&["train"]).status.code(), Some(1));
    for sub in ["ingest", "train", "rank", "eval", "sample"] {
        let out = tagtopic(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
    }
}

#[test]
fn single_topic_plsa_converges_immediately() {
    let ws = Workspace::new();
    let corpus = ws.planted_corpus(2000);
    let model = ws.path("model.txt");
    let log = ws.path("ll.tsv");
    let args = [
        "train",
        s(&corpus),
        "--model",
        "plsa",
        "--topics",
        "1",
        "-o",
        s(&model),
        "--log",
        s(&log),
    ];
    let summary = ok(&args);
    let iterations: usize = summary.split_whitespace().next().unwrap().parse().unwrap();
    assert!(iterations <= 2, "{summary}");
    assert!(summary.contains(" converged"), "{summary}");
    let lines = fs::read_to_string(&log).unwrap().lines().count();
    assert_eq!(lines, iterations + 2);
}

#[test]
fn training_is_reproducible() {
    let ws = Workspace::new();
    let corpus = ws.planted_corpus(3000);
    let (a, b) = (ws.path("a.txt"), ws.path("b.txt"));
    for out in [&a, &b] {
        let args = [
            "train",
            s(&corpus),
            "--model",
            "itm",
            "--topics",
            "2",
            "--interests",
            "2",
            "--seed",
            "7",
            "-o",
            s(out),
        ];
        ok(&args);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn invalid_training_config() {
    let ws = Workspace::new();
    let corpus = ws.planted_corpus(500);
    let out = ws.path("m.txt");
    let zero = ["train", s(&corpus), "--topics", "0", "-o", s(&out)];
    assert_eq!(tagtopic(&zero).status.code(), Some(1));
    let huge = [
        "train",
        s(&corpus),
        "--topics",
        "100000",
        "--memory-budget-mb",
        "1",
        "-o",
        s(&out),
    ];
    assert_eq!(tagtopic(&huge).status.code(), Some(2));
    let kind = ["train", s(&corpus), "--model", "lda", "-o", s(&out)];
    assert_eq!(tagtopic(&kind).status.code(), Some(1));
}

#[test]
fn rank_matches_library() {
    let ws = Workspace::new();
    let corpus = ws.planted_corpus(20_000);
    let model = ws.path("model.txt");
    ok(&[
        "train",
        s(&corpus),
        "--topics",
        "2",
        "--interests",
        "2",
        "--seed",
        "11",
        "-o",
        s(&model),
    ]);
    let ranking = ok(&[
        "rank",
        "--model-file",
        s(&model),
        "--corpus",
        s(&corpus),
        "--seed-resource",
        "r3",
        "-k",
        "50",
    ]);

    let c = ingest_triples(fs::read(&corpus).unwrap().as_slice()).unwrap();
    let m = Model::from_text(&fs::read_to_string(&model).unwrap()).unwrap();
    let seed = c.resources().get("r3").unwrap();
    let list = rank_by_seed(&m.topic_distributions().unwrap(), seed).unwrap();
    let mut expected = String::from("# model=itm K=2 base=e seed=r3\n");
    for (rank, e) in list.entries.iter().enumerate() {
        expected += &format!(
            "{}\t{}\t{}\n",
            rank + 1,
            c.resources().name(e.resource).unwrap(),
            e.divergence
        );
    }
    assert_eq!(ranking, expected);
    assert_eq!(ranking.lines().count(), 20);

    let header = ok(&[
        "rank",
        "--model-file",
        s(&model),
        "--corpus",
        s(&corpus),
        "--seed-resource",
        "r3",
        "-k",
        "0",
    ]);
    assert_eq!(header, "# model=itm K=2 base=e seed=r3\n");
}

#[test]
fn unknown_seed_lists_matches() {
    let ws = Workspace::new();
    let corpus = ws.planted_corpus(2000);
    let model = ws.path("model.txt");
    ok(&[
        "train",
        s(&corpus),
        "--model",
        "plsa",
        "--topics",
        "2",
        "-o",
        s(&model),
    ]);
    let out = tagtopic(&[
        "rank",
        "--model-file",
        s(&model),
        "--corpus",
        s(&corpus),
        "--seed-resource",
        "r3x",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("closest matches: r3"), "{err}");
}

#[test]
fn duplicate_resource_ranks_first() {
    let ws = Workspace::new();
    let corpus = ws.file("corpus.tsv", "a\tu1\tx\nb\tu1\ty\ntwin\tu2\tx\nc\tu2\ty\n");
    // ids follow first appearance: a=0, b=1, twin=2, c=3
    let m = PlsaModel::new(
        array![[0.7, 0.3], [0.2, 0.8]],
        array![[0.6, 0.4], [0.1, 0.9], [0.6, 0.4], [0.5, 0.5]],
        vec![0.25; 4],
        0,
    )
    .unwrap();
    let model = ws.file("model.txt", &m.to_text());
    let ranking = ws.path("ranking.tsv");
    ok(&[
        "rank",
        "--model-file",
        s(&model),
        "--corpus",
        s(&corpus),
        "--seed-resource",
        "a",
        "-o",
        s(&ranking),
    ]);
    let text = fs::read_to_string(&ranking).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "1\ttwin\t0");
}

#[test]
fn eval_reports_metrics() {
    let ws = Workspace::new();
    let mut ranking = String::from("# model=itm K=2 base=e seed=s\n");
    for r in 1..=30 {
        ranking += &format!("{r}\tr{r}\t{}\n", r as f64 / 100.0);
    }
    let ranking = ws.file("ranking.tsv", &ranking);
    let mut labels = String::new();
    for j in 1..=10 {
        labels += &format!("r{}\t{}\n", 2 * j, if j <= 4 { "same" } else { "link-to" });
    }
    labels += "r3\tunrelated\n";
    let labels = ws.file("labels.tsv", &labels);
    let report = ok(&["eval", s(&ranking), s(&labels), "-k", "10", "-n", "10"]);
    assert_eq!(
        report,
        "# model\tmetric\tvalue\nitm\tsame@10\t4\nitm\tlink-to@10\t1\nitm\trelevant@10\t5\nitm\teffort@10\t20\n"
    );
    let report = ok(&["eval", s(&ranking), s(&labels), "-n", "11"]);
    assert!(
        report.ends_with("itm\teffort@11\tnot-reached\n"),
        "{report}"
    );
}

#[test]
fn sample_writes_corpus() {
    let ws = Workspace::new();
    let spec = ws.file("planted.spec", &planted_two_topic_itm(5000, 9).to_text());
    let (a, b) = (ws.path("a.tsv"), ws.path("b.tsv"));
    let stats = ok(&["sample", s(&spec), "-o", s(&a)]);
    assert!(
        stats.contains("resources\t20\n") && stats.contains("total\t5000\n"),
        "{stats}"
    );
    ok(&["sample", s(&spec), "-o", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let broken = ws.file("broken.spec", "spec 10 1\n");
    assert_eq!(
        tagtopic(&["sample", s(&broken), "-o", s(&a)]).status.code(),
        Some(2)
    );
}
