use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const ASK: &str = "ASK WHERE { wd:Q234691 wdt:P101 wd:Q207628 }";
const DUAL: &str = "SELECT ?value1 ?obj WHERE { wd:Q133063 p:P39 ?s . ?s ps:P39 ?obj . ?s pq:P580 ?value1 }";

fn kbqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kbqa")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn file(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn toy(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", "toy", name].iter().collect();
    p.to_str().unwrap().to_string()
}

/// Gold corpus holding the two sample records, with their graph.
fn samples(dir: &Path) -> (String, String) {
    let corpus = serde_json::json!([
        {"id": "1", "question_zh": "Stevie Nicks是作曲家吗？", "sparql": ASK},
        {"id": "2", "question_zh": "格里高利七世担任什么职位？", "sparql": DUAL},
    ]);
    let g = file(
        dir,
        "g.nt",
        "wd:Q234691 wdt:P101 wd:Q207628 .\n\
         wd:Q133063 p:P39 wds:Q133063-1 .\n\
         wds:Q133063-1 ps:P39 wd:Q19546 .\n\
         wds:Q133063-1 pq:P580 \"1073-04-22\"^^date .\n",
    );
    (file(dir, "gold.json", &corpus.to_string()), g)
}

#[test]
fn exec_prints_true_for_sample_ask() {
    let d = tempfile::tempdir().unwrap();
    let g = file(d.path(), "g.nt", "wd:Q234691 wdt:P101 wd:Q207628 .\n");
    let q = file(d.path(), "q.rq", ASK);
    let o = kbqa(&["exec", "--graph", &g, "--query", &q]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "true\n");
    assert!(stderr(&o).is_empty());
}

#[test]
fn exec_prints_rows_for_dual_query() {
    let d = tempfile::tempdir().unwrap();
    let (_, g) = samples(d.path());
    let q = file(d.path(), "q.rq", DUAL);
    let o = kbqa(&["exec", "--graph", &g, "--query", &q]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
    assert!(stdout(&o).contains("wd:Q19546"));
}

#[test]
fn malformed_query_is_a_syntax_error_with_offset() {
    let d = tempfile::tempdir().unwrap();
    let q = file(d.path(), "q.rq", "SELECT ?x WHERE { wd:Q1 wdt:P1 }");
    let o = kbqa(&["parse", "--query", &q]);
    assert_eq!(o.status.code(), Some(2));
    let first = stderr(&o).lines().next().unwrap().to_string();
    assert!(first.starts_with("SyntaxError: "), "{first}");
    assert!(first.contains("byte 31"), "{first}");
    assert!(stdout(&o).is_empty());
}

#[test]
fn parse_prints_canonical_text_and_type() {
    let d = tempfile::tempdir().unwrap();
    let q = file(d.path(), "q.rq", "ask  where {wd:Q234691 wdt:P101 wd:Q207628}");
    let o = kbqa(&["parse", "--query", &q]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some(ASK));
    assert_eq!(lines.next(), Some("type: Boolean"));
}

#[test]
fn invalid_query_is_a_validation_error() {
    let d = tempfile::tempdir().unwrap();
    let q = file(d.path(), "q.rq", "SELECT ?y WHERE { wd:Q1 wdt:P1 ?x }");
    let o = kbqa(&["parse", "--query", &q]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ValidationError: "));
}

#[test]
fn missing_file_is_an_io_error() {
    let o = kbqa(&["stats", "--corpus", "/nonexistent/corpus.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("IoError: "));
}

#[test]
fn unknown_verbs_and_flags_are_rejected() {
    for args in [&["frobnicate"][..], &["stats", "--corpus", "x", "--bogus"][..], &[][..]] {
        let o = kbqa(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).starts_with("UsageError: "), "{args:?}");
        assert!(stdout(&o).is_empty());
    }
}

#[test]
fn eval_with_gold_predictions_is_perfect() {
    let d = tempfile::tempdir().unwrap();
    let (gold, g) = samples(d.path());
    let pred = file(
        d.path(),
        "pred.json",
        &serde_json::json!([{"id": "1", "sparql": ASK}, {"id": "2", "sparql": DUAL}]).to_string(),
    );
    let report = d.path().join("report.json");
    let o = kbqa(&["eval", "--pred", &pred, "--gold", &gold, "--graph", &g, "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("exact_match: 1.0000"));
    assert!(out.contains("answer_f1: 1.0000"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["exact_match"], 1.0);
    assert_eq!(json["records"]["2"]["question_type"], "Dual");
}

#[test]
fn eval_scores_missing_and_wrong_predictions() {
    let d = tempfile::tempdir().unwrap();
    let (gold, g) = samples(d.path());
    let pred = file(
        d.path(),
        "pred.json",
        &serde_json::json!([{"id": "1", "sparql": "ASK WHERE { wd:Q1 wdt:P1 wd:Q2 }"}]).to_string(),
    );
    let o = kbqa(&["eval", "--pred", &pred, "--gold", &gold, "--graph", &g]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("exact_match: 0.0000"));
    let bad = file(d.path(), "bad.json", "{not json");
    let o = kbqa(&["eval", "--pred", &bad, "--gold", &gold, "--graph", &g]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("PredictionError: "));
}

#[test]
fn stats_reports_every_row() {
    let d = tempfile::tempdir().unwrap();
    let (gold, _) = samples(d.path());
    let o = kbqa(&["stats", "--corpus", &gold]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for key in ["# Question: 2", "Avg. # Q len:", "# Vocab:", "# Entities: 3", "# Relations: 4", "# Keyword:"] {
        assert!(out.contains(key), "{key} missing from {out}");
    }
}

#[test]
fn split_is_seeded_and_partitions() {
    let d = tempfile::tempdir().unwrap();
    let run = |out: &str, seed: &str| {
        let o = kbqa(&["split", "--corpus", &toy("corpus.json"), "--seed", seed, "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        stdout(&o)
    };
    let a = d.path().join("a");
    let b = d.path().join("b");
    let summary = run(a.to_str().unwrap(), "7");
    assert_eq!(summary, "train: 16\ndev: 2\ntest: 2\n");
    run(b.to_str().unwrap(), "7");
    let mut ids = Vec::new();
    for part in ["train", "dev", "test"] {
        let ta = std::fs::read_to_string(a.join(format!("{part}.json"))).unwrap();
        assert_eq!(ta, std::fs::read_to_string(b.join(format!("{part}.json"))).unwrap());
        let v: Vec<serde_json::Value> = serde_json::from_str(&ta).unwrap();
        ids.extend(v.iter().map(|r| r["id"].as_str().unwrap().to_string()));
    }
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 20);
    let o = kbqa(&["split", "--corpus", &toy("corpus.json"), "--ratios", "0.5,0.6,0.1", "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("SplitError: "));
}

#[test]
fn gradcheck_passes() {
    let o = kbqa(&["gradcheck"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("max_rel_error: "));
}

#[test]
fn train_predict_eval_round_trip_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let cfg = file(
        d.path(),
        "cfg.json",
        r#"{"model": {"heads": 2, "d_x": 16, "d_z": 16, "n_layers": 1, "d_ff": 16, "d_h": 16, "n_lstm": 1, "d_s": 8,
            "d_keyword": 16, "d_entity": 16, "d_relation": 16, "dropout_attn": 0.1, "dropout_lstm": 0.0},
            "train": {"epochs": 3, "batch_size": 8, "eval_exact_match": false}}"#,
    );
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let ckpt = d.path().join(format!("{run}.ckpt"));
        let log = d.path().join(format!("{run}.log"));
        let o = kbqa(&[
            "train", "--corpus", &toy("corpus.json"), "--config", &cfg, "--checkpoint", ckpt.to_str().unwrap(),
            "--seed", "3", "--report", log.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let log_text = std::fs::read_to_string(&log).unwrap();
        assert_eq!(log_text.lines().count(), 3);
        assert!(log_text.starts_with("epoch=1 lr="));
        assert!(log_text.contains("dev_exact_match=NA"));
        let preds = d.path().join(format!("{run}.pred.json"));
        let o = kbqa(&["predict", "--checkpoint", ckpt.to_str().unwrap(), "--corpus", &toy("corpus.json"), "--report", preds.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(stdout(&o).lines().count(), 20);
        let o = kbqa(&["eval", "--pred", preds.to_str().unwrap(), "--gold", &toy("corpus.json"), "--graph", &toy("graph.nt")]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outputs.push((std::fs::read(&ckpt).unwrap(), log_text, stdout(&o)));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn bad_config_and_checkpoint_are_reported() {
    let d = tempfile::tempdir().unwrap();
    let cfg = file(d.path(), "cfg.json", r#"{"model": {"heads": 3}}"#);
    let ckpt = d.path().join("x.ckpt");
    let o = kbqa(&["train", "--corpus", &toy("corpus.json"), "--config", &cfg, "--checkpoint", ckpt.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ConfigError: "));
    let junk = file(d.path(), "junk.ckpt", "{}");
    let o = kbqa(&["predict", "--checkpoint", &junk, "--corpus", &toy("corpus.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("CheckpointError: "));
}

#[test]
fn nan_learning_rate_diverges_with_exit_3() {
    let d = tempfile::tempdir().unwrap();
    let cfg = file(
        d.path(),
        "cfg.json",
        r#"{"model": {"heads": 2, "d_x": 8, "d_z": 8, "n_layers": 1, "d_ff": 8, "d_h": 8, "n_lstm": 1, "d_s": 4,
            "d_keyword": 8, "d_entity": 8, "d_relation": 8},
            "train": {"epochs": 2, "peak_lr": 1e300, "warmup_epochs": 0, "eval_exact_match": false}}"#,
    );
    let ckpt = d.path().join("x.ckpt");
    let o = kbqa(&["train", "--corpus", &toy("corpus.json"), "--config", &cfg, "--checkpoint", ckpt.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("TrainingDiverged: "));
    assert!(!ckpt.exists());
}
