use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(rel)
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_restoracle"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn end_to_end_on_yelp() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let spec = fixture("yelp/openapi.yaml");
    let responses = fixture("yelp/responses/getBusinesses");

    for cmd in ["extract", "prompt", "infer"] {
        let o = run(out, &[cmd, "--spec", s(&spec)]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join(format!("manifest.{cmd}.json")).exists());
    }
    let oracles = out.join("getBusinesses.oracles.json");
    let first = std::fs::read(&oracles).unwrap();
    assert_eq!(run(out, &["infer", "--spec", s(&spec)]).status.code(), Some(0));
    assert_eq!(std::fs::read(&oracles).unwrap(), first);

    let o = run(out, &["emit", "--spec", s(&spec), "--oracles", s(&oracles)]);
    assert_eq!(o.status.code(), Some(0));
    let collection = std::fs::read_to_string(out.join("collection.postman.json")).unwrap();
    assert!(collection.contains(r#"pm.expect([\"$\", \"$$\", \"$$$\", \"$$$$\"].includes(price)).to.be.true"#));

    let o = run(out, &["check", "--spec", s(&spec), "--oracles", s(&oracles), "--responses", s(&responses)]);
    assert_eq!(o.status.code(), Some(0));

    let mut doc = json_file(&responses.join("listing2.json"));
    doc["businesses"][0]["coordinates"]["latitude"] = json!(137.4);
    let bad = out.join("bad.json");
    std::fs::write(&bad, doc.to_string()).unwrap();
    let o = run(out, &["check", "--oracles", s(&oracles), "--responses", s(&bad)]);
    assert_eq!(o.status.code(), Some(3));
    let v = json_file(&out.join("violations.json"));
    assert_eq!(v["responses"][0]["violations"].as_array().unwrap().len(), 1);

    let o = run(out, &["--seed", "7", "mutate", "--spec", s(&spec), "--oracles", s(&oracles), "--responses", s(&responses), "--reps", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let fdr = json_file(&out.join("getBusinesses.fdr.json"));
    assert_eq!(fdr["seed"], 7);
    let mutants = out.join("getBusinesses.mutants.jsonl");
    let o = run(out, &["fdr", "--oracles", s(&oracles), "--responses", s(&responses), "--mutants", s(&mutants)]);
    assert_eq!(o.status.code(), Some(0));
    let recount = json_file(&out.join("getBusinesses.fdr.recount.json"));
    assert_eq!(recount["detected"], fdr["detected"]);

    let truth = fixture("yelp/ground_truth/getBusinesses.json");
    let o = run(out, &["score", "--predicted", s(&oracles), "--truth", s(&truth)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("score.txt").exists());
}

#[test]
fn ground_truth_scores_perfectly_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let truth = fixture("yelp/ground_truth/getBusinesses.json");
    let o = run(dir.path(), &["score", "--predicted", s(&truth), "--truth", s(&truth)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let score = json_file(&dir.path().join("score.json"));
    let overall = &score["overall"];
    assert_eq!(overall["f1"], 1.0, "{score}");
}

#[test]
fn usage_and_input_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["bogus"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["extract"]).status.code(), Some(2));
    let broken = dir.path().join("broken.yaml");
    std::fs::write(&broken, "openapi: [").unwrap();
    let o = run(dir.path(), &["extract", "--spec", s(&broken)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
    let o = run(dir.path(), &["extract", "--spec", s(&fixture("yelp/openapi.yaml")), "--operation", "nope"]);
    assert_eq!(o.status.code(), Some(1));
}
