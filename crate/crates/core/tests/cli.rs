use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

struct Run {
    code: i32,
    stdout: String,
    json: Value,
}

fn openmaps(args: &[&str]) -> Run {
    openmaps_env(args, &[])
}

fn openmaps_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_openmaps"));
    for a in args {
        if a.ends_with(".json") && !a.starts_with('/') {
            cmd.arg(fixture(a));
        } else {
            cmd.arg(a);
        }
    }
    cmd.env_remove("OPENMAPS_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).expect("utf-8 output");
    let json = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("not JSON ({e}): {stdout}"));
    Run { code: out.status.code().expect("exit code"), stdout, json }
}

fn verdict(r: &Run) -> &str {
    r.json["verdict"].as_str().expect("verdict string")
}

/// Writes the output to a temp file and feeds it back through `check-witness`.
fn recheck(r: &Run, inputs: &[&str]) -> Run {
    assert!(r.json.get("witness").is_some(), "no witness in {}", r.stdout);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    std::fs::write(&path, &r.stdout).unwrap();
    let mut args = vec!["check-witness", path.to_str().unwrap()];
    args.extend_from_slice(inputs);
    openmaps(&args)
}


fn confirmed(r: &Run, inputs: &[&str]) {
    let c = recheck(r, inputs);
    assert_eq!(c.code, 0, "{}", c.stdout);
    assert_eq!(verdict(&c), "confirmed", "{}", c.stdout);
}

#[test]
fn validate_reports_kinds_and_sizes() {
    let r = openmaps(&["validate", "tu.json"]);
    assert_eq!(r.code, 0);
    assert_eq!(verdict(&r), "valid");
    assert_eq!(r.json["kind"], "lts");
    assert!(r.stdout.contains('5'), "{}", r.stdout);
    let r = openmaps(&["validate", "td.json"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains('4'), "{}", r.stdout);
}

#[test]
fn validate_error_categories() {
    for (file, category, line) in [
        ("bad.json", "schema", 1),
        ("unknown_field.json", "schema", 1),
        ("syntax.json", "syntax", 3),
        ("prob_bad_sum.json", "invariant", 0),
        ("timed_empty_interval.json", "invariant", 0),
        ("hybrid_unknown_var.json", "invariant", 0),
    ] {
        let r = openmaps(&["validate", file]);
        assert_eq!(r.code, 2, "{file}");
        assert_eq!(verdict(&r), "input-error");
        assert_eq!(r.json["error"]["category"], category, "{file}: {}", r.stdout);
        assert!(r.json["error"]["column"].as_u64().unwrap() >= 1);
        if line > 0 {
            assert_eq!(r.json["error"]["line"], line, "{file}");
        }
    }
}

#[test]
fn invariant_errors_name_the_offender() {
    let r = openmaps(&["validate", "prob_bad_sum.json"]);
    let msg = r.json["error"]["message"].as_str().unwrap();
    assert!(msg.contains("(s, a)") && msg.contains("7/6"), "{msg}");
    let r = openmaps(&["validate", "hybrid_unknown_var.json"]);
    assert!(r.json["error"]["message"].as_str().unwrap().contains("`z`"));
}

#[test]
fn missing_file_is_an_input_error() {
    let r = openmaps(&["validate", "/nonexistent/x.json"]);
    assert_eq!(r.code, 2);
    assert_eq!(verdict(&r), "input-error");
}

#[test]
fn usage_errors_exit_2() {
    let out = Command::new(env!("CARGO_BIN_EXE_openmaps")).arg("bisim").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_openmaps")).args(["laws-check", "--instance", "quantum", "--samples", "x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_documents_schemas() {
    let out = Command::new(env!("CARGO_BIN_EXE_openmaps")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for needle in ["format_version", "EXIT CODES", "OPENMAPS_SEED", "check-witness", "samples"] {
        assert!(text.contains(needle), "help lacks {needle}");
    }
}

#[test]
fn tu_td_not_bisimilar_with_checked_strategy() {
    let r = openmaps(&["bisim", "tu.json", "td.json"]);
    assert_eq!(r.code, 0);
    assert_eq!(verdict(&r), "not-bisimilar");
    assert_eq!(r.json["witness"]["kind"], "distinguishing-word");
    confirmed(&r, &["tu.json", "td.json"]);
    // The same strategy is no evidence against T_u vs itself.
    let c = recheck(&r, &["tu.json", "tu.json"]);
    assert_eq!(verdict(&c), "refuted");
    assert_eq!(c.code, 0);
}

#[test]
fn bisimilar_relations_recheck() {
    for (a, b, extra) in [
        ("cycle.json", "loop.json", vec![]),
        ("prob_a.json", "prob_b.json", vec![]),
        ("obs_a.json", "obs_b.json", vec!["--epsilon", "1/2"]),
        ("tree_a.json", "tree_b.json", vec!["--epsilon", "1"]),
    ] {
        let mut args = vec!["bisim", a, b];
        args.extend(extra);
        let r = openmaps(&args);
        assert_eq!((r.code, verdict(&r)), (0, "bisimilar"), "{a} {b}: {}", r.stdout);
        assert_eq!(r.json["witness"]["kind"], "bisimulation-relation");
        confirmed(&r, &[a, b]);
    }
}

#[test]
fn distinguishing_witnesses_recheck() {
    for (a, b, extra) in [
        ("prob_a.json", "prob_c.json", vec![]),
        ("obs_a.json", "obs_b.json", vec!["--epsilon", "1/4"]),
        ("tree_a.json", "tree_b.json", vec!["--epsilon", "1/2"]),
        ("timed_point1.json", "timed_point2.json", vec![]),
        ("timed_upto2.json", "timed_upto3.json", vec![]),
        ("timed_branch_joined.json", "timed_branch_split.json", vec![]),
        ("hybrid_figure.json", "hybrid_shifted.json", vec!["--epsilon", "0.4"]),
        ("hybrid_figure.json", "hybrid_shifted.json", vec!["--epsilon", "0.6", "--words", "switch_words.json"]),
    ] {
        let mut args = vec!["bisim", a, b];
        args.extend(extra);
        let r = openmaps(&args);
        assert_eq!((r.code, verdict(&r)), (0, "not-bisimilar"), "{a} {b}: {}", r.stdout);
        confirmed(&r, &[a, b]);
    }
}

#[test]
fn timed_words_are_accepted_by_one_side_only() {
    let r = openmaps(&["bisim", "timed_upto2.json", "timed_upto3.json"]);
    let word = &r.json["witness"]["word"];
    assert_eq!(word.as_array().unwrap().len(), 1);
    let t: f64 = {
        let s = word[0][1].as_str().unwrap();
        let (n, d) = s.split_once('/').unwrap_or((s, "1"));
        n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap()
    };
    assert!(t > 2.0 && t <= 3.0, "{t}");
    // A branching-only difference carries a strategy but no word.
    let r = openmaps(&["bisim", "timed_branch_joined.json", "timed_branch_split.json"]);
    assert!(r.json["witness"].get("word").is_none(), "{}", r.stdout);
}

#[test]
fn timed_self_comparison_is_inconclusive() {
    let r = openmaps(&["bisim", "timed_cycle.json", "timed_cycle.json"]);
    assert_eq!(r.code, 1);
    assert_eq!(verdict(&r), "no-counterexample-found");
    let r = openmaps(&["bisim", "timed_cycle.json", "timed_cycle.json", "--policy", "grid:1/2,1"]);
    assert_eq!(r.code, 1);
}

#[test]
fn mixed_kinds_are_rejected() {
    let r = openmaps(&["bisim", "tu.json", "prob_a.json"]);
    assert_eq!(r.code, 2);
}

#[test]
fn figure_morphism_is_not_open() {
    let r = openmaps(&["open-check", "figure_map.json", "tu.json", "td.json"]);
    assert_eq!((r.code, verdict(&r)), (0, "not-open"));
    assert_eq!(r.json["graph_bisim"], false);
    assert_eq!(r.json["lifting_oracle"], false);
    confirmed(&r, &["figure_map.json", "tu.json", "td.json"]);
    let r = openmaps(&["open-check", "fold_map.json", "cycle.json", "loop.json"]);
    assert_eq!((r.code, verdict(&r)), (0, "open"));
}

#[test]
fn morphism_checks() {
    let r = openmaps(&["morphism-check", "figure_map.json", "tu.json", "td.json"]);
    assert_eq!(verdict(&r), "morphism");
    let r = openmaps(&["morphism-check", "not_a_map.json", "tu.json", "td.json"]);
    assert_eq!((r.code, verdict(&r)), (0, "not-a-morphism"));
    confirmed(&r, &["not_a_map.json", "tu.json", "td.json"]);
    let r = openmaps(&["morphism-check", "prob_map.json", "prob_a.json", "prob_b.json"]);
    assert_eq!(verdict(&r), "morphism");
    let r = openmaps(&["morphism-check", "obs_map.json", "obs_a.json", "obs_b.json"]);
    assert_eq!(verdict(&r), "morphism");
    assert_eq!(r.json["tightest_bound"], "1/2");
}

#[test]
fn hybrid_morphism_violations_recheck() {
    for (f, a, b) in [
        ("hybrid_identity_map.json", "hybrid_figure.json", "hybrid_shifted.json"),
        ("hybrid_swapped_map.json", "hybrid_figure.json", "hybrid_figure.json"),
    ] {
        let r = openmaps(&["morphism-check", f, a, b, "--words", "switch_words.json"]);
        assert_eq!((r.code, verdict(&r)), (0, "not-a-morphism"), "{}", r.stdout);
        confirmed(&r, &[f, a, b]);
    }
}

#[test]
fn laws_pass_on_samples() {
    for (instance, samples) in [("prob", "samples_prob.json"), ("timed", "samples_timed.json"), ("hybrid", "samples_hybrid.json")] {
        let r = openmaps(&["laws-check", "--instance", instance, "--samples", samples]);
        assert_eq!((r.code, verdict(&r)), (0, "pass"), "{instance}: {}", r.stdout);
        assert!(r.json["checks"].as_u64().unwrap() > 0);
    }
}

#[test]
fn laws_reject_arrows_that_are_not_morphisms() {
    let r = openmaps(&["laws-check", "--instance", "prob", "--samples", "samples_bad_arrow.json"]);
    assert_eq!(r.code, 2);
    assert!(r.json["error"]["message"].as_str().unwrap().contains("not a morphism"));
}

#[test]
fn tampered_law_violation_is_refuted() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    std::fs::write(
        &w,
        r#"{"kind": "law-violation", "instance": "prob", "depth": 2,
            "check": {"law": "unit-iso", "sample": "M[0]", "outcome": {"status": "differs", "detail": "made up"}}}"#,
    )
    .unwrap();
    let r = openmaps(&["check-witness", w.to_str().unwrap(), "samples_prob.json"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert_eq!(verdict(&r), "refuted");
}

#[test]
fn unfold_and_translate() {
    let r = openmaps(&["unfold", "tu.json", "--depth", "3"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["result"]["payload"]["states"].as_array().unwrap().len(), 5);
    let r = openmaps(&["unfold", "timed_cycle.json", "--depth", "2"]);
    assert_eq!(r.code, 0);
    let r = openmaps(&["unfold", "hybrid_figure.json", "--depth", "2", "--words", "switch_words.json"]);
    assert_eq!(r.json["result"]["kind"], "tree");
    let r = openmaps(&["translate", "forget-prob", "prob_a.json"]);
    assert_eq!(r.json["result"]["kind"], "lts");
    let r = openmaps(&["translate", "theta-step", "timed_cycle.json", "--action", "a", "--time", "1/2"]);
    assert_eq!(r.json["successors"], serde_json::json!([["q2", ["1/2", "0"]]]));
    let r = openmaps(&["translate", "k-step", "hybrid_figure.json", "--action", "switch", "--time", "5/2"]);
    assert_eq!(r.json["successors"][0][0], "M2");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["bisim", "tu.json", "td.json"],
        vec!["bisim", "hybrid_figure.json", "hybrid_shifted.json", "--epsilon", "0.6", "--words", "switch_words.json"],
        vec!["morphism-check", "hybrid_identity_map.json", "hybrid_figure.json", "hybrid_shifted.json"],
        vec!["laws-check", "--instance", "hybrid", "--samples", "samples_hybrid.json"],
        vec!["laws-check", "--instance", "timed", "--samples", "samples_timed.json"],
    ];
    for args in cases {
        let a = openmaps_env(&args, &[("OPENMAPS_SEED", "17")]);
        let b = openmaps_env(&args, &[("OPENMAPS_SEED", "17")]);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn bad_seed_is_an_input_error() {
    let r = openmaps_env(&["morphism-check", "figure_map.json", "tu.json", "td.json"], &[("OPENMAPS_SEED", "minus one")]);
    assert_eq!(r.code, 2);
}
