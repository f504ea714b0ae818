mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::micro_paths;
use kforge::fixture::Fixture;
use kforge::mltest::tau_clopen;
use kforge::cantor::ratio::format_rational;
use kforge::reduction::build_instance;

fn kforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kforge"))
        .args(args)
        .env_remove("KFORGE_MAX_DEPTH")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn build(dir: &Path) -> String {
    let (s, o) = micro_paths();
    let out = dir.join("instance.json");
    let r = kforge(&[
        "build",
        "--family-s",
        s.to_str().unwrap(),
        "--family-omega",
        o.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    assert_eq!(stdout(&r), "c = 2\nt_level = [7, 8, 11, 11, 11, 11]\n");
    out.to_str().unwrap().to_string()
}

#[test]
fn validate_reports() {
    let (s, o) = micro_paths();
    for p in [&s, &o] {
        let r = kforge(&["validate", p.to_str().unwrap()]);
        assert_eq!(r.status.code(), Some(0));
        assert_eq!(stdout(&r), "valid\n");
    }

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(&o).unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, text.replace(r#""x": "1", "stages": [[1, "1/2^2"]]"#, r#""x": "1", "stages": [[1, "1/2^0"]]"#)).unwrap();
    let r = kforge(&["validate", bad.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(stdout(&r), "member p1: not a semimeasure: stage 1, x \"\": superadditivity\n");

    std::fs::write(&bad, text.replace("1/2^2", "3/7")).unwrap();
    let r = kforge(&["validate", bad.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("members[0].entries[1].stages[0]"), "{}", stderr(&r));

    let r = kforge(&["validate", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn build_and_query() {
    let dir = tempfile::tempdir().unwrap();
    let inst = build(dir.path());
    let q = |args: &[&str]| {
        let mut full = args.to_vec();
        full.extend(["--instance", inst.as_str()]);
        kforge(&full)
    };

    let r = q(&["witness", "--x", "0"]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(stdout(&r), "[\"00\"]\n");
    assert_eq!(stdout(&q(&["witness", "--x", "1"])), "[\"01001\"]\n");
    assert_eq!(stdout(&q(&["decode", "--beta", ""])), "\"\"\n");
    assert_eq!(stdout(&q(&["decode", "--beta", "01001"])), "\"1\"\n");
    assert_eq!(stdout(&q(&["apply", "--beta", "0000", "--stage", "0"])), "\"0\"\n");
    assert_eq!(stdout(&q(&["apply", "--beta", "00000", "--stage", "0"])), "\"00\"\n");
    assert_eq!(stdout(&q(&["fail-region"])), "[\"01000\"]\n");
    assert_eq!(stdout(&q(&["fail-region", "--c", "1"])), "[\"000\",\"01000\"]\n");
    assert_eq!(stdout(&q(&["dominance"])), "c = 2\n");
    assert_eq!(stdout(&q(&["test-value", "--beta", "01000"])), "83/2^5\n");
    assert_eq!(stdout(&q(&["preimage", "--x", "1"])), "[\"0100\"]\n");
    // {"0","1"} is canonically Ω, so its preimage is B(ε).
    assert_eq!(stdout(&q(&["preimage", "--set", "[\"0\",\"1\"]"])), "[\"00\",\"010\",\"0110\"]\n");
    assert_eq!(
        stdout(&q(&["preimage", "--set", "[\"00\",\"1\"]"])),
        "[\"00000\",\"00010011\",\"000101\",\"00011\",\"00100\",\"0010100\",\"00101010\",\"0100\"]\n"
    );
    assert_eq!(
        stdout(&q(&["chain", "--a", "0"])),
        "\"\" [\"00\",\"01001\",\"0101\",\"0110\"]\n\"0\" [\"00\"]\n"
    );
    let export: serde_json::Value = serde_json::from_str(&stdout(&q(&["preimage"]))).unwrap();
    assert_eq!(export["t_level"], serde_json::json!([7, 8, 11, 11, 11, 11]));
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&q(&["witness", "--x", "0", "--format", "json"]))).unwrap();
    assert_eq!(json, serde_json::json!(["00"]));

    // tau agrees with the library evaluation.
    let (s, o) = micro_paths();
    let fs = Fixture::load(&s).unwrap().distributions().unwrap();
    let fo = Fixture::load(&o).unwrap().semimeasures().unwrap();
    let lib = build_instance(&fs, &fo).unwrap();
    let set = kforge::cantor::ClopenSet::cylinder("0".parse().unwrap());
    let want = format_rational(&tau_clopen(&lib.test(), &set, lib.s_max()));
    assert_eq!(stdout(&q(&["tau", "--set", "[\"0\"]"])), format!("{want}\n"));
    assert_eq!(want, "3/2^3");
}

#[test]
fn query_errors() {
    let dir = tempfile::tempdir().unwrap();
    let inst = build(dir.path());
    let r = kforge(&["witness", "--instance", &inst, "--x", "11"]);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(stderr(&r), "error: target not in supported cone: \"11\"\n");
    let r = kforge(&["apply", "--instance", &inst, "--beta", "0", "--stage", "9"]);
    assert_eq!(r.status.code(), Some(1));
    let r = kforge(&["witness", "--instance", &inst, "--x", "0", "--depth", "3"]);
    assert_eq!(r.status.code(), Some(1));
    let r = kforge(&["apply", "--instance", &inst, "--beta", "012"]);
    assert_eq!(r.status.code(), Some(2));
    let r = kforge(&["tau", "--instance", &inst, "--set", "[0"]);
    assert_eq!(r.status.code(), Some(2));
    let r = Command::new(env!("CARGO_BIN_EXE_kforge"))
        .args(["witness", "--instance", &inst, "--x", "0"])
        .env("KFORGE_MAX_DEPTH", "8")
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).contains("KFORGE_MAX_DEPTH"));
    let r = kforge(&["dominance", "--instance", dir.path().join("none.json").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(kforge(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(kforge(&["--help"]).status.code(), Some(0));
}

#[test]
fn empty_family_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{ "kind": "distribution", "members": [] }"#).unwrap();
    let (_, o) = micro_paths();
    let r = kforge(&[
        "build",
        "--family-s",
        empty.to_str().unwrap(),
        "--family-omega",
        o.to_str().unwrap(),
        "--out",
        dir.path().join("i.json").to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(stderr(&r), "error: empty family\n");
}

#[test]
fn verify_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let inst = build(dir.path());
    let (s, o) = micro_paths();
    let r = kforge(&[
        "verify",
        "--instance",
        &inst,
        "--family-s",
        s.to_str().unwrap(),
        "--family-omega",
        o.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", stdout(&r));
    assert!(stdout(&r).ends_with("23 checks, 0 failed\n"));

    let text = std::fs::read_to_string(&inst).unwrap();
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, text.replace("\"c\": \"2\"", "\"c\": \"4\"")).unwrap();
    let r = kforge(&["verify", "--instance", tampered.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stdout(&r).contains("FAIL dominance minimal"), "{}", stdout(&r));

    std::fs::write(&tampered, text.replacen("\"00\"", "\"01\"", 1)).unwrap();
    let r = kforge(&["verify", "--instance", tampered.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn mixture_and_round_up_text() {
    let (s, o) = micro_paths();
    let r = kforge(&["mixture", s.to_str().unwrap(), "--stage", "0"]);
    assert_eq!(r.status.code(), Some(0));
    assert!(stdout(&r).starts_with("\"\" 1/2^3\n\"0\" 1/2^4\n\"1\" 1/2^5\n"));
    let r = kforge(&[
        "round-up",
        "--family-s",
        s.to_str().unwrap(),
        "--family-omega",
        o.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(0));
    assert!(stdout(&r).starts_with("\"\" 7/2^4\n\"0\" 1/2^2\n\"1\" 1/2^4\n\"00\" 1/2^3\n"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = build(dir.path());
    let out = dir.path().join("w.txt");
    let r = kforge(&["witness", "--instance", &inst, "--x", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    assert!(r.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(out).unwrap(), "[\"00\"]\n");
}
