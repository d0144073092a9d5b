use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streamcore")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_reports_forms() {
    let o = run(&["check", s(&corpus("sah1.sc")), s(&corpus("sah2.sc")), s(&corpus("sah3.sc"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("fun sah: form 1, shape 1 / 2 -> 1 / 1"), "{out}");
    assert!(out.contains("form 2"));
    assert!(out.contains("form 3"));
}

#[test]
fn check_json_records_carry_schema() {
    let o = run(&["--format", "json", "check", s(&corpus("sah1.sc"))]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["schema"], "streamcore/1");
    }
    assert!(stdout(&o).contains("\"form\":\"1\""));
}

#[test]
fn duplicate_binder_is_a_linearity_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "dup.sc", "fun f = [x, x -> y where y := x]\n");
    let o = run(&["check", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("error[Linearity]"), "{err}");
    assert!(err.contains("dup.sc:1:"), "{err}");
}

#[test]
fn empty_file_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "empty.sc", "");
    let o = run(&["check", s(&p)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn parse_error_has_position() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "bad.sc", "fun f = [x -> y where y := ]\n");
    let o = run(&["check", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.sc:1:"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["check"]).status.code(), Some(2));
    assert_eq!(run(&["normalize", "--to", "4", s(&corpus("sah1.sc"))]).status.code(), Some(2));
    assert_eq!(run(&["run", s(&corpus("sah1.sc"))]).status.code(), Some(2));
}

#[test]
fn version_flag() {
    let o = run(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("streamcore "));
}

#[test]
fn third_form_output_rechecks_as_third_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sah3.sc");
    let o = run(&["normalize", "--to=3", s(&corpus("sah1.sc")), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["check", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("form 3"), "{}", stdout(&o));
}

#[test]
fn second_form_output_rechecks_as_second_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("arma2.sc");
    let o = run(&["normalize", s(&corpus("arma.sc")), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["check", s(&out)]);
    assert!(stdout(&o).contains("form 2"), "{}", stdout(&o));
}

#[test]
fn run_sample_and_hold() {
    let o = run(&["run", s(&corpus("sah1.sc")), "--steps", "4", "--input", "expr:x=cycle(1,2,3,4); t=cycle(S,H,H,S)"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ys: Vec<String> = stdout(&o).lines().skip(1).map(|l| l.rsplit(',').next().unwrap().to_string()).collect();
    assert_eq!(ys, ["1", "1", "1", "4"]);
}

#[test]
fn run_reads_csv_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "in.csv", "t,x\nS(),1\nH(),2\nH(),3\nS(),4\n");
    let o = run(&["run", s(&corpus("sah1.sc")), "--input", &format!("csv:{}", s(&p)), "--out", "jsonl"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ys: Vec<f64> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["y"].as_f64().unwrap())
        .collect();
    assert_eq!(ys, [1.0, 1.0, 1.0, 4.0]);
}

#[test]
fn run_output_is_reproducible() {
    let arma = corpus("arma.sc");
    let args = ["run", s(&arma), "--steps", "50", "--input", "expr:x=uniform(-1,1)", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let mut unrolled = args.to_vec();
    unrolled.extend(["--unroll", "4"]);
    assert_eq!(run(&unrolled).stdout, a.stdout);
}

#[test]
fn run_traps_on_undefined_output() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "partial.sc", "cons S/0\ncons H/0\nfun f = [x, t -> y where y := case t of { S() -> x }]\n");
    let o = run(&["run", s(&p), "--steps", "2", "--input", "expr:x=const(1); t=cycle(S,H)"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("UndefinedOutputTrap"), "{}", stderr(&o));
}

#[test]
fn graph_is_dot() {
    let o = run(&["graph", s(&corpus("sah1.sc"))]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("digraph \"sah\" {"));
    assert!(out.contains("style=dashed"));
    assert!(out.trim_end().ends_with('}'));
}

#[test]
fn relations_certify_sample_and_hold() {
    let o = run(&["relations", s(&corpus("sah1.sc")), "--numbers", "0,1,2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("internal: 48 row(s), left-total: yes"), "{out}");
    assert!(out.contains("deterministic: certified"), "{out}");
}

#[test]
fn relations_report_missing_case_witness() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "noh.sc", "cons S/0\ncons H/0\nfun f = [x, t -> y where y := case t of { S() -> x }]\n");
    let o = run(&["relations", s(&p), "--numbers", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("t=H()"), "{}", stdout(&o));
    let o = run(&["analyze", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("missing: {t=H()}"), "{}", stdout(&o));
}

#[test]
fn third_form_relations_match_first_form() {
    let rows = |file: &str| {
        let o = run(&["--format", "json", "relations", s(&corpus(file)), "--numbers", "0,1"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        stdout(&o)
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
            .filter(|v| v["kind"] == "row")
            .map(|v| (v["relation"].to_string(), v["s"].to_string(), v["x"].to_string(), v["y"].to_string()))
            .collect::<Vec<_>>()
    };
    assert_eq!(rows("sah1.sc"), rows("sah3.sc"));
}

#[test]
fn analyze_envelope_only_flags_ill_typed_valuations() {
    let o = run(&["--format", "json", "analyze", s(&corpus("adsr.sc"))]);
    assert_eq!(o.status.code(), Some(1));
    let phases = ["Attack", "Decay", "Sustain", "Release"];
    let gates = ["True", "False"];
    let mut cases = 0;
    for line in stdout(&o).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if v["kind"] != "case" {
            continue;
        }
        cases += 1;
        assert_eq!(v["overlapping"].as_array().unwrap().len(), 0);
        for m in v["missing"].as_array().unwrap() {
            let ill_typed = m.as_object().unwrap().iter().any(|(k, x)| {
                let Some(c) = x["cons"].as_str() else { return false };
                if k == "gate" {
                    !gates.contains(&c)
                } else {
                    !phases.contains(&c)
                }
            });
            assert!(ill_typed, "{m}");
        }
    }
    assert_eq!(cases, 2);
}

#[test]
fn analyze_clean_program() {
    let o = run(&["analyze", s(&corpus("sah1.sc"))]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
}
