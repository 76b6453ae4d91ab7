use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use csgcheck::strategy_file::{export_strategy, import_strategy};

fn models() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn model(name: &str) -> String {
    models().join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csgcheck")).args(args).output().expect("the binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(o: &Output) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(r.headers().unwrap(), vec!["constant", "property", "value", "error"]);
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

const NE_SW: &str = r#"<<c1:c2:c3>>(NE,SW)max=? (R{"u1"}[ C<=1 ] + R{"u2"}[ C<=1 ] + R{"u3"}[ C<=1 ])"#;
const TIME_NE: &str = r#"<<usr1:usr2>>(NE,SW)min=? (R{"time"}[ F "sent1" ] + R{"time"}[ F "sent2" ])"#;
const DEADLINE: &str = r#"<<usr1>> Pmax=? [ F<=D "sent1" ]"#;

#[test]
fn intersection_welfare_sum_is_five() {
    let o = run(&["check", "--model", &model("intersection.csg"), "--prop", NE_SW, "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = &report["results"][0];
    assert!((r["value"].as_f64().unwrap() - 5.0).abs() < 1e-6);
    let values: Vec<f64> = r["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(values.len(), 3);
    assert!(r.get("iterations").is_some() && r.get("residual").is_some());
    assert!(r.get("wall_time").is_none());
    let timed = run(&["check", "--model", &model("intersection.csg"), "--prop", NE_SW, "--format", "json", "--timing"]);
    let report: serde_json::Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(report["results"][0]["wall_time"].as_f64().is_some());
}

#[test]
fn malformed_model_exits_with_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csg");
    std::fs::write(&path, "csg\nplayer p1 m1 endplayer\nmodule m1\n  x : [0..1] init 0;\n  [a] x=0 -> (x'=1;\nendmodule\n").unwrap();
    let o = run(&["check", "--model", path.to_str().unwrap(), "--prop", "true"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("5:"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn missing_files_and_bad_flags_are_input_errors() {
    assert_eq!(run(&["check", "--model", "/nonexistent.csg", "--prop", "true"]).status.code(), Some(2));
    assert_eq!(run(&["check", "--model", &model("aloha2.csg")]).status.code(), Some(2));
    assert_eq!(run(&["check", "--model", &model("aloha2.csg"), "--prop", "true", "--epsilon", "0"]).status.code(), Some(2));
    assert_eq!(run(&["check", "--model", &model("aloha2.csg"), "--prop", "true", "--const", "nope=1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn nonconvergence_is_a_solver_error() {
    let o = run(&["check", "--model", &model("aloha2.csg"), "--prop", r#"<<usr1>> Pmax=? [ F "sent1" ]"#, "--max-iters", "2"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn false_bounded_property_exits_one() {
    let o = run(&["check", "--model", &model("aloha2.csg"), "--prop", r#"<<usr1>> P>=0.99 [ F<=D "sent1" ]"#]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("satisfied: false"));
}

#[test]
fn deadline_query_at_ten_is_a_probability() {
    let o = run(&["check", "--model", &model("aloha2.csg"), "--const", "D=10", "--prop", DEADLINE, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 1);
    let v: f64 = rows[0][2].parse().unwrap();
    assert!((0.0..=1.0).contains(&v));
}

#[test]
fn deadline_sweep_is_nondecreasing() {
    let o = run(&["sweep", "--model", &model("aloha2.csg"), "--prop", DEADLINE, "--sweep", "D=0:10:1"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][0], "D=0");
    assert_eq!(rows[10][0], "D=10");
    let values: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0]), "{values:?}");
}

#[test]
fn empty_sweep_prints_only_the_header() {
    let o = run(&["sweep", "--model", &model("aloha2.csg"), "--prop", DEADLINE, "--sweep", "D=5:1:1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "constant,property,value,error\n");
}

#[test]
fn better_channel_shortens_the_expected_time() {
    let prop = r#"<<usr1>> R{"time"}min=? [ F "sent1" ]"#;
    let o = run(&["sweep", "--model", &model("aloha2.csg"), "--prop", prop, "--sweep", "q=0.5:0.9:0.4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&o);
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["q=0.5", "q=0.9"]);
    let (slow, fast): (f64, f64) = (rows[0][2].parse().unwrap(), rows[1][2].parse().unwrap());
    assert!(fast <= slow, "{fast} > {slow}");
}

#[test]
fn failing_grid_points_are_recorded() {
    let o = run(&["sweep", "--model", &model("aloha2.csg"), "--prop", DEADLINE, "--sweep", "q=0.5:1.5:0.5"]);
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 3);
    assert!(rows[0][3].is_empty() && rows[1][3].is_empty());
    assert!(rows[2][2].is_empty() && !rows[2][3].is_empty(), "{rows:?}");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    for format in ["json", "csv", "text"] {
        let args = ["check", "--model", &model("aloha2.csg"), "--props", &model("aloha2.props"), "--format", format];
        assert_eq!(run(&args).stdout, run(&args).stdout, "{format}");
    }
}

#[test]
fn every_bundled_property_file_runs() {
    for (m, p) in [
        ("matching_pennies.csg", "matching_pennies.props"),
        ("intersection.csg", "intersection.props"),
        ("aloha2.csg", "aloha2.props"),
        ("aloha3.csg", "aloha3.props"),
    ] {
        let o = run(&["check", "--model", &model(m), "--props", &model(p), "--format", "json"]);
        assert_eq!(o.status.code(), Some(0), "{m}: {}", stderr(&o));
        let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        for r in report["results"].as_array().unwrap() {
            assert!(r.get("error").is_none(), "{m}: {r}");
        }
    }
}

fn export(dir: &Path, model_name: &str, prop: &str) -> PathBuf {
    let path = dir.join("strategy.json");
    let o = run(&["check", "--model", &model(model_name), "--prop", prop, "--export-strategy", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    path
}

#[test]
fn exported_equilibrium_is_certified() {
    let dir = tempfile::tempdir().unwrap();
    let path = export(dir.path(), "aloha2.csg", TIME_NE);
    let args = ["eval", "--model", &model("aloha2.csg"), "--prop", TIME_NE, "--import-strategy", path.to_str().unwrap(), "--runs", "2000"];
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("Verdict: ε-equilibrium (ε ≤ 1e-4)"), "{}", stdout(&o));
    // simulation is split by run, so the thread count changes nothing
    let one = run(&[&args[..], &["--threads", "1", "--format", "json"]].concat());
    let four = run(&[&args[..], &["--threads", "4", "--format", "json"]].concat());
    assert_eq!(one.stdout, four.stdout);
    let report: serde_json::Value = serde_json::from_slice(&one.stdout).unwrap();
    assert_eq!(report["certified"], true);
    for goal in report["goals"].as_array().unwrap() {
        let exact = goal["exact"].as_f64().unwrap();
        assert!((exact - 2.0586853).abs() < 1e-5, "{exact}");
        assert!(goal["gain"].as_f64().unwrap() >= -1e-9);
    }
}

#[test]
fn strategy_files_round_trip_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = export(dir.path(), "aloha2.csg", TIME_NE);
    let text = std::fs::read_to_string(&path).unwrap();
    let game = csgcheck::cli::load_model(&models().join("aloha2.csg"), &[]).unwrap();
    let strategy = import_strategy(&text, &game).unwrap();
    assert_eq!(export_strategy(&game, &strategy).unwrap(), text);
}

#[test]
fn tampered_strategy_is_violated() {
    let dir = tempfile::tempdir().unwrap();
    let path = export(dir.path(), "intersection.csg", NE_SW);
    let mut file: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    // car 1 proceeds in the welfare-optimal profile; move its mass to yielding
    file["entries"][0]["rows"][0] = serde_json::json!([0.0, 1.0]);
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_string(&file).unwrap()).unwrap();
    let o = run(&["eval", "--model", &model("intersection.csg"), "--prop", NE_SW, "--import-strategy", tampered.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["certified"], false);
    assert!(report["violation"]["gain"].as_f64().unwrap() > 0.0);
    assert_eq!(report["violation"]["coalition"], 1);
}

#[test]
fn eval_rejects_zero_runs_and_mismatched_models() {
    let dir = tempfile::tempdir().unwrap();
    let path = export(dir.path(), "intersection.csg", NE_SW);
    let p = path.to_str().unwrap();
    let zero = run(&["eval", "--model", &model("intersection.csg"), "--prop", NE_SW, "--import-strategy", p, "--runs", "0"]);
    assert_eq!(zero.status.code(), Some(2));
    let pennies = r#"<<p1:p2>>(NE,SW)max=? (R{"u1"}[ C<=1 ] + R{"u2"}[ C<=1 ])"#;
    let other = run(&["eval", "--model", &model("matching_pennies.csg"), "--prop", pennies, "--import-strategy", p]);
    assert_eq!(other.status.code(), Some(2));
}

#[test]
fn exported_games_check_like_their_models() {
    let dir = tempfile::tempdir().unwrap();
    let game = dir.path().join("aloha2.json");
    let o = run(&["export", "--model", &model("aloha2.csg"), "--output", game.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let from_model = run(&["check", "--model", &model("aloha2.csg"), "--props", &model("aloha2.props"), "--format", "csv"]);
    let from_json = run(&["check", "--model", game.to_str().unwrap(), "--props", &model("aloha2.props"), "--format", "csv"]);
    assert_eq!(from_json.status.code(), Some(0), "{}", stderr(&from_json));
    let (a, b) = (csv_rows(&from_model), csv_rows(&from_json));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x[1], y[1]);
        let (u, v): (f64, f64) = (x[2].parse().unwrap(), y[2].parse().unwrap());
        assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0), "{x:?} {y:?}");
    }
}

#[test]
fn nfg_fair_correlated_equilibrium() {
    let o = run(&["nfg", "--game", &model("intersection.nfg"), "--kind", "ce", "--criterion", "sf", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["values"].as_array().unwrap().iter().all(|v| v.as_f64().unwrap().abs() < 1e-6));
    assert_eq!(report["joint"].as_array().unwrap().len(), 2);
}
