use std::fs;
use std::path::PathBuf;

use resplan::cli::run;
use resplan::scenario_file::{case_study, load_scenario, to_json};

struct Output {
    code: u8,
    stdout: String,
    stderr: String,
}

fn resplan(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("resplan").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("resplan-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn exit_codes() {
    assert_eq!(resplan(&["--help"]).code, 0);
    assert_eq!(resplan(&["--version"]).code, 0);
    assert_eq!(resplan(&[]).code, 2);
    assert_eq!(resplan(&["solve", "--bogus"]).code, 2);
    assert_eq!(resplan(&["solve", "--order", "sideways"]).code, 2);
    assert_eq!(resplan(&["act", "--state", "1"]).code, 2);
    let missing = resplan(&["solve", "--scenario", "/no/such/scenario.json"]);
    assert_eq!(missing.code, 1);
    assert!(missing.stderr.starts_with("error: cannot read"), "{}", missing.stderr);
    assert_eq!(resplan(&["exact", "--scenario", "builtin:case-study"]).code, 1);
}

#[test]
fn solve_csv_lists_every_weight() {
    let o = resplan(&["solve", "--format", "csv"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.starts_with("node,name,layer,weight\n"));
    let rows = csv_rows(&o.stdout);
    assert_eq!(rows.len(), 20);
    assert_eq!(rows[6][1], "WTC");
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() > 0.0));
    assert!(o.stderr.contains("# scenario=builtin:case-study"));
    assert!(o.stderr.contains("# backend=clarabel"));
}

#[test]
fn backends_agree_on_the_objective() {
    let objective = |backend: &str| {
        let o = resplan(&["solve", "--scenario", "builtin:demo:6", "--backend", backend, "--format", "json"]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
        v["summary"]["alp_objective"].as_f64().unwrap()
    };
    let dense = objective("dense");
    for backend in ["minilp", "clarabel", "auto"] {
        assert!((objective(backend) - dense).abs() < 1e-5 * dense.abs(), "{backend}");
    }
}

#[test]
fn dense_simplex_holds_up_past_a_thousand_rows() {
    let objective = |backend: &str| {
        let o = resplan(&["solve", "--scenario", "builtin:demo:10", "--backend", backend, "--format", "json"]);
        assert_eq!(o.code, 0, "{backend}: {}", o.stderr);
        let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
        assert!(v["summary"]["constraints"].as_u64().unwrap() > 1000);
        v["summary"]["alp_objective"].as_f64().unwrap()
    };
    let dense = objective("dense");
    assert!((objective("clarabel") - dense).abs() < 1e-5 * dense.abs());
}

#[test]
fn json_echoes_configuration() {
    let o = resplan(&["compare", "--reps", "4", "--horizon", "30", "--format", "json"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["config"]["command"], "compare");
    assert_eq!(v["config"]["reps"], 4);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert_eq!(v["rows"][0]["policy"], "optimal");
}

#[test]
fn lp_dump_is_written() {
    let path = scratch("demo6.lp");
    let o = resplan(&["solve", "--scenario", "builtin:demo:6", "--dump-lp", path.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("Minimize\n obj:"));
    assert!(text.contains("w_const"));
    assert!(text.trim_end().ends_with("End"));
    assert!(!text.contains("-0\n"));
    let rows = text.lines().filter(|l| l.starts_with(" c")).count();
    assert!(text.contains(&format!("\\ {rows} constraints")));
}

#[test]
fn export_round_trips() {
    let path = scratch("case.json");
    let o = resplan(&["export-scenario", "--output", path.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(load_scenario(path.to_str().unwrap()).unwrap(), case_study());

    let mut sc = case_study();
    sc.gamma = 0.8;
    let custom = scratch("custom.json");
    fs::write(&custom, to_json(&sc, None)).unwrap();
    let o = resplan(&["solve", "--scenario", custom.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stderr.contains("# gamma=0.8"));
}

#[test]
fn act_agrees_with_centralized_search() {
    let o = resplan(&["act", "--state", "00000000001111111111", "--check-centralized", "--format", "csv"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let rows = csv_rows(&o.stdout);
    assert_eq!(rows.len(), 20);
    assert!(rows[..10].iter().all(|r| r[2] == "0" && r[3] == "1"));
}

#[test]
fn budget_limits_actions() {
    let o = resplan(&["act", "--state", "00000000001111111111", "--budget", "3", "--format", "csv"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(csv_rows(&o.stdout).iter().filter(|r| r[3] == "1").count(), 3);
}

#[test]
fn thresholds_cover_every_node() {
    let o = resplan(&["thresholds", "--format", "csv"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(csv_rows(&o.stdout).len(), 20);
}

#[test]
fn exact_prints_every_state() {
    let o = resplan(&["exact", "--scenario", "builtin:demo:6", "--format", "csv"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(csv_rows(&o.stdout).len(), 64);
    let lp = resplan(&["exact", "--scenario", "builtin:demo:6", "--method", "lp", "--format", "csv"]);
    assert_eq!(lp.code, 0, "{}", lp.stderr);
    for (a, b) in csv_rows(&o.stdout).iter().zip(csv_rows(&lp.stdout)) {
        let (va, vb): (f64, f64) = (a[1].parse().unwrap(), b[1].parse().unwrap());
        assert!((va - vb).abs() < 1e-6, "{va} vs {vb}");
    }
}

#[test]
fn output_file_matches_stdout() {
    let path = scratch("weights.csv");
    let to_file = resplan(&["solve", "--format", "csv", "--output", path.to_str().unwrap()]);
    assert_eq!(to_file.code, 0);
    let direct = resplan(&["solve", "--format", "csv"]);
    assert_eq!(fs::read_to_string(&path).unwrap(), direct.stdout);
}

#[test]
fn simulate_seeds_differ() {
    let a = resplan(&[
        "simulate",
        "--policy",
        "randomized",
        "--reps",
        "5",
        "--horizon",
        "30",
        "--seed",
        "1",
        "--format",
        "csv",
    ]);
    let b = resplan(&[
        "simulate",
        "--policy",
        "randomized",
        "--reps",
        "5",
        "--horizon",
        "30",
        "--seed",
        "2",
        "--format",
        "csv",
    ]);
    assert_eq!(a.code, 0);
    assert_eq!(csv_rows(&a.stdout).len(), 31);
    assert_ne!(a.stdout, b.stdout);
}
