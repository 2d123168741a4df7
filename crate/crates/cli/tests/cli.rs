use std::fs;
use std::process::{Command, Output};

use eps_select::json::to_json;
use eps_select::models;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eps-select"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_counts_queens() {
    let o = run(&[
        "solve",
        "--strategy",
        "ff",
        "--model",
        "nqueens",
        "--n",
        "6",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("solutions: 4"));
}

#[test]
fn mode_flag_matches_subcommand() {
    let a = run(&["solve", "--model", "nqueens", "--n", "6"]);
    let b = run(&["--mode", "solve", "--model", "nqueens", "--n", "6"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let strip = |s: String| {
        s.lines()
            .filter(|l| !l.contains("load balance"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(stdout(&a)), strip(stdout(&b)));
    let c = run(&["solve", "--mode", "pss", "--model", "nqueens", "--n", "6"]);
    assert_eq!(c.status.code(), Some(2));
}

#[test]
fn pss_report_has_a_winner() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&[
        "pss",
        "--model",
        "allinterval",
        "--n",
        "9",
        "--workers",
        "4",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["mode"], "pss");
    assert_eq!(v["seed"], 7);
    assert!(v["winner"].is_string());
    assert!(v["details"]["selection"]["winner"].is_number());
    assert_eq!(v["config"]["workers"], 4);
    let ratios: Vec<f64> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["ratio"].as_f64().unwrap())
        .collect();
    assert_eq!(ratios.iter().copied().fold(f64::INFINITY, f64::min), 1.0);
}

#[test]
fn compare_didactic_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let o = run(&[
        "compare",
        "--fixture",
        "didactic",
        "--alpha",
        "0.05",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let sums: Vec<&str> = text
        .lines()
        .filter(|l| l.trim_start().starts_with("sum"))
        .collect();
    assert_eq!(sums.len(), 2);
    assert_eq!(
        sums[0].split_whitespace().collect::<Vec<_>>(),
        ["sum", "1257", "9576", "1395", "2613"]
    );
    assert_eq!(
        sums[1].split_whitespace().collect::<Vec<_>>(),
        ["sum", "1257", "2484", "1395", "2142"]
    );
    assert!(text.contains("S1 vs S3: W+ 10 n 10"));
    assert!(text.contains("winner: S1"));
    assert!(text.contains("without timeouts 14841"));
    let rows = fs::read_to_string(&csv).unwrap();
    let mut lines = rows.lines();
    assert_eq!(
        lines.next(),
        Some("problem,strategy,total_work,wall_ms,ratio,censored_count,winner_flag")
    );
    assert!(rows.contains("didactic,S1,1257.0,0.0,1.0,0,true"));
    assert!(rows.contains("didactic,portfolio,14841.0"));
}

#[test]
fn compare_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let mut text = String::from("fast,slow\n");
    for j in 0..20 {
        text.push_str(&format!("{},{}\n", 10 + j, 50 + 3 * j));
    }
    fs::write(&path, text).unwrap();
    let o = run(&["compare", "--matrix", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("winner: fast"));
    fs::write(&path, "a,b\n1,0\n").unwrap();
    assert_eq!(
        run(&["compare", "--matrix", path.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn json_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    fs::write(&path, to_json(&models::nqueens(7))).unwrap();
    let a = run(&["solve", "--model", "nqueens", "--n", "7"]);
    let b = run(&["solve", "--json", path.to_str().unwrap()]);
    assert!(stdout(&a).contains("solutions: 40"));
    assert!(stdout(&b).contains("solutions: 40"));
}

#[test]
fn decompose_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.json");
    let o = run(&[
        "decompose",
        "--model",
        "nqueens",
        "--n",
        "6",
        "--target-subproblems",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let n = v["details"]["subproblems"].as_array().unwrap().len();
    assert!(stdout(&o).starts_with(&format!("{n} subproblems")));
}

#[test]
fn baselines_run() {
    let m = run(&[
        "mab",
        "--model",
        "nqueens",
        "--n",
        "7",
        "--strategies",
        "ff,dwdeg",
    ]);
    assert!(m.status.success());
    assert!(stdout(&m).contains("solutions: 40"));
    let p = run(&[
        "portfolio",
        "--model",
        "nqueens",
        "--n",
        "7",
        "--strategies",
        "ff,act",
    ]);
    assert!(p.status.success());
    assert!(stdout(&p).contains("portfolio-x2"));
}

#[test]
fn exit_codes() {
    assert_eq!(
        run(&["solve", "--model", "nope", "--n", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["solve", "--model", "nqueens"]).status.code(), Some(2));
    assert_eq!(run(&["solve"]).status.code(), Some(2));
    assert_eq!(run(&["--bogus-flag"]).status.code(), Some(2));
    assert_eq!(
        run(&["pss", "--model", "nqueens", "--n", "6", "--alpha", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "solve",
            "--model",
            "nqueens",
            "--n",
            "6",
            "--strategy",
            "xx"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(&["compare", "--fixture", "other"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"name":"x","variables":[{"id":"a","domain":[0,1]}],"constraints":[{"kind":"not_equal","x":"a","y":"zz"}]}"#).unwrap();
    let o = run(&["solve", "--json", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("zz"));
}
