use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const MARKOV: &str = r#"{"P": [[[2,3],[1,3]],[[1,1],[0,1]]]}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shiftorbit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn markov_n4_paper_mode() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("markov.json"), MARKOV).unwrap();
    let out = run(
        dir.path(),
        &[
            "approximate",
            "--markov",
            "markov.json",
            "--n",
            "2",
            "--N",
            "4",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("o/report.json"));
    assert_eq!(report["period"], 5);
    assert_eq!(report["r"], 4);
    assert_eq!(report["max_error"], serde_json::json!([1, 10]));
    assert_eq!(report["bound"], serde_json::json!([1, 3]));
    let beta = json(&dir.path().join("o/beta.json"));
    assert_eq!(beta["indices"].as_array().unwrap().len(), 5);
}

#[test]
fn uniform_cyclic_mode_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "approximate",
            "--uniform",
            "--m",
            "2",
            "--n",
            "2",
            "--N",
            "4",
            "--mode",
            "cyclic",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&out), 0);
    let report = json(&dir.path().join("o/report.json"));
    assert_eq!(report["max_error"], serde_json::json!([0, 1]));
    assert_eq!(report["period"], 4);
}

#[test]
fn unbalanced_trajectory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.txt"), "0.1\n0.6\n0.1\n0.6\n0.1\n0.7\n").unwrap();
    let args = [
        "approximate",
        "--trajectory",
        "t.txt",
        "--m",
        "2",
        "--n",
        "2",
        "--N",
        "8",
    ];
    let out = run(dir.path(), &args);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("shift-balanced"));

    let mut repaired = args.to_vec();
    repaired.push("--repair");
    assert_eq!(code(&run(dir.path(), &repaired)), 0);
}

#[test]
fn ingest_csv_column() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("t.csv"),
        "time,x\n0,0.1\n1,0.6\n2,0.1\n3,0.6\n4,0.1\n",
    )
    .unwrap();
    let out = run(
        dir.path(),
        &[
            "ingest",
            "--trajectory",
            "t.csv",
            "--column",
            "x",
            "--m",
            "2",
            "--n",
            "2",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let measure = json(&dir.path().join("o/measure.json"));
    let weights = measure["weights"].as_array().unwrap();
    let half: Vec<_> = weights
        .iter()
        .filter(|w| w["num"] == 1 && w["den"] == 2)
        .collect();
    assert_eq!(half.len(), 2);
    let balance = json(&dir.path().join("o/balance.json"));
    assert_eq!(balance["windows"], 4);
}

#[test]
fn splice_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for out_dir in ["a", "b"] {
        let out = run(
            dir.path(),
            &[
                "splice",
                "--uniform",
                "--m",
                "2",
                "--n",
                "2",
                "--levels",
                "4,16,64",
                "--out",
                out_dir,
            ],
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["plan.json", "point.json", "bounds.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
    let plan = json(&dir.path().join("a/plan.json"));
    assert_eq!(plan["levels"], 3);
    let t: Vec<u64> = serde_json::from_value(plan["T"].clone()).unwrap();
    let c: Vec<u64> = serde_json::from_value(plan["c"].clone()).unwrap();
    let g: Vec<u64> = serde_json::from_value(plan["g"].clone()).unwrap();
    for i in 0..3 {
        assert_eq!((t[i + 1] - t[i]) % g[i], 0);
        assert_eq!(g[i] % c[i], 0);
    }
}

#[test]
fn splice_depth_count_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "splice",
            "--uniform",
            "--m",
            "2",
            "--levels",
            "4,16",
            "--depths",
            "1,2,3",
        ],
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("arity"));
}

#[test]
fn single_level_splice_is_the_beta() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "splice",
            "--uniform",
            "--m",
            "2",
            "--n",
            "1",
            "--levels",
            "4",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&out), 0);
    let plan = json(&dir.path().join("o/plan.json"));
    assert_eq!(plan["levels"], 1);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    run(
        p,
        &[
            "approximate",
            "--uniform",
            "--m",
            "2",
            "--n",
            "2",
            "--N",
            "8",
            "--mode",
            "cyclic",
            "--out",
            "b",
        ],
    );
    let own = run(
        p,
        &[
            "verify",
            "--point",
            "b/beta.json",
            "--uniform",
            "--m",
            "2",
            "--n",
            "2",
            "--observable",
            "word:0,1",
            "--observable",
            "symbol:1",
            "--epsilon",
            "1/100",
            "--out",
            "v1",
        ],
    );
    assert_eq!(code(&own), 0, "{}", String::from_utf8_lossy(&own.stderr));
    let summary = json(&p.join("v1/summary.json"));
    for obs in summary["observables"].as_array().unwrap() {
        assert_eq!(obs["max_err_after_burn_in"].as_f64(), Some(0.0));
    }

    fs::write(p.join("const.json"), r#"{"m": 2, "indices": [0]}"#).unwrap();
    let constant = run(
        p,
        &[
            "verify",
            "--point",
            "const.json",
            "--uniform",
            "--m",
            "2",
            "--epsilon",
            "0.01",
            "--horizon",
            "50",
            "--out",
            "v2",
        ],
    );
    assert_eq!(code(&constant), 1);

    run(
        p,
        &[
            "splice",
            "--uniform",
            "--m",
            "2",
            "--n",
            "1",
            "--levels",
            "4,16,64",
            "--out",
            "s",
        ],
    );
    let uncertified = run(
        p,
        &[
            "verify",
            "--point",
            "s/point.json",
            "--uniform",
            "--m",
            "2",
            "--epsilon",
            "0.01",
            "--out",
            "v3",
        ],
    );
    assert_eq!(code(&uncertified), 2);
    let summary = json(&p.join("v3/summary.json"));
    assert_eq!(summary["status"], "inconclusive");
    let levels = fs::read_to_string(p.join("v3/levels.csv")).unwrap();
    assert!(levels.starts_with("observable,level,T_n,A_Tn,t_n,abs_err,b_n,pass"));
    assert!(!levels.contains(",false"));
    let report = fs::read_to_string(p.join("v3/report.csv")).unwrap();
    assert!(report.starts_with("observable,n,A_n,target,abs_err,bound,pass"));
}

#[test]
fn cyclic_demo_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "cyclic-demo",
            "--k",
            "2000",
            "--epsilon",
            "5/1024",
            "--seed",
            "9",
            "--stopping-csv",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rec = json(&dir.path().join("o/cyclic.json"));
    for key in ["k", "epsilon", "r", "T_J", "J", "lhs", "rhs", "pass"] {
        assert!(rec.get(key).is_some(), "missing {key}");
    }
    assert_eq!(rec["epsilon"], serde_json::json!([5, 1024]));
    assert_eq!(rec["pass"], true);
    let csv = fs::read_to_string(dir.path().join("o/stopping.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2001);

    let bad = run(
        dir.path(),
        &["cyclic-demo", "--k", "100", "--epsilon", "0.001"],
    );
    assert_eq!(code(&bad), 3);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"uniform": true, "m": 2, "n": 2, "N": 8, "mode": "cyclic", "out": "cfg"}"#,
    )
    .unwrap();
    let out = run(
        dir.path(),
        &["approximate", "--config", "run.json", "--N", "4"],
    );
    assert_eq!(code(&out), 0);
    let report = json(&dir.path().join("cfg/report.json"));
    assert_eq!(report["N"], 4);
    assert_eq!(report["mode"], "cyclic");
}

#[test]
fn floats_carry_seventeen_digits() {
    let dir = tempfile::tempdir().unwrap();
    run(
        dir.path(),
        &[
            "splice",
            "--uniform",
            "--m",
            "2",
            "--n",
            "1",
            "--levels",
            "4,16",
            "--out",
            "o",
        ],
    );
    let bounds = fs::read_to_string(dir.path().join("o/bounds.csv")).unwrap();
    let row = bounds.lines().nth(1).unwrap();
    let b_n = row.split(',').nth(3).unwrap();
    let mantissa = b_n.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{b_n}");
}

#[test]
fn bad_usage_exits_with_error_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["nonsense"])), 3);
    let both = run(
        dir.path(),
        &[
            "approximate",
            "--uniform",
            "--m",
            "2",
            "--n",
            "2",
            "--N",
            "4",
            "--delta",
            "1/10",
        ],
    );
    assert_eq!(code(&both), 3);
    let none = run(
        dir.path(),
        &["approximate", "--m", "2", "--n", "2", "--N", "4"],
    );
    assert_eq!(code(&none), 3);
}
