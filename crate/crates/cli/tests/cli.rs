use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vtest(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vtest"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = vtest(args, dir);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str], dir: &Path) -> Value {
    serde_json::from_str(&ok(args, dir)).unwrap()
}

fn code(args: &[&str], dir: &Path) -> i32 {
    vtest(args, dir).status.code().unwrap()
}

fn simulate(dir: &Path, name: &str, null: &str, n: usize, p: usize, seed: u64) {
    ok(
        &[
            "simulate",
            "--null",
            null,
            "--n",
            &n.to_string(),
            "--p",
            &p.to_string(),
            "--seed",
            &seed.to_string(),
            "--out",
            name,
        ],
        dir,
    );
}

fn table(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

#[test]
fn auto_uses_chi_square_with_many_features() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "x.tsv", "varying", 30, 60, 1);
    let r = json(
        &[
            "test", "--input", "x.tsv", "--method", "auto", "--seed", "7",
        ],
        dir.path(),
    );
    assert_eq!(r["result"]["method"], "chi_square");
    assert!(r["mixture"]["a1"].as_f64().unwrap() > 0.0);
    simulate(dir.path(), "y.tsv", "varying", 30, 20, 1);
    let r = json(&["test", "--input", "y.tsv", "--seed", "7"], dir.path());
    assert_eq!(r["result"]["method"], "permutation");
    assert_eq!(r["result"]["resamples"], 2000);
}

#[test]
fn report_fields_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "x.tsv", "low", 25, 30, 3);
    let r = json(
        &[
            "test", "--input", "x.tsv", "--method", "perm", "--R", "500", "--seed", "11",
            "--pvalue", "unbiased",
        ],
        dir.path(),
    );
    assert_eq!(r["schema"], "vtest.run_report");
    assert_eq!(r["input"]["n"], 25);
    assert_eq!(r["input"]["p"], 30);
    assert_eq!(r["spec"]["p_value_type"], "unbiased");
    assert_eq!(r["spec"]["seed"], 11);
    let argv: Vec<&str> = r["command_line"].as_array().unwrap()[1..]
        .iter()
        .map(|a| a.as_str().unwrap())
        .collect();
    let again = json(&argv, dir.path());
    assert_eq!(again["result"]["statistic"], r["result"]["statistic"]);
    assert_eq!(again["result"]["p_value"], r["result"]["p_value"]);
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "x.tsv", "high", 20, 12, 2);
    assert!(ok(
        &["test", "--input", "x.tsv", "--R", "100", "--out", "r.json"],
        dir.path()
    )
    .is_empty());
    let r: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["result"]["method"], "permutation");
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "x.tsv", "varying", 20, 15, 4);
    let one = json(
        &[
            "--threads",
            "1",
            "test",
            "--input",
            "x.tsv",
            "--R",
            "400",
            "--seed",
            "2",
        ],
        dir.path(),
    );
    let four = json(
        &[
            "--threads",
            "4",
            "test",
            "--input",
            "x.tsv",
            "--R",
            "400",
            "--seed",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(one["result"]["p_value"], four["result"]["p_value"]);
}

#[test]
fn resample_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "x.tsv", "varying", 20, 15, 4);
    let out = Command::new(env!("CARGO_BIN_EXE_vtest"))
        .args(["test", "--input", "x.tsv"])
        .env("VTEST_R", "123")
        .current_dir(dir.path())
        .output()
        .unwrap();
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["result"]["resamples"], 123);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, "x.tsv", "varying", 20, 15, 4);
    ok(
        &[
            "distances",
            "--input",
            "x.tsv",
            "--singleton-blocks",
            "--metric",
            "hamming",
            "--out-dir",
            "cache",
        ],
        d,
    );
    assert_eq!(
        code(
            &[
                "test",
                "--distances",
                "cache/manifest.txt",
                "--method",
                "boot"
            ],
            d
        ),
        2
    );
    assert_eq!(
        code(
            &[
                "test",
                "--input",
                "x.tsv",
                "--distances",
                "cache/manifest.txt"
            ],
            d
        ),
        2
    );
    assert_eq!(code(&["test"], d), 2);
    assert_eq!(code(&["test", "--input", "missing.tsv"], d), 2);
    assert_eq!(code(&["test", "--input", "x.tsv", "--R", "0"], d), 2);
    assert_eq!(code(&["--threads", "0", "test", "--input", "x.tsv"], d), 2);
    assert_eq!(
        code(&["test", "--input", "x.tsv", "--metric", "cosine"], d),
        2
    );
    std::fs::write(
        d.join("bad.cfg"),
        "kind = varying_freq\nn = 10\np = 5\nwobble = 3\n",
    )
    .unwrap();
    let out = vtest(&["simulate", "--null", "bad.cfg", "--out", "z.tsv"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wobble"));
}

#[test]
fn monomorphic_tw_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..10).map(|_| "1\t1\t1\t0\n").collect();
    std::fs::write(dir.path().join("m.tsv"), rows).unwrap();
    let out = vtest(&["tw", "--input", "m.tsv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn tw_report_on_planted_structure() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..40)
        .map(|i| {
            let row: Vec<&str> = (0..60)
                .map(|j| {
                    if (i < 20) == ((i * 7 + j * 13) % 10 < 8) {
                        "1"
                    } else {
                        "0"
                    }
                })
                .collect();
            row.join("\t") + "\n"
        })
        .collect();
    std::fs::write(dir.path().join("planted.tsv"), rows).unwrap();
    let r = json(&["tw", "--input", "planted.tsv"], dir.path());
    assert_eq!(r["result"]["method"], "tracy_widom");
    assert!(r["result"]["p_value"].as_f64().unwrap() < 1e-3);
    assert!(r["tracy_widom"]["lambda_max"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("s.cfg"),
        "sizes = 10,15\nepsilon = 0.2\np = 40\nseed = 5\n",
    )
    .unwrap();
    ok(
        &[
            "simulate",
            "--scenario",
            "s.cfg",
            "--out",
            "a.tsv",
            "--labels",
            "a.lab",
        ],
        d,
    );
    ok(&["simulate", "--scenario", "s.cfg", "--out", "b.tsv"], d);
    ok(
        &[
            "simulate",
            "--scenario",
            "s.cfg",
            "--replicate",
            "1",
            "--out",
            "c.tsv",
        ],
        d,
    );
    let read = |f: &str| std::fs::read_to_string(d.join(f)).unwrap();
    assert_eq!(read("a.tsv"), read("b.tsv"));
    assert_ne!(read("a.tsv"), read("c.tsv"));
    assert_eq!(
        read("a.tsv")
            .lines()
            .filter(|l| !l.starts_with('#'))
            .count(),
        25
    );
    assert_eq!(read("a.lab").lines().count(), 25);
}

#[test]
fn rate_and_roc_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let fpr = table(&ok(
        &[
            "fpr", "--null", "low", "--n", "30", "--p", "60", "--test", "v-chisq", "--alpha",
            "0.05,0.1", "--reps", "40",
        ],
        d,
    ));
    assert_eq!(
        fpr[0],
        ["config", "test", "alpha", "rate", "ci_lo", "ci_hi", "reps"]
    );
    assert_eq!(fpr.len(), 3);
    for row in &fpr[1..] {
        let v: Vec<f64> = row[2..].iter().map(|x| x.parse().unwrap()).collect();
        assert!(v[2] <= v[1] && v[1] <= v[3] && v[4] == 40.0);
    }
    std::fs::write(
        d.join("s.cfg"),
        "sizes = 15,15\nepsilon = 0.2\np = 200\nseed = 5\n",
    )
    .unwrap();
    let power = table(&ok(
        &[
            "power",
            "--scenario",
            "s.cfg",
            "--test",
            "v-normal",
            "--reps",
            "20",
        ],
        d,
    ));
    assert!(power[1][3].parse::<f64>().unwrap() > 0.8);
    let roc = table(&ok(
        &[
            "roc", "--null", "varying", "--alt", "s.cfg", "--test", "v", "--reps", "20",
            "--points", "pts.tsv",
        ],
        d,
    ));
    assert_eq!(roc[0], ["null", "alt", "test", "reps", "auroc", "null_sd"]);
    assert!(roc[1][4].parse::<f64>().unwrap() > 0.9);
    assert!(std::fs::read_to_string(d.join("pts.tsv"))
        .unwrap()
        .starts_with("fpr\ttpr\n"));
}

#[test]
fn bench_with_one_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let t = table(&ok(
        &[
            "bench",
            "--dims",
            "20x30,30x20",
            "--R",
            "50",
            "--repeats",
            "1",
        ],
        dir.path(),
    ));
    assert_eq!(t.len(), 3);
    assert!(t.iter().all(|r| r.len() == 9));
    assert_eq!(t[1][3], "1");
}

#[test]
fn f1_table_is_written() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["f1-table", "--out", "f1.tsv"], dir.path());
    let text = std::fs::read_to_string(dir.path().join("f1.tsv")).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('x'))
        .map(|l| {
            let mut it = l.split('\t').map(|v| v.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    assert!(rows.len() >= 1000);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
}
