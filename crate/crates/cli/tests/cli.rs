use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn qprior(args: &[&str]) -> Output {
    qprior_env(args, None)
}

fn qprior_env(args: &[&str], config: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qprior"));
    c.args(args).env_remove("QPRIOR_CONFIG");
    if let Some(p) = config {
        c.env("QPRIOR_CONFIG", p);
    }
    c.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Second-row value of column `col` in CSV output.
fn field(o: &Output, col: &str) -> String {
    let text = stdout(o);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let k = r.headers().unwrap().iter().position(|h| h == col).unwrap_or_else(|| panic!("no column {col} in {text}"));
    r.records().next().unwrap().unwrap()[k].to_string()
}

fn value(o: &Output, col: &str) -> f64 {
    field(o, col).parse().unwrap()
}

fn ok(o: &Output) {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stderr.is_empty(), "diagnostics on success: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn detnull_escort_is_null() {
    let o = qprior(&["metric", "detnull", "--family", "escort", "--samples", "1000"]);
    ok(&o);
    assert!(value(&o, "max_det_over_scale") < 1e-10);
    assert_eq!(field(&o, "null"), "true");
}

#[test]
fn detnull_bloch_is_not_null() {
    let o = qprior(&["metric", "detnull", "--family", "bloch", "--samples", "50"]);
    ok(&o);
    assert_eq!(field(&o, "null"), "false");
}

#[test]
fn check_bloch_numeric_against_closed() {
    let o = qprior(&["metric", "check", "--family", "bloch", "--samples", "100"]);
    ok(&o);
    assert!(value(&o, "max_relative_deviation") < 1e-5);
}

#[test]
fn aberaj_determinant_vanishes() {
    let o = qprior(&["metric", "eval", "--family", "aberaj", "--point", "0.1,4.0"]);
    ok(&o);
    let text = stdout(&o);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<_> = r.records().map(|x| x.unwrap()).collect();
    let get = |k: &str| rows.iter().find(|x| &x[0] == k).unwrap()[1].to_string();
    assert!(get("degeneracy_ratio").parse::<f64>().unwrap() < 1e-10);
    assert_eq!(get("degenerate"), "true");
}

#[test]
fn normalize_husimi_prior() {
    let o = qprior(&["prior", "normalize", "--name", "p_F"]);
    ok(&o);
    assert!((value(&o, "normalization") / 1.39350989 - 1.0).abs() < 1e-4);
    assert!((value(&o, "total_mass") - 1.0).abs() < 1e-6);
}

#[test]
fn bures_q_marginal_written_atomically() {
    let d = tempfile::tempdir().unwrap();
    let path = d.path().join("q.csv");
    let o = qprior(&["prior", "marginal", "--name", "p_Bqext4D", "--var", "q", "--mode", "raw", "--points", "9", "--out", path.to_str().unwrap()]);
    ok(&o);
    assert!(o.stdout.is_empty());
    let mut r = csv::Reader::from_path(&path).unwrap();
    let mut n = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let (q, v): (f64, f64) = (rec[1].parse().unwrap(), rec[2].parse().unwrap());
        assert!((v / (PI * (1.0 + 4f64.ln()) / (24.0 * q)) - 1.0).abs() < 1e-4, "q = {q}");
        n += 1;
    }
    assert_eq!(n, 9);
    assert_eq!(std::fs::read_dir(d.path()).unwrap().count(), 1, "temporary file left behind");
}

#[test]
fn kl_values() {
    let o = qprior(&["kl", "--p", "p_B", "--q", "p_Btrunc"]);
    ok(&o);
    assert!((value(&o, "kl_nats") / 0.101846 - 1.0).abs() < 0.02);
    let o = qprior(&["kl", "--p", "p_B", "--q", "p_B"]);
    ok(&o);
    assert!(value(&o, "kl_nats").abs() < 1e-9);
    let o = qprior(&["kl", "--p", "p_F", "--q", "p_Fq1", "--posterior", "1"]);
    ok(&o);
    assert!((value(&o, "kl_nats") / 0.70766 - 1.0).abs() < 0.02);
}

#[test]
fn rank_reproduces_order() {
    let o = qprior(&["rank", "--priors", "p_B,p_Btrunc,p_F,p_Fq1"]);
    ok(&o);
    assert!(stdout(&o).contains("ranking: p_Fq1 > p_B > p_Btrunc > p_F"));
}

#[test]
fn information_gains() {
    let o = qprior(&["infogain", "--prior", "p_B", "--spec", "z:1,0"]);
    ok(&o);
    assert!((value(&o, "gain_nats") - 0.140186).abs() < 1e-4);
    let o = qprior(&["infogain", "--prior", "p_B", "--spec", "z:1,0", "--q-extended"]);
    ok(&o);
    assert_eq!(field(&o, "prior"), "p_Bqext4D");
    assert!((value(&o, "gain_nats") / 0.134651 - 1.0).abs() < 0.02);
    let o = qprior(&["infogain", "--prior", "p_B", "--spec", "pow:1"]);
    ok(&o);
    assert_eq!(value(&o, "gain_nats"), 0.0);
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        vec!["metric", "eval", "--family", "bloch", "--point", "0.5,1"],
        vec!["metric", "frobnicate", "--family", "bloch"],
        vec!["prior", "normalize", "--name", "p_X"],
        vec!["infogain", "--prior", "p_B", "--spec", "w:1,0"],
        vec!["kl", "--p", "p_B"],
        vec!["rank", "--q-min", "3", "--q-max", "2"],
    ] {
        let o = qprior(&args);
        assert_eq!(o.status.code(), Some(64), "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn domain_errors_exit_2() {
    for args in [
        vec!["metric", "eval", "--family", "bloch", "--point", "1.5,1,1"],
        vec!["metric", "check", "--family", "aberaj"],
        vec!["kl", "--p", "p_B", "--q", "p_Bqext4D"],
    ] {
        let o = qprior(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn help_exits_zero() {
    let o = qprior(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("report"));
}

#[test]
fn config_file_and_flag_precedence() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("qprior.conf");
    std::fs::write(&cfg, "# narrower escort range\nq_max = 100\n").unwrap();
    let closed = |hi: f64| PI * (1.0 + 4f64.ln()) / 24.0 * (hi / 0.5f64).ln();
    let o = qprior_env(&["prior", "normalize", "--name", "p_Bqext4D"], Some(&cfg));
    ok(&o);
    assert!((value(&o, "normalization") / closed(100.0) - 1.0).abs() < 1e-6);
    let o = qprior_env(&["prior", "normalize", "--name", "p_Bqext4D", "--q-max", "50"], Some(&cfg));
    ok(&o);
    assert!((value(&o, "normalization") / closed(50.0) - 1.0).abs() < 1e-6);
    std::fs::write(&cfg, "tolerance = 1\n").unwrap();
    let o = qprior_env(&["prior", "normalize", "--name", "p_F"], Some(&cfg));
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn report_is_complete_and_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    for dir in [&a, &b] {
        let o = qprior(&["report", "--all", "--out", dir.to_str().unwrap()]);
        ok(&o);
    }
    let mut names: Vec<String> =
        std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    for f in [
        "summary.md",
        "kl_table.csv",
        "dominance.csv",
        "convention_sensitivity.md",
        "r_marginals.csv",
        "bures_q_r.csv",
        "bures_q_marginal.csv",
        "bures_r_marginal.csv",
        "husimi_q_r.csv",
        "husimi_q_marginal.csv",
        "husimi_r_marginal.csv",
    ] {
        assert!(names.iter().any(|n| n == f), "missing {f}");
    }
    for n in &names {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n} differs between runs");
    }
    let summary = std::fs::read_to_string(a.join("summary.md")).unwrap();
    assert!(summary.contains("ranking: p_Fq1 > p_B > p_Btrunc > p_F"));
    // the KL table has 12 ordered pairs, two stages each
    let kl = std::fs::read_to_string(a.join("kl_table.csv")).unwrap();
    assert_eq!(kl.lines().count(), 1 + 24);
}
