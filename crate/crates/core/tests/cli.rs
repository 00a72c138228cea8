use std::path::Path;
use std::process::{Command, Output};

use eacomm::dataio::{parse_report, simulate_table, BinningSpec, ExperimentTable, ParseOptions, ValueKind};
use eacomm::protocol::disambiguate_convention;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn eacomm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eacomm"))
        .args(args)
        .env_remove("EACOMM_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn pvalue_command() {
    let o = eacomm(&["pvalue", "--n", "160000", "--mu", "0.0067", "--t", "-0.09"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("2.927"), "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(eacomm(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(eacomm(&["pvalue", "--n", "x", "--mu", "0", "--t", "0"]).status.code(), Some(1));
    assert_eq!(eacomm(&["--restarts", "0", "facet", "classical"]).status.code(), Some(1));
    assert_eq!(eacomm(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_thread_count_is_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_eacomm"))
        .args(["facet", "classical"])
        .env("EACOMM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("EACOMM_THREADS"));
}

#[test]
fn missing_and_truncated_tables_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = eacomm(&["analyze", &dir.path().join("none.csv").display().to_string()]);
    assert_eq!(o.status.code(), Some(2));

    let text: String = eacomm::dataio::bundled_table_csv()
        .lines()
        .filter(|l| !l.starts_with("MP,U3"))
        .map(|l| format!("{l}\n"))
        .collect();
    let path = write(dir.path(), "cut.csv", &text);
    let o = eacomm(&["analyze", &path, "--row-sum-tol", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("[dataio]") && err.contains("(MP, U3)"), "{err}");
}

#[test]
fn classical_facets_and_file_input() {
    let o = eacomm(&["facet", "classical"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).matches("matches stated bound").count(), 3);

    let dir = tempfile::tempdir().unwrap();
    let mut f = eacomm::facets::builtin_facets()[2].clone();
    f.classical_bound = Some(5.5);
    let path = write(dir.path(), "f3.json", &f.to_json().unwrap());
    let o = eacomm(&["facet", "classical", "--file", &path]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("not reproduced"));
}

fn analyze_json(path: &str, extra: &[&str]) -> serde_json::Value {
    let mut args = vec!["--restarts", "8", "--json", "analyze", path, "--bootstrap", "0"];
    args.extend_from_slice(extra);
    let o = eacomm(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn ideal_table_exceeds_bound() {
    let ideal = disambiguate_convention().unwrap();
    let t = simulate_table(&ideal, &BinningSpec::standard()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "ideal.csv", &t.to_csv_string().unwrap());
    let r = analyze_json(&path, &[]);
    let p_hat = r["p_hat"].as_f64().unwrap();
    assert!((p_hat - 0.9268).abs() < 5e-5, "{p_hat}");
    assert_eq!(r["verdict"], "yes");
    assert!(r["eps_raw"]["eps"].as_array().unwrap().iter().all(|e| e.as_f64().unwrap() < 1e-9));
}

#[test]
fn uniform_random_table_does_not() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut text = String::from("measurement,encoding,p1,p2,p3,p4,p5,p6,p7,p8\n");
    for m in ["M1", "M2", "MP"] {
        for x in 1..=5 {
            let w: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
            let s: f64 = w.iter().sum();
            let row: Vec<String> = w.iter().map(|v| format!("{}", v / s)).collect();
            text.push_str(&format!("{m},U{x},{}\n", row.join(",")));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "random.csv", &text);
    let r = analyze_json(&path, &[]);
    assert_eq!(r["verdict"], "no");
    assert_eq!(r["pvalue"]["p"], 1.0);
}

#[test]
fn count_tables_are_accepted() {
    let t = eacomm::dataio::bundled_table().to_counts();
    let probs = ExperimentTable::from_counts(&t, "x").unwrap();
    let mut counts = probs.clone();
    for (m, rows) in t.cells.iter().enumerate() {
        for (x, row) in rows.iter().enumerate() {
            counts.values[m][x] = row.map(|n| n as f64);
        }
    }
    counts.kind = ValueKind::Counts;
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "counts.csv", &counts.to_csv_string().unwrap());
    let r = analyze_json(&path, &["--counts"]);
    assert_eq!(r["verdict"], "yes");
    assert!(ExperimentTable::from_csv_str(&counts.to_csv_string().unwrap(), ValueKind::Counts, "c", ParseOptions::default()).is_ok());
}

#[test]
fn reports_are_deterministic_and_round_trip() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = eacomm(&["--restarts", "6", "--seed", "11", "--out", &d.path().display().to_string(), "analyze", "--bootstrap", "5"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let ja = std::fs::read(a.path().join("report.json")).unwrap();
    let jb = std::fs::read(b.path().join("report.json")).unwrap();
    assert_eq!(ja, jb);
    let csv = std::fs::read_to_string(a.path().join("delta_p.csv")).unwrap();
    assert_eq!(csv.lines().count(), 16);
    let r = parse_report(a.path()).unwrap();
    assert_eq!(r.seed, Some(11));
    assert_eq!(r.bootstrap.unwrap().n_sim, 5);
    assert!(r.conventions.is_some() && r.eps_inflated.is_some() && r.pvalue.is_some());
    assert_eq!(r.to_json().unwrap().as_bytes(), ja.as_slice());
}

#[test]
fn bound_command_with_explicit_eps() {
    let o = eacomm(&["--restarts", "10", "--json", "bound", "--eps", "0,0,0,0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let up = r["corrected_upper"].as_f64().unwrap();
    assert!((up - (5.0 + 5f64.sqrt()) / 8.0).abs() < 1e-4, "{up}");
    assert_eq!(eacomm(&["bound", "--eps", "0.1,0.1"]).status.code(), Some(1));
    assert_eq!(eacomm(&["bound", "--eps", "2,0,0,0"]).status.code(), Some(1));
}

#[test]
fn selftest_passes() {
    let o = eacomm(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}
