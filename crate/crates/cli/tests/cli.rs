use std::path::Path;
use std::process::{Command, Output};

fn dlsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlsr")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// `(method, parameter, error_ratio)` for every data row.
fn rows(csv: &str) -> Vec<(String, f64, f64)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].to_string(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect()
}

fn write_fixture(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// 400 rows, 3 features, label column in the middle under the name `y`.
fn regression_csv(label_last: bool) -> String {
    let mut s = if label_last { "a,b,c,y\n".to_string() } else { "a,y,b,c\n".to_string() };
    for i in 0..400 {
        let t = i as f64;
        let (a, b, c) = ((t * 0.37).sin(), (t * 0.11).cos(), ((i * 7919) % 13) as f64 / 13.0);
        let y = 2.0 * a - b + 0.5 * c + 0.01 * ((i * 31) % 17) as f64;
        if label_last {
            s.push_str(&format!("{a},{b},{c},{y}\n"));
        } else {
            s.push_str(&format!("{a},{y},{b},{c}\n"));
        }
    }
    s
}

#[test]
fn kalman_matches_the_normal_equation() {
    let o = dlsr(&["bench-synthetic", "--T", "5000", "--d", "50", "--methods", "kalman", "--repeats", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].0, "kalman");
    assert!((r[0].2 - 1.0).abs() <= 1e-6, "{}", r[0].2);
}

#[test]
fn missing_required_flag_is_usage_error() {
    let o = dlsr(&["bench-synthetic", "--d", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--T"));
}

#[test]
fn invalid_values_rejected_before_work() {
    for args in [
        &["bench-synthetic", "--T", "100", "--d", "50"][..],
        &["bench-synthetic", "--T", "1000", "--d", "5", "--epsilon", "0"],
        &["bench-synthetic", "--T", "1000", "--d", "5", "--params", "1.5", "--methods", "uniform"],
        &["bench-synthetic", "--T", "1000", "--d", "5", "--delta", "1"],
        &["bench-synthetic", "--T", "1000", "--d", "5", "--methods", "lasso"],
        &["verify-reductions", "--d", "100000"],
        &["verify-reductions", "--queries", "5000"],
    ] {
        let o = dlsr(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn full_sweep_covers_every_cell() {
    let o = dlsr(&["bench-synthetic", "--T", "3000", "--d", "20", "--repeats", "1", "--jobs", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert!(r.len() >= 12, "{}", r.len());
    for m in ["kalman", "ours", "row-sampling", "uniform"] {
        assert!(r.iter().any(|x| x.0 == m), "{m} missing");
    }
    assert!(r.iter().all(|x| x.2 >= 1.0 - 1e-9));
}

#[test]
fn adaptive_adversary_runs() {
    let o = dlsr(&["bench-synthetic", "--T", "2000", "--d", "10", "--adversary", "adaptive", "--methods", "kalman,ours", "--epsilon", "0.5", "--repeats", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().skip(1).all(|l| l.starts_with("adaptive,")));
    assert_eq!(rows(&text).len(), 2);
}

#[test]
fn omit_timing_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = dlsr(&[
            "bench-synthetic", "--T", "2000", "--d", "10", "--seed", "3", "--repeats", "1", "--omit-timing", "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn plot_data_written_alongside_results() {
    let dir = tempfile::tempdir().unwrap();
    let (out, plot) = (dir.path().join("r.csv"), dir.path().join("p.csv"));
    let o = dlsr(&[
        "bench-synthetic", "--T", "2000", "--d", "10", "--methods", "uniform", "--params", "0.5", "--repeats", "1", "--out",
        out.to_str().unwrap(), "--plot-out", plot.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(plot).unwrap();
    assert!(text.starts_with("dataset,method,parameter,wall_time_s,relative_error\n"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn amplify_two_dimensions() {
    let o = dlsr(&["verify-reductions", "--construction", "amplify", "--d", "64,128"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines.iter().all(|l| l.starts_with("amplify") && l.ends_with("PASS")));
}

#[test]
fn boolean_omv_passes() {
    let o = dlsr(&["verify-reductions", "--construction", "boolean-omv", "--d", "32"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).trim_end().ends_with("PASS"));
}

#[test]
fn every_construction_passes_by_default() {
    let o = dlsr(&["verify-reductions"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().count(), 5);
}

#[test]
fn unknown_construction_is_usage_error() {
    let o = dlsr(&["verify-reductions", "--construction", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("boolean-omv"));
}

#[test]
fn csv_kalman_matches_normal_equation() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_fixture(dir.path(), "houses.csv", &regression_csv(true));
    let o = dlsr(&["bench-csv", "--csv", &path, "--methods", "kalman", "--repeats", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().nth(1).unwrap().starts_with("houses,kalman,"));
    assert!((rows(&text)[0].2 - 1.0).abs() <= 1e-6);
}

#[test]
fn csv_named_label_matches_last() {
    let dir = tempfile::tempdir().unwrap();
    let last = write_fixture(dir.path(), "d.csv", &regression_csv(true));
    let named = write_fixture(dir.path(), "e.csv", &regression_csv(false));
    let run = |path: &str, label: &str| {
        let o = dlsr(&["bench-csv", "--csv", path, "--label-column", label, "--methods", "ours,uniform", "--epsilon", "0.5", "--params", "0.5", "--repeats", "1"]);
        assert!(o.status.success(), "{}", stderr(&o));
        rows(&stdout(&o))
    };
    assert_eq!(run(&last, "last"), run(&named, "y"));
}

#[test]
fn malformed_cell_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_fixture(dir.path(), "bad.csv", "x1,x2,y\n1,2,3\n4,five,6\n");
    let out = dir.path().join("out.csv");
    let o = dlsr(&["bench-csv", "--csv", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("row 3, column 2"), "{err}");
    assert!(!out.exists());
}

#[test]
fn no_partial_file_on_failure() {
    let dir = tempfile::tempdir().unwrap();
    // Parses, but has too few rows for the initial block.
    let path = write_fixture(dir.path(), "tiny.csv", "1,2,3\n4,5,6\n7,8,9\n");
    let out = dir.path().join("out.csv");
    let o = dlsr(&["bench-csv", "--csv", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}
