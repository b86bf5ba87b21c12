use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn remetric(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_remetric"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn parse_csv(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn envelope_log_follows_dyadic_blocks() {
    let o = remetric(&["envelope", "--a", "log", "--horizon", "64"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = parse_csv(&stdout(&o));
    assert_eq!(rows.len(), 64);
    let c = 3f64.ln();
    for row in &rows {
        let n: usize = row[0].parse().unwrap();
        assert!((f(&row[1]) - ((n + 2) as f64).ln()).abs() < 1e-10);
        let nu = n.ilog2() as i32;
        assert_eq!(row[2], nu.to_string());
        assert!((f(&row[3]) - c.powi(nu.max(1))).abs() < 1e-10, "n = {n}");
    }
}

#[test]
fn envelope_of_constant_saturates() {
    let o = remetric(&["envelope", "--a", "const:2", "--horizon", "32"]);
    assert_eq!(code(&o), 0);
    for row in parse_csv(&stdout(&o)) {
        assert_eq!(row[3], "2");
        assert!(f(&row[3]) <= f(&row[1]));
    }
}

#[test]
fn envelope_rejects_list_entry_at_most_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "1.5\n2\n1.0\n3\n").unwrap();
    let spec = format!("list:{}", path.display());
    let o = remetric(&["envelope", "--a", &spec]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("a_3"), "{}", stderr(&o));
}

#[test]
fn remetrize_tent_writes_tables_within_log_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = remetric(&["remetrize", "--system", "tent:10", "--a", "log", "--max-n", "12", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lip = read_csv(&dir.path().join("lipschitz.csv"));
    assert_eq!(lip.len(), 12);
    for row in &lip {
        let n: usize = row[0].parse().unwrap();
        assert!((f(&row[2]) - ((n + 2) as f64).ln()).abs() < 1e-10);
        assert!(f(&row[3]) <= f(&row[1]) + 1e-9);
        assert!(f(&row[1]) <= f(&row[2]) + 1e-10);
    }
    let dhat = remetric::FiniteMetricSpace::read_csv(fs::File::open(dir.path().join("dhat.csv")).unwrap()).unwrap();
    assert_eq!(dhat.len(), 1025);
    assert!(dhat.diameter() <= 1.0);
    // d̂ dominates the capped base metric
    for i in (0..1025).step_by(37) {
        for j in (0..1025).step_by(41) {
            let base = ((i as f64 - j as f64).abs() / 1024.0).min(0.5);
            assert!(dhat.d(i, j) >= base - 1e-12);
        }
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["parameters"]["system"], "tent:10");
}

#[test]
fn remetrize_rotation_respects_word_length_bounds() {
    let o = remetric(&["remetrize", "--system", "rotation:12", "--a", "log", "--max-n", "6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let elements = text.split("# elements\n").nth(1).expect("elements table");
    let rows = parse_csv(elements);
    assert_eq!(rows.len(), 12);
    let mut lengths: Vec<usize> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    lengths.sort();
    assert_eq!(lengths, vec![0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6]);
    for r in &rows {
        assert!(f(&r[2]) <= f(&r[3]) + 1e-9);
        assert_eq!(r[4], "true");
    }
}

#[test]
fn malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sys.json");
    fs::write(&path, "{\"points\": [\"a\", \"b\"],\n  \"metric\": {\"matrix\": [[0, 1], [1, 0]]},\n  \"generators\": {\"f\": [1, 0],}\n}\n").unwrap();
    let o = remetric(&["remetrize", "--system", path.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let err = stderr(&o);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("column"), "{err}");
}

#[test]
fn json_system_with_non_metric_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sys.json");
    fs::write(
        &path,
        r#"{"points": ["a", "b", "c"], "metric": {"matrix": [[0, 1, 3], [1, 0, 1], [3, 1, 0]]}, "generators": {"f": [1, 2, 0]}}"#,
    )
    .unwrap();
    let o = remetric(&["remetrize", "--system", path.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("Triangle"), "{}", stderr(&o));
}

#[test]
fn json_system_remetrizes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sys.json");
    fs::write(
        &path,
        r#"{"points": ["0", "0.25", "0.5", "0.75", "1"],
            "metric": {"interval_capped": {"cap": 1.0}},
            "generators": [{"name": "double", "table": [0, 2, 4, 4, 4]}],
            "c": 3.0}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = remetric(&["remetrize", "--system", path.to_str().unwrap(), "--max-n", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dhat = remetric::FiniteMetricSpace::read_csv(fs::File::open(out.join("dhat.csv")).unwrap()).unwrap();
    let g = [0usize, 2, 4, 4, 4];
    let b1 = 3f64.ln();
    for i in 0..5 {
        for j in 0..5 {
            assert!(dhat.d(g[i], g[j]) <= b1 * dhat.d(i, j) + 1e-9);
            assert!(dhat.d(i, j) <= 3.0);
        }
    }
}

#[test]
fn envelope_horizon_shortfall_is_a_resource_error() {
    let o = remetric(&["remetrize", "--system", "tent:3", "--horizon", "2"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn check_iv_supported_and_refuted() {
    let o = remetric(&["check", "--condition", "iv", "--omega", "loglin", "--c", "0.25"]);
    assert_eq!(code(&o), 0);
    for row in parse_csv(&stdout(&o)) {
        assert_eq!(row[3], "true");
    }
    let o = remetric(&["check", "--condition", "iv", "--omega", "linear:1", "--c", "0.25"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn check_phi_starts_at_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = remetric(&["check", "--condition", "phi", "--omega", "loglin", "--c", "1", "--horizon", "100", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["thresholds"][0], 1);
    let rows = read_csv(&dir.path().join("phi.csv"));
    assert_eq!(rows.len(), 100);
    for row in &rows {
        let n: f64 = row[0].parse().unwrap();
        assert!(f(&row[2]) > 1.0);
        assert!(f(&row[2]) <= (n + 2.0).ln() + 1e-10);
    }
}

#[test]
fn check_tent_witness_inequalities_hold() {
    let o = remetric(&["check", "--condition", "tent-witness", "--system", "tent:10", "--n", "6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let (witness, refutation) = text.split_once("# refutation\n").unwrap();
    let rows = parse_csv(witness.trim_start_matches("# tent_witness\n"));
    assert_eq!(rows.len(), 6);
    for row in &rows {
        assert_eq!(row[4], "true");
        assert!(f(&row[3]) <= f(&row[2]) + 1e-9);
    }
    let refut = parse_csv(refutation);
    assert_eq!(refut.len(), 1);
    assert!(f(&refut[0][6]) > 1.0);
}

#[test]
fn demo_counterexample_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = remetric(&["demo", "counterexample", "--k", "2", "--eps", "0.5", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = read_csv(&dir.path().join("summary.csv"));
    assert_eq!(summary[0][2], "2");
    assert_eq!(f(&summary[0][3]), 1.0 / 16.0);
    assert_eq!(summary[0][4], "441");
    let witness = read_csv(&dir.path().join("witness.csv"));
    for row in &witness {
        let (delta, m) = (f(&row[0]), f(&row[1]));
        assert!((2.0 * m * delta).min(1.0) > 0.5);
        assert!(m <= 2.0 || (2.0 * (m - 1.0) * delta).min(1.0) <= 0.5);
    }
}

#[test]
fn demo_counterexample_sampling_is_seeded() {
    let run = |seed: &str| stdout(&remetric(&["demo", "counterexample", "--k", "3", "--sample", "50", "--seed", seed]));
    assert_eq!(run("7"), run("7"));
    assert_ne!(run("7"), run("8"));
}

#[test]
fn demo_group_word_lengths() {
    let o = remetric(&["demo", "group", "--preset", "s3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let rows = parse_csv(text.split("# elements\n").nth(1).unwrap());
    let mut lengths: Vec<usize> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    lengths.sort();
    assert_eq!(lengths, vec![0, 1, 1, 2, 2, 3]);
}

#[test]
fn demo_tent_and_rotation_succeed() {
    let o = remetric(&["demo", "tent", "--L", "8", "--max-n", "10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("# refutation"));
    let o = remetric(&["demo", "rotation", "--q", "9"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn unknown_option_is_an_input_error() {
    let o = remetric(&["remetrize", "--system", "tent:4", "--bogus"]);
    assert_eq!(code(&o), 3);
    let o = remetric(&["remetrize", "--system", "nowhere:1"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn outputs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = remetric(&["remetrize", "--system", "tent:6", "--max-n", "8", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    for name in ["dhat.csv", "lipschitz.csv", "report.json"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}
