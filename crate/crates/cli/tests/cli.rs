use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pxlap_cli::record::RunRecord;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn pxlap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pxlap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn solve(config: &str, out: &Path) -> Output {
    pxlap(&["solve", data(config).to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_record(dir: &Path) -> RunRecord {
    let text = std::fs::read_to_string(dir.join("run.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn quadratic_solve_converges_to_linear_interpolant() {
    let tmp = tempfile::tempdir().unwrap();
    let o = solve("quadratic_1d.json", tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let csv = std::fs::read_to_string(tmp.path().join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,value"));
    let mut rows = 0;
    for line in lines {
        let (x, v) = line.split_once(',').unwrap();
        let (x, v): (f64, f64) = (x.parse().unwrap(), v.parse().unwrap());
        assert!((v - x).abs() < 1e-8, "x={x} v={v}");
        rows += 1;
    }
    assert_eq!(rows, 65);

    let trace = std::fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,energy,grad_norm\n"));
    let energies: Vec<f64> = trace
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(energies.windows(2).all(|w| w[1] <= w[0]));

    let rec = read_record(tmp.path());
    let c = rec.payload.certificates.variational.as_ref().expect("variational certificate");
    assert!(c.min_value >= -1e-12);
    assert!(rec.payload.certificates.uniqueness.as_ref().unwrap().sup_diff < 1e-6);
}

#[test]
fn run_record_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&solve("quadratic_1d.json", tmp.path())), 0);
    let text = std::fs::read_to_string(tmp.path().join("run.json")).unwrap();
    let rec: RunRecord = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string_pretty(&rec).unwrap() + "\n";
    assert_eq!(again, text);
    let back: RunRecord = serde_json::from_str(&again).unwrap();
    assert_eq!(back, rec);
}

#[test]
fn payload_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&solve("harmonic_2d.json", a.path())), 0);
    assert_eq!(code(&solve("harmonic_2d.json", b.path())), 0);
    assert_eq!(read_record(a.path()).payload, read_record(b.path()).payload);
    for f in ["solution.csv", "trace.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_errors_exit_one_with_field_path() {
    let tmp = tempfile::tempdir().unwrap();
    let o = solve("missing_q.json", tmp.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("`q`"), "{}", stderr(&o));

    let o = solve("unknown_field.json", tmp.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unknown field"), "{}", stderr(&o));

    let o = solve("bad_expr.json", tmp.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("expr"), "{}", stderr(&o));

    let o = pxlap(&["solve", "/nonexistent/config.json"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn iteration_cap_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = solve("max_iters.json", tmp.path());
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(tmp.path().join("run.json").exists());
}

#[test]
fn saturated_data_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let o = solve("saturated.json", tmp.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn norm_outputs() {
    for (cfg, want) in [
        ("norm_one.json", "0.707106781187"),
        ("norm_two.json", "1.41421356237"),
        ("norm_zero.json", "0"),
    ] {
        let o = pxlap(&["norm", data(cfg).to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{cfg}: {}", stderr(&o));
        assert_eq!(stdout(&o).trim(), want, "{cfg}");
    }
}

#[test]
fn verify_suites() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = pxlap(&["verify", "lemmas", "--n", "2000", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["suite"], "lemmas");
    assert_eq!(report["pass"], true);

    let o = pxlap(&["verify", "gradientcheck", "--n", "6", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = pxlap(&["verify", "clarkson", "--n", "2000", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    assert_eq!(code(&pxlap(&["verify", "nosuch", "--out", out])), 1);
    assert_eq!(code(&pxlap(&["verify", "ucstar", "--eps", "1.5", "--out", out])), 1);
}

#[test]
fn reproduce_example_construction() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = pxlap(&["reproduce", "v0-example", "--k", "3", "--smax", "12", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    let computed = &report["reports"][0]["computed"];
    assert!(computed.is_object());

    let o = pxlap(&["reproduce", "remark", "--jmax", "20", "--resolution", "4", "--out", out]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("resolution"), "{}", stderr(&o));

    assert_eq!(code(&pxlap(&["reproduce", "nosuch", "--out", out])), 1);
}
