use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const UNITS: &str = "# units: rates in kappa, times in 1/kappa; convention x=(b+b_dag)/sqrt2";

fn catkick(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catkick")).current_dir(dir).args(args).output().expect("binary runs")
}

/// Column names and numeric rows of a CSV written by the binary.
fn read_csv(path: &Path) -> (String, Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (text, cols, rows)
}

fn column(cols: &[String], name: &str) -> usize {
    cols.iter().position(|c| c == name).unwrap()
}

#[test]
fn rate1_defaults_start_reflected_and_conserve_probability() {
    let dir = tempfile::tempdir().unwrap();
    assert!(catkick(dir.path(), &["rate1"]).status.success());
    let (text, cols, rows) = read_csv(&dir.path().join("out/rate1.csv"));
    assert_eq!(text.lines().next().unwrap(), UNITS);
    assert!(text.contains("gamma=2.0000000000000000e0 g0=2.0000000000000000e-2 omega_m=2.0000000000000000e-2"));
    assert_eq!(rows.len(), 2001);
    let (t, total, trans) = (column(&cols, "t"), column(&cols, "total"), column(&cols, "transmitted"));
    assert_eq!(rows[0][total], 2.0);
    assert_eq!(rows[0][trans], 0.0);
    let area: f64 = rows.windows(2).map(|w| 0.5 * (w[1][t] - w[0][t]) * (w[0][total] + w[1][total])).sum();
    assert!((area - 1.0).abs() < 2e-3, "{area}");
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        assert!(catkick(dir.path(), &["rate1", "--steps", "301", "--out", name]).status.success());
    }
    assert_eq!(fs::read(dir.path().join("a.csv")).unwrap(), fs::read(dir.path().join("b.csv")).unwrap());
}

#[test]
fn moments_series_start_at_rest_and_slow_mirror_kicks_hardest() {
    let dir = tempfile::tempdir().unwrap();
    assert!(catkick(dir.path(), &["moments", "--steps", "401"]).status.success());
    let (_, cols, rows) = read_csv(&dir.path().join("out/moments.csv"));
    let (w, t, m) = (column(&cols, "omega_m"), column(&cols, "t"), column(&cols, "momentum"));
    let peak = |omega: f64| rows.iter().filter(|r| r[w] == omega).map(|r| r[m].abs()).fold(0.0, f64::max);
    for omega in [0.5, 0.2, 0.02] {
        let first = rows.iter().find(|r| r[w] == omega).unwrap();
        assert_eq!((first[t], first[m]), (0.0, 0.0));
    }
    assert!(peak(0.02) > peak(0.5));
}

#[test]
fn mz_panels() {
    let dir = tempfile::tempdir().unwrap();
    let out = catkick(dir.path(), &["mz", "--steps", "33", "--wigner-points", "61", "--out", "cat.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let (_, cols, rows) = read_csv(&dir.path().join("cat_entropy.csv"));
    assert!(rows[0][column(&cols, "entropy")] < 1e-6);

    let (_, cols, rows) = read_csv(&dir.path().join("cat_fidelity.csv"));
    let (d, f) = (column(&cols, "delta"), column(&cols, "fidelity"));
    assert_eq!(rows.iter().find(|r| r[d] == 0.0).unwrap()[f], 1.0);

    let (text, cols, rows) = read_csv(&dir.path().join("cat_wigner.csv"));
    assert!(text.contains("# slice: x2 = -x1"));
    let w = column(&cols, "w");
    assert!(rows.iter().map(|r| r[w]).fold(f64::INFINITY, f64::min) < 0.0);

    let (_, cols, rows) = read_csv(&dir.path().join("cat_amplitude.csv"));
    assert_eq!((rows[0][column(&cols, "re_b1")], rows[0][column(&cols, "im_b1")]), (0.0, 0.0));
}

#[test]
fn rate2_reflected_part_ignores_delay() {
    let dir = tempfile::tempdir().unwrap();
    assert!(catkick(dir.path(), &["rate2", "--steps", "21", "--g0", "0.1"]).status.success());
    let (text, cols, rows) = read_csv(&dir.path().join("out/rate2.csv"));
    assert!(text.contains("g0=1.0000000000000001e-1"));
    assert_eq!(rows.len(), 21 * 21);
    let (tau, refl) = (column(&cols, "tau"), column(&cols, "reflected"));
    for chunk in rows.chunks(21) {
        assert!(chunk.iter().all(|r| r[tau] == chunk[0][tau]));
        let (lo, hi) = chunk.iter().fold((f64::MAX, f64::MIN), |(lo, hi), r| (lo.min(r[refl]), hi.max(r[refl])));
        assert!(hi - lo < 1e-12);
    }
}

#[test]
fn validate_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let ok = catkick(dir.path(), &["validate"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    assert_eq!(catkick(dir.path(), &["validate", "--inject-fault"]).status.code(), Some(1));
    let coarse = catkick(dir.path(), &["validate", "--fock-dim", "8"]);
    assert_eq!(coarse.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&coarse.stdout).contains("FAIL"));
}

#[test]
fn validate_flag_guards_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = catkick(dir.path(), &["rate1", "--validate", "--inject-fault", "--out", "r.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("r.csv").exists());
}

#[test]
fn usage_and_io_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(catkick(dir.path(), &["nonsense"]).status.code(), Some(2));
    assert_eq!(catkick(dir.path(), &["rate1", "--steps", "1"]).status.code(), Some(2));
    assert_eq!(catkick(dir.path(), &["rate1", "--gamma", "-1"]).status.code(), Some(2));
    fs::write(dir.path().join("blocker"), "").unwrap();
    let out = catkick(dir.path(), &["rate1", "--out", "blocker/rate1.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("blocker"));
}
