use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use boxinv_core::io::{read_grid_csv, write_grid_csv};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_boxinv"))
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const ONE_SQUARE: &str = "[[rect]]\na = -1.0\nb = 1.0\nc = -1.0\nd = 1.0\nweight = 1.0\n";

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("problem.toml");
    fs::write(&p, body).unwrap();
    p
}

fn report_value(text: &str, key: &str) -> f64 {
    let v: toml::Value = toml::from_str(text).unwrap();
    v[key].as_float().unwrap()
}

#[test]
fn validate_reports_orientation() {
    let o = run(&["validate", "--config", shipped("n2_staircase.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "Cond1");
    let o = run(&["validate", "--config", shipped("n2_mirrored.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "Cond2");
}

#[test]
fn validate_names_the_violated_inequality() {
    let o = run(&["validate", "--config", shipped("non_staircase.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("a_1 < a_2"), "{}", stderr(&o));
}

#[test]
fn validate_malformed_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "[[rect]]\na = \n");
    assert_eq!(code(&run(&["validate", "--config", p.to_str().unwrap()])), 1);
    let p = write_config(dir.path(), &format!("{ONE_SQUARE}colour = 3\n"));
    assert_eq!(code(&run(&["validate", "--config", p.to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["validate", "--config", "/nonexistent/problem.toml"])), 1);
}

fn forward_rows(body: &str, extra: &[&str]) -> (i32, Vec<(f64, f64, f64)>) {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), body);
    let out = dir.path().join("out");
    let mut args = vec!["forward", "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = run(&args);
    if code(&o) != 0 {
        return (code(&o), Vec::new());
    }
    let data = read_grid_csv(fs::File::open(out.join("g.csv")).unwrap()).unwrap();
    (0, data.points.iter().zip(&data.values).map(|(p, v)| (p.x, p.y, v.re)).collect())
}

#[test]
fn forward_constant_and_xy() {
    let grid = "[grid]\nregion = [-2.0, 2.0, -1.0, 3.0]\nnx = 5\nny = 4\n";
    let (c, rows) = forward_rows(&format!("{ONE_SQUARE}[f_true]\nkind = \"constant\"\nvalue = 1.0\n{grid}"), &[]);
    assert_eq!(c, 0);
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| (r.2 - 4.0).abs() < 1e-12));

    let (c, rows) = forward_rows(
        &format!("{ONE_SQUARE}[f_true]\nkind = \"polynomial\"\nterms = [{{ px = 1, py = 1, coef = 1.0 }}]\n{grid}"),
        &[],
    );
    assert_eq!(c, 0);
    for (x, y, v) in rows {
        assert!((v - 4.0 * x * y).abs() < 1e-12 * (1.0 + (x * y).abs()), "{x} {y} {v}");
    }
}

#[test]
fn forward_rows_are_row_major() {
    let (_, rows) = forward_rows(&fs::read_to_string(shipped("forward_xy.toml")).unwrap(), &[]);
    let xy: Vec<_> = rows.iter().map(|r| (r.0, r.1)).collect();
    assert_eq!(xy[0], (-2.0, -1.0));
    assert_eq!(xy[1], (-1.0, -1.0));
    assert_eq!(xy[5].0, -2.0);
}

#[test]
fn forward_rejects_degenerate_grid() {
    let body = format!("{ONE_SQUARE}[f_true]\nkind = \"constant\"\nvalue = 1.0\n");
    assert_eq!(forward_rows(&body, &["--grid", "1,5"]).0, 2);
    let with_grid = format!("{body}[grid]\nregion = [-1.0, 1.0, -1.0, 1.0]\nnx = 1\nny = 5\n");
    assert_eq!(forward_rows(&with_grid, &[]).0, 2);
}

#[test]
fn reconstruct_single_square() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["reconstruct", "--config", shipped("n1_bump.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = fs::read_to_string(out.join("report.toml")).unwrap();
    assert!(report_value(&report, "residual_max") <= 1e-8);
    for key in ["orientation", "v1", "v2", "beta", "residual_max", "residual_rms", "verdict"] {
        assert!(report.lines().any(|l| l.starts_with(&format!("{key} = "))), "missing {key}");
    }
    let v: toml::Value = toml::from_str(&report).unwrap();
    assert_eq!(v["verdict"].as_str(), Some("pass"));
    assert_eq!(v["orientation"].as_str(), Some("Cond1"));
}

#[test]
fn reconstruct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["reconstruct", "--config", shipped("non_staircase.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);

    let o = run(&[
        "reconstruct",
        "--config",
        shipped("n2_staircase.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--tol",
        "0",
    ]);
    assert_eq!(code(&o), 3);
    let report = fs::read_to_string(out.join("report.toml")).unwrap();
    assert!(report.contains("verdict = \"fail\""));

    let capped = fs::read_to_string(shipped("n2_staircase.toml")).unwrap().replace("residual = 1e-6", "residual = 1e-6\ndepth_cap = 1");
    let p = write_config(dir.path(), &capped);
    let o = run(&["reconstruct", "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("depth"), "{}", stderr(&o));
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let strip = |s: String| s.split("[timings]").next().unwrap().to_string();
    let mut texts = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let o = run(&[
            "--threads",
            threads,
            "reconstruct",
            "--config",
            shipped("n3_staircase.toml").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        texts.push((strip(fs::read_to_string(out.join("report.toml")).unwrap()), fs::read(out.join("f_hat.csv")).unwrap()));
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn exported_grids_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["reconstruct", "--config", shipped("complex_weights.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for name in ["f_hat.csv", "residual.csv"] {
        let bytes = fs::read(out.join(name)).unwrap();
        let data = read_grid_csv(&bytes[..]).unwrap();
        let mut again = Vec::new();
        write_grid_csv(&mut again, data.points.iter().copied().zip(data.values.iter().copied())).unwrap();
        assert_eq!(bytes, again, "{name}");
    }
}

#[test]
fn reconstruct_from_forward_samples() {
    let dir = tempfile::tempdir().unwrap();
    let forward_cfg = format!(
        "{ONE_SQUARE}[f_true]\nkind = \"polybump\"\ncenter = [0.0, 0.0]\nradii = [1.0, 1.0]\n\
         [grid]\nregion = [-4.0, 4.0, -4.0, 4.0]\nnx = 33\nny = 33\n"
    );
    let p = write_config(dir.path(), &forward_cfg);
    let o = run(&["forward", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let inverse_cfg = format!(
        "{ONE_SQUARE}[g]\nkind = \"grid_csv\"\npath = \"g.csv\"\n\
         [grid]\nregion = [-3.0, 3.0, -3.0, 3.0]\nnx = 7\nny = 7\n[tolerances]\nresidual = 1e-3\n"
    );
    let p = write_config(dir.path(), &inverse_cfg);
    let out = dir.path().join("out");
    let o = run(&["reconstruct", "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn selftest_passes_and_detects_breakage() {
    let o = run(&["selftest"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
    assert_ne!(code(&run(&["selftest", "--corrupt-nu"])), 0);
    assert_ne!(code(&run(&["selftest", "--tol", "0"])), 0);
}
