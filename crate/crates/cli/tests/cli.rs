use std::path::Path;
use std::process::{Command, Output};

fn nlci(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlci"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("NONLOCAL_CI_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

/// y-values of every polyline in an SVG, in document order.
fn polyline_ys(svg: &str) -> Vec<Vec<f64>> {
    svg.split("points=\"")
        .skip(1)
        .map(|chunk| {
            let pts = &chunk[..chunk.find('"').unwrap()];
            pts.split(' ').map(|p| p.split(',').nth(1).unwrap().parse().unwrap()).collect()
        })
        .collect()
}

#[test]
fn determinant_lemma_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlci(&["verify", "--lemma", "determinants", "--max-n", "20"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("det_A_n     20        41        41  pass"), "{stdout}");
    assert!(!stdout.contains("FAIL"));
    let rows = csv_rows(&dir.path().join("determinants.csv"));
    assert_eq!(rows.iter().filter(|r| r[0] == "det_A_n").count(), 19);
}

#[test]
fn invalid_config_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"lambda": -1}"#).unwrap();
    let out = nlci(&["equilibria", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("$.lambda"));

    std::fs::write(&cfg, r#"{"grid": 255}"#).unwrap();
    let out = nlci(&["equilibria", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field `grid`"));
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nlci"))
        .args(["equilibria", "--grid", "63", "--out"])
        .arg(dir.path())
        .env("NONLOCAL_CI_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn equilibria_profiles_are_plotted_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlci(&["equilibria", "--grid", "255", "--lambda", "6"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("equilibria.csv"));
    let labels: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(labels, ["0", "phi1+", "phi1-", "phi2+", "phi2-"]);
    assert!(rows.iter().all(|r| r[7] == "true"));

    let svg = std::fs::read_to_string(dir.path().join("profiles.svg")).unwrap();
    assert_eq!(svg.matches("data-series=").count(), 5);
    let ys = polyline_ys(&svg);
    let profile = csv_rows(&dir.path().join("profile_phi2p.csv"));
    let table: Vec<f64> = profile.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(ys[3], table);
}

#[test]
fn scan_curves_match_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlci(&["scan", "--grid", "255", "--lambda", "12"], dir.path());
    assert!(out.status.success());
    let rows = csv_rows(&dir.path().join("scan_phi2p.csv"));
    assert_eq!(rows.len(), 41);
    let svg = std::fs::read_to_string(dir.path().join("scan_phi2p.svg")).unwrap();
    let ys = polyline_ys(&svg);
    for k in 0..8 {
        let column: Vec<f64> = rows.iter().map(|r| r[k + 1].parse().unwrap()).collect();
        assert_eq!(ys[k], column);
        assert!(column.windows(2).all(|w| w[1] >= w[0] - 1e-8));
    }
    assert!(dir.path().join("scan_phi3p.csv").exists());
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        for cmd in ["equilibria", "spectrum", "flow", "probe"] {
            let out = nlci(&[cmd, "--grid", "127", "--seed", "4"], dir);
            assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
    let mut compared = 0;
    for entry in std::fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        let name = name.to_str().unwrap();
        if name.ends_with(".csv") || name.ends_with(".json") {
            let x = std::fs::read(a.path().join(name)).unwrap();
            let y = std::fs::read(b.path().join(name)).unwrap();
            assert_eq!(x, y, "{name} differs");
            compared += 1;
        }
    }
    assert!(compared >= 10);
}

#[test]
fn coarse_grid_flags_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlci(&["verify", "--grid", "3"], dir.path());
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verification.json")).unwrap()).unwrap();
    let claims = report["claims"].as_array().unwrap();
    assert_eq!(claims.len(), 14);
    for c in claims {
        let expected = if c["id"] == "AC09" { "pass" } else { "margin" };
        assert_eq!(c["status"], expected, "{}", c["id"]);
    }
}

#[test]
fn exceptional_lambda_is_a_margin_case() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"lambda": 4, "grid_n": 511}"#).unwrap();
    let out = nlci(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verification.json")).unwrap()).unwrap();
    let claims = report["claims"].as_array().unwrap();
    let ids: Vec<&str> = claims.iter().map(|c| c["id"].as_str().unwrap()).collect();
    for i in 1..=13 {
        assert_eq!(ids.iter().filter(|&&id| id == format!("AC{i:02}")).count(), 1);
    }
    let hyp = claims.iter().find(|c| c["id"] == "HYP").unwrap();
    assert_eq!(hyp["status"], "margin");
    assert!(out.status.success(), "{}", std::fs::read_to_string(dir.path().join("verification.txt")).unwrap());
}
