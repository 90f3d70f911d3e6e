use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use flexswim::io::read_trajectory_csv;

fn flexswim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flexswim")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn simulate(config: Option<&str>, cycles: &str, out: &Path) -> Output {
    let mut args = vec!["simulate", "--cycles", cycles, "--out", out.to_str().unwrap()];
    if let Some(c) = config {
        args.extend(["--config", c]);
    }
    flexswim(&args)
}

const FAST: &str = r#"{"version": 1, "sim": {"dt": 0.0125}}"#;

fn count_class(svg: &roxmltree::Document, tag: &str, class: &str) -> usize {
    svg.descendants()
        .filter(|n| n.has_tag_name(tag) && n.attribute("class") == Some(class))
        .count()
}

#[test]
fn simulate_writes_reproducible_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), FAST);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(simulate(Some(&config), "6", &a).status.success());
    assert!(simulate(Some(&config), "6", &b).status.success());
    for f in ["trajectory.csv", "metrics.json", "trajectory.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    let text = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    let table = read_trajectory_csv(&text).unwrap();
    assert_eq!(&table.header[..6], ["t", "x", "y", "phi", "phase", "k"]);
    assert_eq!(table.header.len(), 6 + 24);
    assert_eq!(table.header[6], "theta_0_0");
    assert_eq!(table.rows.len(), 6 * 800 + 1);
    assert!(table.rows.iter().all(|r| r.len() == 30));
    // values survive a print/parse round trip
    for (line, row) in text.lines().skip(1).zip(&table.rows) {
        for (field, v) in line.split(',').zip(row) {
            let printed: f64 = format!("{v:.16e}").parse().unwrap();
            assert!((printed - field.parse::<f64>().unwrap()).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }

    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["mean_displacement_m_per_cycle"].as_f64().unwrap() > 0.0);

    let svg_text = fs::read_to_string(a.join("trajectory.svg")).unwrap();
    let svg = roxmltree::Document::parse(&svg_text).unwrap();
    assert_eq!(svg.root_element().tag_name().name(), "svg");
    assert_eq!(count_class(&svg, "g", "cycle-marker"), 6);
    assert!(svg.descendants().any(|n| n.has_tag_name("polyline")));
    assert!(svg_text.contains("x (m)") && svg_text.contains("y (m)"));
}

#[test]
fn stationary_run_draws_a_single_marker() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"version": 1, "gait": {"beta": 0.0}, "sim": {"dt": 0.05}}"#,
    );
    let out = dir.path().join("still");
    let run = simulate(Some(&config), "2", &out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let svg_text = fs::read_to_string(out.join("trajectory.svg")).unwrap();
    let svg = roxmltree::Document::parse(&svg_text).unwrap();
    assert_eq!(count_class(&svg, "circle", "tip-marker"), 1);
    assert_eq!(count_class(&svg, "g", "cycle-marker"), 0);
    assert!(!svg.descendants().any(|n| n.has_tag_name("polyline")));
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let run = simulate(Some(missing.to_str().unwrap()), "1", &dir.path().join("o"));
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("nope.json"));

    let bad = write_config(dir.path(), r#"{"version": 1, "gait": {"k_min": -1}}"#);
    let run = simulate(Some(&bad), "1", &dir.path().join("o"));
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("gait.k_min"));

    let typo = write_config(dir.path(), r#"{"version": 1, "flagela": []}"#);
    let run = simulate(Some(&typo), "1", &dir.path().join("o"));
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("flagella"));

    assert_eq!(flexswim(&["simulate"]).status.code(), Some(1));
    assert_eq!(flexswim(&["launch"]).status.code(), Some(1));
}

#[test]
fn compare_ranks_controlled_first() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), FAST);
    let out = dir.path().join("cmp");
    let run = flexswim(&[
        "compare", "--config", &config, "--cycles", "3",
        "--presets", "controlled_flexible,fully_flexible", "--out", out.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    let stdout = String::from_utf8_lossy(&run.stdout);
    let (c, f) = (stdout.find("controlled_flexible ").unwrap(), stdout.find("\nfully_flexible").unwrap());
    assert!(c < f);
    assert!(stdout.contains("controlled_flexible / fully_flexible"));
    assert!(out.join("comparison.json").exists());
}

#[test]
fn sweep_and_optimize_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), FAST);
    let out = dir.path().join("search");
    let o = out.to_str().unwrap();
    let run = flexswim(&[
        "sweep", "--config", &config, "--param", "duty", "--from", "0.3", "--to", "0.7", "--steps", "3", "--out", o,
    ]);
    assert!(run.status.success());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(out.join("sweep.json").exists());

    let run = flexswim(&[
        "optimize", "--config", &config, "--params", "duty", "--budget", "10", "--seed", "1", "--out", o,
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("optimize.json")).unwrap()).unwrap();
    assert!(doc.to_string().contains("duty"));

    let run = flexswim(&["sweep", "--param", "stiffness", "--from", "0", "--to", "1", "--steps", "2", "--out", o]);
    assert_eq!(run.status.code(), Some(2));
}
