mod common;

use common::{cli, set_attr_after, shift, template_path, tiles_dir};
use roadforge::cli::{findings_path, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};
use roadforge::odrcheck::Finding;
use roadforge::records::{read_analyzed, read_distributions, read_json};

fn s(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(cli(&[]).0, EXIT_USAGE);
    assert_eq!(cli(&["frob"]).0, EXIT_USAGE);
    assert_eq!(cli(&["extract", "--tiles", "x"]).0, EXIT_USAGE);
    assert_eq!(cli(&["--threads", "0", "extract", "--tiles", "x", "--out", "y"]).0, EXIT_USAGE);
    assert_eq!(cli(&["generate", "--template", "t", "--n", "0", "--seed", "1", "--out", "o"]).0, EXIT_USAGE);
    assert_eq!(cli(&["validate"]).0, EXIT_USAGE);
    let (code, _, err) = cli(&["analyze", "--in", "i", "--out", "o", "--filter", "nokey"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("key=value"), "{err}");
}

#[test]
fn help_succeeds() {
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, EXIT_OK);
    for sub in ["extract", "analyze", "generate", "validate"] {
        assert!(out.contains(sub), "{out}");
    }
}

#[test]
fn extract_then_analyze_fixtures() {
    let tmp = tempfile::tempdir().unwrap();
    let inter = tmp.path().join("fx.intersections.json");
    let (code, out, err) = cli(&["extract", "--tiles", s(&tiles_dir()), "--out", s(&inter)]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("extract: 4 tiles, 4 intersections"), "{out}");

    let dist = tmp.path().join("x4.distributions.json");
    let analyzed = tmp.path().join("x4.analyzed.json");
    let plots = tmp.path().join("plots");
    let (code, out, err) = cli(&[
        "analyze", "--in", s(&inter), "--out", s(&dist), "--filter", "type=X4", "--plots", s(&plots), "--analyzed", s(&analyzed),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("analyze: 4 intersections analyzed, 0 skipped"), "{out}");
    let ds = read_distributions(&dist).unwrap();
    assert!(!ds.is_empty());
    assert!(ds.iter().all(|d| d.filters.get("type") == Some("X4")));
    let angle = ds.iter().find(|d| d.parameter.as_str() == "intersecting_angle").unwrap();
    assert_eq!(angle.n, 4);
    assert!((angle.mean - 90.0).abs() < 1e-6);
    assert_eq!(std::fs::read_dir(&plots).unwrap().count(), ds.len());
    assert_eq!(read_analyzed(&analyzed).unwrap().intersections.len(), 4);
}

#[test]
fn unknown_filter_key_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let inter = tmp.path().join("i.json");
    assert_eq!(cli(&["extract", "--tiles", s(&tiles_dir()), "--out", s(&inter)]).0, EXIT_OK);
    let (code, _, err) = cli(&["analyze", "--in", s(&inter), "--out", s(&tmp.path().join("d.json")), "--filter", "bogus=1"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("bogus"));
}

#[test]
fn outputs_are_write_once_unless_forced() {
    let tmp = tempfile::tempdir().unwrap();
    let inter = tmp.path().join("i.json");
    let tiles = tiles_dir();
    let args = ["extract", "--tiles", s(&tiles), "--out", s(&inter)];
    assert_eq!(cli(&args).0, EXIT_OK);
    let (code, _, err) = cli(&args);
    assert_eq!(code, EXIT_FAILURE);
    assert!(err.contains("already exists"), "{err}");
    let mut forced = vec!["--force"];
    forced.extend(args);
    assert_eq!(cli(&forced).0, EXIT_OK);
}

#[test]
fn generate_and_validate_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("maps");
    let (code, stdout, err) =
        cli(&["--threads", "2", "generate", "--template", s(&template_path()), "--n", "3", "--seed", "42", "--out", s(&out), "--emit-tiles"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(stdout.starts_with("generate: 3 of 3 maps written, 0 failed, seed 42"), "{stdout}");
    assert!(out.join("map_0002.tile.json").exists());

    let maps: Vec<String> = (0..3).map(|i| s(&out.join(format!("map_{i:04}.xodr"))).to_string()).collect();
    let mut args = vec!["validate"];
    args.extend(maps.iter().map(String::as_str));
    let (code, stdout, _) = cli(&args);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.starts_with("validate: 3 files, 0 with errors, 0 errors"), "{stdout}");
    let f: Vec<Finding> = read_json(&findings_path(&out.join("map_0000.xodr"), None)).unwrap();
    assert!(f.is_empty());

    // A corrupted copy fails validation with exit code 1.
    let bad = tmp.path().join("bad.xodr");
    let xml = std::fs::read_to_string(&maps[0]).unwrap();
    std::fs::write(&bad, set_attr_after(&xml, "<road name=\"J_0_1_1\"", "length", 0, shift(1.0))).unwrap();
    let findings_dir = tmp.path().join("findings");
    let (code, stdout, _) = cli(&["validate", s(&bad), "--out", s(&findings_dir)]);
    assert_eq!(code, EXIT_FAILURE);
    assert!(stdout.contains("R6"), "{stdout}");
    assert!(findings_dir.join("bad.findings.json").exists());
}

#[test]
fn missing_input_file_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, stdout, err) = cli(&["validate", s(&tmp.path().join("absent.xodr"))]);
    assert_eq!(code, EXIT_FAILURE);
    assert!(err.contains("absent.xodr"));
    assert!(stdout.contains("1 i/o failures"), "{stdout}");
}

#[test]
fn findings_file_names() {
    use std::path::Path;
    assert_eq!(findings_path(Path::new("a/b/map.xodr"), None), Path::new("a/b/map.findings.json"));
    assert_eq!(findings_path(Path::new("a/map.xodr"), Some(Path::new("o"))), Path::new("o/map.findings.json"));
}

#[test]
fn generate_binds_variables_to_analyzed_distributions() {
    let tmp = tempfile::tempdir().unwrap();
    let (inter, dist) = (tmp.path().join("i.json"), tmp.path().join("d.json"));
    assert_eq!(cli(&["extract", "--tiles", s(&tiles_dir()), "--out", s(&inter)]).0, EXIT_OK);
    assert_eq!(cli(&["analyze", "--in", s(&inter), "--out", s(&dist)]).0, EXIT_OK);
    let template = tmp.path().join("t.xml");
    let xml = std::fs::read_to_string(template_path()).unwrap().replace(
        r#"<var id="w" type="normal" mu="3.5" sd="0.2"/>"#,
        r#"<var id="w" type="fromDist" parameter="lane_mean_width" filters="type=X4"/>"#,
    );
    std::fs::write(&template, xml).unwrap();
    let out = tmp.path().join("g");
    let args = ["generate", "--template", s(&template), "--n", "2", "--seed", "1", "--out", s(&out)];
    let (code, _, err) = cli(&[&args[..], &["--distributions", s(&dist)]].concat());
    assert_eq!(code, EXIT_OK, "{err}");
    let m: roadforge::generate::Manifest = read_json(&out.join("manifest.json")).unwrap();
    // Fixture lanes are all 3.5 m wide, so the fitted normal is degenerate.
    assert!(m.maps.iter().all(|e| e.bindings["w"] == 3.5));

    // Without the distributions the variable cannot be bound.
    let (code, _, err) = cli(&["--force", "generate", "--template", s(&template), "--n", "2", "--seed", "1", "--out", s(&out)]);
    assert_eq!(code, EXIT_FAILURE);
    assert!(err.contains("lane_mean_width"), "{err}");
}
