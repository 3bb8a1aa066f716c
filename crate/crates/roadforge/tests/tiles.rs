mod common;

use common::tiles_dir;
use proptest::prelude::*;
use roadforge::pipeline::{analyze_corpus, load_tiles, tile_paths};
use roadforge::tilefile::{parse_tile, read_tile, serialize_tile, TileError};
use roadforge_core::analyzer::{AnalyzeConfig, IntersectionType};
use roadforge_core::extractor::{extract, ExtractConfig};

fn fixture(name: &str) -> String {
    std::fs::read_to_string(tiles_dir().join(name)).unwrap()
}

#[test]
fn cross_fixture_counts() {
    let t = read_tile(&tiles_dir().join("x_junction_90.tile.json")).unwrap();
    assert_eq!((t.nodes.len(), t.links.len(), t.lane_groups.len()), (5, 4, 8));
    let lanes: usize = t.lane_groups.iter().flat_map(|g| &g.lanes).filter(|l| l.is_intersection_lane).count();
    assert_eq!(lanes, 12);
}

#[test]
fn cross_fixture_extracts_one_signalized_junction() {
    let t = read_tile(&tiles_dir().join("x_junction_90.tile.json")).unwrap();
    let inters = extract(&[t], &ExtractConfig::default());
    assert_eq!(inters.len(), 1);
    let x = &inters[0];
    assert!(x.has_traffic_signal);
    // Approach lanes on the four links plus the twelve movements.
    assert_eq!(x.lanes.len(), 20);
    assert_eq!(x.lanes.iter().filter(|l| l.lane.is_intersection_lane).count(), 12);
    let mut headings: Vec<f64> = x.incident_links.iter().map(|l| l.heading.to_degrees()).collect();
    headings.sort_by(f64::total_cmp);
    for (h, want) in headings.iter().zip([0.0, 90.0, 180.0, 270.0]) {
        assert!((h - want).abs() < 1e-6, "{headings:?}");
    }
}

#[test]
fn all_fixtures_classify_and_measure() {
    let tiles = load_tiles(&tile_paths(&tiles_dir()).unwrap()).unwrap();
    assert_eq!(tiles.len(), 4);
    let report = analyze_corpus(&extract(&tiles, &ExtractConfig::default()), &AnalyzeConfig::default());
    let mut kinds: Vec<&str> = report.intersections.iter().map(|i| i.kind.as_str()).collect();
    kinds.sort();
    assert_eq!(kinds, ["K4", "T3", "X4", "Y3"]);
    for i in &report.intersections {
        for a in &i.arms {
            assert!((a.intersection_span - 7.0).abs() < 1e-6, "{} {}", i.id, a.intersection_span);
        }
        if i.kind == IntersectionType::X4 {
            assert!(i.arms.iter().all(|a| (a.intersecting_angle - 90.0).abs() < 1e-6));
        }
    }
}

#[test]
fn serialization_round_trips() {
    for name in ["x_junction_90.tile.json", "t_junction.tile.json", "y_junction.tile.json", "k_junction.tile.json"] {
        let t = parse_tile(&fixture(name)).unwrap();
        let again = parse_tile(&serialize_tile(&t)).unwrap();
        assert_eq!(t, again, "{name}");
        assert_eq!(serialize_tile(&t), serialize_tile(&again));
    }
}

#[test]
fn syntax_errors_carry_a_position() {
    match parse_tile("{\n  \"tileId\": \n}") {
        Err(TileError::Syntax { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn dangling_node_reference_is_invalid() {
    let text = fixture("t_junction.tile.json").replacen("\"t_nc\"", "\"t_nowhere\"", 1);
    assert!(matches!(parse_tile(&text), Err(TileError::Invalid(_))));
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(read_tile(&tiles_dir().join("absent.tile.json")), Err(TileError::Io { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mutated_input_never_panics(pos in any::<prop::sample::Index>(), byte in any::<u8>(), cut in any::<bool>()) {
        let mut bytes = fixture("y_junction.tile.json").into_bytes();
        let i = pos.index(bytes.len());
        if cut {
            bytes.truncate(i);
        } else {
            bytes[i] = byte;
        }
        if let Ok(text) = String::from_utf8(bytes) {
            let _ = parse_tile(&text);
        }
    }
}
