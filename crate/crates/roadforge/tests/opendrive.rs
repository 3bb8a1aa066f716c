mod common;

use std::collections::BTreeSet;

use common::{sample_map, set_attr_after, shift};
use proptest::prelude::*;
use roadforge::odr::{emit_opendrive, num, DEFAULT_DATE};
use roadforge::odrcheck::{has_errors, validate, Finding, Rule, Severity};
use roadforge_core::netgen::{PlanMeta, PlanRoad, RoadPlan};
use roadforge_core::{GeomSegment, Pose};

fn rules(findings: &[Finding]) -> BTreeSet<Rule> {
    findings.iter().filter(|f| f.severity == Severity::Error).map(|f| f.rule).collect()
}

fn single_road() -> RoadPlan {
    RoadPlan {
        meta: PlanMeta { name: "single".into(), ..Default::default() },
        roads: vec![PlanRoad {
            id: "1".into(),
            junction: None,
            start: Pose::new(0.0, 0.0, 0.0),
            segments: vec![GeomSegment::line(100.0)],
            left_widths: vec![3.5],
            right_widths: vec![3.5],
            predecessor: None,
            successor: None,
            lane_links: Vec::new(),
            end_target: None,
        }],
        junctions: Vec::new(),
    }
}

#[test]
fn single_straight_road() {
    let (doc, xml) = emit_opendrive(&single_road()).unwrap();
    assert_eq!(doc.roads.len(), 1);
    assert!(xml.contains(r#"<header revMajor="1" revMinor="6" name="single" version="1" date="1970-01-01T00:00:00"/>"#));
    assert!(xml.contains(r#"length="1.0000000000000000e2""#));
    assert!(xml.contains("<line/>"));
    assert_eq!(doc.header.date, DEFAULT_DATE);
    assert!(validate(&xml).is_empty(), "{:?}", validate(&xml));
}

#[test]
fn numbers_round_trip_exactly() {
    for v in [0.1, -0.0, 1.0 / 3.0, 6371008.8, -1e-300, std::f64::consts::PI] {
        assert_eq!(num(v).parse::<f64>().unwrap(), if v == 0.0 { 0.0 } else { v });
    }
    assert_eq!(num(-0.0), "0.0000000000000000e0");
}

#[test]
fn cross_has_sixteen_roads_and_twelve_connections() {
    let xml = sample_map(1, 0);
    assert_eq!(xml.matches("<road ").count(), 16);
    assert_eq!(xml.matches("<connection ").count(), 12);
    assert_eq!(xml.matches("junction=\"J\"").count(), 12);
    assert!(validate(&xml).is_empty());
}

#[test]
fn geometry_gap_is_a_continuity_error() {
    let xml = set_attr_after(&sample_map(1, 0), "id=\"J_0_1_1\"", "x", 1, shift(0.01));
    assert_eq!(rules(&validate(&xml)), BTreeSet::from([Rule::R4]));
}

#[test]
fn dangling_reference_is_reported() {
    let xml = set_attr_after(&sample_map(1, 0), "<connection id=\"0\"", "incomingRoad", 0, |_| "77".into());
    let f = validate(&xml);
    assert_eq!(rules(&f), BTreeSet::from([Rule::R3]));
    assert!(f.iter().any(|f| f.message.contains("77")));
}

#[test]
fn duplicate_road_id_is_reported() {
    let xml = sample_map(1, 0);
    let a = xml.find("  <road name=\"1\"").unwrap();
    let b = xml[a..].find("  </road>\n").unwrap() + a + "  </road>\n".len();
    let copy = xml[a..b].to_string();
    let xml = format!("{}{}{}", &xml[..b], copy, &xml[b..]);
    assert_eq!(rules(&validate(&xml)), BTreeSet::from([Rule::R2]));
}

#[test]
fn non_monotone_s_is_reported() {
    let xml = sample_map(1, 0);
    let s1 = {
        let a = xml.find("id=\"J_0_1_1\"").unwrap();
        let k = " s=\"";
        let p = xml[a..].match_indices(k).nth(1).unwrap().0 + a + k.len();
        xml[p..p + xml[p..].find('"').unwrap()].to_string()
    };
    let xml = set_attr_after(&xml, "id=\"J_0_1_1\"", "s", 2, |_| s1.clone());
    assert_eq!(rules(&validate(&xml)), BTreeSet::from([Rule::R5]));
}

#[test]
fn length_mismatch_is_reported() {
    let xml = set_attr_after(&sample_map(1, 0), "<road name=\"J_0_1_1\"", "length", 0, shift(1.0));
    assert_eq!(rules(&validate(&xml)), BTreeSet::from([Rule::R6]));
}

#[test]
fn unreferenced_connecting_road_is_reported() {
    let xml = set_attr_after(&sample_map(1, 0), "<connection id=\"0\"", "connectingRoad", 0, |_| "J_0_2_1".into());
    assert!(rules(&validate(&xml)).contains(&Rule::R7));
}

#[test]
fn malformed_xml_is_one_structure_finding() {
    let f = validate("<OpenDRIVE><road></OpenDRIVE>");
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].rule, Rule::R1);
}

#[test]
fn findings_are_sorted() {
    let xml = set_attr_after(&sample_map(1, 0), "<road name=\"J_2_0_1\"", "length", 0, shift(1.0));
    let xml = set_attr_after(&xml, "<road name=\"J_0_1_1\"", "length", 0, shift(1.0));
    let f = validate(&xml);
    assert!(f.len() >= 2);
    assert!(f.windows(2).all(|w| w[0].id <= w[1].id));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn generated_maps_have_no_errors(seed in any::<u64>(), index in 0u64..10_000) {
        let f = validate(&sample_map(seed, index));
        prop_assert!(!has_errors(&f), "{:?}", f);
    }
}
