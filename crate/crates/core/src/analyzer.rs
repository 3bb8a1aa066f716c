//! Intersection categorization and parameter computation.
//!
//! Two arms form a through pair when their headings differ by 150°–210°
//! (inclusive). Three-arm junctions are `T3` with a through pair and `Y3`
//! without; four-arm junctions are `X4` with two disjoint through pairs and
//! `K4` otherwise. Arms are then renumbered canonically and every per-arm
//! and per-lane parameter is computed in meters, degrees and 1/m.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::extractor::{AssociatedLane, IncidentLink, RawIntersection};
use crate::geom::{compute_polyline_curvature, normalize_angle, normalize_angle_positive, Polyline, DEFAULT_CURVATURE_SPACING};
use crate::maptile::LaneDirection;

pub const THROUGH_MIN_DEG: f64 = 150.0;
pub const THROUGH_MAX_DEG: f64 = 210.0;
/// Slack on the inclusive bounds, absorbing radian/degree round-off.
const BOUND_EPS_DEG: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IntersectionType {
    T3,
    Y3,
    X4,
    K4,
}

impl IntersectionType {
    pub fn arm_count(self) -> usize {
        match self {
            IntersectionType::T3 | IntersectionType::Y3 => 3,
            IntersectionType::X4 | IntersectionType::K4 => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IntersectionType::T3 => "T3",
            IntersectionType::Y3 => "Y3",
            IntersectionType::X4 => "X4",
            IntersectionType::K4 => "K4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "T3" => Some(IntersectionType::T3),
            "Y3" => Some(IntersectionType::Y3),
            "X4" => Some(IntersectionType::X4),
            "K4" => Some(IntersectionType::K4),
            _ => None,
        }
    }
}

/// Reason an intersection is left out of the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkipReason {
    /// Fewer than three or more than four arms.
    ArmCount(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    pub curvature_spacing: f64,
    /// |Δθ| above this (radians) counts as a turn.
    pub heading_threshold: f64,
    /// Lanes whose max |κ| exceeds this are flagged suspect.
    pub suspect_curvature: f64,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            curvature_spacing: DEFAULT_CURVATURE_SPACING,
            heading_threshold: PI / 6.0,
            suspect_curvature: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub index: usize,
    pub link_id: String,
    /// Radians in [0, 2π), pointing away from the center.
    pub heading: f64,
    /// Counterclockwise gap to the next arm, degrees.
    pub intersecting_angle: f64,
    pub intersection_span: f64,
    /// Set when no intersection lane starts from this arm.
    pub span_missing: bool,
    pub link_length: f64,
    pub link_geometry: Polyline,
    pub speed_limit: Option<f64>,
    pub incoming_lanes: u32,
    pub outgoing_lanes: u32,
    pub lane_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneRecord {
    pub lane_id: String,
    pub from_arm: usize,
    pub to_arm: usize,
    /// −1 left, 0 straight, +1 right (driving direction).
    pub heading_class: i8,
    pub mean_width: f64,
    pub start_width: f64,
    pub end_width: f64,
    /// Largest |κ| along the lane; absent for lanes with < 3 points.
    pub max_curvature: Option<f64>,
    /// Arc-length-weighted mean of signed κ.
    pub mean_curvature: Option<f64>,
    pub suspect: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzedIntersection {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: IntersectionType,
    pub traffic_signals: bool,
    pub arms: Vec<Arm>,
    pub lanes: Vec<LaneRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SkipCounters {
    pub too_few_arms: usize,
    pub too_many_arms: usize,
    /// Intersection lanes without enough points for curvature.
    pub curvature_unavailable: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub intersections: Vec<AnalyzedIntersection>,
    pub skipped: SkipCounters,
}

/// Normalized absolute heading difference in degrees, in [0, 360).
fn heading_diff_deg(a: f64, b: f64) -> f64 {
    normalize_angle_positive(a - b).to_degrees()
}

/// Whether two arm headings (radians) form one continuous road.
pub fn is_through_pair(a: f64, b: f64) -> bool {
    let d = heading_diff_deg(a, b);
    (THROUGH_MIN_DEG - BOUND_EPS_DEG..=THROUGH_MAX_DEG + BOUND_EPS_DEG).contains(&d)
}

fn pair_weight(a: f64, b: f64) -> f64 {
    30.0 - (heading_diff_deg(a, b) - 180.0).abs()
}

/// Best set of disjoint through pairs: most pairs first, then the pairs
/// closest to 180° in total.
fn through_pairs(headings: &[f64]) -> Vec<(usize, usize)> {
    let n = headings.len();
    let qualifies = |i: usize, j: usize| is_through_pair(headings[i], headings[j]);
    let mut best: Vec<(usize, usize)> = Vec::new();
    let mut best_w = f64::NEG_INFINITY;
    let mut consider = |pairs: Vec<(usize, usize)>| {
        let w: f64 = pairs.iter().map(|&(i, j)| pair_weight(headings[i], headings[j])).sum();
        if pairs.len() > best.len() || (pairs.len() == best.len() && w > best_w) {
            best_w = w;
            best = pairs;
        }
    };
    for i in 0..n {
        for j in i + 1..n {
            if !qualifies(i, j) {
                continue;
            }
            consider(alloc::vec![(i, j)]);
            for k in 0..n {
                for l in k + 1..n {
                    if k != i && k != j && l != i && l != j && k > i && qualifies(k, l) {
                        consider(alloc::vec![(i, j), (k, l)]);
                    }
                }
            }
        }
    }
    best
}

/// Classifies a junction from its arm headings (radians).
pub fn classify_headings(headings: &[f64]) -> Result<IntersectionType, SkipReason> {
    let pairs = through_pairs(headings);
    match headings.len() {
        3 if pairs.is_empty() => Ok(IntersectionType::Y3),
        3 => Ok(IntersectionType::T3),
        4 if pairs.len() == 2 => Ok(IntersectionType::X4),
        4 => Ok(IntersectionType::K4),
        n => Err(SkipReason::ArmCount(n)),
    }
}

pub fn classify(inter: &RawIntersection) -> Result<IntersectionType, SkipReason> {
    let hs: Vec<f64> = inter.incident_links.iter().map(|l| l.heading).collect();
    classify_headings(&hs)
}

fn ccw_gap(from: f64, to: f64) -> f64 {
    normalize_angle_positive(to - from)
}

/// Canonical arm order as indices into `headings`.
///
/// T3: the stub is index 1, index 0 is the through arm met first when
/// sweeping counterclockwise from the stub, index 2 the other. Other types:
/// index 0 is the arm closest to 180°, the rest follow counterclockwise.
pub fn canonical_order(headings: &[f64], kind: IntersectionType) -> Vec<usize> {
    if kind == IntersectionType::T3 {
        if let Some(&(a, b)) = through_pairs(headings).first() {
            let stub = (0..3).find(|&i| i != a && i != b).unwrap_or(0);
            let (first, second) = if ccw_gap(headings[stub], headings[a]) <= ccw_gap(headings[stub], headings[b]) {
                (a, b)
            } else {
                (b, a)
            };
            return alloc::vec![first, stub, second];
        }
    }
    let start = (0..headings.len())
        .min_by(|&i, &j| {
            let di = (headings[i] - PI).abs();
            let dj = (headings[j] - PI).abs();
            di.total_cmp(&dj).then(headings[i].total_cmp(&headings[j]))
        })
        .unwrap_or(0);
    let mut order: Vec<usize> = (0..headings.len()).collect();
    order.sort_by(|&i, &j| {
        ccw_gap(headings[start], headings[i])
            .total_cmp(&ccw_gap(headings[start], headings[j]))
            .then(i.cmp(&j))
    });
    order
}

/// Arms in canonical order with heading, geometry and link metadata set;
/// angles, spans and lane counts are filled by [`compute_arm_parameters`].
pub fn canonicalize_arms(inter: &RawIntersection, kind: IntersectionType) -> Vec<Arm> {
    let hs: Vec<f64> = inter.incident_links.iter().map(|l| l.heading).collect();
    canonical_order(&hs, kind)
        .into_iter()
        .enumerate()
        .map(|(index, k)| {
            let l: &IncidentLink = &inter.incident_links[k];
            let (incoming, outgoing) = approach_lane_counts(inter, l);
            Arm {
                index,
                link_id: l.link_id.clone(),
                heading: l.heading,
                intersecting_angle: 0.0,
                intersection_span: 0.0,
                span_missing: true,
                link_length: l.geometry.length(),
                link_geometry: l.geometry.clone(),
                speed_limit: l.speed_limit,
                incoming_lanes: incoming,
                outgoing_lanes: outgoing,
                lane_count: 0,
            }
        })
        .collect()
}

fn approach_lane_counts(inter: &RawIntersection, link: &IncidentLink) -> (u32, u32) {
    let (mut incoming, mut outgoing) = (0, 0);
    for a in inter.lanes.iter().filter(|a| !a.lane.is_intersection_lane && a.link_ids.contains(&link.link_id)) {
        let leaves = (a.lane.direction == LaneDirection::Forward) == link.starts_at_junction;
        if leaves {
            outgoing += 1;
        } else {
            incoming += 1;
        }
    }
    (incoming, outgoing)
}

/// Lane centerline in driving direction.
fn travel_line(a: &AssociatedLane) -> Polyline {
    match a.lane.direction {
        LaneDirection::Forward => a.lane.centerline.clone(),
        LaneDirection::Backward => a.lane.centerline.reversed(),
    }
}

fn angular_distance(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}

fn nearest_arm(arms: &[Arm], heading: f64) -> usize {
    arms.iter()
        .min_by(|x, y| angular_distance(x.heading, heading).total_cmp(&angular_distance(y.heading, heading)))
        .map_or(0, |a| a.index)
}

fn lane_arms(arms: &[Arm], a: &AssociatedLane, line: &Polyline) -> (usize, usize) {
    let pts = line.points();
    let start_travel = (pts[1] - pts[0]).angle();
    let end_travel = (pts[pts.len() - 1] - pts[pts.len() - 2]).angle();
    let linked: Vec<usize> = arms.iter().filter(|arm| a.link_ids.contains(&arm.link_id)).map(|arm| arm.index).collect();
    let from = if linked.len() == 1 {
        linked[0]
    } else {
        nearest_arm(arms, start_travel + PI)
    };
    (from, nearest_arm(arms, end_travel))
}

/// Fills intersecting angles, spans and per-arm lane counts.
pub fn compute_arm_parameters(inter: &RawIntersection, mut arms: Vec<Arm>) -> Vec<Arm> {
    let n = arms.len();
    for i in 0..n {
        let gap = (0..n)
            .filter(|&j| j != i)
            .map(|j| ccw_gap(arms[i].heading, arms[j].heading))
            .filter(|g| *g > 0.0)
            .fold(2.0 * PI, f64::min);
        arms[i].intersecting_angle = gap.to_degrees();
    }
    let mut spans: Vec<Option<f64>> = alloc::vec![None; n];
    let mut counts = alloc::vec![0u32; n];
    for a in inter.lanes.iter().filter(|a| a.lane.is_intersection_lane) {
        let line = travel_line(a);
        let (from, _) = lane_arms(&arms, a, &line);
        counts[from] += 1;
        let dir = crate::geom::Point::from_heading(arms[from].heading);
        let along = ((line.first() - inter.center).dot(dir)).max(0.0);
        spans[from] = Some(spans[from].map_or(along, |s: f64| s.min(along)));
    }
    for (arm, (span, count)) in arms.iter_mut().zip(spans.into_iter().zip(counts)) {
        arm.intersection_span = span.unwrap_or(0.0);
        arm.span_missing = span.is_none();
        arm.lane_count = count;
    }
    arms
}

/// One record per intersection lane. The second value counts lanes whose
/// curvature could not be estimated.
pub fn compute_lane_records(inter: &RawIntersection, arms: &[Arm], cfg: &AnalyzeConfig) -> (Vec<LaneRecord>, usize) {
    let mut missing = 0;
    let records = inter
        .lanes
        .iter()
        .filter(|a| a.lane.is_intersection_lane)
        .map(|a| {
            let line = travel_line(a);
            let (from_arm, to_arm) = lane_arms(arms, a, &line);
            let turn = line.total_turn();
            let heading_class = if turn > cfg.heading_threshold {
                -1
            } else if turn < -cfg.heading_threshold {
                1
            } else {
                0
            };
            let reversed = a.lane.direction == LaneDirection::Backward;
            let (w0, w1) = (a.lane.widths.first(), a.lane.widths.last());
            let (start_width, end_width) = if reversed { (w1, w0) } else { (w0, w1) };
            let profile = if line.len() >= 3 {
                compute_polyline_curvature(&line, cfg.curvature_spacing).ok()
            } else {
                None
            };
            if profile.is_none() {
                missing += 1;
            }
            let max_curvature = profile.as_ref().map(|p| p.max_abs());
            LaneRecord {
                lane_id: a.lane.id.clone(),
                from_arm,
                to_arm,
                heading_class,
                mean_width: a.lane.widths.mean(),
                start_width,
                end_width,
                max_curvature,
                mean_curvature: profile.as_ref().map(|p| p.weighted_mean()),
                suspect: max_curvature.is_some_and(|k| k > cfg.suspect_curvature),
            }
        })
        .collect();
    (records, missing)
}

/// Full analysis of one intersection.
pub fn analyze(inter: &RawIntersection, cfg: &AnalyzeConfig) -> Result<(AnalyzedIntersection, usize), SkipReason> {
    let kind = classify(inter)?;
    let arms = compute_arm_parameters(inter, canonicalize_arms(inter, kind));
    let (lanes, missing) = compute_lane_records(inter, &arms, cfg);
    Ok((
        AnalyzedIntersection {
            id: inter.id.clone(),
            kind,
            traffic_signals: inter.has_traffic_signal,
            arms,
            lanes,
        },
        missing,
    ))
}

/// Analyzes a corpus, counting skipped intersections by reason.
pub fn analyze_all(inters: &[RawIntersection], cfg: &AnalyzeConfig) -> AnalysisReport {
    let results: Vec<_> = inters.iter().map(|i| analyze(i, cfg)).collect();
    collect_report(results)
}

/// Single-owner reduction of per-intersection results, in input order.
pub fn collect_report(results: Vec<Result<(AnalyzedIntersection, usize), SkipReason>>) -> AnalysisReport {
    let mut report = AnalysisReport::default();
    for r in results {
        match r {
            Ok((a, missing)) => {
                report.skipped.curvature_unavailable += missing;
                report.intersections.push(a);
            }
            Err(SkipReason::ArmCount(n)) if n < 3 => report.skipped.too_few_arms += 1,
            Err(SkipReason::ArmCount(_)) => report.skipped.too_many_arms += 1,
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::maptile::{LaneGeom, LaneWidths};
    use crate::projection::LonLat;
    use alloc::format;
    use alloc::vec;

    fn rad(deg: &[f64]) -> Vec<f64> {
        deg.iter().map(|d| normalize_angle_positive(d.to_radians())).collect()
    }

    /// Straight 100 m links at the given headings, plus Bézier turn lanes for
    /// every ordered pair of distinct arms.
    pub(crate) fn synthetic(headings_deg: &[f64], span: f64, width: f64, mirror: bool) -> RawIntersection {
        let flip = |p: Point| if mirror { Point::new(p.x, -p.y) } else { p };
        let hs: Vec<f64> = headings_deg.iter().map(|h| h.to_radians()).collect();
        let links = hs
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let far = flip(Point::from_heading(*h) * 100.0);
                IncidentLink {
                    link_id: format!("l{i}"),
                    heading: normalize_angle_positive(far.angle()),
                    geometry: Polyline::new(vec![Point::default(), far]).unwrap(),
                    starts_at_junction: true,
                    far_node: format!("n{i}"),
                    speed_limit: Some(50.0),
                    has_traffic_signal: false,
                    functional_class: 4,
                }
            })
            .collect();
        let mut lanes = vec![];
        for (i, hi) in hs.iter().enumerate() {
            for (j, hj) in hs.iter().enumerate() {
                if i == j {
                    continue;
                }
                let ui = Point::from_heading(*hi);
                let uj = Point::from_heading(*hj);
                let s = ui * span + ui.perp() * (width / 2.0);
                let e = uj * span - uj.perp() * (width / 2.0);
                let din = -ui;
                let denom = din.cross(uj);
                let ctrl = if denom.abs() < 1e-9 {
                    (s + e) * 0.5
                } else {
                    let t = (e - s).cross(uj) / denom;
                    s + din * t
                };
                let pts = (0..=24)
                    .map(|k| {
                        let t = k as f64 / 24.0;
                        let a = s.lerp(ctrl, t);
                        let b = ctrl.lerp(e, t);
                        flip(a.lerp(b, t))
                    })
                    .collect();
                lanes.push(AssociatedLane {
                    group_id: format!("g{i}"),
                    link_ids: vec![format!("l{i}")],
                    lane: LaneGeom {
                        id: format!("lane{i}{j}"),
                        centerline: Polyline::new(pts).unwrap(),
                        widths: LaneWidths::Constant(width),
                        direction: LaneDirection::Forward,
                        is_intersection_lane: true,
                    },
                });
            }
        }
        RawIntersection {
            id: "x".into(),
            anchor: LonLat::default(),
            center: Point::default(),
            node_ids: vec!["x".into()],
            incident_links: links,
            intersection_lane_groups: vec![],
            lanes,
            has_traffic_signal: false,
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_headings(&rad(&[0.0, 90.0, 180.0])), Ok(IntersectionType::T3));
        assert_eq!(classify_headings(&rad(&[0.0, 120.0, 240.0])), Ok(IntersectionType::Y3));
        assert_eq!(classify_headings(&rad(&[0.0, 90.0, 180.0, 270.0])), Ok(IntersectionType::X4));
        assert_eq!(classify_headings(&rad(&[0.0, 60.0, 180.0, 300.0])), Ok(IntersectionType::K4));
        assert_eq!(classify_headings(&rad(&[0.0, 90.0])), Err(SkipReason::ArmCount(2)));
        assert_eq!(classify_headings(&rad(&[0.0, 72.0, 144.0, 216.0, 288.0])), Err(SkipReason::ArmCount(5)));
    }

    #[test]
    fn inclusive_bounds() {
        let h = rad(&[0.0, 150.0, 210.0, 149.9, 210.1]);
        assert!(is_through_pair(h[0], h[1]));
        assert!(is_through_pair(h[0], h[2]));
        assert!(!is_through_pair(h[0], h[3]));
        assert!(!is_through_pair(h[0], h[4]));
    }

    #[test]
    fn overlapping_candidates_do_not_double_count() {
        // 0–170 and 0–190 both qualify but share arm 0; 170–350 and 190–10
        // are the only disjoint completion.
        let h = rad(&[0.0, 170.0, 190.0, 350.0]);
        let pairs = through_pairs(&h);
        assert_eq!(pairs.len(), 2);
        let used: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        let mut sorted = used.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 4);
    }

    #[test]
    fn canonical_t_and_x() {
        let t = rad(&[0.0, 90.0, 180.0]);
        let order = canonical_order(&t, IntersectionType::T3);
        assert_eq!(order, vec![2, 1, 0]);
        let x = rad(&[0.0, 90.0, 180.0, 270.0]);
        let order = canonical_order(&x, IntersectionType::X4);
        let degs: Vec<f64> = order.iter().map(|&i| libm::round(x[i].to_degrees())).collect();
        assert_eq!(degs, vec![180.0, 270.0, 0.0, 90.0]);
    }

    #[test]
    fn canonical_order_ignores_input_permutation() {
        let base = [10.0, 95.0, 185.0, 280.0];
        let perm = [185.0, 10.0, 280.0, 95.0];
        let a = canonicalize_arms(&synthetic(&base, 7.0, 3.5, false), IntersectionType::X4);
        let b = canonicalize_arms(&synthetic(&perm, 7.0, 3.5, false), IntersectionType::X4);
        let ha: Vec<f64> = a.iter().map(|x| x.heading).collect();
        let hb: Vec<f64> = b.iter().map(|x| x.heading).collect();
        assert_eq!(ha, hb);
    }

    #[test]
    fn perpendicular_x_angles_and_spans() {
        let inter = synthetic(&[0.0, 90.0, 180.0, 270.0], 7.0, 3.5, false);
        let (a, missing) = analyze(&inter, &AnalyzeConfig::default()).unwrap();
        assert_eq!(missing, 0);
        assert_eq!(a.kind, IntersectionType::X4);
        for arm in &a.arms {
            assert!((arm.intersecting_angle - 90.0).abs() < 1e-9);
            assert!((arm.intersection_span - 7.0).abs() < 1e-6);
            assert!(!arm.span_missing);
            assert_eq!(arm.lane_count, 3);
            assert!((arm.link_length - 100.0).abs() < 1e-9);
        }
        let sum: f64 = a.arms.iter().map(|x| x.intersecting_angle).sum();
        assert!((sum - 360.0).abs() < 1e-6);
    }

    #[test]
    fn t_junction_angles() {
        let inter = synthetic(&[0.0, 90.0, 180.0], 7.0, 3.5, false);
        let (a, _) = analyze(&inter, &AnalyzeConfig::default()).unwrap();
        let mut angles: Vec<f64> = a.arms.iter().map(|x| libm::round(x.intersecting_angle)).collect();
        angles.sort_by(f64::total_cmp);
        assert_eq!(angles, vec![90.0, 90.0, 180.0]);
        assert!((a.arms[1].heading - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn arm_without_lanes_flags_missing_span() {
        let mut inter = synthetic(&[0.0, 90.0, 180.0, 270.0], 7.0, 3.5, false);
        inter.lanes.retain(|l| !l.link_ids.contains(&"l1".into()));
        let (a, _) = analyze(&inter, &AnalyzeConfig::default()).unwrap();
        let arm = a.arms.iter().find(|x| x.link_id == "l1").unwrap();
        assert!(arm.span_missing);
        assert_eq!(arm.intersection_span, 0.0);
        assert_eq!(arm.lane_count, 0);
    }

    fn single_lane(pts: Vec<Point>, width: f64) -> RawIntersection {
        let mut inter = synthetic(&[0.0, 90.0, 180.0, 270.0], 10.0, width, false);
        inter.lanes.truncate(1);
        inter.lanes[0].lane.centerline = Polyline::new(pts).unwrap();
        inter.lanes[0].link_ids.clear();
        inter
    }

    #[test]
    fn quarter_circle_right_turn() {
        // Enters from the east arm heading west, leaves north: a right turn
        // around (10, 10) with R = 10.
        let pts = (0..=32)
            .map(|k| {
                let t = -PI / 2.0 - (k as f64 / 32.0) * (PI / 2.0);
                Point::new(10.0 + 10.0 * libm::cos(t), 10.0 + 10.0 * libm::sin(t))
            })
            .collect();
        let inter = single_lane(pts, 3.5);
        let (recs, _) = compute_lane_records(&inter, &compute_arm_parameters(&inter, canonicalize_arms(&inter, IntersectionType::X4)), &AnalyzeConfig::default());
        let r = &recs[0];
        assert_eq!(r.heading_class, 1);
        assert!((r.max_curvature.unwrap() - 0.1).abs() < 0.002);
        assert!(r.mean_curvature.unwrap() < 0.0);
        assert!(!r.suspect);
    }

    #[test]
    fn straight_lane_and_constant_width() {
        let pts = (0..=20).map(|k| Point::new(10.0 - k as f64, 1.75)).collect();
        let inter = single_lane(pts, 3.5);
        let arms = compute_arm_parameters(&inter, canonicalize_arms(&inter, IntersectionType::X4));
        let (recs, _) = compute_lane_records(&inter, &arms, &AnalyzeConfig::default());
        let r = &recs[0];
        assert_eq!(r.heading_class, 0);
        assert!(r.max_curvature.unwrap() <= 1e-3);
        assert_eq!((r.mean_width, r.start_width, r.end_width), (3.5, 3.5, 3.5));
    }

    #[test]
    fn short_lane_has_no_curvature() {
        let inter = single_lane(vec![Point::new(10.0, 1.75), Point::new(-10.0, 1.75)], 3.5);
        let (a, missing) = analyze(&inter, &AnalyzeConfig::default()).unwrap();
        assert_eq!(missing, 1);
        assert_eq!(a.lanes[0].max_curvature, None);
    }

    #[test]
    fn tight_curvature_is_flagged() {
        let pts = (0..=16)
            .map(|k| {
                let t = k as f64 / 16.0 * PI / 2.0;
                Point::new(10.0 + libm::cos(t), libm::sin(t))
            })
            .collect();
        let inter = single_lane(pts, 3.5);
        let cfg = AnalyzeConfig {
            curvature_spacing: 0.1,
            ..AnalyzeConfig::default()
        };
        let (a, _) = analyze(&inter, &cfg).unwrap();
        assert!(a.lanes[0].suspect);
    }

    #[test]
    fn mirroring_flips_heading_classes() {
        let base = [5.0, 100.0, 178.0, 265.0];
        let cfg = AnalyzeConfig::default();
        let (a, _) = analyze(&synthetic(&base, 9.0, 3.5, false), &cfg).unwrap();
        let (b, _) = analyze(&synthetic(&base, 9.0, 3.5, true), &cfg).unwrap();
        assert_eq!(a.kind, b.kind);
        let ca: Vec<i8> = a.lanes.iter().map(|l| l.heading_class).collect();
        let cb: Vec<i8> = b.lanes.iter().map(|l| -l.heading_class).collect();
        assert_eq!(ca, cb);
        assert!(ca.contains(&1) && ca.contains(&-1) && ca.contains(&0));
    }

    #[test]
    fn left_turns_are_flatter_than_right_turns() {
        let cfg = AnalyzeConfig::default();
        let mut left = vec![];
        let mut right = vec![];
        for span in [6.0, 8.0, 10.0, 12.0, 15.0, 20.0] {
            let (a, _) = analyze(&synthetic(&[0.0, 90.0, 180.0, 270.0], span, 3.5, false), &cfg).unwrap();
            for l in a.lanes {
                match l.heading_class {
                    -1 => left.push(l.max_curvature.unwrap()),
                    1 => right.push(l.max_curvature.unwrap()),
                    _ => {}
                }
            }
        }
        let median = |v: &mut Vec<f64>| {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        assert!(median(&mut left) < median(&mut right));
    }

    #[test]
    fn analyze_all_counts_skips() {
        let mut two = synthetic(&[0.0, 180.0], 7.0, 3.5, false);
        two.id = "two".into();
        let five = synthetic(&[0.0, 72.0, 144.0, 216.0, 288.0], 7.0, 3.5, false);
        let ok = synthetic(&[0.0, 90.0, 180.0], 7.0, 3.5, false);
        let r = analyze_all(&[two, five, ok], &AnalyzeConfig::default());
        assert_eq!(r.intersections.len(), 1);
        assert_eq!(r.skipped.too_few_arms, 1);
        assert_eq!(r.skipped.too_many_arms, 1);
    }
}
