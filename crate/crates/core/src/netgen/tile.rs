//! Rendering a resolved plan as a map tile, so that generated networks can
//! be fed back through extraction and analysis.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;
use alloc::{format, vec};

use super::{RoadLink, RoadPlan};
use crate::geom::{segment_pose_at, Point, Polyline, Pose};
use crate::maptile::{Bounds, LaneConnection, LaneDirection, LaneGeom, LaneGroup, LaneWidths, MapTile, TopoLink, TopoNode};
use crate::projection::{unproject, LonLat};

/// Spacing of sampled polylines, metres.
pub const TILE_SAMPLE_SPACING: f64 = 1.0;
/// Margin added around the plan extent when sizing the tile bounds, metres.
const BOUNDS_MARGIN_M: f64 = 50.0;

/// Poses along a segment chain, about `step` apart, including both ends.
pub fn sample_chain(start: Pose, segments: &[crate::GeomSegment], step: f64) -> Vec<Pose> {
    let mut out = vec![start];
    let mut pose = start;
    for seg in segments {
        let n = libm::ceil(seg.length / step).max(1.0) as usize;
        for i in 1..=n {
            out.push(segment_pose_at(pose, seg, seg.length * i as f64 / n as f64));
        }
        pose = *out.last().unwrap();
    }
    out
}

/// Points on the straight segment from `a` to `b`, excluding `a`.
fn straight(a: Point, b: Point, step: f64) -> Vec<Point> {
    let n = libm::ceil(a.distance(b) / step).max(1.0) as usize;
    (1..=n).map(|i| a.lerp(b, i as f64 / n as f64)).collect()
}

fn offset(poses: &[Pose], left: f64) -> Vec<Point> {
    poses.iter().map(|p| p.position() + Point::from_heading(p.heading).perp() * left).collect()
}

fn push_dedup(pts: &mut Vec<Point>, extra: impl IntoIterator<Item = Point>) {
    for p in extra {
        if pts.last().is_none_or(|q| q.distance(p) > 1e-9) {
            pts.push(p);
        }
    }
}

fn polyline(pts: Vec<Point>) -> Polyline {
    Polyline::new(pts).expect("sampled geometry has distinct consecutive points")
}

/// Builds a tile whose planar frame coincides with the plan frame, anchored
/// at `anchor`. Every id is prefixed with `prefix`.
pub fn plan_to_tile(plan: &RoadPlan, tile_id: &str, anchor: LonLat, prefix: &str) -> MapTile {
    let step = TILE_SAMPLE_SPACING;
    let node_id = |s: &str| format!("{prefix}n{s}");
    let link_id = |road: &str| format!("{prefix}l{road}");
    let group_id = |road: &str| format!("{prefix}g{road}");
    let lane_id = |road: &str, lane: i32| format!("{prefix}ln{road}_{lane}");

    let centers: BTreeMap<&str, Point> = plan.junctions.iter().map(|j| (j.id.as_str(), j.center)).collect();
    let mut nodes: Vec<TopoNode> = plan
        .junctions
        .iter()
        .map(|j| TopoNode { id: node_id(&format!("j{}", j.id)), position: j.center })
        .collect();
    let mut links = Vec::new();
    let mut groups = Vec::new();

    for road in plan.roads.iter().filter(|r| r.junction.is_none()) {
        let poses = sample_chain(road.start, &road.segments, step);
        let reference: Vec<Point> = poses.iter().map(Pose::position).collect();
        let junction_of = |l: &Option<RoadLink>| match l {
            Some(RoadLink::Junction(j)) => centers.get(j.as_str()).map(|c| (j.clone(), *c)),
            _ => None,
        };
        let mut pts = Vec::new();
        let start_node = match junction_of(&road.predecessor) {
            Some((j, c)) => {
                pts.push(c);
                push_dedup(&mut pts, straight(c, reference[0], step));
                node_id(&format!("j{j}"))
            }
            None => {
                let id = node_id(&format!("{}_start", road.id));
                nodes.push(TopoNode { id: id.clone(), position: reference[0] });
                id
            }
        };
        push_dedup(&mut pts, reference.iter().copied());
        let end_node = match junction_of(&road.successor) {
            Some((j, c)) => {
                let last = *reference.last().unwrap();
                push_dedup(&mut pts, straight(last, c, step));
                node_id(&format!("j{j}"))
            }
            None => {
                let id = node_id(&format!("{}_end", road.id));
                nodes.push(TopoNode { id: id.clone(), position: *reference.last().unwrap() });
                id
            }
        };
        links.push(TopoLink {
            id: link_id(&road.id),
            start_node,
            end_node,
            geometry: polyline(pts),
            speed_limit: None,
            has_traffic_signal: false,
            functional_class: 1,
        });

        let mut lanes = Vec::new();
        let mut inner = 0.0;
        for (j, w) in road.left_widths.iter().enumerate() {
            let mut line = offset(&poses, inner + w / 2.0);
            line.reverse();
            lanes.push(LaneGeom {
                id: lane_id(&road.id, j as i32 + 1),
                centerline: polyline(line),
                widths: LaneWidths::Constant(*w),
                direction: LaneDirection::Backward,
                is_intersection_lane: false,
            });
            inner += w;
        }
        let mut inner = 0.0;
        for (j, w) in road.right_widths.iter().enumerate() {
            lanes.push(LaneGeom {
                id: lane_id(&road.id, -(j as i32 + 1)),
                centerline: polyline(offset(&poses, -(inner + w / 2.0))),
                widths: LaneWidths::Constant(*w),
                direction: LaneDirection::Forward,
                is_intersection_lane: false,
            });
            inner += w;
        }
        groups.push(LaneGroup { id: group_id(&road.id), link_ids: vec![link_id(&road.id)], lanes, connections: Vec::new() });
    }

    for road in plan.roads.iter().filter(|r| r.junction.is_some()) {
        let Some(RoadLink::Road { id: incoming, .. }) = &road.predecessor else { continue };
        let poses = sample_chain(road.start, &road.segments, step);
        let w = road.right_widths.first().copied().unwrap_or(0.0);
        let own = lane_id(&road.id, -1);
        let mut connections = Vec::new();
        if let Some(ll) = road.lane_links.first() {
            if let Some(p) = ll.predecessor {
                connections.push(LaneConnection { from_lane: lane_id(incoming, p), to_lane: own.clone() });
            }
            if let (Some(s), Some(RoadLink::Road { id: outgoing, .. })) = (ll.successor, &road.successor) {
                connections.push(LaneConnection { from_lane: own.clone(), to_lane: lane_id(outgoing, s) });
            }
        }
        groups.push(LaneGroup {
            id: group_id(&road.id),
            link_ids: vec![link_id(incoming)],
            lanes: vec![LaneGeom {
                id: own,
                centerline: polyline(offset(&poses, -w / 2.0)),
                widths: LaneWidths::Constant(w),
                direction: LaneDirection::Forward,
                is_intersection_lane: true,
            }],
            connections,
        });
    }

    // Symmetric bounds keep the anchor at their center.
    let extent = links
        .iter()
        .flat_map(|l| l.geometry.points().iter())
        .chain(nodes.iter().map(|n| &n.position))
        .fold(0.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs()))
        + BOUNDS_MARGIN_M;
    let corner = unproject(Point::new(extent, extent), anchor).expect("anchor latitude is within range");
    let (dlon, dlat) = (corner.lon - anchor.lon, corner.lat - anchor.lat);
    MapTile {
        tile_id: tile_id.to_string(),
        bounds: Bounds {
            min_lon: anchor.lon - dlon,
            min_lat: anchor.lat - dlat,
            max_lon: anchor.lon + dlon,
            max_lat: anchor.lat + dlat,
        },
        anchor,
        nodes,
        links,
        lane_groups: groups,
    }
}
