//! Neutral tile data model: a road centerline graph (nodes and links) with
//! routing and speed attributes, overlaid by lane groups carrying lane
//! centerlines and lane-to-lane connections.
//!
//! Coordinates are planar meters in the tile's local frame (see
//! [`crate::projection`]), anchored at the center of `bounds`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geom::{Point, Polyline};
use crate::projection::LonLat;

/// Maximum distance between a link's end vertex and its node.
pub const LINK_NODE_TOLERANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{entity}: {rule}: {detail}")]
pub struct ValidationError {
    /// Id of the offending node, link, lane group or lane.
    pub entity: String,
    pub rule: TileRule,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TileRule {
    DuplicateId,
    MissingNode,
    MissingLink,
    MissingLane,
    LinkEndpointMismatch,
    DegeneratePolyline,
    EmptyLaneGroup,
    EmptyLinkList,
    InvalidWidth,
    WidthCountMismatch,
    InvalidSpeedLimit,
    InvalidBounds,
}

impl core::fmt::Display for TileRule {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            TileRule::DuplicateId => "duplicate-id",
            TileRule::MissingNode => "missing-node",
            TileRule::MissingLink => "missing-link",
            TileRule::MissingLane => "missing-lane",
            TileRule::LinkEndpointMismatch => "link-endpoint-mismatch",
            TileRule::DegeneratePolyline => "degenerate-polyline",
            TileRule::EmptyLaneGroup => "empty-lane-group",
            TileRule::EmptyLinkList => "empty-link-list",
            TileRule::InvalidWidth => "invalid-width",
            TileRule::WidthCountMismatch => "width-count-mismatch",
            TileRule::InvalidSpeedLimit => "invalid-speed-limit",
            TileRule::InvalidBounds => "invalid-bounds",
        };
        f.write_str(s)
    }
}

fn violation(entity: &str, rule: TileRule, detail: impl Into<String>) -> ValidationError {
    ValidationError {
        entity: entity.to_string(),
        rule,
        detail: detail.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl Bounds {
    pub fn center(&self) -> LonLat {
        LonLat::new(
            0.5 * (self.min_lon + self.max_lon),
            0.5 * (self.min_lat + self.max_lat),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoNode {
    pub id: String,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoLink {
    pub id: String,
    pub start_node: String,
    pub end_node: String,
    pub geometry: Polyline,
    pub speed_limit: Option<f64>,
    pub has_traffic_signal: bool,
    pub functional_class: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaneDirection {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LaneWidths {
    Constant(f64),
    PerPoint(Vec<f64>),
}

impl LaneWidths {
    pub fn mean(&self) -> f64 {
        match self {
            LaneWidths::Constant(w) => *w,
            LaneWidths::PerPoint(ws) => ws.iter().sum::<f64>() / ws.len() as f64,
        }
    }

    pub fn first(&self) -> f64 {
        match self {
            LaneWidths::Constant(w) => *w,
            LaneWidths::PerPoint(ws) => ws[0],
        }
    }

    pub fn last(&self) -> f64 {
        match self {
            LaneWidths::Constant(w) => *w,
            LaneWidths::PerPoint(ws) => ws[ws.len() - 1],
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            LaneWidths::Constant(w) => core::slice::from_ref(w),
            LaneWidths::PerPoint(ws) => ws,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneGeom {
    pub id: String,
    pub centerline: Polyline,
    pub widths: LaneWidths,
    pub direction: LaneDirection,
    pub is_intersection_lane: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaneConnection {
    pub from_lane: String,
    pub to_lane: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneGroup {
    pub id: String,
    pub link_ids: Vec<String>,
    pub lanes: Vec<LaneGeom>,
    pub connections: Vec<LaneConnection>,
}

impl LaneGroup {
    pub fn has_intersection_lanes(&self) -> bool {
        self.lanes.iter().any(|l| l.is_intersection_lane)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapTile {
    pub tile_id: String,
    pub bounds: Bounds,
    /// Origin of the planar frame; the center of `bounds`.
    pub anchor: LonLat,
    pub nodes: Vec<TopoNode>,
    pub links: Vec<TopoLink>,
    pub lane_groups: Vec<LaneGroup>,
}

impl MapTile {
    pub fn node(&self, id: &str) -> Option<&TopoNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn link(&self, id: &str) -> Option<&TopoLink> {
        self.links.iter().find(|l| l.id == id)
    }

    /// Checks every structural invariant of the tile.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let b = &self.bounds;
        if !(b.min_lon <= b.max_lon && b.min_lat <= b.max_lat) {
            return Err(violation(&self.tile_id, TileRule::InvalidBounds, "min exceeds max"));
        }

        let mut node_ids = BTreeSet::new();
        for n in &self.nodes {
            if !node_ids.insert(n.id.as_str()) {
                return Err(violation(&n.id, TileRule::DuplicateId, "node id repeated"));
            }
        }

        let mut link_ids = BTreeSet::new();
        for l in &self.links {
            if !link_ids.insert(l.id.as_str()) {
                return Err(violation(&l.id, TileRule::DuplicateId, "link id repeated"));
            }
            let start = self.node(&l.start_node).ok_or_else(|| {
                violation(&l.id, TileRule::MissingNode, format!("start node \"{}\" not found", l.start_node))
            })?;
            let end = self.node(&l.end_node).ok_or_else(|| {
                violation(&l.id, TileRule::MissingNode, format!("end node \"{}\" not found", l.end_node))
            })?;
            let d0 = l.geometry.first().distance(start.position);
            let d1 = l.geometry.last().distance(end.position);
            if d0 > LINK_NODE_TOLERANCE_M || d1 > LINK_NODE_TOLERANCE_M {
                return Err(violation(
                    &l.id,
                    TileRule::LinkEndpointMismatch,
                    format!("geometry ends are {d0:.3} m / {d1:.3} m from their nodes"),
                ));
            }
            if let Some(v) = l.speed_limit {
                if !(v >= 0.0) {
                    return Err(violation(&l.id, TileRule::InvalidSpeedLimit, format!("{v} km/h")));
                }
            }
        }

        let mut group_ids = BTreeSet::new();
        let mut lane_ids = BTreeSet::new();
        for g in &self.lane_groups {
            if !group_ids.insert(g.id.as_str()) {
                return Err(violation(&g.id, TileRule::DuplicateId, "lane group id repeated"));
            }
            if g.link_ids.is_empty() {
                return Err(violation(&g.id, TileRule::EmptyLinkList, "lane group references no link"));
            }
            if let Some(missing) = g.link_ids.iter().find(|id| !link_ids.contains(id.as_str())) {
                return Err(violation(&g.id, TileRule::MissingLink, format!("link \"{missing}\" not found")));
            }
            if g.lanes.is_empty() {
                return Err(violation(&g.id, TileRule::EmptyLaneGroup, "lane group has no lanes"));
            }
            for lane in &g.lanes {
                if !lane_ids.insert(lane.id.as_str()) {
                    return Err(violation(&lane.id, TileRule::DuplicateId, "lane id repeated"));
                }
                if lane.widths.values().iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
                    return Err(violation(&lane.id, TileRule::InvalidWidth, "widths must be positive"));
                }
                if let LaneWidths::PerPoint(ws) = &lane.widths {
                    if ws.len() != lane.centerline.len() {
                        return Err(violation(
                            &lane.id,
                            TileRule::WidthCountMismatch,
                            format!("{} widths for {} centerline points", ws.len(), lane.centerline.len()),
                        ));
                    }
                }
            }
        }
        for g in &self.lane_groups {
            for c in &g.connections {
                for end in [&c.from_lane, &c.to_lane] {
                    if !lane_ids.contains(end.as_str()) {
                        return Err(violation(&g.id, TileRule::MissingLane, format!("lane \"{end}\" not found")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds a polyline, reporting failures against `entity`.
pub fn polyline_for(entity: &str, points: Vec<Point>) -> Result<Polyline, ValidationError> {
    Polyline::new(points).map_err(|e| violation(entity, TileRule::DegeneratePolyline, e.to_string()))
}
