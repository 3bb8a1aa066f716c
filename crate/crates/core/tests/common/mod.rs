//! Synthetic star-shaped junctions built directly in a tile's planar frame.
#![allow(dead_code)]

use roadforge_core::geom::{Point, Polyline};
use roadforge_core::maptile::{Bounds, LaneConnection, LaneDirection, LaneGeom, LaneGroup, LaneWidths, MapTile, TopoLink, TopoNode};
use roadforge_core::projection::{unproject, LonLat};

pub struct Star {
    pub headings_deg: Vec<f64>,
    pub span: f64,
    pub link_len: f64,
    /// Width of the intersection lane from arm `i` to arm `j`.
    pub width: Box<dyn Fn(usize, usize) -> f64>,
}

impl Star {
    pub fn new(headings_deg: &[f64], span: f64, width: f64) -> Self {
        Star { headings_deg: headings_deg.to_vec(), span, link_len: 60.0, width: Box::new(move |_, _| width) }
    }
}

fn dir(deg: f64) -> Point {
    Point::from_heading(deg.to_radians())
}

fn line(a: Point, b: Point, step: f64) -> Vec<Point> {
    let n = (a.distance(b) / step).ceil().max(1.0) as usize;
    (0..=n).map(|i| a.lerp(b, i as f64 / n as f64)).collect()
}

fn bezier(p0: Point, p1: Point, p2: Point, p3: Point, n: usize) -> Vec<Point> {
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let m = 1.0 - t;
            p0 * (m * m * m) + p1 * (3.0 * m * m * t) + p2 * (3.0 * m * t * t) + p3 * (t * t * t)
        })
        .collect()
}

fn poly(pts: Vec<Point>) -> Polyline {
    Polyline::new(pts).unwrap()
}

pub fn empty_tile(id: &str, anchor: LonLat, half_extent_m: f64) -> MapTile {
    let c = unproject(Point::new(half_extent_m, half_extent_m), anchor).unwrap();
    let (dlon, dlat) = (c.lon - anchor.lon, c.lat - anchor.lat);
    MapTile {
        tile_id: id.into(),
        bounds: Bounds { min_lon: anchor.lon - dlon, min_lat: anchor.lat - dlat, max_lon: anchor.lon + dlon, max_lat: anchor.lat + dlat },
        anchor,
        nodes: vec![],
        links: vec![],
        lane_groups: vec![],
    }
}

/// Adds one junction at `center`: a link per arm (center outwards), one
/// lane each way on it, and an intersection lane for every ordered arm pair
/// starting exactly `span` from the center.
pub fn add_star(tile: &mut MapTile, prefix: &str, center: Point, s: &Star) {
    let w_road = (s.width)(0, 1);
    let arms: Vec<Point> = s.headings_deg.iter().map(|&h| dir(h)).collect();
    let cid = format!("{prefix}c");
    tile.nodes.push(TopoNode { id: cid.clone(), position: center });
    for (i, &d) in arms.iter().enumerate() {
        let far = center + d * s.link_len;
        tile.nodes.push(TopoNode { id: format!("{prefix}n{i}"), position: far });
        tile.links.push(TopoLink {
            id: format!("{prefix}l{i}"),
            start_node: cid.clone(),
            end_node: format!("{prefix}n{i}"),
            geometry: poly(line(center, far, 5.0)),
            speed_limit: Some(50.0),
            has_traffic_signal: false,
            functional_class: 3,
        });
        let near = center + d * s.span;
        let n = d.perp();
        tile.lane_groups.push(LaneGroup {
            id: format!("{prefix}g{i}"),
            link_ids: vec![format!("{prefix}l{i}")],
            lanes: vec![
                LaneGeom {
                    id: format!("{prefix}ln{i}_out"),
                    centerline: poly(line(near - n * (w_road / 2.0), far - n * (w_road / 2.0), 5.0)),
                    widths: LaneWidths::Constant(w_road),
                    direction: LaneDirection::Forward,
                    is_intersection_lane: false,
                },
                LaneGeom {
                    id: format!("{prefix}ln{i}_in"),
                    centerline: poly(line(near + n * (w_road / 2.0), far + n * (w_road / 2.0), 5.0)),
                    widths: LaneWidths::Constant(w_road),
                    direction: LaneDirection::Backward,
                    is_intersection_lane: false,
                },
            ],
            connections: vec![],
        });
    }
    for (i, &di) in arms.iter().enumerate() {
        let mut lanes = Vec::new();
        let mut connections = Vec::new();
        for (j, &dj) in arms.iter().enumerate() {
            if i == j {
                continue;
            }
            let w = (s.width)(i, j);
            let a = center + di * s.span + di.perp() * (w / 2.0);
            let b = center + dj * s.span - dj.perp() * (w / 2.0);
            let c = 0.5 * s.span;
            let id = format!("{prefix}il{i}_{j}");
            lanes.push(LaneGeom {
                id: id.clone(),
                centerline: poly(bezier(a, a - di * c, b - dj * c, b, 24)),
                widths: LaneWidths::Constant(w),
                direction: LaneDirection::Forward,
                is_intersection_lane: true,
            });
            connections.push(LaneConnection { from_lane: format!("{prefix}ln{i}_in"), to_lane: id.clone() });
            connections.push(LaneConnection { from_lane: id, to_lane: format!("{prefix}ln{j}_out") });
        }
        tile.lane_groups.push(LaneGroup { id: format!("{prefix}ig{i}"), link_ids: vec![format!("{prefix}l{i}")], lanes, connections });
    }
}

/// A tile holding a single junction at the anchor.
pub fn star_tile(id: &str, anchor: LonLat, s: &Star) -> MapTile {
    let mut t = empty_tile(id, anchor, s.link_len + 50.0);
    add_star(&mut t, &format!("{id}_"), Point::new(0.0, 0.0), s);
    t
}

/// A `cols × rows` grid of junctions `pitch` metres apart in one tile.
pub fn grid_tile(id: &str, anchor: LonLat, cols: usize, rows: usize, pitch: f64, s: &Star) -> MapTile {
    let half = 0.5 * pitch * cols.max(rows) as f64 + s.link_len + 50.0;
    let mut t = empty_tile(id, anchor, half);
    for r in 0..rows {
        for c in 0..cols {
            let center = Point::new((c as f64 - 0.5 * (cols - 1) as f64) * pitch, (r as f64 - 0.5 * (rows - 1) as f64) * pitch);
            add_star(&mut t, &format!("{id}_{r}_{c}_"), center, s);
        }
    }
    t
}
