//! Intersection extraction from the road centerline graph.
//!
//! Tiles are merged by entity id (the first tile in id order wins on
//! duplicates), nodes of degree ≥ 3 become intersections, short links
//! between junction nodes are collapsed into one cluster, and lane groups
//! near each center are attached.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geom::{normalize_angle_positive, Point, Polyline};
use crate::maptile::{LaneGeom, LaneGroup, MapTile, TopoLink, TopoNode};
use crate::projection::{reframe, LonLat};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    /// Junction nodes joined by a link shorter than this are merged.
    pub merge_radius: f64,
    /// Lane groups with an intersection lane ending this close to the center
    /// are associated.
    pub assoc_radius: f64,
    /// Length of link polyline used to measure the approach heading.
    pub heading_reach: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            merge_radius: 15.0,
            assoc_radius: 50.0,
            heading_reach: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentLink {
    pub link_id: String,
    /// Direction pointing away from the center, radians in [0, 2π).
    pub heading: f64,
    /// Link polyline oriented outward, starting at the center.
    pub geometry: Polyline,
    /// True when the link's `start_node` is the junction end.
    pub starts_at_junction: bool,
    pub far_node: String,
    pub speed_limit: Option<f64>,
    pub has_traffic_signal: bool,
    pub functional_class: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociatedLane {
    pub group_id: String,
    pub link_ids: Vec<String>,
    pub lane: LaneGeom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawIntersection {
    pub id: String,
    /// Frame of every coordinate in this record.
    pub anchor: LonLat,
    pub center: Point,
    pub node_ids: Vec<String>,
    pub incident_links: Vec<IncidentLink>,
    pub intersection_lane_groups: Vec<String>,
    pub lanes: Vec<AssociatedLane>,
    pub has_traffic_signal: bool,
}

/// Id-merged view over a set of tiles.
pub struct Network<'a> {
    tiles: Vec<&'a MapTile>,
    nodes: BTreeMap<&'a str, (usize, &'a TopoNode)>,
    links: BTreeMap<&'a str, (usize, &'a TopoLink)>,
    groups: BTreeMap<&'a str, (usize, &'a LaneGroup)>,
    node_links: BTreeMap<&'a str, Vec<(&'a str, bool)>>,
    groups_by_link: BTreeMap<&'a str, Vec<&'a str>>,
    grid: LaneGrid<'a>,
}

/// Spatial hash of intersection-lane endpoints in a shared frame.
struct LaneGrid<'a> {
    anchor: LonLat,
    cell: f64,
    cells: BTreeMap<(i64, i64), Vec<&'a str>>,
}

impl<'a> LaneGrid<'a> {
    fn key(&self, p: Point) -> (i64, i64) {
        (
            libm::floor(p.x / self.cell) as i64,
            libm::floor(p.y / self.cell) as i64,
        )
    }

    fn to_shared(&self, p: Point, from: LonLat) -> Point {
        reframe(p, from, self.anchor)
    }

    fn query(&self, center: Point, radius: f64) -> BTreeSet<&'a str> {
        let (cx, cy) = self.key(center);
        let reach = libm::ceil(radius / self.cell) as i64;
        let mut out = BTreeSet::new();
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                if let Some(ids) = self.cells.get(&(cx + dx, cy + dy)) {
                    out.extend(ids.iter().copied());
                }
            }
        }
        out
    }
}

impl<'a> Network<'a> {
    pub fn build(tiles: &'a [MapTile], cell: f64) -> Self {
        let mut sorted: Vec<&MapTile> = tiles.iter().collect();
        sorted.sort_by(|a, b| a.tile_id.cmp(&b.tile_id));
        let mut nodes = BTreeMap::new();
        let mut links = BTreeMap::new();
        let mut groups = BTreeMap::new();
        for (ti, t) in sorted.iter().enumerate() {
            for n in &t.nodes {
                nodes.entry(n.id.as_str()).or_insert((ti, n));
            }
            for l in &t.links {
                links.entry(l.id.as_str()).or_insert((ti, l));
            }
            for g in &t.lane_groups {
                groups.entry(g.id.as_str()).or_insert((ti, g));
            }
        }
        let mut node_links: BTreeMap<&str, Vec<(&str, bool)>> = BTreeMap::new();
        for (id, (_, l)) in &links {
            if l.start_node == l.end_node || !nodes.contains_key(l.start_node.as_str()) || !nodes.contains_key(l.end_node.as_str()) {
                continue;
            }
            node_links.entry(l.start_node.as_str()).or_default().push((id, true));
            node_links.entry(l.end_node.as_str()).or_default().push((id, false));
        }
        let mut groups_by_link: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (id, (_, g)) in &groups {
            for l in &g.link_ids {
                groups_by_link.entry(l.as_str()).or_default().push(id);
            }
        }
        let anchor = sorted.first().map(|t| t.anchor).unwrap_or_default();
        let mut grid = LaneGrid {
            anchor,
            cell,
            cells: BTreeMap::new(),
        };
        for (id, (ti, g)) in &groups {
            if !g.has_intersection_lanes() {
                continue;
            }
            let from = sorted[*ti].anchor;
            let mut keys = BTreeSet::new();
            for lane in g.lanes.iter().filter(|l| l.is_intersection_lane) {
                for p in [lane.centerline.first(), lane.centerline.last()] {
                    keys.insert(grid.key(grid.to_shared(p, from)));
                }
            }
            for k in keys {
                grid.cells.entry(k).or_default().push(id);
            }
        }
        Network {
            tiles: sorted,
            nodes,
            links,
            groups,
            node_links,
            groups_by_link,
            grid,
        }
    }

    fn anchor_of(&self, tile: usize) -> LonLat {
        self.tiles[tile].anchor
    }

    fn node_pos(&self, id: &str, frame: LonLat) -> Point {
        let (ti, n) = self.nodes[id];
        reframe(n.position, self.anchor_of(ti), frame)
    }

    fn degree(&self, id: &str) -> usize {
        self.node_links.get(id).map_or(0, Vec::len)
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }
}

/// One intersection per junction node (or merged cluster) of degree ≥ 3,
/// with default configuration and no lane association.
pub fn extract_intersections(tiles: &[MapTile]) -> Vec<RawIntersection> {
    let cfg = ExtractConfig::default();
    let net = Network::build(tiles, cfg.assoc_radius);
    extract_intersections_in(&net, &cfg)
}

pub fn extract_intersections_in(net: &Network<'_>, cfg: &ExtractConfig) -> Vec<RawIntersection> {
    let junction_nodes: Vec<&str> = net
        .nodes
        .keys()
        .copied()
        .filter(|id| net.degree(id) >= 3)
        .collect();
    let index: BTreeMap<&str, usize> = junction_nodes.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let frame_of = |id: &str| net.anchor_of(net.nodes[id].0);

    // Candidate merges: short links between two junction nodes, shortest first.
    let mut candidates: Vec<(f64, &str, usize, usize)> = Vec::new();
    for (id, (_, l)) in &net.links {
        let (Some(&a), Some(&b)) = (index.get(l.start_node.as_str()), index.get(l.end_node.as_str())) else {
            continue;
        };
        if a == b {
            continue;
        }
        let len = l.geometry.length();
        if len < cfg.merge_radius {
            candidates.push((len, id, a, b));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(y.1)));

    let mut ds = DisjointSet {
        parent: (0..junction_nodes.len()).collect(),
    };
    let mut members: Vec<Vec<usize>> = (0..junction_nodes.len()).map(|i| alloc::vec![i]).collect();
    for (_, _, a, b) in candidates {
        let (ra, rb) = (ds.find(a), ds.find(b));
        if ra == rb {
            continue;
        }
        let mut merged: Vec<usize> = members[ra].iter().chain(&members[rb]).copied().collect();
        merged.sort_unstable();
        let frame = frame_of(junction_nodes[merged[0]]);
        let pts: Vec<Point> = merged.iter().map(|&m| net.node_pos(junction_nodes[m], frame)).collect();
        let c = centroid(&pts);
        if pts.iter().all(|p| p.distance(c) <= cfg.merge_radius) {
            let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
            ds.parent[drop] = keep;
            members[keep] = merged;
            members[drop].clear();
        }
    }

    let mut out = Vec::new();
    for (root, group) in members.iter().enumerate() {
        if ds.find(root) != root || group.is_empty() {
            continue;
        }
        let node_ids: Vec<&str> = group.iter().map(|&m| junction_nodes[m]).collect();
        if let Some(r) = build_intersection(net, &node_ids, cfg) {
            out.push(r);
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

fn centroid(pts: &[Point]) -> Point {
    let sum = pts.iter().fold(Point::default(), |acc, p| acc + *p);
    sum * (1.0 / pts.len() as f64)
}

fn build_intersection(net: &Network<'_>, node_ids: &[&str], cfg: &ExtractConfig) -> Option<RawIntersection> {
    let frame = net.anchor_of(net.nodes[node_ids[0]].0);
    let members: BTreeSet<&str> = node_ids.iter().copied().collect();
    let center = centroid(&node_ids.iter().map(|id| net.node_pos(id, frame)).collect::<Vec<_>>());

    let mut incident = Vec::new();
    for node in node_ids {
        for &(link_id, is_start) in net.node_links.get(node).map(Vec::as_slice).unwrap_or(&[]) {
            let (ti, link) = net.links[link_id];
            let far = if is_start { &link.end_node } else { &link.start_node };
            if members.contains(far.as_str()) {
                continue;
            }
            let from = net.anchor_of(ti);
            let mut pts: Vec<Point> = link.geometry.points().iter().map(|p| reframe(*p, from, frame)).collect();
            if !is_start {
                pts.reverse();
            }
            let at_node = Polyline::new(pts.clone()).ok()?;
            let heading = normalize_angle_positive(at_node.start_heading(cfg.heading_reach));
            if pts[0].distance(center) > 1e-9 {
                pts.insert(0, center);
            }
            pts.dedup();
            let geometry = Polyline::new(pts).ok()?;
            incident.push(IncidentLink {
                link_id: link.id.clone(),
                heading,
                geometry,
                starts_at_junction: is_start,
                far_node: far.clone(),
                speed_limit: link.speed_limit,
                has_traffic_signal: link.has_traffic_signal,
                functional_class: link.functional_class,
            });
        }
    }
    if incident.len() < 3 {
        return None;
    }
    incident.sort_by(|a, b| a.heading.total_cmp(&b.heading).then(a.link_id.cmp(&b.link_id)));
    let has_traffic_signal = incident.iter().any(|l| l.has_traffic_signal);
    Some(RawIntersection {
        id: String::from(node_ids[0]),
        anchor: frame,
        center,
        node_ids: node_ids.iter().map(|s| String::from(*s)).collect(),
        incident_links: incident,
        intersection_lane_groups: Vec::new(),
        lanes: Vec::new(),
        has_traffic_signal,
    })
}

/// Attaches lane groups: every group holding an intersection lane whose
/// centerline starts or ends within `radius` of the center, plus the
/// approach (non-intersection) groups of the incident links.
pub fn associate_lane_groups(mut inter: RawIntersection, net: &Network<'_>, radius: f64) -> RawIntersection {
    let mut chosen: BTreeSet<&str> = BTreeSet::new();
    for l in &inter.incident_links {
        for g in net.groups_by_link.get(l.link_id.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
            if !net.groups[g].1.has_intersection_lanes() {
                chosen.insert(g);
            }
        }
    }
    let shared_center = net.grid.to_shared(inter.center, inter.anchor);
    for g in net.grid.query(shared_center, radius * 1.05 + 1.0) {
        let (ti, group) = net.groups[g];
        let from = net.anchor_of(ti);
        let near = group.lanes.iter().filter(|l| l.is_intersection_lane).any(|l| {
            [l.centerline.first(), l.centerline.last()]
                .iter()
                .any(|p| reframe(*p, from, inter.anchor).distance(inter.center) <= radius)
        });
        if near {
            chosen.insert(g);
        }
    }

    inter.intersection_lane_groups = chosen
        .iter()
        .filter(|g| net.groups[*g].1.has_intersection_lanes())
        .map(|g| String::from(*g))
        .collect();
    inter.lanes = chosen
        .iter()
        .flat_map(|g| {
            let (ti, group) = net.groups[*g];
            let from = net.anchor_of(ti);
            let to = inter.anchor;
            group.lanes.iter().filter_map(move |lane| {
                let pts = lane.centerline.points().iter().map(|p| reframe(*p, from, to)).collect();
                Some(AssociatedLane {
                    group_id: group.id.clone(),
                    link_ids: group.link_ids.clone(),
                    lane: LaneGeom {
                        centerline: Polyline::new(pts).ok()?,
                        ..lane.clone()
                    },
                })
            })
        })
        .collect();
    inter
}

/// Full extraction: topology, lane association, and exclusive ownership of
/// intersection lane groups (a group claimed by several intersections stays
/// with the nearest center).
pub fn extract(tiles: &[MapTile], cfg: &ExtractConfig) -> Vec<RawIntersection> {
    let net = Network::build(tiles, cfg.assoc_radius);
    let raws = extract_intersections_in(&net, cfg);
    let associated = raws.into_iter().map(|r| associate_lane_groups(r, &net, cfg.assoc_radius)).collect();
    assign_shared_groups(associated)
}

/// Keeps each intersection lane group only at the intersection whose center
/// is nearest to one of the group's intersection-lane endpoints.
pub fn assign_shared_groups(mut inters: Vec<RawIntersection>) -> Vec<RawIntersection> {
    let mut best: BTreeMap<String, (f64, String)> = BTreeMap::new();
    for inter in &inters {
        for lane in inter.lanes.iter().filter(|l| l.lane.is_intersection_lane) {
            let d = lane
                .lane
                .centerline
                .first()
                .distance(inter.center)
                .min(lane.lane.centerline.last().distance(inter.center));
            let entry = best.entry(lane.group_id.clone()).or_insert((f64::INFINITY, String::new()));
            if d < entry.0 || (d == entry.0 && inter.id < entry.1) {
                *entry = (d, inter.id.clone());
            }
        }
    }
    for inter in &mut inters {
        let id = inter.id.clone();
        let owns = |g: &str| best.get(g).is_none_or(|(_, owner)| *owner == id);
        inter.lanes.retain(|l| !l.lane.is_intersection_lane || owns(&l.group_id));
        inter.intersection_lane_groups.retain(|g| owns(g));
    }
    inters
}
