//! `.tile.json` reading and writing.
//!
//! Coordinates are stored as `[lon, lat]` pairs and projected into the
//! tile's planar frame, anchored at the center of `bounds`, on load.

use std::collections::BTreeMap;
use std::path::Path;

use roadforge_core::geom::Point;
use roadforge_core::maptile::{
    polyline_for, Bounds, LaneConnection, LaneDirection, LaneGeom, LaneGroup, LaneWidths, MapTile, TileRule, TopoLink,
    TopoNode, ValidationError,
};
use roadforge_core::projection::{project_lonlat, unproject, LonLat};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum TileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid tile: {0}")]
    Invalid(#[from] ValidationError),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct FileBounds {
    min_lon: f64,
    min_lat: f64,
    max_lon: f64,
    max_lat: f64,
}

#[derive(Serialize, Deserialize)]
struct FileNode {
    id: String,
    lon: f64,
    lat: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct FileLink {
    id: String,
    start_node: String,
    end_node: String,
    shape: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize, Default)]
struct TopologyGeometry {
    #[serde(default)]
    nodes: Vec<FileNode>,
    #[serde(default)]
    links: Vec<FileLink>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RoutingAttribute {
    link_id: String,
    #[serde(default)]
    traffic_signal: bool,
    #[serde(default)]
    functional_class: u8,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct SpeedAttribute {
    link_id: String,
    speed_limit_kmh: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct FileLane {
    id: String,
    centerline: Vec<[f64; 2]>,
    widths_m: LaneWidths,
    direction: LaneDirection,
    #[serde(default)]
    is_intersection_lane: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct FileLaneGroup {
    id: String,
    link_ids: Vec<String>,
    lanes: Vec<FileLane>,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
struct LaneGeometryPolyline {
    #[serde(default)]
    lane_groups: Vec<FileLaneGroup>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct FileConnection {
    from_lane: String,
    to_lane: String,
}

#[derive(Serialize, Deserialize, Default)]
struct LaneTopology {
    #[serde(default)]
    connections: Vec<FileConnection>,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
struct Layers {
    #[serde(default)]
    topology_geometry: TopologyGeometry,
    #[serde(default)]
    routing_attributes: Vec<RoutingAttribute>,
    #[serde(default)]
    speed_attributes: Vec<SpeedAttribute>,
    #[serde(default)]
    lane_geometry_polyline: LaneGeometryPolyline,
    #[serde(default)]
    lane_topology: LaneTopology,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct TileFile {
    tile_id: String,
    bounds: FileBounds,
    #[serde(default)]
    layers: Layers,
}

fn invalid(entity: &str, rule: TileRule, detail: String) -> ValidationError {
    ValidationError { entity: entity.to_string(), rule, detail }
}

fn project_all(entity: &str, pts: &[[f64; 2]], anchor: LonLat) -> Result<Vec<Point>, ValidationError> {
    pts.iter()
        .map(|&[lon, lat]| {
            if !lon.is_finite() || !lat.is_finite() {
                return Err(invalid(entity, TileRule::InvalidBounds, format!("non-finite coordinate [{lon}, {lat}]")));
            }
            project_lonlat(lon, lat, anchor).map_err(|e| invalid(entity, TileRule::InvalidBounds, e.to_string()))
        })
        .collect()
}

/// Parses and validates a tile.
pub fn parse_tile(text: &str) -> Result<MapTile, TileError> {
    let file: TileFile = serde_json::from_str(text).map_err(|e| TileError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let b = &file.bounds;
    let bounds = Bounds { min_lon: b.min_lon, min_lat: b.min_lat, max_lon: b.max_lon, max_lat: b.max_lat };
    let finite = [b.min_lon, b.min_lat, b.max_lon, b.max_lat].iter().all(|v| v.is_finite());
    if !finite || b.min_lon >= b.max_lon || b.min_lat >= b.max_lat || b.min_lat.abs().max(b.max_lat.abs()) >= 85.0 {
        return Err(invalid(&file.tile_id, TileRule::InvalidBounds, "bounds are empty, inverted or out of range".into()).into());
    }
    let anchor = bounds.center();
    let layers = file.layers;

    let nodes = layers
        .topology_geometry
        .nodes
        .iter()
        .map(|n| {
            let p = project_all(&n.id, &[[n.lon, n.lat]], anchor)?;
            Ok(TopoNode { id: n.id.clone(), position: p[0] })
        })
        .collect::<Result<Vec<_>, ValidationError>>()?;

    let mut routing: BTreeMap<&str, &RoutingAttribute> = BTreeMap::new();
    for r in &layers.routing_attributes {
        routing.insert(&r.link_id, r);
    }
    let mut speeds: BTreeMap<&str, f64> = BTreeMap::new();
    for s in &layers.speed_attributes {
        speeds.insert(&s.link_id, s.speed_limit_kmh);
    }
    let links = layers
        .topology_geometry
        .links
        .iter()
        .map(|l| {
            let geometry = polyline_for(&l.id, project_all(&l.id, &l.shape, anchor)?)?;
            let r = routing.get(l.id.as_str());
            Ok(TopoLink {
                id: l.id.clone(),
                start_node: l.start_node.clone(),
                end_node: l.end_node.clone(),
                geometry,
                speed_limit: speeds.get(l.id.as_str()).copied(),
                has_traffic_signal: r.is_some_and(|r| r.traffic_signal),
                functional_class: r.map_or(0, |r| r.functional_class),
            })
        })
        .collect::<Result<Vec<_>, ValidationError>>()?;

    let mut lane_groups = Vec::new();
    let mut owner: BTreeMap<String, usize> = BTreeMap::new();
    for g in &layers.lane_geometry_polyline.lane_groups {
        let lanes = g
            .lanes
            .iter()
            .map(|l| {
                Ok(LaneGeom {
                    id: l.id.clone(),
                    centerline: polyline_for(&l.id, project_all(&l.id, &l.centerline, anchor)?)?,
                    widths: l.widths_m.clone(),
                    direction: l.direction,
                    is_intersection_lane: l.is_intersection_lane,
                })
            })
            .collect::<Result<Vec<_>, ValidationError>>()?;
        for l in &lanes {
            owner.entry(l.id.clone()).or_insert(lane_groups.len());
        }
        lane_groups.push(LaneGroup { id: g.id.clone(), link_ids: g.link_ids.clone(), lanes, connections: Vec::new() });
    }
    for c in &layers.lane_topology.connections {
        let Some(&gi) = owner.get(&c.from_lane) else {
            return Err(invalid(&c.from_lane, TileRule::MissingLane, format!("connection {} -> {}", c.from_lane, c.to_lane)).into());
        };
        lane_groups[gi].connections.push(LaneConnection { from_lane: c.from_lane.clone(), to_lane: c.to_lane.clone() });
    }

    let tile = MapTile { tile_id: file.tile_id, bounds, anchor, nodes, links, lane_groups };
    tile.validate()?;
    Ok(tile)
}

pub fn read_tile(path: &Path) -> Result<MapTile, TileError> {
    let text = std::fs::read_to_string(path).map_err(|source| TileError::Io { path: path.display().to_string(), source })?;
    parse_tile(&text)
}

fn lonlat(p: Point, anchor: LonLat) -> [f64; 2] {
    let ll = unproject(p, anchor).expect("tile frame lies within the projection domain");
    [ll.lon, ll.lat]
}

/// Serializes a tile in the file layout, unprojecting about its anchor.
pub fn serialize_tile(tile: &MapTile) -> String {
    let a = tile.anchor;
    let shape = |pts: &[Point]| pts.iter().map(|&p| lonlat(p, a)).collect::<Vec<_>>();
    let file = TileFile {
        tile_id: tile.tile_id.clone(),
        bounds: FileBounds {
            min_lon: tile.bounds.min_lon,
            min_lat: tile.bounds.min_lat,
            max_lon: tile.bounds.max_lon,
            max_lat: tile.bounds.max_lat,
        },
        layers: Layers {
            topology_geometry: TopologyGeometry {
                nodes: tile
                    .nodes
                    .iter()
                    .map(|n| {
                        let [lon, lat] = lonlat(n.position, a);
                        FileNode { id: n.id.clone(), lon, lat }
                    })
                    .collect(),
                links: tile
                    .links
                    .iter()
                    .map(|l| FileLink {
                        id: l.id.clone(),
                        start_node: l.start_node.clone(),
                        end_node: l.end_node.clone(),
                        shape: shape(l.geometry.points()),
                    })
                    .collect(),
            },
            routing_attributes: tile
                .links
                .iter()
                .map(|l| RoutingAttribute {
                    link_id: l.id.clone(),
                    traffic_signal: l.has_traffic_signal,
                    functional_class: l.functional_class,
                })
                .collect(),
            speed_attributes: tile
                .links
                .iter()
                .filter_map(|l| l.speed_limit.map(|v| SpeedAttribute { link_id: l.id.clone(), speed_limit_kmh: v }))
                .collect(),
            lane_geometry_polyline: LaneGeometryPolyline {
                lane_groups: tile
                    .lane_groups
                    .iter()
                    .map(|g| FileLaneGroup {
                        id: g.id.clone(),
                        link_ids: g.link_ids.clone(),
                        lanes: g
                            .lanes
                            .iter()
                            .map(|l| FileLane {
                                id: l.id.clone(),
                                centerline: shape(l.centerline.points()),
                                widths_m: l.widths.clone(),
                                direction: l.direction,
                                is_intersection_lane: l.is_intersection_lane,
                            })
                            .collect(),
                    })
                    .collect(),
            },
            lane_topology: LaneTopology {
                connections: tile
                    .lane_groups
                    .iter()
                    .flat_map(|g| &g.connections)
                    .map(|c| FileConnection { from_lane: c.from_lane.clone(), to_lane: c.to_lane.clone() })
                    .collect(),
            },
        },
    };
    let mut s = serde_json::to_string_pretty(&file).expect("tile serializes");
    s.push('\n');
    s
}
