//! Structural and geometric checks over the supported OpenDRIVE subset.
//!
//! Rule catalogue:
//! - R1 well-formed XML with the required elements and attributes
//! - R2 unique ids
//! - R3 references resolve (road links, junction connections, lane links)
//! - R4 successive planView records join up
//! - R5 geometry `s` strictly increasing
//! - R6 road length equals the summed geometry lengths
//! - R7 every connecting road is referenced by exactly one connection

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use roadforge_core::geom::{normalize_angle, segment_endpoint, GeomSegment, Pose};
use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};

pub const POSITION_TOLERANCE_M: f64 = 1e-4;
pub const HEADING_TOLERANCE_RAD: f64 = 1e-4;
pub const LENGTH_TOLERANCE_M: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub rule: Rule,
    pub message: String,
    /// Road or junction id; empty for document-level findings.
    pub id: String,
    pub s: Option<f64>,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev} {:?}", self.rule)?;
        if !self.id.is_empty() {
            write!(f, " [{}", self.id)?;
            if let Some(s) = self.s {
                write!(f, " s={s}")?;
            }
            write!(f, "]")?;
        }
        write!(f, ": {}", self.message)
    }
}

pub fn has_errors(findings: &[Finding]) -> bool {
    findings.iter().any(|f| f.severity == Severity::Error)
}

struct Checker<'a, 'i> {
    doc: &'a Document<'i>,
    out: Vec<Finding>,
}

struct Geometry {
    s: f64,
    pose: Pose,
    segment: GeomSegment,
}

struct Road {
    id: String,
    length: Option<f64>,
    junction: String,
    links: Vec<(&'static str, String, String)>,
    geometries: Vec<Geometry>,
    lanes: BTreeSet<i64>,
    /// (lane id, "predecessor" | "successor", linked lane id)
    lane_links: Vec<(i64, &'static str, i64)>,
}

struct Connection {
    id: String,
    incoming: String,
    connecting: String,
    lane_links: Vec<(i64, i64)>,
}

struct Junction {
    id: String,
    connections: Vec<Connection>,
}

impl<'a, 'i> Checker<'a, 'i> {
    fn push(&mut self, severity: Severity, rule: Rule, id: &str, s: Option<f64>, message: String) {
        self.out.push(Finding { severity, rule, message, id: id.to_string(), s });
    }

    fn line(&self, n: Node) -> u32 {
        self.doc.text_pos_at(n.range().start).row
    }

    fn missing(&mut self, n: Node, id: &str, what: &str) {
        let line = self.line(n);
        self.push(Severity::Error, Rule::R1, id, None, format!("<{}> at line {line} lacks {what}", n.tag_name().name()));
    }

    fn attr(&mut self, n: Node, id: &str, name: &str) -> Option<String> {
        match n.attribute(name) {
            Some(v) => Some(v.to_string()),
            None => {
                self.missing(n, id, &format!("attribute {name}"));
                None
            }
        }
    }

    fn real(&mut self, n: Node, id: &str, name: &str) -> Option<f64> {
        let v = self.attr(n, id, name)?;
        match v.trim().parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                let line = self.line(n);
                self.push(Severity::Error, Rule::R1, id, None, format!("attribute {name}=\"{v}\" at line {line} is not a finite number"));
                None
            }
        }
    }

    fn int(&mut self, n: Node, id: &str, name: &str) -> Option<i64> {
        let v = self.attr(n, id, name)?;
        match v.trim().parse::<i64>() {
            Ok(x) => Some(x),
            Err(_) => {
                let line = self.line(n);
                self.push(Severity::Error, Rule::R1, id, None, format!("attribute {name}=\"{v}\" at line {line} is not an integer"));
                None
            }
        }
    }

    fn child<'d>(&mut self, n: Node<'d, 'i>, id: &str, tag: &str) -> Option<Node<'d, 'i>> {
        let c = elements(n).find(|c| c.has_tag_name(tag));
        if c.is_none() {
            self.missing(n, id, &format!("child <{tag}>"));
        }
        c
    }

    fn geometry(&mut self, g: Node<'_, 'i>, id: &str) -> Option<Geometry> {
        let (s, x, y, hdg, length) =
            (self.real(g, id, "s"), self.real(g, id, "x"), self.real(g, id, "y"), self.real(g, id, "hdg"), self.real(g, id, "length"));
        let kinds: Vec<Node> = elements(g).filter(|c| matches!(c.tag_name().name(), "line" | "arc" | "spiral")).collect();
        if kinds.len() != 1 {
            let line = self.line(g);
            self.push(Severity::Error, Rule::R1, id, s, format!("<geometry> at line {line} needs exactly one of line/arc/spiral"));
            return None;
        }
        let k = kinds[0];
        let length = length?;
        if length <= 0.0 {
            self.push(Severity::Error, Rule::R1, id, s, format!("geometry length {length} is not positive"));
            return None;
        }
        let segment = match k.tag_name().name() {
            "line" => GeomSegment::line(length),
            "arc" => GeomSegment::arc(length, self.real(k, id, "curvature")?),
            _ => GeomSegment::spiral(length, self.real(k, id, "curvStart")?, self.real(k, id, "curvEnd")?),
        };
        Some(Geometry { s: s?, pose: Pose::new(x?, y?, hdg?), segment })
    }

    fn road(&mut self, r: Node<'_, 'i>) -> Option<Road> {
        let id = self.attr(r, "", "id")?;
        let length = self.real(r, &id, "length");
        let junction = self.attr(r, &id, "junction").unwrap_or_else(|| "-1".into());
        let mut links = Vec::new();
        if let Some(l) = elements(r).find(|c| c.has_tag_name("link")) {
            for e in elements(l) {
                let kind = match e.tag_name().name() {
                    "predecessor" => "predecessor",
                    "successor" => "successor",
                    _ => continue,
                };
                if let (Some(t), Some(eid)) = (self.attr(e, &id, "elementType"), self.attr(e, &id, "elementId")) {
                    links.push((kind, t, eid));
                }
            }
        }
        let mut geometries = Vec::new();
        if let Some(pv) = self.child(r, &id, "planView") {
            let gs: Vec<Node> = elements(pv).filter(|c| c.has_tag_name("geometry")).collect();
            if gs.is_empty() {
                self.missing(pv, &id, "<geometry> records");
            }
            for g in gs {
                if let Some(g) = self.geometry(g, &id) {
                    geometries.push(g);
                }
            }
        }
        let mut lanes = BTreeSet::new();
        let mut lane_links = Vec::new();
        if let Some(ls) = self.child(r, &id, "lanes") {
            let sections: Vec<Node> = elements(ls).filter(|c| c.has_tag_name("laneSection")).collect();
            if sections.is_empty() {
                self.missing(ls, &id, "child <laneSection>");
            }
            for sec in sections {
                let s = self.real(sec, &id, "s");
                if self.child(sec, &id, "center").is_none() {
                    continue;
                }
                let mut seen = BTreeSet::new();
                for side in elements(sec).filter(|c| matches!(c.tag_name().name(), "left" | "center" | "right")) {
                    for lane in elements(side).filter(|c| c.has_tag_name("lane")) {
                        let Some(lid) = self.int(lane, &id, "id") else { continue };
                        if !seen.insert(lid) {
                            self.push(Severity::Error, Rule::R2, &id, s, format!("lane id {lid} repeated in lane section"));
                        }
                        lanes.insert(lid);
                        if lid != 0 {
                            for w in elements(lane).filter(|c| c.has_tag_name("width")) {
                                for a in ["sOffset", "a", "b", "c", "d"] {
                                    self.real(w, &id, a);
                                }
                            }
                        }
                        if let Some(l) = elements(lane).find(|c| c.has_tag_name("link")) {
                            for e in elements(l) {
                                let kind = match e.tag_name().name() {
                                    "predecessor" => "predecessor",
                                    "successor" => "successor",
                                    _ => continue,
                                };
                                if let Some(to) = self.int(e, &id, "id") {
                                    lane_links.push((lid, kind, to));
                                }
                            }
                        }
                    }
                }
            }
        }
        Some(Road { id, length, junction, links, geometries, lanes, lane_links })
    }

    fn junction(&mut self, j: Node<'_, 'i>) -> Option<Junction> {
        let id = self.attr(j, "", "id")?;
        let mut connections = Vec::new();
        for c in elements(j).filter(|c| c.has_tag_name("connection")) {
            let (cid, inc, con) = (self.attr(c, &id, "id"), self.attr(c, &id, "incomingRoad"), self.attr(c, &id, "connectingRoad"));
            if let Some(cp) = self.attr(c, &id, "contactPoint") {
                if cp != "start" && cp != "end" {
                    self.push(Severity::Error, Rule::R1, &id, None, format!("contactPoint \"{cp}\" is neither start nor end"));
                }
            }
            let mut lane_links = Vec::new();
            for ll in elements(c).filter(|c| c.has_tag_name("laneLink")) {
                if let (Some(f), Some(t)) = (self.int(ll, &id, "from"), self.int(ll, &id, "to")) {
                    lane_links.push((f, t));
                }
            }
            if let (Some(cid), Some(inc), Some(con)) = (cid, inc, con) {
                connections.push(Connection { id: cid, incoming: inc, connecting: con, lane_links });
            }
        }
        Some(Junction { id, connections })
    }
}

fn elements<'a, 'i>(n: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    n.children().filter(Node::is_element)
}

/// Runs the rule catalogue over a document. Pure and deterministic; the
/// result is sorted by (id, s, rule).
pub fn validate(xml: &str) -> Vec<Finding> {
    let doc = match Document::parse(xml) {
        Ok(d) => d,
        Err(e) => {
            return vec![Finding {
                severity: Severity::Error,
                rule: Rule::R1,
                message: format!("malformed XML: {e}"),
                id: String::new(),
                s: None,
            }]
        }
    };
    let mut c = Checker { doc: &doc, out: Vec::new() };
    let root = doc.root_element();
    if !root.has_tag_name("OpenDRIVE") {
        c.push(Severity::Error, Rule::R1, "", None, format!("root element is <{}>, expected <OpenDRIVE>", root.tag_name().name()));
        return c.out;
    }
    if let Some(h) = c.child(root, "", "header") {
        let major = c.int(h, "", "revMajor");
        let minor = c.int(h, "", "revMinor");
        if let (Some(1), Some(m)) = (major, minor) {
            if m != 6 {
                c.push(Severity::Warning, Rule::R1, "", None, format!("revision 1.{m}; checks target 1.6"));
            }
        } else if major.is_some() {
            c.push(Severity::Error, Rule::R1, "", None, "unsupported major revision".into());
        }
    }

    let roads: Vec<Road> = elements(root).filter(|n| n.has_tag_name("road")).filter_map(|n| c.road(n)).collect();
    let junctions: Vec<Junction> = elements(root).filter(|n| n.has_tag_name("junction")).filter_map(|n| c.junction(n)).collect();

    // R2
    let mut by_id: BTreeMap<&str, &Road> = BTreeMap::new();
    for r in &roads {
        if by_id.contains_key(r.id.as_str()) {
            c.push(Severity::Error, Rule::R2, &r.id, None, format!("road id \"{}\" is not unique", r.id));
        } else {
            by_id.insert(&r.id, r);
        }
    }
    let mut junction_ids = BTreeSet::new();
    for j in &junctions {
        if !junction_ids.insert(j.id.as_str()) {
            c.push(Severity::Error, Rule::R2, &j.id, None, format!("junction id \"{}\" is not unique", j.id));
        }
        let mut seen = BTreeSet::new();
        for k in &j.connections {
            if !seen.insert(k.id.as_str()) {
                c.push(Severity::Error, Rule::R2, &j.id, None, format!("connection id \"{}\" is not unique", k.id));
            }
        }
    }

    // R3
    for r in &roads {
        if r.junction != "-1" && !junction_ids.contains(r.junction.as_str()) {
            c.push(Severity::Error, Rule::R3, &r.id, None, format!("road belongs to missing junction \"{}\"", r.junction));
        }
        for (kind, t, eid) in &r.links {
            let ok = match t.as_str() {
                "road" => by_id.contains_key(eid.as_str()),
                "junction" => junction_ids.contains(eid.as_str()),
                _ => {
                    c.push(Severity::Error, Rule::R1, &r.id, None, format!("{kind} elementType \"{t}\" is neither road nor junction"));
                    continue;
                }
            };
            if !ok {
                c.push(Severity::Error, Rule::R3, &r.id, None, format!("{kind} references missing {t} \"{eid}\""));
            }
        }
        for (lane, kind, to) in &r.lane_links {
            if let Some((_, _, eid)) = r.links.iter().find(|(k, t, _)| k == kind && t == "road") {
                if let Some(other) = by_id.get(eid.as_str()) {
                    if !other.lanes.contains(to) {
                        c.push(Severity::Error, Rule::R3, &r.id, None, format!("lane {lane} {kind} lane {to} is missing on road \"{eid}\""));
                    }
                }
            }
        }
    }
    for j in &junctions {
        for k in &j.connections {
            let inc = by_id.get(k.incoming.as_str());
            let con = by_id.get(k.connecting.as_str());
            for (what, rid, road) in [("incomingRoad", &k.incoming, inc), ("connectingRoad", &k.connecting, con)] {
                if road.is_none() {
                    c.push(Severity::Error, Rule::R3, &j.id, None, format!("connection {} {what} references missing road \"{rid}\"", k.id));
                }
            }
            for (f, t) in &k.lane_links {
                if inc.is_some_and(|r| !r.lanes.contains(f)) {
                    c.push(Severity::Error, Rule::R3, &j.id, None, format!("connection {} laneLink from lane {f} is missing on road \"{}\"", k.id, k.incoming));
                }
                if con.is_some_and(|r| !r.lanes.contains(t)) {
                    c.push(Severity::Error, Rule::R3, &j.id, None, format!("connection {} laneLink to lane {t} is missing on road \"{}\"", k.id, k.connecting));
                }
            }
        }
    }

    // R4, R5, R6
    for r in &roads {
        for w in r.geometries.windows(2) {
            let end = segment_endpoint(w[0].pose, &w[0].segment);
            let gap = end.position().distance(w[1].pose.position());
            let dh = normalize_angle(end.heading - w[1].pose.heading).abs();
            if gap > POSITION_TOLERANCE_M || dh > HEADING_TOLERANCE_RAD {
                c.push(Severity::Error, Rule::R4, &r.id, Some(w[1].s), format!("discontinuity of {gap:.6e} m and {dh:.6e} rad between geometry records"));
            }
            if w[1].s <= w[0].s {
                c.push(Severity::Error, Rule::R5, &r.id, Some(w[1].s), format!("geometry s {} does not exceed previous s {}", w[1].s, w[0].s));
            } else if (w[1].s - w[0].s - w[0].segment.length).abs() > LENGTH_TOLERANCE_M {
                c.push(Severity::Warning, Rule::R5, &r.id, Some(w[1].s), format!("geometry s {} differs from previous s plus length", w[1].s));
            }
        }
        if let Some(first) = r.geometries.first() {
            if first.s.abs() > LENGTH_TOLERANCE_M {
                c.push(Severity::Warning, Rule::R5, &r.id, Some(first.s), "first geometry does not start at s = 0".into());
            }
        }
        if let Some(len) = r.length {
            let sum: f64 = r.geometries.iter().map(|g| g.segment.length).sum();
            if (len - sum).abs() > LENGTH_TOLERANCE_M {
                c.push(Severity::Error, Rule::R6, &r.id, None, format!("length {len} differs from geometry total {sum} by {:.6e}", (len - sum).abs()));
            }
        }
    }

    // R7
    let mut refs: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for j in &junctions {
        for k in &j.connections {
            refs.entry(k.connecting.as_str()).or_default().push(j.id.as_str());
        }
    }
    for r in by_id.values().filter(|r| r.junction != "-1") {
        let owners = refs.get(r.id.as_str()).map_or(&[][..], |v| v.as_slice());
        match owners {
            [] => c.push(Severity::Error, Rule::R7, &r.id, None, "connecting road is not referenced by any connection".into()),
            [j] if *j != r.junction => {
                c.push(Severity::Error, Rule::R7, &r.id, None, format!("connecting road of junction \"{}\" is referenced from junction \"{j}\"", r.junction))
            }
            [_] => {}
            many => c.push(Severity::Error, Rule::R7, &r.id, None, format!("connecting road is referenced by {} connections", many.len())),
        }
    }

    let mut out = c.out;
    out.sort_by(|a, b| {
        a.id.cmp(&b.id)
            .then(a.s.unwrap_or(f64::NEG_INFINITY).total_cmp(&b.s.unwrap_or(f64::NEG_INFINITY)))
            .then(a.rule.cmp(&b.rule))
            .then(a.message.cmp(&b.message))
    });
    out
}

/// Reads and validates a file. I/O failures are returned as errors, never
/// as findings.
pub fn validate_file(path: &Path) -> std::io::Result<Vec<Finding>> {
    let text = std::fs::read_to_string(path)?;
    Ok(validate(&text))
}
