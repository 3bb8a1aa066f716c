//! OpenDRIVE 1.6 subset: document model built from a resolved plan, and its
//! canonical XML serialization.
//!
//! Canonical means fixed element and attribute order and every real number
//! written with 17 significant digits, so equal plans give equal bytes.

use std::fmt::Write;

use roadforge_core::geom::{GeomSegment, Pose, SegmentKind};
use roadforge_core::netgen::{Contact, NetgenError, RoadLink, RoadPlan};

pub const REV_MAJOR: u32 = 1;
pub const REV_MINOR: u32 = 6;
/// Header date used when the template does not set one; a fixed value keeps
/// output reproducible.
pub const DEFAULT_DATE: &str = "1970-01-01T00:00:00";

#[derive(Debug, Clone, PartialEq)]
pub struct OdrHeader {
    pub name: String,
    pub date: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdrGeometry {
    pub s: f64,
    pub start: Pose,
    pub segment: GeomSegment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdrLink {
    pub element_type: &'static str,
    pub element_id: String,
    pub contact_point: Option<Contact>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdrLane {
    pub id: i32,
    pub width: f64,
    pub predecessor: Option<i32>,
    pub successor: Option<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdrRoad {
    pub id: String,
    pub length: f64,
    /// Owning junction id, or "-1".
    pub junction: String,
    pub predecessor: Option<OdrLink>,
    pub successor: Option<OdrLink>,
    pub geometries: Vec<OdrGeometry>,
    /// Lanes 1, 2, … in order.
    pub left: Vec<OdrLane>,
    /// Lanes −1, −2, … in order.
    pub right: Vec<OdrLane>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdrConnection {
    pub id: String,
    pub incoming_road: String,
    pub connecting_road: String,
    pub contact_point: Contact,
    pub lane_links: Vec<(i32, i32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdrJunction {
    pub id: String,
    pub connections: Vec<OdrConnection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdrDocument {
    pub comment: Option<String>,
    pub header: OdrHeader,
    pub roads: Vec<OdrRoad>,
    pub junctions: Vec<OdrJunction>,
}

fn link(l: &Option<RoadLink>) -> Option<OdrLink> {
    l.as_ref().map(|l| match l {
        RoadLink::Road { id, contact } => OdrLink { element_type: "road", element_id: id.clone(), contact_point: Some(*contact) },
        RoadLink::Junction(id) => OdrLink { element_type: "junction", element_id: id.clone(), contact_point: None },
    })
}

impl OdrDocument {
    /// Converts a plan, refusing plans whose roads miss their attachments.
    pub fn from_plan(plan: &RoadPlan) -> Result<Self, NetgenError> {
        plan.check_continuity()?;
        let m = &plan.meta;
        let comment = Some(format!(
            "roadforge master_seed={} map_index={} template_sha256={}",
            m.master_seed,
            m.map_index,
            if m.template_hash.is_empty() { "none" } else { &m.template_hash }
        ));
        let roads = plan
            .roads
            .iter()
            .map(|r| {
                let poses = r.poses();
                let mut s = 0.0;
                let geometries = r
                    .segments
                    .iter()
                    .zip(&poses)
                    .map(|(seg, start)| {
                        let g = OdrGeometry { s, start: *start, segment: *seg };
                        s += seg.length;
                        g
                    })
                    .collect();
                let lane = |id: i32, width: f64| {
                    let ll = r.lane_links.iter().find(|l| l.lane == id);
                    OdrLane { id, width, predecessor: ll.and_then(|l| l.predecessor), successor: ll.and_then(|l| l.successor) }
                };
                OdrRoad {
                    id: r.id.clone(),
                    length: r.length(),
                    junction: r.junction.clone().unwrap_or_else(|| "-1".into()),
                    predecessor: link(&r.predecessor),
                    successor: link(&r.successor),
                    geometries,
                    left: r.left_widths.iter().enumerate().map(|(i, w)| lane(i as i32 + 1, *w)).collect(),
                    right: r.right_widths.iter().enumerate().map(|(i, w)| lane(-(i as i32 + 1), *w)).collect(),
                }
            })
            .collect();
        let junctions = plan
            .junctions
            .iter()
            .map(|j| OdrJunction {
                id: j.id.clone(),
                connections: j
                    .connections
                    .iter()
                    .map(|c| OdrConnection {
                        id: c.id.clone(),
                        incoming_road: c.incoming_road.clone(),
                        connecting_road: c.connecting_road.clone(),
                        contact_point: c.contact_point,
                        lane_links: c.lane_links.clone(),
                    })
                    .collect(),
            })
            .collect();
        Ok(OdrDocument {
            comment,
            header: OdrHeader { name: m.name.clone(), date: m.date.clone().unwrap_or_else(|| DEFAULT_DATE.into()) },
            roads,
            junctions,
        })
    }

    pub fn to_xml(&self) -> String {
        let mut x = String::new();
        x.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        if let Some(c) = &self.comment {
            let _ = writeln!(x, "<!-- {} -->", c.replace("--", "- -"));
        }
        x.push_str("<OpenDRIVE>\n");
        let _ = writeln!(
            x,
            "  <header revMajor=\"{REV_MAJOR}\" revMinor=\"{REV_MINOR}\" name=\"{}\" version=\"1\" date=\"{}\"/>",
            esc(&self.header.name),
            esc(&self.header.date)
        );
        for r in &self.roads {
            write_road(&mut x, r);
        }
        for j in &self.junctions {
            let _ = writeln!(x, "  <junction id=\"{}\" name=\"{}\">", esc(&j.id), esc(&j.id));
            for c in &j.connections {
                let _ = writeln!(
                    x,
                    "    <connection id=\"{}\" incomingRoad=\"{}\" connectingRoad=\"{}\" contactPoint=\"{}\">",
                    esc(&c.id),
                    esc(&c.incoming_road),
                    esc(&c.connecting_road),
                    c.contact_point.as_str()
                );
                for (from, to) in &c.lane_links {
                    let _ = writeln!(x, "      <laneLink from=\"{from}\" to=\"{to}\"/>");
                }
                x.push_str("    </connection>\n");
            }
            x.push_str("  </junction>\n");
        }
        x.push_str("</OpenDRIVE>\n");
        x
    }
}

/// Real number with 17 significant digits; negative zero is written as zero.
pub fn num(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

pub fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn write_link(x: &mut String, tag: &str, l: &OdrLink) {
    let _ = write!(x, "      <{tag} elementType=\"{}\" elementId=\"{}\"", l.element_type, esc(&l.element_id));
    if let Some(c) = l.contact_point {
        let _ = write!(x, " contactPoint=\"{}\"", c.as_str());
    }
    x.push_str("/>\n");
}

fn write_lane(x: &mut String, l: &OdrLane) {
    let _ = writeln!(x, "          <lane id=\"{}\" type=\"driving\" level=\"false\">", l.id);
    if l.predecessor.is_some() || l.successor.is_some() {
        x.push_str("            <link>\n");
        if let Some(p) = l.predecessor {
            let _ = writeln!(x, "              <predecessor id=\"{p}\"/>");
        }
        if let Some(s) = l.successor {
            let _ = writeln!(x, "              <successor id=\"{s}\"/>");
        }
        x.push_str("            </link>\n");
    }
    let _ = writeln!(
        x,
        "            <width sOffset=\"{}\" a=\"{}\" b=\"{}\" c=\"{}\" d=\"{}\"/>",
        num(0.0),
        num(l.width),
        num(0.0),
        num(0.0),
        num(0.0)
    );
    x.push_str("          </lane>\n");
}

fn write_road(x: &mut String, r: &OdrRoad) {
    let _ = writeln!(
        x,
        "  <road name=\"{}\" length=\"{}\" id=\"{}\" junction=\"{}\">",
        esc(&r.id),
        num(r.length),
        esc(&r.id),
        esc(&r.junction)
    );
    if r.predecessor.is_some() || r.successor.is_some() {
        x.push_str("    <link>\n");
        if let Some(p) = &r.predecessor {
            write_link(x, "predecessor", p);
        }
        if let Some(s) = &r.successor {
            write_link(x, "successor", s);
        }
        x.push_str("    </link>\n");
    }
    x.push_str("    <planView>\n");
    for g in &r.geometries {
        let _ = writeln!(
            x,
            "      <geometry s=\"{}\" x=\"{}\" y=\"{}\" hdg=\"{}\" length=\"{}\">",
            num(g.s),
            num(g.start.x),
            num(g.start.y),
            num(g.start.heading),
            num(g.segment.length)
        );
        match g.segment.kind {
            SegmentKind::Line => x.push_str("        <line/>\n"),
            SegmentKind::Arc => {
                let _ = writeln!(x, "        <arc curvature=\"{}\"/>", num(g.segment.curv_start));
            }
            SegmentKind::Spiral => {
                let _ = writeln!(
                    x,
                    "        <spiral curvStart=\"{}\" curvEnd=\"{}\"/>",
                    num(g.segment.curv_start),
                    num(g.segment.curv_end)
                );
            }
        }
        x.push_str("      </geometry>\n");
    }
    x.push_str("    </planView>\n");
    x.push_str("    <lanes>\n");
    let _ = writeln!(x, "      <laneSection s=\"{}\">", num(0.0));
    if !r.left.is_empty() {
        x.push_str("        <left>\n");
        for l in r.left.iter().rev() {
            write_lane(x, l);
        }
        x.push_str("        </left>\n");
    }
    x.push_str("        <center>\n          <lane id=\"0\" type=\"none\" level=\"false\"/>\n        </center>\n");
    if !r.right.is_empty() {
        x.push_str("        <right>\n");
        for l in &r.right {
            write_lane(x, l);
        }
        x.push_str("        </right>\n");
    }
    x.push_str("      </laneSection>\n");
    x.push_str("    </lanes>\n");
    x.push_str("  </road>\n");
}

/// Serializes a plan as OpenDRIVE XML.
pub fn emit_opendrive(plan: &RoadPlan) -> Result<(OdrDocument, String), NetgenError> {
    let doc = OdrDocument::from_plan(plan)?;
    let xml = doc.to_xml();
    Ok((doc, xml))
}
