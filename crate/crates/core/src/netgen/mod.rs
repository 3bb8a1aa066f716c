//! Parametric road networks: templates, resolution into concrete plans, and
//! the reverse mapping of plans onto map tiles.
//!
//! A template declares variables, roads, junctions and the attachments
//! between road ends and junction arms. Every numeric attribute is an
//! expression over the variables. Resolving a template against one set of
//! bindings places the junctions, lays out arm attachment points on circles
//! of radius `span` around each junction center, positions the attached
//! roads, and synthesizes one connecting road per connected lane pair.

pub mod tile;
pub mod turn;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::analyzer::{is_through_pair, IntersectionType};
use crate::geom::{chain_poses, normalize_angle, GeomSegment, Point, Pose, SegmentKind};
use crate::variation::{self, Bindings, EvalError, Expr, ParseError, VariableDef, VariationError};

pub use tile::plan_to_tile;

/// Largest tolerated deviation of the arm angle sum from 360°.
pub const ANGLE_SUM_TOLERANCE_DEG: f64 = 1e-6;
/// Position tolerance for road ends meeting their attachment points.
pub const CONTINUITY_TOLERANCE_M: f64 = 1e-6;
/// Heading tolerance for road ends meeting their attachment points.
pub const CONTINUITY_TOLERANCE_RAD: f64 = 1e-9;
pub const DEFAULT_ARM0_HEADING_DEG: f64 = 180.0;
pub const DEFAULT_MAX_CURVATURE: f64 = 0.1;

/// Parses a numeric attribute: a literal, a variable id, or `{expression}`.
pub fn parse_numeric(src: &str) -> Result<Expr, ParseError> {
    let t = src.trim();
    if let Some(inner) = t.strip_prefix('{') {
        return match inner.strip_suffix('}') {
            Some(body) => variation::parse_expression(body).map_err(|mut e| {
                e.position += src.len() - src.trim_start().len() + 1;
                e
            }),
            None => Err(ParseError {
                position: src.len(),
                token: "end of input".to_string(),
                message: "expected '}'".to_string(),
            }),
        };
    }
    variation::parse_expression(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Contact {
    Start,
    End,
}

impl Contact {
    pub fn as_str(self) -> &'static str {
        match self {
            Contact::Start => "start",
            Contact::End => "end",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "start" => Some(Contact::Start),
            "end" => Some(Contact::End),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSpec {
    pub kind: SegmentKind,
    pub length: Expr,
    pub curv_start: Expr,
    pub curv_end: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadSpec {
    pub id: String,
    pub segments: Vec<SegmentSpec>,
    pub lanes_per_direction: u32,
    pub lane_width: Expr,
    /// Start pose for roads not attached to any junction; `hdg` in degrees.
    pub x: Expr,
    pub y: Expr,
    pub hdg: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSpec {
    /// Counterclockwise gap to the next arm, degrees.
    pub angle: Expr,
    pub span: Expr,
    /// Lane counts and width default to those of the attached road.
    pub lanes_in: Option<u32>,
    pub lanes_out: Option<u32>,
    pub lane_width: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnSpec {
    pub from: usize,
    pub to: usize,
    pub enabled: bool,
    pub max_curvature: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JunctionSpec {
    pub id: String,
    pub kind: IntersectionType,
    pub x: Expr,
    pub y: Expr,
    /// Heading of arm 0 in degrees.
    pub heading: Expr,
    /// Default for turns without their own limit.
    pub max_curvature: Expr,
    pub arms: Vec<ArmSpec>,
    /// Overrides; every ordered pair of distinct arms is enabled otherwise.
    pub turns: Vec<TurnSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub road: String,
    pub contact: Contact,
    pub junction: String,
    pub arm: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkTemplate {
    pub name: String,
    /// Header date written to generated files.
    pub date: Option<String>,
    pub vars: Vec<VariableDef>,
    pub roads: Vec<RoadSpec>,
    pub junctions: Vec<JunctionSpec>,
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetgenError {
    #[error("duplicate id \"{0}\"")]
    DuplicateId(String),
    #[error("{context}: unknown variable \"{name}\"")]
    UnknownVariable { context: String, name: String },
    #[error("{context}: unknown {what} \"{name}\"")]
    UnknownReference { context: String, what: &'static str, name: String },
    #[error("junction {junction}: type {kind} needs {expected} arms, got {got}")]
    Arity { junction: String, kind: &'static str, expected: usize, got: usize },
    #[error("junction {junction} arm {arm} is attached more than once")]
    ArmAttachedTwice { junction: String, arm: usize },
    #[error("road {road} {contact} is attached more than once")]
    RoadEndAttachedTwice { road: String, contact: &'static str },
    #[error("junction {junction}: turn {from}->{to} is declared more than once")]
    DuplicateTurn { junction: String, from: usize, to: usize },
    #[error("{context}: {detail}")]
    InvalidValue { context: String, detail: String },
    #[error("{context}: {source}")]
    Eval { context: String, source: EvalError },
    #[error(transparent)]
    Variation(#[from] VariationError),
    #[error("junction {junction}: arm angles sum to {sum} degrees, expected 360")]
    AngleSum { junction: String, sum: f64 },
    #[error("junction {junction}: turn {from}->{to} (lane {lane}) is infeasible: {detail}")]
    Infeasible { junction: String, from: usize, to: usize, lane: u32, detail: String },
    #[error("road {road}: end misses its attachment by {gap_m:e} m / {gap_rad:e} rad")]
    Continuity { road: String, gap_m: f64, gap_rad: f64 },
}

fn expr_vars<'a>(out: &mut Vec<(String, &'a Expr)>, context: String, e: &'a Expr) {
    out.push((context, e));
}

impl NetworkTemplate {
    /// Every expression in the template with a human-readable location.
    fn expressions(&self) -> Vec<(String, &Expr)> {
        let mut out = Vec::new();
        for r in &self.roads {
            for (i, s) in r.segments.iter().enumerate() {
                let c = format!("road {} geometry {i}", r.id);
                expr_vars(&mut out, format!("{c} length"), &s.length);
                expr_vars(&mut out, format!("{c} curvStart"), &s.curv_start);
                expr_vars(&mut out, format!("{c} curvEnd"), &s.curv_end);
            }
            expr_vars(&mut out, format!("road {} lane_width", r.id), &r.lane_width);
            expr_vars(&mut out, format!("road {} x", r.id), &r.x);
            expr_vars(&mut out, format!("road {} y", r.id), &r.y);
            expr_vars(&mut out, format!("road {} hdg", r.id), &r.hdg);
        }
        for j in &self.junctions {
            expr_vars(&mut out, format!("junction {} x", j.id), &j.x);
            expr_vars(&mut out, format!("junction {} y", j.id), &j.y);
            expr_vars(&mut out, format!("junction {} heading", j.id), &j.heading);
            expr_vars(&mut out, format!("junction {} max_curvature", j.id), &j.max_curvature);
            for (k, a) in j.arms.iter().enumerate() {
                expr_vars(&mut out, format!("junction {} arm {k} angle", j.id), &a.angle);
                expr_vars(&mut out, format!("junction {} arm {k} span", j.id), &a.span);
                if let Some(w) = &a.lane_width {
                    expr_vars(&mut out, format!("junction {} arm {k} lane_width", j.id), w);
                }
            }
            for t in &j.turns {
                if let Some(k) = &t.max_curvature {
                    expr_vars(&mut out, format!("junction {} turn {}->{} max_curvature", j.id, t.from, t.to), k);
                }
            }
        }
        out
    }

    /// Ids bound by the variable declarations.
    pub fn declared_variables(&self) -> BTreeSet<String> {
        self.vars.iter().flat_map(|v| v.defines()).map(str::to_string).collect()
    }

    /// Checks everything that does not depend on variable values.
    pub fn validate(&self) -> Result<(), NetgenError> {
        variation::validate(&self.vars, &Bindings::new()).map_err(|e| match e {
            VariationError::Undeclared { id, name } => NetgenError::UnknownVariable { context: format!("variable {id}"), name },
            other => NetgenError::Variation(other),
        })?;
        let declared = self.declared_variables();
        for (context, e) in self.expressions() {
            if let Some(name) = e.variables().into_iter().find(|v| !declared.contains(v)) {
                return Err(NetgenError::UnknownVariable { context, name });
            }
        }

        let mut road_ids = BTreeSet::new();
        for r in &self.roads {
            if !road_ids.insert(r.id.as_str()) {
                return Err(NetgenError::DuplicateId(r.id.clone()));
            }
            if r.segments.is_empty() {
                return Err(NetgenError::InvalidValue {
                    context: format!("road {}", r.id),
                    detail: "has no geometry".into(),
                });
            }
        }
        let mut junction_ids = BTreeSet::new();
        for j in &self.junctions {
            if !junction_ids.insert(j.id.as_str()) {
                return Err(NetgenError::DuplicateId(j.id.clone()));
            }
            if j.arms.len() != j.kind.arm_count() {
                return Err(NetgenError::Arity {
                    junction: j.id.clone(),
                    kind: j.kind.as_str(),
                    expected: j.kind.arm_count(),
                    got: j.arms.len(),
                });
            }
            let mut seen = BTreeSet::new();
            for t in &j.turns {
                if t.from >= j.arms.len() || t.to >= j.arms.len() || t.from == t.to {
                    return Err(NetgenError::InvalidValue {
                        context: format!("junction {}", j.id),
                        detail: format!("turn {}->{} does not join two distinct arms", t.from, t.to),
                    });
                }
                if !seen.insert((t.from, t.to)) {
                    return Err(NetgenError::DuplicateTurn { junction: j.id.clone(), from: t.from, to: t.to });
                }
            }
        }

        let mut arms_used = BTreeSet::new();
        let mut ends_used = BTreeSet::new();
        for l in &self.links {
            let context = format!("link {}:{} -> {}:{}", l.road, l.contact.as_str(), l.junction, l.arm);
            if !road_ids.contains(l.road.as_str()) {
                return Err(NetgenError::UnknownReference { context, what: "road", name: l.road.clone() });
            }
            let Some(j) = self.junctions.iter().find(|j| j.id == l.junction) else {
                return Err(NetgenError::UnknownReference { context, what: "junction", name: l.junction.clone() });
            };
            if l.arm >= j.arms.len() {
                return Err(NetgenError::UnknownReference { context, what: "arm", name: l.arm.to_string() });
            }
            if !arms_used.insert((l.junction.as_str(), l.arm)) {
                return Err(NetgenError::ArmAttachedTwice { junction: l.junction.clone(), arm: l.arm });
            }
            if !ends_used.insert((l.road.as_str(), l.contact)) {
                return Err(NetgenError::RoadEndAttachedTwice { road: l.road.clone(), contact: l.contact.as_str() });
            }
        }
        Ok(())
    }
}

/// Element a road end connects to.
#[derive(Debug, Clone, PartialEq)]
pub enum RoadLink {
    Road { id: String, contact: Contact },
    Junction(String),
}

/// Lane-level neighbours of one lane.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneLink {
    pub lane: i32,
    pub predecessor: Option<i32>,
    pub successor: Option<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanRoad {
    pub id: String,
    /// Owning junction for connecting roads.
    pub junction: Option<String>,
    pub start: Pose,
    pub segments: Vec<GeomSegment>,
    /// Widths of lanes 1, 2, … (left of the reference line).
    pub left_widths: Vec<f64>,
    /// Widths of lanes −1, −2, … (right of the reference line).
    pub right_widths: Vec<f64>,
    pub predecessor: Option<RoadLink>,
    pub successor: Option<RoadLink>,
    pub lane_links: Vec<LaneLink>,
    /// Pose the chain must end at, when constrained.
    pub end_target: Option<Pose>,
}

impl PlanRoad {
    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Start pose of every segment followed by the end pose.
    pub fn poses(&self) -> Vec<Pose> {
        chain_poses(self.start, &self.segments)
    }

    pub fn end(&self) -> Pose {
        *self.poses().last().unwrap_or(&self.start)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanConnection {
    pub id: String,
    pub incoming_road: String,
    pub connecting_road: String,
    pub contact_point: Contact,
    /// (incoming lane, connecting lane).
    pub lane_links: Vec<(i32, i32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanArm {
    /// Outward direction, radians.
    pub heading: f64,
    pub angle_deg: f64,
    pub span: f64,
    pub road: Option<(String, Contact)>,
    pub lanes_in: u32,
    pub lanes_out: u32,
    pub lane_width: f64,
}

impl PlanArm {
    pub fn attachment(&self, center: Point) -> Point {
        center + Point::from_heading(self.heading) * self.span
    }
}

/// One synthesized lane-level movement through a junction.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanMovement {
    pub from_arm: usize,
    pub to_arm: usize,
    pub road: String,
    pub through: bool,
    pub curvature: f64,
    pub heading_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanJunction {
    pub id: String,
    pub kind: IntersectionType,
    pub center: Point,
    pub arms: Vec<PlanArm>,
    pub connections: Vec<PlanConnection>,
    pub movements: Vec<PlanMovement>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlanMeta {
    pub name: String,
    pub date: Option<String>,
    pub master_seed: u64,
    pub map_index: u64,
    pub template_hash: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoadPlan {
    pub meta: PlanMeta,
    pub roads: Vec<PlanRoad>,
    pub junctions: Vec<PlanJunction>,
}

impl RoadPlan {
    pub fn road(&self, id: &str) -> Option<&PlanRoad> {
        self.roads.iter().find(|r| r.id == id)
    }

    /// Verifies that every constrained road ends where it must.
    pub fn check_continuity(&self) -> Result<(), NetgenError> {
        for r in &self.roads {
            for s in &r.segments {
                s.validate().map_err(|e| NetgenError::InvalidValue {
                    context: format!("road {}", r.id),
                    detail: e.to_string(),
                })?;
            }
            if let Some(target) = r.end_target {
                let end = r.end();
                let gap_m = end.position().distance(target.position());
                let gap_rad = normalize_angle(end.heading - target.heading).abs();
                if gap_m > CONTINUITY_TOLERANCE_M || gap_rad > CONTINUITY_TOLERANCE_RAD {
                    return Err(NetgenError::Continuity { road: r.id.clone(), gap_m, gap_rad });
                }
            }
        }
        Ok(())
    }
}

struct Evaluator<'a> {
    bindings: &'a Bindings,
}

impl Evaluator<'_> {
    fn eval(&self, e: &Expr, context: &str) -> Result<f64, NetgenError> {
        let v = e
            .eval(&|n| self.bindings.get(n).copied())
            .map_err(|source| NetgenError::Eval { context: context.to_string(), source })?;
        if !v.is_finite() {
            return Err(NetgenError::InvalidValue { context: context.to_string(), detail: format!("value {v} is not finite") });
        }
        Ok(v)
    }

    fn positive(&self, e: &Expr, context: &str) -> Result<f64, NetgenError> {
        let v = self.eval(e, context)?;
        if v <= 0.0 {
            return Err(NetgenError::InvalidValue { context: context.to_string(), detail: format!("must be positive, got {v}") });
        }
        Ok(v)
    }
}

fn left_normal(heading: f64) -> Point {
    Point::from_heading(heading).perp()
}

/// Incoming and outgoing lane ids on a road attached to a junction by `contact`.
fn lane_id_in(contact: Contact, j: u32) -> i32 {
    match contact {
        Contact::Start => j as i32,
        Contact::End => -(j as i32),
    }
}

fn lane_id_out(contact: Contact, j: u32) -> i32 {
    -lane_id_in(contact, j)
}

/// Road id of the connection from arm `from` lane `lane` to arm `to`.
pub fn connecting_road_id(junction: &str, from: usize, to: usize, lane: u32) -> String {
    format!("{junction}_{from}_{to}_{lane}")
}

struct ResolvedRoad {
    segments: Vec<GeomSegment>,
    lanes: u32,
    width: f64,
    free_start: Pose,
}

/// Evaluates a template under `bindings` into a concrete plan.
pub fn resolve(template: &NetworkTemplate, bindings: &Bindings) -> Result<RoadPlan, NetgenError> {
    template.validate()?;
    let ev = Evaluator { bindings };

    let mut resolved: BTreeMap<&str, ResolvedRoad> = BTreeMap::new();
    for r in &template.roads {
        let mut segments = Vec::with_capacity(r.segments.len());
        for (i, s) in r.segments.iter().enumerate() {
            let c = format!("road {} geometry {i}", r.id);
            let length = ev.positive(&s.length, &format!("{c} length"))?;
            let k0 = ev.eval(&s.curv_start, &format!("{c} curvStart"))?;
            let k1 = ev.eval(&s.curv_end, &format!("{c} curvEnd"))?;
            segments.push(match s.kind {
                SegmentKind::Line => GeomSegment::line(length),
                SegmentKind::Arc => GeomSegment::arc(length, k0),
                SegmentKind::Spiral => GeomSegment::spiral(length, k0, k1),
            });
        }
        let width = ev.positive(&r.lane_width, &format!("road {} lane_width", r.id))?;
        let free_start = Pose::new(
            ev.eval(&r.x, &format!("road {} x", r.id))?,
            ev.eval(&r.y, &format!("road {} y", r.id))?,
            ev.eval(&r.hdg, &format!("road {} hdg", r.id))?.to_radians(),
        );
        resolved.insert(r.id.as_str(), ResolvedRoad { segments, lanes: r.lanes_per_direction, width, free_start });
    }

    let mut attached: BTreeMap<(&str, usize), (&str, Contact)> = BTreeMap::new();
    let mut road_ends: BTreeMap<(&str, Contact), (&str, usize)> = BTreeMap::new();
    for l in &template.links {
        attached.insert((l.junction.as_str(), l.arm), (l.road.as_str(), l.contact));
        road_ends.insert((l.road.as_str(), l.contact), (l.junction.as_str(), l.arm));
    }

    // Junction layout.
    let mut junctions = Vec::with_capacity(template.junctions.len());
    for j in &template.junctions {
        let jc = format!("junction {}", j.id);
        let center = Point::new(ev.eval(&j.x, &format!("{jc} x"))?, ev.eval(&j.y, &format!("{jc} y"))?);
        let mut heading = ev.eval(&j.heading, &format!("{jc} heading"))?;
        let mut arms = Vec::with_capacity(j.arms.len());
        let mut sum = 0.0;
        for (k, a) in j.arms.iter().enumerate() {
            let ac = format!("{jc} arm {k}");
            let angle = ev.positive(&a.angle, &format!("{ac} angle"))?;
            let span = ev.positive(&a.span, &format!("{ac} span"))?;
            let road = attached.get(&(j.id.as_str(), k)).copied();
            let (mut lanes_in, mut lanes_out, mut width) = (a.lanes_in, a.lanes_out, None);
            if let Some((rid, _)) = road {
                let rr = &resolved[rid];
                for (name, v) in [("lanes_in", &mut lanes_in), ("lanes_out", &mut lanes_out)] {
                    match *v {
                        Some(n) if n != rr.lanes => {
                            return Err(NetgenError::InvalidValue {
                                context: ac.clone(),
                                detail: format!("{name}={n} but road {rid} has {} lanes per direction", rr.lanes),
                            })
                        }
                        _ => *v = Some(rr.lanes),
                    }
                }
                width = Some(rr.width);
            }
            if let Some(w) = &a.lane_width {
                let aw = ev.positive(w, &format!("{ac} lane_width"))?;
                if let Some(rw) = width {
                    if (aw - rw).abs() > 1e-9 {
                        return Err(NetgenError::InvalidValue {
                            context: ac.clone(),
                            detail: format!("lane_width {aw} differs from the attached road's {rw}"),
                        });
                    }
                }
                width = Some(aw);
            }
            arms.push(PlanArm {
                heading: normalize_angle(heading.to_radians()),
                angle_deg: angle,
                span,
                road: road.map(|(r, c)| (r.to_string(), c)),
                lanes_in: lanes_in.unwrap_or(1),
                lanes_out: lanes_out.unwrap_or(1),
                lane_width: width.unwrap_or(0.0),
            });
            heading += angle;
            sum += angle;
        }
        if (sum - 360.0).abs() > ANGLE_SUM_TOLERANCE_DEG {
            return Err(NetgenError::AngleSum { junction: j.id.clone(), sum });
        }
        junctions.push(PlanJunction { id: j.id.clone(), kind: j.kind, center, arms, connections: Vec::new(), movements: Vec::new() });
    }

    let arm_pose = |jid: &str, arm: usize| -> Pose {
        let j = junctions.iter().find(|j| j.id == jid).expect("validated junction id");
        let a = &j.arms[arm];
        let p = a.attachment(j.center);
        Pose::new(p.x, p.y, a.heading)
    };

    // Template roads.
    let mut roads = Vec::new();
    for r in &template.roads {
        let rr = &resolved[r.id.as_str()];
        let start_att = road_ends.get(&(r.id.as_str(), Contact::Start)).copied();
        let end_att = road_ends.get(&(r.id.as_str(), Contact::End)).copied();
        let end_pose_of = |(jid, arm): (&str, usize)| {
            let p = arm_pose(jid, arm);
            Pose::new(p.x, p.y, p.heading + core::f64::consts::PI)
        };
        let start = match (start_att, end_att) {
            (Some((jid, arm)), _) => arm_pose(jid, arm),
            (None, Some(att)) => {
                // Place the chain backwards from its required end pose.
                let rel = *chain_poses(Pose::new(0.0, 0.0, 0.0), &rr.segments).last().unwrap();
                let target = end_pose_of(att);
                let h = target.heading - rel.heading;
                let off = Point::new(rel.x, rel.y);
                let (s, c) = (libm::sin(h), libm::cos(h));
                let rotated = Point::new(c * off.x - s * off.y, s * off.x + c * off.y);
                let p = target.position() - rotated;
                Pose::new(p.x, p.y, h)
            }
            (None, None) => rr.free_start,
        };
        let widths = vec![rr.width; rr.lanes as usize];
        roads.push(PlanRoad {
            id: r.id.clone(),
            junction: None,
            start,
            segments: rr.segments.clone(),
            left_widths: widths.clone(),
            right_widths: widths,
            predecessor: start_att.map(|(j, _)| RoadLink::Junction(j.to_string())),
            successor: end_att.map(|(j, _)| RoadLink::Junction(j.to_string())),
            lane_links: Vec::new(),
            end_target: end_att.map(end_pose_of),
        });
    }

    // Connecting roads.
    let road_ids: BTreeSet<String> = roads.iter().map(|r| r.id.clone()).collect();
    for (ji, spec) in template.junctions.iter().enumerate() {
        let default_k = ev.positive(&spec.max_curvature, &format!("junction {} max_curvature", spec.id))?;
        let n = spec.arms.len();
        let mut connections = Vec::new();
        let mut movements = Vec::new();
        for from in 0..n {
            for to in 0..n {
                if from == to {
                    continue;
                }
                let ts = spec.turns.iter().find(|t| t.from == from && t.to == to);
                if ts.is_some_and(|t| !t.enabled) {
                    continue;
                }
                let max_k = match ts.and_then(|t| t.max_curvature.as_ref()) {
                    Some(e) => ev.positive(e, &format!("junction {} turn {from}->{to} max_curvature", spec.id))?,
                    None => default_k,
                };
                let j = &junctions[ji];
                let (a_in, a_out) = (&j.arms[from], &j.arms[to]);
                let (Some((in_road, in_contact)), Some((out_road, out_contact))) = (&a_in.road, &a_out.road) else {
                    continue;
                };
                if a_in.lanes_in == 0 || a_out.lanes_out == 0 {
                    continue;
                }
                let through = is_through_pair(a_in.heading, a_out.heading);
                let dtheta = normalize_angle(a_out.heading - a_in.heading - core::f64::consts::PI);
                let pairs: Vec<(u32, u32)> = if through {
                    (1..=a_in.lanes_in.min(a_out.lanes_out)).map(|i| (i, i)).collect()
                } else if dtheta > 0.0 {
                    vec![(1, 1)]
                } else {
                    vec![(a_in.lanes_in, a_out.lanes_out)]
                };
                let pin = a_in.attachment(j.center);
                let pout = a_out.attachment(j.center);
                for (li, lo) in pairs {
                    let w = a_in.lane_width;
                    let sp = pin + left_normal(a_in.heading) * ((li - 1) as f64 * a_in.lane_width);
                    let ep = pout - left_normal(a_out.heading) * ((lo - 1) as f64 * a_out.lane_width);
                    let start = Pose::new(sp.x, sp.y, a_in.heading + core::f64::consts::PI);
                    let end = Pose::new(ep.x, ep.y, a_out.heading);
                    let conn = turn::connect(start, end, max_k, through).map_err(|e| NetgenError::Infeasible {
                        junction: j.id.clone(),
                        from,
                        to,
                        lane: li,
                        detail: e.0,
                    })?;
                    let id = connecting_road_id(&j.id, from, to, li);
                    if road_ids.contains(&id) {
                        return Err(NetgenError::DuplicateId(id));
                    }
                    let from_lane = lane_id_in(*in_contact, li);
                    let to_lane = lane_id_out(*out_contact, lo);
                    roads.push(PlanRoad {
                        id: id.clone(),
                        junction: Some(j.id.clone()),
                        start,
                        segments: conn.segments,
                        left_widths: Vec::new(),
                        right_widths: vec![w],
                        predecessor: Some(RoadLink::Road { id: in_road.clone(), contact: *in_contact }),
                        successor: Some(RoadLink::Road { id: out_road.clone(), contact: *out_contact }),
                        lane_links: vec![LaneLink { lane: -1, predecessor: Some(from_lane), successor: Some(to_lane) }],
                        end_target: Some(end),
                    });
                    connections.push(PlanConnection {
                        id: connections.len().to_string(),
                        incoming_road: in_road.clone(),
                        connecting_road: id.clone(),
                        contact_point: Contact::Start,
                        lane_links: vec![(from_lane, -1)],
                    });
                    movements.push(PlanMovement {
                        from_arm: from,
                        to_arm: to,
                        road: id,
                        through,
                        curvature: conn.curvature,
                        heading_change: conn.heading_change,
                    });
                }
            }
        }
        junctions[ji].connections = connections;
        junctions[ji].movements = movements;
    }

    let plan = RoadPlan {
        meta: PlanMeta { name: template.name.clone(), date: template.date.clone(), ..PlanMeta::default() },
        roads,
        junctions,
    };
    plan.check_continuity()?;
    Ok(plan)
}
