//! Network template files.
//!
//! ```xml
//! <roadNetwork name="cross" date="2024-01-01T00:00:00">
//!   <vars>
//!     <var id="w" type="normal" mu="3.5" sd="0.2"/>
//!   </vars>
//!   <roads>
//!     <road id="1" lanes_per_direction="1" lane_width="w"><line length="50"/></road>
//!   </roads>
//!   <junctions>
//!     <junction id="J" type="X4" max_curvature="0.1">
//!       <arm angle="90" span="25"/> ...
//!       <turn from="0" to="2" enabled="false"/>
//!     </junction>
//!   </junctions>
//!   <links>
//!     <link road="1" contact="start" junction="J" arm="0"/>
//!   </links>
//! </roadNetwork>
//! ```
//!
//! Numeric attributes accept a literal, a variable id or `{expression}`.

use std::collections::BTreeSet;

use roadforge_core::analyzer::IntersectionType;
use roadforge_core::geom::SegmentKind;
use roadforge_core::netgen::{
    parse_numeric, ArmSpec, Contact, JunctionSpec, LinkSpec, NetgenError, NetworkTemplate, RoadSpec, SegmentSpec, TurnSpec,
    DEFAULT_ARM0_HEADING_DEG, DEFAULT_MAX_CURVATURE,
};
use roadforge_core::stats::{Filters, Parameter, Scope};
use roadforge_core::variation::{parse_expression, Expr, LindepMode, VarKind, VariableDef};
use roxmltree::{Document, Node};

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("{path} (line {line}): {message}")]
    Schema { path: String, line: u32, message: String },
    #[error("malformed XML: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error(transparent)]
    Template(#[from] NetgenError),
}

struct Ctx<'a, 'i> {
    doc: &'a Document<'i>,
}

struct El<'a, 'i> {
    node: Node<'a, 'i>,
    path: String,
    line: u32,
}

impl<'a, 'i> Ctx<'a, 'i> {
    fn el(&self, node: Node<'a, 'i>, path: String) -> El<'a, 'i> {
        let line = self.doc.text_pos_at(node.range().start).row;
        El { node, path, line }
    }

    /// Element children with their indexed paths, rejecting unexpected names.
    fn children(&self, parent: &El<'a, 'i>, allowed: &[&str]) -> Result<Vec<El<'a, 'i>>, TemplateError> {
        let mut counts = std::collections::BTreeMap::<&str, usize>::new();
        let mut out = Vec::new();
        for c in parent.node.children().filter(Node::is_element) {
            let name = c.tag_name().name();
            if !allowed.contains(&name) {
                let e = self.el(c, format!("{}/{name}", parent.path));
                return Err(e.error(format!("unexpected element <{name}>, expected one of {}", allowed.join(", "))));
            }
            let k = counts.entry(name).or_insert(0);
            *k += 1;
            out.push(self.el(c, format!("{}/{name}[{k}]", parent.path)));
        }
        Ok(out)
    }
}

impl El<'_, '_> {
    fn error(&self, message: String) -> TemplateError {
        TemplateError::Schema { path: self.path.clone(), line: self.line, message }
    }

    fn name(&self) -> &str {
        self.node.tag_name().name()
    }

    fn check_attributes(&self, allowed: &[&str]) -> Result<(), TemplateError> {
        for a in self.node.attributes() {
            if !allowed.contains(&a.name()) {
                return Err(self.error(format!("unexpected attribute \"{}\"", a.name())));
            }
        }
        Ok(())
    }

    fn opt(&self, name: &str) -> Option<&str> {
        self.node.attribute(name)
    }

    fn req(&self, name: &str) -> Result<&str, TemplateError> {
        self.opt(name).ok_or_else(|| self.error(format!("missing attribute \"{name}\"")))
    }

    fn expr(&self, name: &str) -> Result<Expr, TemplateError> {
        self.parse_expr(name, self.req(name)?)
    }

    fn expr_or(&self, name: &str, default: f64) -> Result<Expr, TemplateError> {
        match self.opt(name) {
            Some(v) => self.parse_expr(name, v),
            None => Ok(Expr::Num(default)),
        }
    }

    fn opt_expr(&self, name: &str) -> Result<Option<Expr>, TemplateError> {
        self.opt(name).map(|v| self.parse_expr(name, v)).transpose()
    }

    fn parse_expr(&self, name: &str, v: &str) -> Result<Expr, TemplateError> {
        parse_numeric(v).map_err(|e| self.error(format!("attribute \"{name}\": {e}")))
    }

    /// A numeric attribute that must not depend on variables.
    fn constant(&self, name: &str) -> Result<f64, TemplateError> {
        let e = self.expr(name)?;
        e.constant().map_err(|err| self.error(format!("attribute \"{name}\" must be a constant: {err}")))
    }

    fn count(&self, name: &str) -> Result<Option<u32>, TemplateError> {
        self.opt(name)
            .map(|v| v.trim().parse::<u32>().map_err(|_| self.error(format!("attribute \"{name}\" must be a non-negative integer, got \"{v}\""))))
            .transpose()
    }

    fn index(&self, name: &str) -> Result<usize, TemplateError> {
        let v = self.req(name)?;
        v.trim().parse().map_err(|_| self.error(format!("attribute \"{name}\" must be an index, got \"{v}\"")))
    }

    fn boolean(&self, name: &str, default: bool) -> Result<bool, TemplateError> {
        match self.opt(name) {
            None => Ok(default),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(v) => Err(self.error(format!("attribute \"{name}\" must be true or false, got \"{v}\""))),
        }
    }
}

fn parse_var(e: &El) -> Result<VariableDef, TemplateError> {
    let id = e.req("id")?.to_string();
    let kind = match e.req("type")? {
        "normal" => {
            e.check_attributes(&["id", "type", "mu", "sd"])?;
            VarKind::Normal { mu: e.constant("mu")?, sd: e.constant("sd")? }
        }
        "uniform" => {
            e.check_attributes(&["id", "type", "min", "max"])?;
            VarKind::Uniform { min: e.constant("min")?, max: e.constant("max")? }
        }
        "lindep" => {
            e.check_attributes(&["id", "type", "dp", "target", "unknown"])?;
            let src = e.req("dp")?;
            let dp = parse_expression(src).map_err(|err| e.error(format!("attribute \"dp\": {err}")))?;
            let mode = match (e.opt("target"), e.opt("unknown")) {
                (None, None) => LindepMode::Evaluate,
                (Some(_), Some(u)) => LindepMode::Solve { target: e.constant("target")?, unknown: u.trim().to_string() },
                _ => return Err(e.error("solve mode needs both \"target\" and \"unknown\"".into())),
            };
            VarKind::Lindep { dp, mode }
        }
        "fromDist" => {
            e.check_attributes(&["id", "type", "parameter", "scope", "filters"])?;
            let parameter = Parameter::parse(e.req("parameter")?).map_err(|err| e.error(err.to_string()))?;
            let scope = match e.opt("scope") {
                Some(s) => Scope::parse(s).map_err(|err| e.error(err.to_string()))?,
                None => parameter.scope(),
            };
            let mut filters = Filters::new();
            for item in e.opt("filters").unwrap_or("").split_whitespace() {
                let (k, v) = item.split_once('=').ok_or_else(|| e.error(format!("filter \"{item}\" is not key=value")))?;
                filters = filters.with(k, v);
            }
            filters.validate().map_err(|err| e.error(err.to_string()))?;
            VarKind::FromDist { parameter, scope, filters }
        }
        other => return Err(e.error(format!("unknown variable type \"{other}\""))),
    };
    Ok(VariableDef { id, kind })
}

fn parse_segment(e: &El) -> Result<SegmentSpec, TemplateError> {
    let zero = Expr::Num(0.0);
    Ok(match e.name() {
        "line" => {
            e.check_attributes(&["length"])?;
            SegmentSpec { kind: SegmentKind::Line, length: e.expr("length")?, curv_start: zero.clone(), curv_end: zero }
        }
        "arc" => {
            e.check_attributes(&["length", "curvature"])?;
            let k = e.expr("curvature")?;
            SegmentSpec { kind: SegmentKind::Arc, length: e.expr("length")?, curv_start: k.clone(), curv_end: k }
        }
        _ => {
            e.check_attributes(&["length", "curv_start", "curv_end"])?;
            SegmentSpec {
                kind: SegmentKind::Spiral,
                length: e.expr("length")?,
                curv_start: e.expr("curv_start")?,
                curv_end: e.expr("curv_end")?,
            }
        }
    })
}

fn parse_road(ctx: &Ctx, e: &El) -> Result<RoadSpec, TemplateError> {
    e.check_attributes(&["id", "lanes_per_direction", "lane_width", "x", "y", "hdg"])?;
    let segments = ctx
        .children(e, &["line", "arc", "spiral"])?
        .iter()
        .map(parse_segment)
        .collect::<Result<Vec<_>, _>>()?;
    if segments.is_empty() {
        return Err(e.error("road needs at least one geometry element".into()));
    }
    Ok(RoadSpec {
        id: e.req("id")?.to_string(),
        segments,
        lanes_per_direction: e.count("lanes_per_direction")?.unwrap_or(1),
        lane_width: e.expr("lane_width")?,
        x: e.expr_or("x", 0.0)?,
        y: e.expr_or("y", 0.0)?,
        hdg: e.expr_or("hdg", 0.0)?,
    })
}

fn parse_junction(ctx: &Ctx, e: &El) -> Result<JunctionSpec, TemplateError> {
    e.check_attributes(&["id", "type", "x", "y", "heading", "max_curvature"])?;
    let kind_s = e.req("type")?;
    let kind = IntersectionType::parse(kind_s).ok_or_else(|| e.error(format!("unknown junction type \"{kind_s}\"")))?;
    let mut arms = Vec::new();
    let mut turns = Vec::new();
    for c in ctx.children(e, &["arm", "turn"])? {
        if c.name() == "arm" {
            c.check_attributes(&["angle", "span", "lanes_in", "lanes_out", "lane_width"])?;
            arms.push(ArmSpec {
                angle: c.expr("angle")?,
                span: c.expr("span")?,
                lanes_in: c.count("lanes_in")?,
                lanes_out: c.count("lanes_out")?,
                lane_width: c.opt_expr("lane_width")?,
            });
        } else {
            c.check_attributes(&["from", "to", "enabled", "max_curvature"])?;
            turns.push(TurnSpec {
                from: c.index("from")?,
                to: c.index("to")?,
                enabled: c.boolean("enabled", true)?,
                max_curvature: c.opt_expr("max_curvature")?,
            });
        }
    }
    if arms.len() != kind.arm_count() {
        return Err(e.error(format!("type {} needs {} arms, got {}", kind.as_str(), kind.arm_count(), arms.len())));
    }
    Ok(JunctionSpec {
        id: e.req("id")?.to_string(),
        kind,
        x: e.expr_or("x", 0.0)?,
        y: e.expr_or("y", 0.0)?,
        heading: e.expr_or("heading", DEFAULT_ARM0_HEADING_DEG)?,
        max_curvature: e.expr_or("max_curvature", DEFAULT_MAX_CURVATURE)?,
        arms,
        turns,
    })
}

fn parse_link(e: &El) -> Result<LinkSpec, TemplateError> {
    e.check_attributes(&["road", "contact", "junction", "arm"])?;
    let contact = e.req("contact")?;
    Ok(LinkSpec {
        road: e.req("road")?.to_string(),
        contact: Contact::parse(contact).ok_or_else(|| e.error(format!("contact must be start or end, got \"{contact}\"")))?,
        junction: e.req("junction")?.to_string(),
        arm: e.index("arm")?,
    })
}

/// Parses a template and checks every invariant that does not depend on
/// variable values.
pub fn parse_template(xml: &str) -> Result<NetworkTemplate, TemplateError> {
    let doc = Document::parse(xml)?;
    let ctx = Ctx { doc: &doc };
    let root = ctx.el(doc.root_element(), "/roadNetwork".into());
    if root.name() != "roadNetwork" {
        return Err(root.error(format!("root element must be <roadNetwork>, got <{}>", root.name())));
    }
    root.check_attributes(&["name", "date"])?;
    let mut t = NetworkTemplate {
        name: root.opt("name").unwrap_or("roadforge").to_string(),
        date: root.opt("date").map(str::to_string),
        ..NetworkTemplate::default()
    };
    let mut seen = BTreeSet::new();
    for section in ctx.children(&root, &["vars", "roads", "junctions", "links"])? {
        section.check_attributes(&[])?;
        if !seen.insert(section.name().to_string()) {
            return Err(section.error(format!("<{}> appears more than once", section.name())));
        }
        match section.name() {
            "vars" => {
                for v in ctx.children(&section, &["var"])? {
                    t.vars.push(parse_var(&v)?);
                }
            }
            "roads" => {
                for r in ctx.children(&section, &["road"])? {
                    t.roads.push(parse_road(&ctx, &r)?);
                }
            }
            "junctions" => {
                for j in ctx.children(&section, &["junction"])? {
                    t.junctions.push(parse_junction(&ctx, &j)?);
                }
            }
            _ => {
                for l in ctx.children(&section, &["link"])? {
                    t.links.push(parse_link(&l)?);
                }
            }
        }
    }
    t.validate()?;
    Ok(t)
}
