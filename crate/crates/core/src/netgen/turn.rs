//! Connecting-road synthesis inside a junction.
//!
//! A connection joins an entry pose to an exit pose with the chain
//! `line · spiral(0→κ) · arc(κ) · spiral(κ→0) · line`. Both spirals take a
//! quarter of the heading change each and the arc the remaining half, so the
//! curve is symmetric and its tangent lengths scale with 1/|κ|. The straight
//! legs absorb whatever distance is left to the tangent intersection.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::f64::consts::PI;

use crate::geom::{chain_poses, normalize_angle, GeomSegment, Point, Pose};

/// Below this magnitude a heading change counts as none at all.
pub const STRAIGHT_EPS: f64 = 1e-9;
/// Straight legs shorter than this are dropped from the chain.
pub const MIN_LEG: f64 = 1e-9;
/// Through connections use this multiple of the smallest curvature that
/// fits, so both straight legs keep positive length.
const THROUGH_CURVATURE_MARGIN: f64 = 1.25;

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub segments: Vec<GeomSegment>,
    /// Signed curvature of the arc; zero for a straight connection.
    pub curvature: f64,
    pub heading_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Infeasible(pub String);

/// Tangent lengths (entry, exit) of the symmetric curve with unit curvature
/// and heading change `|dtheta|`.
pub fn unit_tangent_lengths(dtheta: f64) -> (f64, f64) {
    let d = dtheta.abs();
    let ls = 0.5 * d;
    let la = d - ls;
    let segs = [GeomSegment::spiral(ls, 0.0, 1.0), GeomSegment::arc(la, 1.0), GeomSegment::spiral(ls, 1.0, 0.0)];
    let end = *chain_poses(Pose::new(0.0, 0.0, 0.0), &segs).last().unwrap_or(&Pose::new(0.0, 0.0, 0.0));
    let (s, c) = (libm::sin(d), libm::cos(d));
    let t1 = end.y / s;
    (end.x - t1 * c, t1)
}

/// Spiral–arc–spiral with signed curvature `kappa` turning by `dtheta`.
///
/// The arc length follows from the closure
/// `κ/2·l_s + κ·l_a + κ/2·l_s = Δθ`.
pub fn curve_segments(dtheta: f64, kappa: f64) -> [GeomSegment; 3] {
    let ls = 0.5 * dtheta / kappa;
    let la = (dtheta - kappa / 2.0 * ls - kappa / 2.0 * ls) / kappa;
    [GeomSegment::spiral(ls, 0.0, kappa), GeomSegment::arc(la, kappa), GeomSegment::spiral(ls, kappa, 0.0)]
}

/// Builds the chain from `start` to `end`.
///
/// Turns use exactly `max_curvature`; through connections use the gentlest
/// curvature that fits (times a small margin), capped by `max_curvature`.
pub fn connect(start: Pose, end: Pose, max_curvature: f64, through: bool) -> Result<Connection, Infeasible> {
    let dtheta = normalize_angle(end.heading - start.heading);
    let u0 = Point::from_heading(start.heading);
    let u1 = Point::from_heading(end.heading);
    let d = end.position() - start.position();

    if dtheta.abs() <= STRAIGHT_EPS {
        let lateral = u0.cross(d);
        let along = u0.dot(d);
        if lateral.abs() > STRAIGHT_EPS || along <= 0.0 {
            return Err(Infeasible(format!(
                "entry and exit are parallel but offset by {lateral:.6} m laterally and {along:.6} m along"
            )));
        }
        return Ok(Connection { segments: vec![GeomSegment::line(along)], curvature: 0.0, heading_change: 0.0 });
    }
    if dtheta.abs() >= PI - STRAIGHT_EPS {
        return Err(Infeasible("connection would reverse direction".into()));
    }
    if !(max_curvature > 0.0) || !max_curvature.is_finite() {
        return Err(Infeasible(format!("max_curvature {max_curvature} must be positive")));
    }

    // Tangent intersection: start + t0·u0 = end − t1·u1.
    let det = u0.cross(u1);
    let t0 = d.cross(u1) / det;
    let t1 = u0.cross(d) / det;
    let (tau0, tau1) = unit_tangent_lengths(dtheta);

    let magnitude = if through {
        let room = t0.min(t1);
        if room <= 0.0 {
            return Err(Infeasible(format!("tangent lines meet {room:.3} m behind the lane ends")));
        }
        let needed = (tau0 / t0).max(tau1 / t1);
        if needed > max_curvature {
            return Err(Infeasible(format!(
                "needs curvature {needed:.6} 1/m, above the maximum {max_curvature}"
            )));
        }
        (needed * THROUGH_CURVATURE_MARGIN).min(max_curvature)
    } else {
        max_curvature
    };
    let kappa = magnitude.copysign(dtheta);
    let l1 = t0 - tau0 / magnitude;
    let l2 = t1 - tau1 / magnitude;
    if l1 < -MIN_LEG || l2 < -MIN_LEG {
        return Err(Infeasible(format!(
            "curvature {magnitude} needs {:.3} m of approach, only {:.3} m available",
            tau0 / magnitude,
            t0.min(t1)
        )));
    }

    let mut segments = Vec::with_capacity(5);
    if l1 > MIN_LEG {
        segments.push(GeomSegment::line(l1));
    }
    segments.extend(curve_segments(dtheta, kappa));
    if l2 > MIN_LEG {
        segments.push(GeomSegment::line(l2));
    }
    Ok(Connection { segments, curvature: kappa, heading_change: dtheta })
}
