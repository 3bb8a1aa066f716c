//! Planar geometry: polylines, discrete curvature, and the line/arc/spiral
//! primitives used for road plan views.
//!
//! Curvature is signed, positive for counterclockwise turning. Headings are
//! radians measured counterclockwise from the +x axis.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Default resampling spacing (meters) used before estimating curvature.
pub const DEFAULT_CURVATURE_SPACING: f64 = 1.0;

/// Absolute tolerance of the spiral endpoint quadrature (meters).
pub const SPIRAL_QUADRATURE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("polyline needs at least {required} points, got {got}")]
    InsufficientData { required: usize, got: usize },
    #[error("polyline has coincident consecutive points at index {0}")]
    DegenerateSegment(usize),
    #[error("resampling spacing must be positive, got {0}")]
    InvalidSpacing(f64),
    #[error("segment length must be positive, got {0}")]
    InvalidLength(f64),
    #[error("{kind:?} segment has inconsistent curvature ({curv_start}, {curv_end})")]
    InconsistentCurvature {
        kind: SegmentKind,
        curv_start: f64,
        curv_end: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Unit vector pointing along `heading`.
    pub fn from_heading(heading: f64) -> Self {
        Point::new(libm::cos(heading), libm::sin(heading))
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Heading of the vector, in (−π, π].
    pub fn angle(self) -> f64 {
        libm::atan2(self.y, self.x)
    }

    /// Left-hand normal (rotated +90°).
    pub fn perp(self) -> Self {
        Point::new(-self.y, self.x)
    }

    pub fn lerp(self, other: Point, t: f64) -> Self {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = libm::fmod(a, 2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Wraps an angle into [0, 2π).
pub fn normalize_angle_positive(a: f64) -> f64 {
    let mut r = libm::fmod(a, 2.0 * PI);
    if r < 0.0 {
        r += 2.0 * PI;
    }
    if r >= 2.0 * PI {
        r = 0.0;
    }
    r
}

/// Ordered planar points with at least two entries and no repeated
/// consecutive point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polyline(Vec<Point>);

impl Polyline {
    pub fn new(points: Vec<Point>) -> Result<Self, GeomError> {
        if points.len() < 2 {
            return Err(GeomError::InsufficientData {
                required: 2,
                got: points.len(),
            });
        }
        if let Some(i) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(GeomError::DegenerateSegment(i + 1));
        }
        Ok(Polyline(points))
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn into_points(self) -> Vec<Point> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Point {
        self.0[0]
    }

    pub fn last(&self) -> Point {
        self.0[self.0.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.0.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    pub fn reversed(&self) -> Polyline {
        let mut pts = self.0.clone();
        pts.reverse();
        Polyline(pts)
    }

    /// Distance from `p` to the nearest point on the polyline.
    pub fn distance_to(&self, p: Point) -> f64 {
        self.0
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Sum of signed turning angles between consecutive segments.
    pub fn total_turn(&self) -> f64 {
        self.0
            .windows(3)
            .map(|w| {
                let a = w[1] - w[0];
                let b = w[2] - w[1];
                libm::atan2(a.cross(b), a.dot(b))
            })
            .sum()
    }

    /// Heading of the polyline leaving its first point, measured as the
    /// chord to the point `reach` meters along the line (or the far end if
    /// shorter).
    pub fn start_heading(&self, reach: f64) -> f64 {
        let target = self.point_at(reach.min(self.length()));
        let origin = self.first();
        if target == origin {
            (self.0[1] - self.0[0]).angle()
        } else {
            (target - origin).angle()
        }
    }

    /// Point at arc length `s`, clamped to the polyline.
    pub fn point_at(&self, s: f64) -> Point {
        if s <= 0.0 {
            return self.first();
        }
        let mut acc = 0.0;
        for w in self.0.windows(2) {
            let d = w[0].distance(w[1]);
            if acc + d >= s {
                return w[0].lerp(w[1], (s - acc) / d);
            }
            acc += d;
        }
        self.last()
    }
}

impl TryFrom<Vec<Point>> for Polyline {
    type Error = GeomError;
    fn try_from(v: Vec<Point>) -> Result<Self, GeomError> {
        Polyline::new(v)
    }
}

impl From<Polyline> for Vec<Point> {
    fn from(p: Polyline) -> Self {
        p.0
    }
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Resamples to uniform arc-length spacing by linear interpolation.
///
/// The segment count is `round(L / h)` (at least one), so the effective
/// spacing is `L / round(L / h)` and both endpoints are kept.
pub fn resample(p: &Polyline, h: f64) -> Result<Polyline, GeomError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(GeomError::InvalidSpacing(h));
    }
    let n = (libm::round(p.length() / h) as usize).max(1);
    Ok(resample_count(p, n))
}

fn resample_count(p: &Polyline, segments: usize) -> Polyline {
    let pts = p.points();
    let total = p.length();
    let step = total / segments as f64;
    let mut out = Vec::with_capacity(segments + 1);
    out.push(pts[0]);
    let mut seg = 0;
    let mut seg_start = 0.0;
    let mut seg_len = pts[0].distance(pts[1]);
    for k in 1..segments {
        let s = step * k as f64;
        while seg + 2 < pts.len() && seg_start + seg_len < s {
            seg_start += seg_len;
            seg += 1;
            seg_len = pts[seg].distance(pts[seg + 1]);
        }
        let t = ((s - seg_start) / seg_len).clamp(0.0, 1.0);
        out.push(pts[seg].lerp(pts[seg + 1], t));
    }
    out.push(pts[pts.len() - 1]);
    // Extremely short inputs can collapse neighbours; drop exact repeats.
    out.dedup();
    Polyline(out)
}

/// Signed curvature sampled along a uniformly resampled polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    /// Arc length of each sample.
    pub s: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl CurvatureProfile {
    pub fn max_abs(&self) -> f64 {
        self.kappa.iter().fold(0.0, |m, k| m.max(k.abs()))
    }

    /// Arc-length-weighted mean curvature (trapezoidal rule), signed.
    pub fn weighted_mean(&self) -> f64 {
        let total = self.s[self.s.len() - 1] - self.s[0];
        if total <= 0.0 {
            return self.kappa.iter().sum::<f64>() / self.kappa.len() as f64;
        }
        let integral: f64 = self
            .s
            .windows(2)
            .zip(self.kappa.windows(2))
            .map(|(s, k)| (s[1] - s[0]) * (k[0] + k[1]) * 0.5)
            .sum();
        integral / total
    }
}

/// Discrete curvature `κ = (x′y″ − y′x″) / (x′² + y′²)^{3/2}` over an
/// arc-length parameterization.
///
/// The polyline is first resampled to spacing `h` (at least two segments);
/// derivatives are central differences inside and second-order one-sided
/// differences at both ends (first order when only three samples exist).
pub fn compute_polyline_curvature(p: &Polyline, h: f64) -> Result<CurvatureProfile, GeomError> {
    if p.len() < 3 {
        return Err(GeomError::InsufficientData {
            required: 3,
            got: p.len(),
        });
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(GeomError::InvalidSpacing(h));
    }
    let n = (libm::round(p.length() / h) as usize).max(2);
    let r = resample_count(p, n);
    let pts = r.points();
    let m = pts.len();
    if m < 3 {
        return Err(GeomError::InsufficientData {
            required: 3,
            got: m,
        });
    }
    let step = p.length() / n as f64;
    let mut kappa = Vec::with_capacity(m);
    for i in 0..m {
        let (d1, d2) = derivatives(pts, i, step);
        let denom = libm::pow(d1.dot(d1), 1.5);
        kappa.push(if denom > 0.0 { d1.cross(d2) / denom } else { 0.0 });
    }
    let s = (0..m).map(|i| step * i as f64).collect();
    Ok(CurvatureProfile { s, kappa })
}

fn derivatives(p: &[Point], i: usize, h: f64) -> (Point, Point) {
    let m = p.len();
    let h2 = h * h;
    if i > 0 && i + 1 < m {
        let d1 = (p[i + 1] - p[i - 1]) * (0.5 / h);
        let d2 = (p[i + 1] - p[i] * 2.0 + p[i - 1]) * (1.0 / h2);
        return (d1, d2);
    }
    // One-sided: mirror the stencil for the last point.
    let (a, b, c, d, sign) = if i == 0 {
        (0, 1, 2, 3, 1.0)
    } else {
        (m - 1, m - 2, m - 3, m.wrapping_sub(4), -1.0)
    };
    let d1 = (p[a] * -3.0 + p[b] * 4.0 - p[c]) * (sign * 0.5 / h);
    let d2 = if m >= 4 {
        (p[a] * 2.0 - p[b] * 5.0 + p[c] * 4.0 - p[d]) * (1.0 / h2)
    } else {
        (p[a] - p[b] * 2.0 + p[c]) * (1.0 / h2)
    };
    (d1, d2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Line,
    Arc,
    Spiral,
}

/// One plan-view primitive. Curvature varies linearly with arc length from
/// `curv_start` to `curv_end`; lines have both zero and arcs have them equal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeomSegment {
    pub kind: SegmentKind,
    pub length: f64,
    pub curv_start: f64,
    pub curv_end: f64,
}

impl GeomSegment {
    pub fn line(length: f64) -> Self {
        GeomSegment {
            kind: SegmentKind::Line,
            length,
            curv_start: 0.0,
            curv_end: 0.0,
        }
    }

    pub fn arc(length: f64, curvature: f64) -> Self {
        GeomSegment {
            kind: SegmentKind::Arc,
            length,
            curv_start: curvature,
            curv_end: curvature,
        }
    }

    pub fn spiral(length: f64, curv_start: f64, curv_end: f64) -> Self {
        GeomSegment {
            kind: SegmentKind::Spiral,
            length,
            curv_start,
            curv_end,
        }
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(GeomError::InvalidLength(self.length));
        }
        let ok = match self.kind {
            SegmentKind::Line => self.curv_start == 0.0 && self.curv_end == 0.0,
            SegmentKind::Arc => self.curv_start == self.curv_end && self.curv_start.is_finite(),
            SegmentKind::Spiral => self.curv_start.is_finite() && self.curv_end.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(GeomError::InconsistentCurvature {
                kind: self.kind,
                curv_start: self.curv_start,
                curv_end: self.curv_end,
            })
        }
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        self.curv_start + (self.curv_end - self.curv_start) * s / self.length
    }

    /// ∫κ ds over the segment.
    pub fn heading_change(&self) -> f64 {
        match self.kind {
            SegmentKind::Line => 0.0,
            SegmentKind::Arc => self.curv_start * self.length,
            SegmentKind::Spiral => 0.5 * (self.curv_start + self.curv_end) * self.length,
        }
    }

    /// Same path traversed backwards, curvature negated.
    pub fn reversed(&self) -> Self {
        GeomSegment {
            kind: self.kind,
            length: self.length,
            curv_start: -self.curv_end,
            curv_end: -self.curv_start,
        }
    }
}

/// Total heading change of a chain of segments.
pub fn heading_change(segments: &[GeomSegment]) -> f64 {
    segments.iter().map(GeomSegment::heading_change).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians in (−π, π].
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Pose reached after travelling the whole segment.
pub fn segment_endpoint(start: Pose, seg: &GeomSegment) -> Pose {
    segment_pose_at(start, seg, seg.length)
}

/// Pose at arc length `s` (0 ≤ s ≤ length) along the segment.
pub fn segment_pose_at(start: Pose, seg: &GeomSegment, s: f64) -> Pose {
    let th0 = start.heading;
    match seg.kind {
        SegmentKind::Line => {
            let d = Point::from_heading(th0) * s;
            Pose::new(start.x + d.x, start.y + d.y, th0)
        }
        SegmentKind::Arc => {
            let k = seg.curv_start;
            let dth = k * s;
            // Chord of length 2 sin(κs/2)/κ at the mid heading.
            let half = 0.5 * dth;
            let chord = if half.abs() < 1e-6 {
                s * (1.0 - half * half / 6.0)
            } else {
                2.0 * libm::sin(half) / k
            };
            let d = Point::from_heading(th0 + half) * chord;
            Pose::new(start.x + d.x, start.y + d.y, th0 + dth)
        }
        SegmentKind::Spiral => {
            let k0 = seg.curv_start;
            let rate = (seg.curv_end - seg.curv_start) / seg.length;
            let theta = |u: f64| th0 + k0 * u + 0.5 * rate * u * u;
            let d = integrate_direction(&theta, 0.0, s, SPIRAL_QUADRATURE_TOLERANCE);
            Pose::new(start.x + d.x, start.y + d.y, theta(s))
        }
    }
}

/// Chains segments from `start`, returning the start pose of every segment
/// followed by the final pose.
pub fn chain_poses(start: Pose, segments: &[GeomSegment]) -> Vec<Pose> {
    let mut poses = Vec::with_capacity(segments.len() + 1);
    let mut pose = start;
    poses.push(pose);
    for seg in segments {
        pose = segment_endpoint(pose, seg);
        poses.push(pose);
    }
    poses
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(theta: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (Point, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let f = |u: f64| Point::from_heading(theta(u));
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let sum = f(c - dx) + f(c + dx);
        kron = kron + sum * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + sum * WG[j / 2];
        }
    }
    let kron = kron * h;
    let err = (kron - gauss * h).norm();
    (kron, err)
}

/// ∫ (cos θ(u), sin θ(u)) du over [a, b] by adaptive Gauss–Kronrod.
pub fn integrate_direction(theta: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Point {
    if b <= a {
        return Point::default();
    }
    adaptive(theta, a, b, tol, 0)
}

fn adaptive(theta: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> Point {
    let (val, err) = gk15(theta, a, b);
    if err <= tol || depth >= 40 {
        return val;
    }
    let m = 0.5 * (a + b);
    adaptive(theta, a, m, 0.5 * tol, depth + 1) + adaptive(theta, m, b, 0.5 * tol, depth + 1)
}
