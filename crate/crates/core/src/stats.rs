//! Empirical parameter distributions over analyzed intersections.
//!
//! Moments are accumulated with Welford updates and merged with Chan's
//! pairwise formula, so shards can be reduced in any grouping. Histograms
//! use half-open bins `[a, b)` except the last, which is closed.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::analyzer::{AnalyzedIntersection, Arm, IntersectionType, LaneRecord};

/// Upper bound on automatically chosen bin counts.
pub const MAX_AUTO_BINS: usize = 1000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("unknown parameter \"{0}\"")]
    UnknownParameter(String),
    #[error("unknown scope \"{0}\"")]
    UnknownScope(String),
    #[error("parameter {parameter} is not defined at {scope} scope")]
    InvalidScope { parameter: String, scope: String },
    #[error("unknown filter \"{0}\"")]
    UnknownFilter(String),
    #[error("invalid value \"{value}\" for filter {key}")]
    InvalidFilterValue { key: String, value: String },
    #[error("no samples match")]
    NoSamples,
    #[error("invalid binning: {0}")]
    InvalidBinning(String),
    #[error("sample {0} lies outside the histogram edges")]
    OutOfRange(f64),
    #[error("need at least 2 samples, got {0}")]
    InsufficientData(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Intersection,
    Link,
    Lane,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Intersection => "intersection",
            Scope::Link => "link",
            Scope::Lane => "lane",
        }
    }

    pub fn parse(s: &str) -> Result<Self, StatsError> {
        match s {
            "intersection" => Ok(Scope::Intersection),
            "link" => Ok(Scope::Link),
            "lane" => Ok(Scope::Lane),
            _ => Err(StatsError::UnknownScope(s.to_string())),
        }
    }
}

/// Scalar intersection parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Type,
    TrafficSignals,
    IntersectingAngle,
    IntersectionSpan,
    LinkLength,
    SpeedLimit,
    IncomingLanes,
    OutgoingLanes,
    LaneCount,
    LaneMeanWidth,
    LaneStartWidth,
    LaneEndWidth,
    LaneMaxCurvature,
    LaneMeanCurvature,
    LaneHeading,
}

impl Parameter {
    pub const ALL: [Parameter; 15] = [
        Parameter::Type,
        Parameter::TrafficSignals,
        Parameter::IntersectingAngle,
        Parameter::IntersectionSpan,
        Parameter::LinkLength,
        Parameter::SpeedLimit,
        Parameter::IncomingLanes,
        Parameter::OutgoingLanes,
        Parameter::LaneCount,
        Parameter::LaneMeanWidth,
        Parameter::LaneStartWidth,
        Parameter::LaneEndWidth,
        Parameter::LaneMaxCurvature,
        Parameter::LaneMeanCurvature,
        Parameter::LaneHeading,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Parameter::Type => "type",
            Parameter::TrafficSignals => "traffic_signals",
            Parameter::IntersectingAngle => "intersecting_angle",
            Parameter::IntersectionSpan => "intersection_span",
            Parameter::LinkLength => "link_length",
            Parameter::SpeedLimit => "speed_limit",
            Parameter::IncomingLanes => "incoming_lanes",
            Parameter::OutgoingLanes => "outgoing_lanes",
            Parameter::LaneCount => "lane_count",
            Parameter::LaneMeanWidth => "lane_mean_width",
            Parameter::LaneStartWidth => "lane_start_width",
            Parameter::LaneEndWidth => "lane_end_width",
            Parameter::LaneMaxCurvature => "lane_max_curvature",
            Parameter::LaneMeanCurvature => "lane_mean_curvature",
            Parameter::LaneHeading => "lane_heading",
        }
    }

    pub fn parse(s: &str) -> Result<Self, StatsError> {
        Parameter::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| StatsError::UnknownParameter(s.to_string()))
    }

    /// Scope at which the parameter is sampled.
    pub fn scope(self) -> Scope {
        use Parameter::*;
        match self {
            Type | TrafficSignals => Scope::Intersection,
            IntersectingAngle | IntersectionSpan | LinkLength | SpeedLimit | IncomingLanes | OutgoingLanes | LaneCount => Scope::Link,
            _ => Scope::Lane,
        }
    }

    pub fn unit(self) -> &'static str {
        use Parameter::*;
        match self {
            IntersectingAngle => "deg",
            IntersectionSpan | LinkLength | LaneMeanWidth | LaneStartWidth | LaneEndWidth => "m",
            SpeedLimit => "km/h",
            LaneMaxCurvature | LaneMeanCurvature => "1/m",
            _ => "",
        }
    }

    /// Bin width used when Freedman–Diaconis is degenerate.
    pub fn fallback_bin_width(self) -> f64 {
        use Parameter::*;
        match self {
            IntersectionSpan => 1.0,
            IntersectingAngle => 5.0,
            LaneMeanWidth | LaneStartWidth | LaneEndWidth => 0.1,
            LaneMaxCurvature | LaneMeanCurvature => 0.02,
            LinkLength => 5.0,
            SpeedLimit => 10.0,
            _ => 1.0,
        }
    }
}

/// Predicates on the corpus, keyed by filter name. Values are
/// comma-separated alternatives; `lane_count` also accepts `N+`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Filters(pub BTreeMap<String, String>);

pub const FILTER_KEYS: [&str; 5] = ["type", "traffic_signals", "lane_count", "heading", "excludeSuspect"];

impl Filters {
    pub fn new() -> Self {
        Filters::default()
    }

    pub fn with(mut self, key: &str, value: &str) -> Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn is_superset_of(&self, other: &Filters) -> bool {
        other.0.iter().all(|(k, v)| self.0.get(k) == Some(v))
    }

    /// Checks keys and values without running a query.
    pub fn validate(&self) -> Result<(), StatsError> {
        self.compile().map(|_| ())
    }

    fn compile(&self) -> Result<Predicate, StatsError> {
        let bad = |k: &str, v: &str| StatsError::InvalidFilterValue {
            key: k.to_string(),
            value: v.to_string(),
        };
        let mut p = Predicate::default();
        for (k, v) in &self.0 {
            let items = || v.split(',').map(str::trim);
            match k.as_str() {
                "type" => {
                    p.types = Some(
                        items()
                            .map(|s| IntersectionType::parse(s).ok_or_else(|| bad(k, v)))
                            .collect::<Result<_, _>>()?,
                    )
                }
                "traffic_signals" => p.signals = Some(parse_bool(v).ok_or_else(|| bad(k, v))?),
                "lane_count" => {
                    p.lane_counts = Some(
                        items()
                            .map(|s| match s.strip_suffix('+') {
                                Some(n) => n.parse().map(|n| (n, u32::MAX)),
                                None => s.parse().map(|n| (n, n)),
                            })
                            .collect::<Result<_, _>>()
                            .map_err(|_| bad(k, v))?,
                    )
                }
                "heading" => p.headings = Some(items().map(|s| s.parse::<i8>()).collect::<Result<_, _>>().map_err(|_| bad(k, v))?),
                "excludeSuspect" => p.exclude_suspect = parse_bool(v).ok_or_else(|| bad(k, v))?,
                _ => return Err(StatsError::UnknownFilter(k.clone())),
            }
        }
        Ok(p)
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

#[derive(Default)]
struct Predicate {
    types: Option<Vec<IntersectionType>>,
    signals: Option<bool>,
    lane_counts: Option<Vec<(u32, u32)>>,
    headings: Option<Vec<i8>>,
    exclude_suspect: bool,
}

impl Predicate {
    fn intersection(&self, i: &AnalyzedIntersection) -> bool {
        self.types.as_ref().is_none_or(|t| t.contains(&i.kind)) && self.signals.is_none_or(|s| s == i.traffic_signals)
    }

    fn arm(&self, a: &Arm) -> bool {
        self.lane_counts
            .as_ref()
            .is_none_or(|r| r.iter().any(|&(lo, hi)| (lo..=hi).contains(&a.lane_count)))
    }

    fn lane(&self, l: &LaneRecord) -> bool {
        self.headings.as_ref().is_none_or(|h| h.contains(&l.heading_class)) && !(self.exclude_suspect && l.suspect)
    }
}

/// Streaming count, mean, M2, min and max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for Moments {
    fn default() -> Self {
        Moments {
            n: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        Moments {
            n,
            mean: self.mean + d * nb / n as f64,
            m2: self.m2 + other.m2 + d * d * na * nb / n as f64,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    /// Sample standard deviation (n − 1 denominator); 0 below two samples.
    pub fn sd(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            libm::sqrt(self.m2 / (self.n - 1) as f64)
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn bin_widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| w[1] - w[0])
    }

    /// counts / (n · bin width); integrates to one.
    pub fn density(&self) -> Vec<f64> {
        let n: u64 = self.counts.iter().sum();
        self.counts
            .iter()
            .zip(self.bin_widths())
            .map(|(c, w)| *c as f64 / (n as f64 * w))
            .collect()
    }

    /// Adds counts of a histogram with identical edges.
    pub fn merge(&self, other: &Histogram) -> Option<Histogram> {
        if self.edges != other.edges {
            return None;
        }
        Some(Histogram {
            edges: self.edges.clone(),
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Binning {
    /// Freedman–Diaconis, falling back to the parameter's fixed width.
    Auto,
    Width(f64),
    Edges(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFit {
    pub mu: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDistribution {
    pub parameter: Parameter,
    pub scope: Scope,
    pub filters: Filters,
    pub n: u64,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    #[serde(rename = "hist")]
    pub histogram: Histogram,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<NormalFit>,
}

impl ParameterDistribution {
    pub fn density(&self) -> Vec<f64> {
        self.histogram.density()
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn auto_width(values: &[f64], fallback: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let w = 2.0 * iqr / libm::cbrt(values.len() as f64);
    let w = if w > 0.0 && w.is_finite() { w } else { fallback };
    let range = sorted[sorted.len() - 1] - sorted[0];
    if range / w > MAX_AUTO_BINS as f64 {
        range / MAX_AUTO_BINS as f64
    } else {
        w
    }
}

pub fn histogram(values: &[f64], binning: &Binning, fallback_width: f64) -> Result<Histogram, StatsError> {
    if values.is_empty() {
        return Err(StatsError::NoSamples);
    }
    let edges = match binning {
        Binning::Edges(e) => {
            if e.len() < 2 || e.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(StatsError::InvalidBinning("edges must be strictly increasing".into()));
            }
            e.clone()
        }
        other => {
            let w = match other {
                Binning::Width(w) if *w > 0.0 && w.is_finite() => *w,
                Binning::Width(w) => return Err(StatsError::InvalidBinning(alloc::format!("width {w}"))),
                _ => auto_width(values, fallback_width),
            };
            let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            let lo = libm::floor(min / w) * w;
            let bins = (libm::floor((max - lo) / w) as usize + 1).max(1);
            (0..=bins).map(|i| lo + w * i as f64).collect()
        }
    };
    let mut counts = alloc::vec![0u64; edges.len() - 1];
    let last = edges.len() - 1;
    for &v in values {
        if v < edges[0] || v > edges[last] {
            return Err(StatsError::OutOfRange(v));
        }
        // partition_point gives the first edge strictly greater than v.
        let idx = edges.partition_point(|e| *e <= v).saturating_sub(1).min(last - 1);
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Builds a distribution record from raw samples.
pub fn distribution_from_values(
    values: &[f64],
    parameter: Parameter,
    scope: Scope,
    filters: Filters,
    binning: &Binning,
) -> Result<ParameterDistribution, StatsError> {
    let m: Moments = values.iter().copied().collect();
    let histogram = histogram(values, binning, parameter.fallback_bin_width())?;
    Ok(ParameterDistribution {
        parameter,
        scope,
        filters,
        n: m.n,
        mean: m.mean,
        sd: m.sd(),
        min: m.min,
        max: m.max,
        histogram,
        fit: None,
    })
}

fn arm_value(p: Parameter, a: &Arm) -> Option<f64> {
    match p {
        Parameter::IntersectingAngle => Some(a.intersecting_angle),
        Parameter::IntersectionSpan => (!a.span_missing).then_some(a.intersection_span),
        Parameter::LinkLength => Some(a.link_length),
        Parameter::SpeedLimit => a.speed_limit,
        Parameter::IncomingLanes => Some(a.incoming_lanes as f64),
        Parameter::OutgoingLanes => Some(a.outgoing_lanes as f64),
        Parameter::LaneCount => Some(a.lane_count as f64),
        _ => None,
    }
}

fn lane_value(p: Parameter, l: &LaneRecord) -> Option<f64> {
    match p {
        Parameter::LaneMeanWidth => Some(l.mean_width),
        Parameter::LaneStartWidth => Some(l.start_width),
        Parameter::LaneEndWidth => Some(l.end_width),
        Parameter::LaneMaxCurvature => l.max_curvature,
        Parameter::LaneMeanCurvature => l.mean_curvature,
        Parameter::LaneHeading => Some(l.heading_class as f64),
        _ => None,
    }
}

fn type_index(t: IntersectionType) -> f64 {
    match t {
        IntersectionType::T3 => 0.0,
        IntersectionType::Y3 => 1.0,
        IntersectionType::X4 => 2.0,
        IntersectionType::K4 => 3.0,
    }
}

/// Samples of `parameter` over the corpus, after applying `filters`.
pub fn collect_samples(
    analyzed: &[AnalyzedIntersection],
    parameter: Parameter,
    scope: Scope,
    filters: &Filters,
) -> Result<Vec<f64>, StatsError> {
    if parameter.scope() != scope {
        return Err(StatsError::InvalidScope {
            parameter: parameter.as_str().to_string(),
            scope: scope.as_str().to_string(),
        });
    }
    let pred = filters.compile()?;
    let mut out = Vec::new();
    for inter in analyzed.iter().filter(|i| pred.intersection(i)) {
        match scope {
            Scope::Intersection => out.push(match parameter {
                Parameter::Type => type_index(inter.kind),
                _ => inter.traffic_signals as u8 as f64,
            }),
            Scope::Link => out.extend(inter.arms.iter().filter(|a| pred.arm(a)).filter_map(|a| arm_value(parameter, a))),
            Scope::Lane => out.extend(
                inter
                    .lanes
                    .iter()
                    .filter(|l| pred.lane(l) && inter.arms.get(l.from_arm).is_none_or(|a| pred.arm(a)))
                    .filter_map(|l| lane_value(parameter, l)),
            ),
        }
    }
    Ok(out)
}

/// Aggregates one parameter into a distribution record.
pub fn aggregate(
    analyzed: &[AnalyzedIntersection],
    parameter: Parameter,
    scope: Scope,
    filters: &Filters,
    binning: &Binning,
) -> Result<ParameterDistribution, StatsError> {
    let values = collect_samples(analyzed, parameter, scope, filters)?;
    distribution_from_values(&values, parameter, scope, filters.clone(), binning)
}

/// Attaches and returns the normal fit (sample mean, sample sd).
pub fn fit_normal(dist: &mut ParameterDistribution) -> Result<NormalFit, StatsError> {
    if dist.n < 2 {
        return Err(StatsError::InsufficientData(dist.n));
    }
    let fit = NormalFit {
        mu: dist.mean,
        sd: dist.sd,
    };
    dist.fit = Some(fit);
    Ok(fit)
}
