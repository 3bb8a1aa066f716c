//! Random variables for template-driven generation.
//!
//! Each definition draws at most once from the per-map stream, at a counter
//! equal to its declaration index, so appending definitions never changes the
//! values of existing ones.

pub mod expr;
pub mod rng;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

pub use expr::{parse_expression, EvalError, Expr, ParseError};
pub use rng::{inverse_normal_cdf, map_seed, CounterRng};

use crate::stats::{Filters, Parameter, ParameterDistribution, Scope};

/// Resolved variable values, keyed by id.
pub type Bindings = BTreeMap<String, f64>;

/// Slope of a solve-mode expression in its unknown below which the
/// constraint is treated as singular.
pub const SINGULAR_COEFFICIENT: f64 = 1e-12;
/// Relative tolerance of the second-difference linearity probe.
pub const LINEARITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum LindepMode {
    Evaluate,
    /// Choose `unknown` so that the expression equals `target`.
    Solve { target: f64, unknown: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarKind {
    Normal { mu: f64, sd: f64 },
    Uniform { min: f64, max: f64 },
    Lindep { dp: Expr, mode: LindepMode },
    /// Placeholder for a normal whose moments come from an analyzed corpus.
    FromDist { parameter: Parameter, scope: Scope, filters: Filters },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableDef {
    pub id: String,
    pub kind: VarKind,
}

impl VariableDef {
    pub fn normal(id: &str, mu: f64, sd: f64) -> Self {
        VariableDef { id: id.to_string(), kind: VarKind::Normal { mu, sd } }
    }

    pub fn uniform(id: &str, min: f64, max: f64) -> Self {
        VariableDef { id: id.to_string(), kind: VarKind::Uniform { min, max } }
    }

    pub fn evaluate(id: &str, dp: &str) -> Result<Self, ParseError> {
        Ok(VariableDef {
            id: id.to_string(),
            kind: VarKind::Lindep { dp: parse_expression(dp)?, mode: LindepMode::Evaluate },
        })
    }

    pub fn solve(id: &str, dp: &str, target: f64, unknown: &str) -> Result<Self, ParseError> {
        Ok(VariableDef {
            id: id.to_string(),
            kind: VarKind::Lindep {
                dp: parse_expression(dp)?,
                mode: LindepMode::Solve { target, unknown: unknown.to_string() },
            },
        })
    }

    /// Ids this definition binds: its own, plus the unknown of a solve.
    pub fn defines(&self) -> Vec<&str> {
        match &self.kind {
            VarKind::Lindep { mode: LindepMode::Solve { unknown, .. }, .. } => vec![self.id.as_str(), unknown.as_str()],
            _ => vec![self.id.as_str()],
        }
    }

    /// Ids that must be bound before this definition can be sampled.
    pub fn dependencies(&self) -> Vec<String> {
        match &self.kind {
            VarKind::Lindep { dp, mode } => {
                let mut vars = dp.variables();
                if let LindepMode::Solve { unknown, .. } = mode {
                    vars.remove(unknown);
                }
                vars.into_iter().collect()
            }
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VariationError {
    #[error("variable \"{0}\" is defined more than once")]
    DuplicateId(String),
    #[error("variable \"{id}\": {detail}")]
    InvalidParameter { id: String, detail: String },
    #[error("variable \"{id}\" refers to undeclared variable \"{name}\"")]
    Undeclared { id: String, name: String },
    #[error("variable \"{id}\": unknown \"{unknown}\" does not appear in its expression")]
    UnknownNotInExpression { id: String, unknown: String },
    #[error("cyclic dependency: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("variable \"{id}\": coefficient of \"{unknown}\" is zero, constraint is singular")]
    Singular { id: String, unknown: String },
    #[error("variable \"{id}\": expression is not linear in \"{unknown}\"")]
    Nonlinear { id: String, unknown: String },
    #[error("variable \"{id}\": {source}")]
    Eval { id: String, source: EvalError },
    #[error("variable \"{0}\" draws from a distribution that has not been bound")]
    UnboundDistribution(String),
    #[error("no distribution for {parameter} at {scope} scope with filters {filters}; available: {}", if .available.is_empty() { "none".to_string() } else { .available.join(", ") })]
    NotFound { parameter: String, scope: String, filters: String, available: Vec<String> },
    #[error("{count} distributions match {parameter} with filters {filters}")]
    Ambiguous { parameter: String, filters: String, count: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleContext {
    pub master_seed: u64,
    pub map_index: u64,
    /// Values fixed before sampling; definitions may refer to them.
    pub bindings: Bindings,
}

impl SampleContext {
    pub fn new(master_seed: u64, map_index: u64) -> Self {
        SampleContext { master_seed, map_index, bindings: Bindings::new() }
    }

    pub fn stream(&self) -> CounterRng {
        CounterRng::new(map_seed(self.master_seed, self.map_index))
    }
}

/// Checks the definitions and returns an evaluation order (indices into
/// `defs`). Ties are broken by declaration order.
pub fn validate(defs: &[VariableDef], prebound: &Bindings) -> Result<Vec<usize>, VariationError> {
    let mut owner: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, d) in defs.iter().enumerate() {
        for name in d.defines() {
            if prebound.contains_key(name) || owner.insert(name, i).is_some() {
                return Err(VariationError::DuplicateId(name.to_string()));
            }
        }
        let bad = |detail: String| VariationError::InvalidParameter { id: d.id.clone(), detail };
        match &d.kind {
            VarKind::Normal { mu, sd } => {
                if !mu.is_finite() || !sd.is_finite() || *sd < 0.0 {
                    return Err(bad(format!("normal needs finite mu and sd >= 0, got mu={mu} sd={sd}")));
                }
            }
            VarKind::Uniform { min, max } => {
                if !min.is_finite() || !max.is_finite() || min > max {
                    return Err(bad(format!("uniform needs finite min <= max, got [{min}, {max}]")));
                }
            }
            VarKind::Lindep { dp, mode: LindepMode::Solve { target, unknown } } => {
                if !target.is_finite() {
                    return Err(bad(format!("target {target} is not finite")));
                }
                if !dp.variables().contains(unknown) {
                    return Err(VariationError::UnknownNotInExpression { id: d.id.clone(), unknown: unknown.clone() });
                }
            }
            VarKind::Lindep { .. } | VarKind::FromDist { .. } => {}
        }
    }

    let mut deps: Vec<Vec<usize>> = Vec::with_capacity(defs.len());
    for d in defs {
        let mut v = Vec::new();
        for name in d.dependencies() {
            match owner.get(name.as_str()) {
                Some(&j) => v.push(j),
                None if prebound.contains_key(&name) => {}
                None => return Err(VariationError::Undeclared { id: d.id.clone(), name }),
            }
        }
        v.sort_unstable();
        v.dedup();
        deps.push(v);
    }

    // Depth-first post-order; the explicit stack keeps deep chains off the call stack.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; defs.len()];
    let mut order = Vec::with_capacity(defs.len());
    for root in 0..defs.len() {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        mark[root] = Mark::Active;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(&dep) = deps[node].get(*next) {
                *next += 1;
                match mark[dep] {
                    Mark::Done => {}
                    Mark::New => {
                        mark[dep] = Mark::Active;
                        stack.push((dep, 0));
                    }
                    Mark::Active => {
                        let start = stack.iter().position(|&(n, _)| n == dep).unwrap_or(0);
                        let mut cycle: Vec<String> = stack[start..].iter().map(|&(n, _)| defs[n].id.clone()).collect();
                        cycle.push(defs[dep].id.clone());
                        return Err(VariationError::Cycle(cycle));
                    }
                }
            } else {
                mark[node] = Mark::Done;
                order.push(node);
                stack.pop();
            }
        }
    }
    Ok(order)
}

/// Solves `f(u) = target` for an `f` that must be affine in `u`.
pub fn solve_linear(
    f: &dyn Fn(f64) -> Result<f64, EvalError>,
    target: f64,
) -> Result<f64, SolveFailure> {
    let f0 = f(0.0).map_err(SolveFailure::Eval)?;
    let f1 = f(1.0).map_err(SolveFailure::Eval)?;
    let f2 = f(2.0).map_err(SolveFailure::Eval)?;
    let a = f1 - f0;
    if !(a.abs() >= SINGULAR_COEFFICIENT) {
        return Err(SolveFailure::Singular);
    }
    if ((f2 - f1) - a).abs() > LINEARITY_TOLERANCE * a.abs().max(1.0) {
        return Err(SolveFailure::Nonlinear);
    }
    let u = (target - f0) / a;
    // One correction step absorbs the rounding in f0 and a.
    let r = target - f(u).map_err(SolveFailure::Eval)?;
    Ok(u + r / a)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveFailure {
    Singular,
    Nonlinear,
    Eval(EvalError),
}

/// Draws every variable for one map.
pub fn sample(defs: &[VariableDef], ctx: &SampleContext) -> Result<Bindings, VariationError> {
    let order = validate(defs, &ctx.bindings)?;
    let rng = ctx.stream();
    let mut out = ctx.bindings.clone();
    for i in order {
        let d = &defs[i];
        let counter = i as u64;
        let eval_err = |source| VariationError::Eval { id: d.id.clone(), source };
        match &d.kind {
            VarKind::Normal { mu, sd } => {
                let z = rng.standard_normal(counter);
                out.insert(d.id.clone(), if *sd == 0.0 { *mu } else { mu + sd * z });
            }
            VarKind::Uniform { min, max } => {
                let u = rng.uniform(counter);
                out.insert(d.id.clone(), if min == max { *min } else { min + (max - min) * u });
            }
            VarKind::Lindep { dp, mode: LindepMode::Evaluate } => {
                let v = dp.eval(&|n| out.get(n).copied()).map_err(eval_err)?;
                out.insert(d.id.clone(), v);
            }
            VarKind::Lindep { dp, mode: LindepMode::Solve { target, unknown } } => {
                let f = |u: f64| dp.eval(&|n| if n == unknown { Some(u) } else { out.get(n).copied() });
                let u = solve_linear(&f, *target).map_err(|e| match e {
                    SolveFailure::Singular => VariationError::Singular { id: d.id.clone(), unknown: unknown.clone() },
                    SolveFailure::Nonlinear => VariationError::Nonlinear { id: d.id.clone(), unknown: unknown.clone() },
                    SolveFailure::Eval(e) => eval_err(e),
                })?;
                let value = f(u).map_err(eval_err)?;
                out.insert(unknown.clone(), u);
                out.insert(d.id.clone(), value);
            }
            VarKind::FromDist { .. } => return Err(VariationError::UnboundDistribution(d.id.clone())),
        }
    }
    Ok(out)
}

fn describe_filters(f: &Filters) -> String {
    if f.0.is_empty() {
        return "{}".to_string();
    }
    let parts: Vec<String> = f.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{{{}}}", parts.join(","))
}

/// Replaces a `FromDist` definition by the normal it refers to; other kinds
/// are returned unchanged.
///
/// A record is a candidate when parameter and scope agree and its filters
/// include every requested filter. An exact filter match wins; otherwise the
/// candidate must be unique.
pub fn bind_distribution(def: &VariableDef, dists: &[ParameterDistribution]) -> Result<VariableDef, VariationError> {
    let VarKind::FromDist { parameter, scope, filters } = &def.kind else {
        return Ok(def.clone());
    };
    let candidates: Vec<&ParameterDistribution> = dists
        .iter()
        .filter(|d| d.parameter == *parameter && d.scope == *scope && d.filters.is_superset_of(filters))
        .collect();
    let chosen = match candidates.iter().find(|d| d.filters == *filters) {
        Some(d) => *d,
        None => match candidates.as_slice() {
            [only] => *only,
            [] => {
                let mut available: Vec<String> = dists
                    .iter()
                    .map(|d| format!("{}@{}{}", d.parameter.as_str(), d.scope.as_str(), describe_filters(&d.filters)))
                    .collect();
                available.sort();
                available.dedup();
                return Err(VariationError::NotFound {
                    parameter: parameter.as_str().to_string(),
                    scope: scope.as_str().to_string(),
                    filters: describe_filters(filters),
                    available,
                });
            }
            many => {
                return Err(VariationError::Ambiguous {
                    parameter: parameter.as_str().to_string(),
                    filters: describe_filters(filters),
                    count: many.len(),
                })
            }
        },
    };
    Ok(VariableDef { id: def.id.clone(), kind: VarKind::Normal { mu: chosen.mean, sd: chosen.sd } })
}

pub fn bind_all(defs: &[VariableDef], dists: &[ParameterDistribution]) -> Result<Vec<VariableDef>, VariationError> {
    defs.iter().map(|d| bind_distribution(d, dists)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Histogram;
    use core::f64::consts::FRAC_PI_2;

    fn ctx(seed: u64, index: u64) -> SampleContext {
        SampleContext::new(seed, index)
    }

    #[test]
    fn degenerate_draws() {
        let defs = [VariableDef::uniform("u", 2.0, 2.0), VariableDef::normal("w", 3.5, 0.0)];
        for i in 0..50 {
            let b = sample(&defs, &ctx(9, i)).unwrap();
            assert_eq!(b["u"], 2.0);
            assert_eq!(b["w"], 3.5);
        }
    }

    #[test]
    fn worked_solve_case() {
        let defs = [
            VariableDef::uniform("kS1", 0.05, 0.05),
            VariableDef::uniform("kS2", 0.05, 0.05),
            VariableDef::uniform("kA", 0.05, 0.05),
            VariableDef::uniform("lS1", 10.0, 10.0),
            VariableDef::uniform("lS2", 10.0, 10.0),
            VariableDef::solve("turn", "kS1/2 * lS1+kA * lA+kS2/2 * lS2", FRAC_PI_2, "lA").unwrap(),
        ];
        let b = sample(&defs, &ctx(1, 0)).unwrap();
        // 0.25 + 0.05 lA + 0.25 = pi/2
        let expected = (FRAC_PI_2 - 0.5) / 0.05;
        assert!((b["lA"] - expected).abs() < 1e-9);
        assert!((b["lA"] - 21.41593).abs() < 1e-5);
        assert!((b["turn"] - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn solve_errors() {
        let singular = [VariableDef::uniform("k", 0.0, 0.0), VariableDef::solve("t", "k * x + 1", 2.0, "x").unwrap()];
        assert!(matches!(sample(&singular, &ctx(0, 0)), Err(VariationError::Singular { .. })));
        let nonlinear = [VariableDef::solve("t", "x * x", 4.0, "x").unwrap()];
        assert!(matches!(sample(&nonlinear, &ctx(0, 0)), Err(VariationError::Nonlinear { .. })));
        let absent = [VariableDef::solve("t", "3", 4.0, "x").unwrap()];
        assert!(matches!(validate(&absent, &Bindings::new()), Err(VariationError::UnknownNotInExpression { .. })));
    }

    #[test]
    fn evaluation_follows_dependencies() {
        let defs = [
            VariableDef::evaluate("sum", "a + b").unwrap(),
            VariableDef::evaluate("b", "2 * a").unwrap(),
            VariableDef::uniform("a", 1.0, 1.0),
        ];
        let b = sample(&defs, &ctx(0, 0)).unwrap();
        assert_eq!((b["a"], b["b"], b["sum"]), (1.0, 2.0, 3.0));
    }

    #[test]
    fn structural_errors() {
        let cyc = [VariableDef::evaluate("a", "b + 1").unwrap(), VariableDef::evaluate("b", "a").unwrap()];
        match validate(&cyc, &Bindings::new()) {
            Err(VariationError::Cycle(path)) => assert_eq!(path, ["a", "b", "a"]),
            other => panic!("{other:?}"),
        }
        let dup = [VariableDef::normal("a", 0.0, 1.0), VariableDef::uniform("a", 0.0, 1.0)];
        assert_eq!(validate(&dup, &Bindings::new()), Err(VariationError::DuplicateId("a".into())));
        let undeclared = [VariableDef::evaluate("a", "w * 2").unwrap()];
        assert_eq!(
            validate(&undeclared, &Bindings::new()),
            Err(VariationError::Undeclared { id: "a".into(), name: "w".into() })
        );
        assert!(validate(&[VariableDef::normal("a", 0.0, -1.0)], &Bindings::new()).is_err());
        assert!(validate(&[VariableDef::uniform("a", 2.0, 1.0)], &Bindings::new()).is_err());
    }

    #[test]
    fn deterministic_and_index_independent() {
        let defs = [VariableDef::normal("a", 0.0, 1.0), VariableDef::uniform("b", -1.0, 1.0)];
        let forward: Vec<Bindings> = (0..10).map(|i| sample(&defs, &ctx(42, i)).unwrap()).collect();
        let mut backward: Vec<Bindings> = (0..10).rev().map(|i| sample(&defs, &ctx(42, i)).unwrap()).collect();
        backward.reverse();
        assert_eq!(forward, backward);
        for (x, y) in forward.iter().zip(&backward) {
            assert_eq!(x["a"].to_bits(), y["a"].to_bits());
        }
        assert_ne!(forward[0]["a"], forward[1]["a"]);
    }

    #[test]
    fn appending_definitions_keeps_earlier_values() {
        let short = [VariableDef::normal("a", 0.0, 1.0)];
        let long = [VariableDef::normal("a", 0.0, 1.0), VariableDef::normal("b", 0.0, 1.0)];
        assert_eq!(sample(&short, &ctx(3, 3)).unwrap()["a"], sample(&long, &ctx(3, 3)).unwrap()["a"]);
    }

    #[test]
    fn normal_sample_mean() {
        let (mu, sd) = (3.5, 0.2);
        let defs = [VariableDef::normal("w", mu, sd)];
        let n = 100_000u64;
        let sum: f64 = (0..n).map(|i| sample(&defs, &ctx(2024, i)).unwrap()["w"]).sum();
        let mean = sum / n as f64;
        assert!((mean - mu).abs() < 4.0 * sd / libm::sqrt(n as f64), "{mean}");
    }

    fn record(parameter: Parameter, filters: Filters, mean: f64, sd: f64) -> ParameterDistribution {
        ParameterDistribution {
            parameter,
            scope: parameter.scope(),
            filters,
            n: 10,
            mean,
            sd,
            min: mean,
            max: mean,
            histogram: Histogram { edges: vec![mean, mean + 1.0], counts: vec![10] },
            fit: None,
        }
    }

    fn from_dist(filters: Filters) -> VariableDef {
        VariableDef {
            id: "w".into(),
            kind: VarKind::FromDist { parameter: Parameter::LaneMeanWidth, scope: Scope::Lane, filters },
        }
    }

    #[test]
    fn binding_distributions() {
        let x4 = Filters::new().with("type", "X4");
        let file = [
            record(Parameter::LaneMeanWidth, Filters::new(), 3.5, 0.3),
            record(Parameter::LaneMeanWidth, x4.clone(), 3.66, 0.2),
            record(Parameter::LaneMeanWidth, Filters::new().with("type", "T3"), 3.4, 0.25),
            record(Parameter::IntersectingAngle, x4.clone(), 90.0, 5.0),
        ];
        let bound = bind_distribution(&from_dist(x4), &file).unwrap();
        assert_eq!(bound.kind, VarKind::Normal { mu: 3.66, sd: 0.2 });
        let bound = bind_distribution(&from_dist(Filters::new()), &file).unwrap();
        assert_eq!(bound.kind, VarKind::Normal { mu: 3.5, sd: 0.3 });

        match bind_distribution(&from_dist(Filters::new()), &[]) {
            Err(VariationError::NotFound { available, .. }) => assert!(available.is_empty()),
            other => panic!("{other:?}"),
        }
        let two = [
            record(Parameter::LaneMeanWidth, Filters::new().with("type", "X4").with("heading", "-1"), 3.6, 0.2),
            record(Parameter::LaneMeanWidth, Filters::new().with("type", "X4").with("heading", "1"), 3.7, 0.2),
        ];
        let err = bind_distribution(&from_dist(Filters::new().with("type", "X4")), &two).unwrap_err();
        assert!(matches!(err, VariationError::Ambiguous { count: 2, .. }));
        let msg = bind_distribution(&from_dist(Filters::new().with("type", "K4")), &file).unwrap_err().to_string();
        assert!(msg.contains("lane_mean_width@lane{type=X4}"), "{msg}");
        assert!(matches!(
            sample(&[from_dist(Filters::new())], &ctx(0, 0)),
            Err(VariationError::UnboundDistribution(_))
        ));
    }
}
