use std::f64::consts::PI;

use proptest::prelude::*;
use roadforge_core::stats::{distribution_from_values, Binning, Filters, Parameter, Scope};
use roadforge_core::variation::{
    bind_distribution, parse_expression, sample, Bindings, SampleContext, VarKind, VariableDef, VariationError,
};

fn constants(pairs: &[(&str, f64)]) -> Vec<VariableDef> {
    pairs.iter().map(|(id, v)| VariableDef::uniform(id, *v, *v)).collect()
}

#[test]
fn connection_arc_length_is_solved() {
    let mut defs = constants(&[("kS1", 0.05), ("kS2", 0.05), ("kA", 0.05), ("lS1", 10.0), ("lS2", 10.0)]);
    defs.push(VariableDef::solve("turn", "kS1/2 * lS1+kA * lA+kS2/2 * lS2", PI / 2.0, "lA").unwrap());
    let b = sample(&defs, &SampleContext::new(1, 0)).unwrap();
    assert!((b["lA"] - 21.41593).abs() < 1e-5);
    assert!((b["lA"] - (PI / 2.0 - 0.5) / 0.05).abs() < 1e-9);
    assert!((b["turn"] - PI / 2.0).abs() < 1e-12);
}

#[test]
fn printed_dependency_string_is_evaluated_as_written() {
    let e = parse_expression("kS1/2 * lS1+kA * lA+kS2 * lS2").unwrap();
    let vals = [("kS1", 2.0), ("lS1", 3.0), ("kA", 1.0), ("lA", 4.0), ("kS2", 2.0), ("lS2", 5.0)];
    let v = e.eval(&|n| vals.iter().find(|(k, _)| *k == n).map(|(_, v)| *v)).unwrap();
    assert_eq!(v, 17.0);
}

#[test]
fn degenerate_distributions_are_exact() {
    let defs = vec![VariableDef::uniform("u", 2.0, 2.0), VariableDef::normal("n", 3.5, 0.0)];
    for i in 0..20 {
        let b = sample(&defs, &SampleContext::new(9, i)).unwrap();
        assert_eq!(b["u"], 2.0);
        assert_eq!(b["n"], 3.5);
    }
}

#[test]
fn singular_and_nonlinear_constraints_are_rejected() {
    let defs = vec![VariableDef::normal("a", 1.0, 0.1), VariableDef::solve("c", "a * 0 * x + 3", 1.0, "x").unwrap()];
    assert!(matches!(sample(&defs, &SampleContext::new(0, 0)), Err(VariationError::Singular { .. })));
    let defs = vec![VariableDef::solve("c", "x * x", 4.0, "x").unwrap()];
    assert!(matches!(sample(&defs, &SampleContext::new(0, 0)), Err(VariationError::Nonlinear { .. })));
}

#[test]
fn cycles_are_reported() {
    let defs = vec![VariableDef::evaluate("a", "b + 1").unwrap(), VariableDef::evaluate("b", "a * 2").unwrap()];
    match sample(&defs, &SampleContext::new(0, 0)) {
        Err(VariationError::Cycle(path)) => assert_eq!(path.first(), path.last()),
        other => panic!("{other:?}"),
    }
}

#[test]
fn normal_sample_mean_obeys_law_of_large_numbers() {
    let defs = vec![VariableDef::normal("x", 90.0, 5.0)];
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|i| sample(&defs, &SampleContext::new(2024, i)).unwrap()["x"]).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    assert!((mean - 90.0).abs() < 4.0 * 5.0 / (n as f64).sqrt(), "{mean}");
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!((sd - 5.0).abs() < 0.1, "{sd}");
}

#[test]
fn streams_do_not_depend_on_generation_order() {
    let defs = vec![VariableDef::normal("w", 3.5, 0.2), VariableDef::uniform("s", 5.0, 30.0)];
    let forward: Vec<Bindings> = (0..10).map(|i| sample(&defs, &SampleContext::new(42, i)).unwrap()).collect();
    let backward: Vec<Bindings> = (0..10).rev().map(|i| sample(&defs, &SampleContext::new(42, i)).unwrap()).collect();
    for (i, b) in forward.iter().enumerate() {
        assert_eq!(b, &backward[9 - i]);
    }
    assert_ne!(forward[0], forward[1]);
}

#[test]
fn appending_a_definition_keeps_earlier_values() {
    let a = vec![VariableDef::normal("w", 3.5, 0.2)];
    let mut b = a.clone();
    b.push(VariableDef::uniform("s", 0.0, 1.0));
    for i in 0..10 {
        assert_eq!(sample(&a, &SampleContext::new(5, i)).unwrap()["w"], sample(&b, &SampleContext::new(5, i)).unwrap()["w"]);
    }
}

fn fromdist(filters: Filters) -> VariableDef {
    VariableDef { id: "w".into(), kind: VarKind::FromDist { parameter: Parameter::LaneMeanWidth, scope: Scope::Lane, filters } }
}

#[test]
fn distributions_bind_to_normals() {
    let values = [3.46, 3.66, 3.86];
    let x4 = distribution_from_values(&values, Parameter::LaneMeanWidth, Scope::Lane, Filters::new().with("type", "X4"), &Binning::Auto).unwrap();
    let bound = bind_distribution(&fromdist(Filters::new().with("type", "X4")), std::slice::from_ref(&x4)).unwrap();
    match bound.kind {
        VarKind::Normal { mu, sd } => {
            assert!((mu - 3.66).abs() < 1e-12);
            assert!((sd - 0.2).abs() < 1e-12);
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(bind_distribution(&fromdist(Filters::new()), &[]), Err(VariationError::NotFound { .. })));
    let mut t3 = x4.clone();
    t3.filters = Filters::new().with("type", "T3");
    assert!(matches!(
        bind_distribution(&fromdist(Filters::new()), &[x4, t3]),
        Err(VariationError::Ambiguous { count: 2, .. })
    ));
}

/// Random affine expressions in `x` over bound variables `a`, `b`.
fn linear_expr() -> impl Strategy<Value = (String, f64)> {
    (-50.0f64..50.0, -50.0f64..50.0, 0.1f64..20.0, 1u8..4).prop_map(|(c0, c1, k, shape)| {
        let src = match shape {
            1 => format!("{c0} + {k} * x - a"),
            2 => format!("(x * {k} + b) / 2 - {c1}"),
            _ => format!("a * {k} - (b - x) * {k} / 3 + {c0}"),
        };
        (src, c1)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn solved_unknown_hits_target((src, target) in linear_expr(), seed in any::<u64>()) {
        let defs = vec![
            VariableDef::normal("a", 1.0, 3.0),
            VariableDef::uniform("b", -10.0, 10.0),
            VariableDef::solve("c", &src, target, "x").unwrap(),
        ];
        let b = sample(&defs, &SampleContext::new(seed, 3)).unwrap();
        let e = parse_expression(&src).unwrap();
        let v = e.eval(&|n| b.get(n).copied()).unwrap();
        prop_assert!((v - target).abs() <= 1e-9, "{} = {} at x = {}", src, v, b["x"]);
    }

    #[test]
    fn sampling_is_a_pure_function_of_seed_and_index(seed in any::<u64>(), idx in 0u64..1_000_000) {
        let defs = vec![VariableDef::normal("w", 3.5, 0.2), VariableDef::evaluate("d", "2 * w").unwrap()];
        let a = sample(&defs, &SampleContext::new(seed, idx)).unwrap();
        let b = sample(&defs, &SampleContext::new(seed, idx)).unwrap();
        prop_assert_eq!(a["w"].to_bits(), b["w"].to_bits());
        prop_assert_eq!(a["d"], 2.0 * a["w"]);
    }

    #[test]
    fn uniform_stays_in_range(seed in any::<u64>(), lo in -100.0f64..100.0, span in 0.0f64..50.0) {
        let defs = vec![VariableDef::uniform("u", lo, lo + span)];
        let v = sample(&defs, &SampleContext::new(seed, 0)).unwrap()["u"];
        prop_assert!(v >= lo && v <= lo + span);
    }
}
