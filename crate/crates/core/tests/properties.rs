//! Randomized invariants. Each case draws a seed and builds its inputs from
//! the shared generators.

mod common;

use ctxlab::contextuality::{is_noncontextual, ncf};
use ctxlab::io::{model_value, AdaptiveEntry, Entry, ModelEntry, Workspace};
use ctxlab::model::{mix, tensor_models, validate_model};
use ctxlab::protocol::{flatten_adaptive, implicitly_contains, merge_protocols, validate_protocol};
use ctxlab::rational::{self, ratio};
use num_integer::Integer;
use num_traits::{One, Zero};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ncf_is_a_probability_and_one_exactly_when_noncontextual(seed in any::<u64>()) {
        let m = common::model(&mut common::rng(seed));
        let v = ncf(&m).unwrap().value;
        prop_assert!(rational::is_probability(&v));
        prop_assert_eq!(v.is_one(), is_noncontextual(&m).unwrap().is_noncontextual());
        prop_assert_eq!(v.is_zero(), common::supported_globals(&m).is_empty());
    }

    #[test]
    fn ncf_of_a_mixture_is_at_least_the_weighted_sum(seed in any::<u64>(), k in 0i64..=4) {
        let mut rng = common::rng(seed);
        let d = common::model(&mut rng);
        let s = d.scenario().clone();
        let e = common::classical(&mut rng, &s);
        let mu = ratio(k, 4);
        let m = mix(&mu, &d, &e).unwrap();
        prop_assert!(validate_model(&m).is_valid());
        let floor = &mu * ncf(&d).unwrap().value + (rational::one() - &mu);
        prop_assert!(ncf(&m).unwrap().value >= floor);
    }

    #[test]
    fn tensor_ncf_is_at_least_the_product(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let d = common::model(&mut rng);
        let e = common::model(&mut rng);
        let t = tensor_models(&d, &e);
        prop_assert!(validate_model(&t).is_valid());
        let product = ncf(&d).unwrap().value * ncf(&e).unwrap().value;
        prop_assert!(ncf(&t).unwrap().value >= product);
    }

    #[test]
    fn pushforwards_are_valid_models(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let m = common::model(&mut rng);
        let p = common::deterministic_procedure(&mut rng, m.scenario());
        prop_assert!(validate_model(&p.pushforward(&m).unwrap()).is_valid());
        let a = common::adaptive_procedure(&mut rng, m.scenario(), 3);
        prop_assert!(a.validate().is_valid());
        prop_assert!(validate_model(&a.pushforward(&m).unwrap()).is_valid());
    }

    #[test]
    fn merge_is_valid_and_contains_its_inputs(seed in any::<u64>(), k in 1usize..=3) {
        let mut rng = common::rng(seed);
        let s = common::scenario(&mut rng, 4);
        let qs = common::compatible_set(&mut rng, &s, k, 3);
        let merged = merge_protocols(&s, &qs).unwrap();
        prop_assert!(validate_protocol(&s, &merged.runs).is_valid());
        for q in &qs {
            prop_assert!(implicitly_contains(&merged, q));
        }
        // merging a single protocol gives it back
        prop_assert_eq!(&merge_protocols(&s, &qs[..1]).unwrap(), &qs[0]);
    }

    #[test]
    fn flattening_matches_the_two_step_pushforward(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let m = common::model(&mut rng);
        let inner = common::adaptive_procedure(&mut rng, m.scenario(), 2);
        let outer = common::adaptive_procedure(&mut rng, &inner.target, 2);
        let flat = flatten_adaptive(&outer, &inner).unwrap();
        prop_assert!(flat.validate().is_valid());
        let two_step = outer.pushforward(&inner.pushforward(&m).unwrap()).unwrap();
        prop_assert_eq!(flat.pushforward(&m).unwrap(), two_step);
    }

    #[test]
    fn model_json_round_trips(seed in any::<u64>()) {
        let m = common::model(&mut common::rng(seed));
        let mut ws = Workspace::new();
        ws.insert("m", Entry::Model(ModelEntry::flat(m.clone()))).unwrap();
        let text = ws.entry_text("m").unwrap();
        let mut back = Workspace::new();
        back.load_str("m", "m.json", &text).unwrap();
        prop_assert!(back.warnings.is_empty(), "{:?}", back.warnings);
        prop_assert_eq!(&back.model("m").unwrap().model, &m);
        prop_assert_eq!(back.entry_text("m").unwrap(), text);
        prop_assert_eq!(back.get("m").unwrap().to_value(), model_value(&m));
    }

    #[test]
    fn adaptive_json_round_trips(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let s = common::scenario(&mut rng, 4);
        let a = common::adaptive_procedure(&mut rng, &s, 3);
        let mut ws = Workspace::new();
        let entry = AdaptiveEntry { procedure: a.clone(), source: None, target: None };
        ws.insert("a", Entry::Adaptive(entry)).unwrap();
        let text = ws.entry_text("a").unwrap();
        let mut back = Workspace::new();
        back.load_str("a", "a.json", &text).unwrap();
        prop_assert!(back.warnings.is_empty(), "{:?}", back.warnings);
        match back.get("a").unwrap() {
            Entry::Adaptive(e) => prop_assert_eq!(&e.procedure, &a),
            other => prop_assert!(false, "read back as {}", other.kind()),
        }
    }

    #[test]
    fn rationals_parse_to_lowest_terms(n in -1000i64..1000, d in 1i64..1000) {
        let parsed = rational::parse(&format!("{n}/{d}")).unwrap();
        prop_assert_eq!(&parsed.value, &ratio(n, d));
        prop_assert_eq!(parsed.canonical, n.gcd(&d) == 1);
        let again = rational::parse(&rational::format(&parsed.value)).unwrap();
        prop_assert!(again.canonical);
        prop_assert_eq!(again.value, parsed.value);
    }
}

#[test]
fn non_canonical_weight_is_read_with_a_warning() {
    let text = r#"{
  "scenario": {"maximal_contexts": [["a"]], "measurements": [{"id": "a", "outcomes": ["0", "1"]}]},
  "tables": [{"context": ["a"], "weights": [{"assign": {"a": "0"}, "p": "2/4"}, {"assign": {"a": "1"}, "p": "1/2"}]}]
}"#;
    let mut ws = Workspace::new();
    ws.load_str("coin", "coin.json", text).unwrap();
    assert!(
        ws.warnings.iter().any(|w| w.contains(r#"non-canonical rational "2/4" read as "1/2""#)),
        "{:?}",
        ws.warnings
    );
    let m = &ws.model("coin").unwrap().model;
    assert!(ncf(m).unwrap().value.is_one());
}
