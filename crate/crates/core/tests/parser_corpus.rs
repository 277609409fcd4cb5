//! Feature-file parsing over the bundled corpus and generated files.

mod common;

use std::fs;

use gridbdd::bdd::{parse_feature, FeatureFile, Keyword, Phase, Scenario, Step, StepRegistry};
use gridbdd::fixtures;
use proptest::prelude::*;

use common::load_features;

#[test]
fn corpus_round_trips() {
    assert!(common::check_round_trip() >= 12);
    let mut files = load_features(&fixtures::dir().join("features"));
    files.extend(load_features(&fixtures::dir().join("expected_failures")));
    let registry = StepRegistry::with_builtins();
    for (name, f) in &files {
        for step in f.scenarios.iter().flat_map(|s| &s.steps) {
            registry
                .match_step(step)
                .unwrap_or_else(|e| panic!("{name}:{}: {e}", step.line));
        }
    }
}

#[test]
fn malformed_files_fail_at_the_expected_place() {
    common::check_malformed();
}

#[test]
fn annotations_and_conjunctions() {
    let text = fs::read_to_string(fixtures::dir().join("features/annotations.feature")).unwrap();
    let f = parse_feature(&text).unwrap();
    let s = &f.scenarios[0];
    assert_eq!(s.ids.len(), 2);
    assert!(!f.description.is_empty());
    let kw: Vec<Keyword> = s.steps.iter().map(|s| s.keyword).collect();
    assert!(kw.contains(&Keyword::And) && kw.contains(&Keyword::But));
    assert!(s.steps.windows(2).all(|w| w[0].phase <= w[1].phase));
}

const TEXTS: [&str; 6] = [
    "the level \"demo_lab\" is loaded",
    "the character waits 3 ticks",
    "entity \"d1\" is open",
    "health is at least 50",
    "a b  c",
    "spaces \"inside quotes\" stay",
];

/// `(use And, text index)` for one generated step.
fn step_strategy() -> impl Strategy<Value = (bool, usize)> {
    (any::<bool>(), 0..TEXTS.len())
}

prop_compose! {
    fn scenario(index: usize)(
        ids in prop::collection::vec("[A-Z]{1,3}-[0-9]{1,4}", 0..3),
        given in prop::collection::vec(step_strategy(), 0..3),
        when in prop::collection::vec(step_strategy(), 0..3),
        then in prop::collection::vec(step_strategy(), 1..3),
    ) -> Scenario {
        let mut steps = Vec::new();
        for (phase, list, kw) in [
            (Phase::Given, &given, Keyword::Given),
            (Phase::When, &when, Keyword::When),
            (Phase::Then, &then, Keyword::Then),
        ] {
            for (i, (and, t)) in list.iter().enumerate() {
                let keyword = if i > 0 && *and { Keyword::And } else { kw };
                steps.push(Step { keyword, text: TEXTS[*t].split_whitespace().collect::<Vec<_>>().join(" "), phase, line: 0 });
            }
        }
        Scenario { name: format!("scenario {index}"), ids, steps, line: 0 }
    }
}

fn feature() -> impl Strategy<Value = FeatureFile> {
    (1usize..4)
        .prop_flat_map(|n| (0..n).map(scenario).collect::<Vec<_>>())
        .prop_map(|scenarios| FeatureFile {
            name: "Generated".into(),
            description: Vec::new(),
            scenarios,
        })
}

proptest! {
    #[test]
    fn generated_features_round_trip(f in feature()) {
        let text = f.serialize();
        let parsed = parse_feature(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(parsed, f);
    }
}
