//! The bundled feature corpus run end to end.

mod common;

use gridbdd::bdd::{write_report, Format, RunOptions, StepStatus};

use common::{fixed_clock, run_dir};

#[test]
fn passing_corpus_passes() {
    let report = run_dir("features", &fixed_clock());
    let text = String::from_utf8(write_report(&report, Format::Text)).unwrap();
    assert!(report.all_passed(), "{text}");
    assert!(report.totals.scenarios >= 12);
}

#[test]
fn expected_failures_fail_at_the_right_step() {
    let report = run_dir("expected_failures", &fixed_clock());
    assert_eq!(report.totals.passed, 0);
    for s in report.features.iter().flat_map(|f| &f.scenarios) {
        let failed_at = s
            .steps
            .iter()
            .position(|st| matches!(st.status, StepStatus::Failed { .. }))
            .unwrap();
        assert!(s.steps[failed_at + 1..]
            .iter()
            .all(|st| st.status == StepStatus::Skipped));
        assert!(s.steps[..failed_at].iter().all(|st| st.status == StepStatus::Passed));
    }
}

#[test]
fn never_opened_door_fails_at_the_oracle() {
    let report = run_dir("expected_failures", &fixed_clock());
    let f = report
        .features
        .iter()
        .find(|f| f.path == "never_opened.feature")
        .unwrap();
    let (step, message, snapshot) = f.scenarios[0].first_failure().unwrap();
    assert_eq!(step.text, "entity \"d1\" is open");
    assert_eq!(message, "door \"d1\" is closed");
    assert!(snapshot.map.contains('@'));
    assert_eq!(f.scenarios[0].steps[3].status, StepStatus::Skipped);
}

#[test]
fn unreachable_entity_fails_by_abort() {
    let report = run_dir("expected_failures", &fixed_clock());
    let f = report.features.iter().find(|f| f.path == "sealed.feature").unwrap();
    let (step, message, _) = f.scenarios[0].first_failure().unwrap();
    assert_eq!(step.text, "the character navigates to \"treasure\"");
    assert!(
        message.starts_with("goal \"navigate near treasure\" failed"),
        "{message}"
    );
    assert!(f.scenarios[0].cycles < 100);
}

#[test]
fn parallel_jobs_match_sequential() {
    let seq = run_dir("features", &fixed_clock());
    let par = run_dir(
        "features",
        &RunOptions {
            jobs: 4,
            ..fixed_clock()
        },
    );
    assert_eq!(write_report(&seq, Format::Json), write_report(&par, Format::Json));
}

#[test]
fn scenario_outcomes_ignore_order() {
    let forward = run_dir("features", &fixed_clock());
    let features = common::load_features(&gridbdd::fixtures::dir().join("features"));
    let reversed: Vec<_> = features
        .into_iter()
        .rev()
        .map(|(p, mut f)| {
            f.scenarios.reverse();
            (p, f)
        })
        .collect();
    let levels = common::bundled_levels();
    let registry = gridbdd::bdd::StepRegistry::with_builtins();
    let backward = gridbdd::bdd::run_features(&reversed, &registry, &fixed_clock(), &|| {
        Ok(gridbdd::env::EnvSession::in_process(std::sync::Arc::clone(&levels)))
    })
    .unwrap();
    for f in &forward.features {
        for s in &f.scenarios {
            let twin = backward
                .features
                .iter()
                .find(|b| b.path == f.path)
                .and_then(|b| b.scenarios.iter().find(|t| t.name == s.name))
                .unwrap();
            assert_eq!(s, twin);
        }
    }
}

#[test]
fn fixed_clock_json_is_byte_stable() {
    let a = write_report(&run_dir("features", &fixed_clock()), Format::Json);
    let b = write_report(&run_dir("features", &fixed_clock()), Format::Json);
    assert_eq!(a, b);
}
