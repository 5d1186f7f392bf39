//! Byte-for-byte comparisons against the committed files under `fixtures/`.
//!
//! Run with `UPDATE_GOLDEN=1` to rewrite them.

use std::fs;
use std::path::PathBuf;

use tenure_match::economy::{find_obvious_manipulations, AdversaryDomain, CoProfile};
use tenure_match::scenario::{
    emit_manipulation_report, emit_scenario, emit_simulation, emit_trace, emit_treada_log,
    parse_preferences, parse_scenario, Scenario,
};
use tenure_match::{run_trda, run_treada, ConsentProfile, Execution};

fn repo(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(path)
}

fn load(name: &str) -> Scenario {
    parse_scenario(&fs::read_to_string(repo(&format!("scenarios/{name}"))).unwrap()).unwrap()
}

fn golden(name: &str, actual: &str) {
    let path = repo(&format!("fixtures/{name}"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{name} differs from the committed file");
}

#[test]
fn round_zero_trace() {
    let problem = load("treada_rounds.scenario").problem().unwrap();
    let (mu, trace) = run_trda(&problem).unwrap();
    golden("treada_rounds.round0.trace.json", &emit_trace(&problem, &trace, &mu));
}

#[test]
fn treada_log() {
    let problem = load("treada_rounds.scenario").problem().unwrap();
    let (_, log) = run_treada(&problem, &ConsentProfile::all(problem.teacher_count())).unwrap();
    golden("treada_rounds.treada.json", &emit_treada_log(&problem, &log));
}

#[test]
fn two_period_simulation() {
    let scenario = load("two_period_manipulation.scenario");
    let outcomes = scenario.economy.simulate().unwrap();
    assert!(scenario.check_expectations(&outcomes).is_empty());
    golden("two_period_manipulation.simulation.json", &emit_simulation(&outcomes));
}

#[test]
fn manipulation_report() {
    let scenario = load("two_period_manipulation.scenario");
    let economy = &scenario.economy;
    let misreports = parse_preferences(
        economy.schools(),
        &fs::read_to_string(repo("fixtures/i4_misreport.json")).unwrap(),
    )
    .unwrap();
    let mut profiles = vec![CoProfile::truthful()];
    profiles.extend(scenario.adversary_profiles.iter().cloned());
    let i4 = economy.teacher_by_label("i4").unwrap();
    let report = find_obvious_manipulations(
        economy,
        i4,
        &misreports,
        &AdversaryDomain::Profiles(profiles),
        Execution::Sequential,
    )
    .unwrap();
    golden("two_period_manipulation.i4.report.json", &emit_manipulation_report(economy, &report));
}

#[test]
fn bundled_scenarios_round_trip() {
    for entry in fs::read_dir(repo("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let parsed = parse_scenario(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let emitted = emit_scenario(&parsed);
        let again = parse_scenario(&emitted).unwrap();
        assert_eq!(again, parsed, "{}", path.display());
        assert_eq!(emit_scenario(&again), emitted, "{}", path.display());
    }
}

#[test]
fn bundled_expectations_hold() {
    for name in ["treada_rounds.scenario", "two_period_manipulation.scenario", "empty.scenario"] {
        let scenario = load(name);
        let outcomes = scenario.economy.simulate().unwrap();
        assert!(scenario.check_expectations(&outcomes).is_empty(), "{name}");
    }
}
