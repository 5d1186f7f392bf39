use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tenure_match::audit::{enumerate_dynamically_stable, is_dynamically_stable, weakly_blair_dominates};
use tenure_match::domain::{exhaustive_domain, random_path_independent};
use tenure_match::economy::{option_set, AdversaryDomain};
use tenure_match::grid::{random_lex_economy, random_problem};
use tenure_match::scenario::parse_scenario;
use tenure_match::{run_trda, run_treada, ConsentProfile, Execution, Mechanism, SchoolSet, TeacherId};

const TWO_SCHOOLS: &str = r#"{
  "schema_version": 1,
  "schools": [{"label": "a", "quota": 1}, {"label": "b", "quota": 2}],
  "teachers": [
    {"label": "x", "preference": [["a", "b"], ["a"], ["b"]]},
    {"label": "y", "preference": [["b"], ["a"]]},
    {"label": "z", "preference": [["a"], ["b"]]}
  ],
  "initial_matching": {"y": ["b"]},
  "periods": [
    {
      "roster": ["x", "y"],
      "priorities": [{"school": "a", "order": ["y", "x"]}, {"school": "b", "order": ["y", "x"]}]
    },
    {
      "roster": ["x", "y", "z"],
      "priorities": [{"school": "a", "order": ["y", "x", "z"]}, {"school": "b", "order": ["y", "x", "z"]}]
    }
  ]
}"#;

/// Every outcome of `teacher` in `period` as the other two teachers range over every choice class,
/// by direct simulation.
fn nested_loop_options(teacher: usize, period: usize) -> Vec<SchoolSet> {
    let economy = parse_scenario(TWO_SCHOOLS).unwrap().economy;
    let d = exhaustive_domain(2).unwrap();
    let others: Vec<usize> = (0..3).filter(|&k| k != teacher).collect();
    let mut seen = Vec::new();
    for a in 0..d.class_count() {
        for b in 0..d.class_count() {
            let mut choices = economy.truthful_choices();
            choices[others[0]] = d.choices[a].clone();
            choices[others[1]] = d.choices[b].clone();
            let outcomes = economy.simulate_with(&choices).unwrap();
            let got = outcomes[period - 1].assignment_of(TeacherId(teacher as u32)).unwrap();
            if !seen.contains(&got) {
                seen.push(got);
            }
        }
    }
    seen.sort_by_key(|s| s.bits());
    seen
}

#[test]
fn exhaustive_option_sets_match_nested_loops() {
    let economy = parse_scenario(TWO_SCHOOLS).unwrap().economy;
    for (teacher, period) in [(0, 1), (0, 2), (1, 2), (2, 2)] {
        let id = TeacherId(teacher as u32);
        let report = economy.teacher(id).report.preference().unwrap().clone();
        let got = option_set(&economy, id, &report, period, &AdversaryDomain::Exhaustive, Execution::Sequential)
            .unwrap();
        assert_eq!(got.outcomes, nested_loop_options(teacher, period), "teacher {teacher}, period {period}");
    }
}

#[test]
fn option_sets_agree_across_execution_modes() {
    let economy = parse_scenario(TWO_SCHOOLS).unwrap().economy;
    let id = TeacherId(2);
    let report = economy.teacher(id).report.preference().unwrap().clone();
    let seq = option_set(&economy, id, &report, 2, &AdversaryDomain::Exhaustive, Execution::Sequential).unwrap();
    let par = option_set(&economy, id, &report, 2, &AdversaryDomain::Exhaustive, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncation_preserves_path_independence(seed in any::<u64>(), m in 1usize..=5) {
        let cf = random_path_independent(m, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(cf.is_path_independent());
        for s in 0..m {
            prop_assert!(cf.truncate(s).validate().is_ok());
        }
    }

    #[test]
    fn trda_is_stable_and_treada_dominates(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=3) {
        let p = random_problem(n, m, &mut ChaCha8Rng::seed_from_u64(seed));
        let (mu, _) = run_trda(&p).unwrap();
        prop_assert!(is_dynamically_stable(&p, &mu).unwrap().dynamically_stable);
        let (nu, _) = run_treada(&p, &ConsentProfile::all(n)).unwrap();
        prop_assert!(weakly_blair_dominates(p.choices(), &nu, &mu));
        for stable in enumerate_dynamically_stable(&p).unwrap() {
            prop_assert!(weakly_blair_dominates(p.choices(), &mu, &stable));
        }
    }

    #[test]
    fn simulations_are_deterministic(seed in any::<u64>()) {
        let build = || random_lex_economy(2, 3, Mechanism::Trda, &mut ChaCha8Rng::seed_from_u64(seed));
        let (a, b) = (build(), build());
        prop_assert_eq!(&a, &b);
        let (ra, rb) = (a.simulate().unwrap(), b.simulate().unwrap());
        prop_assert_eq!(ra.len(), rb.len());
        for (x, y) in ra.iter().zip(&rb) {
            prop_assert_eq!(&x.matching, &y.matching);
        }
    }
}
