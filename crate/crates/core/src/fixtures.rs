//! Worked instances used by tests, benches and the bundled scenarios.

use std::sync::Arc;

use crate::choice::ChoiceFunction;
use crate::economy::{CoProfile, Economy, Mechanism, Period, TeacherReport};
use crate::model::{Matching, Schools, TeacherId};
use crate::preference::SubsetPreference;
use crate::priority::PriorityProfile;
use crate::problem::{DynamicProblem, Teacher};
use crate::set::SchoolSet;

/// Parses `"s2s3"` into `{s2, s3}` (1-based labels); `""` is `∅`.
pub fn schools_from_labels(text: &str) -> SchoolSet {
    SchoolSet::from_indices(
        text.split('s')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().expect("numeric school label") - 1),
    )
}

fn table(schools: usize, rows: &[(&str, &str)]) -> ChoiceFunction {
    let mut out = vec![SchoolSet::EMPTY; 1 << schools];
    for (offered, chosen) in rows {
        out[schools_from_labels(offered).index()] = schools_from_labels(chosen);
    }
    ChoiceFunction::from_table(schools, out).expect("fixture table is well formed")
}

/// Best-first acceptable sets in `"s2s3"` notation.
pub fn preference(schools: usize, ranked: &[&str]) -> SubsetPreference {
    SubsetPreference::from_acceptable(schools, ranked.iter().map(|s| schools_from_labels(s)).collect())
        .expect("fixture preference is well formed")
}

/// `C_{i1}, …, C_{i4}` of the four-teacher, four-school TREADA instance.
pub fn example_choice_functions() -> Vec<ChoiceFunction> {
    let c1 = table(
        4,
        &[
            ("s1s2s3s4", "s4"),
            ("s1s2s3", "s2"),
            ("s1s2s4", "s4"),
            ("s1s3s4", "s4"),
            ("s2s3s4", "s4"),
            ("s1s2", "s2"),
            ("s1s3", "s3"),
            ("s1s4", "s4"),
            ("s2s3", "s2"),
            ("s2s4", "s4"),
            ("s3s4", "s4"),
            ("s1", "s1"),
            ("s2", "s2"),
            ("s3", "s3"),
            ("s4", "s4"),
        ],
    );
    let c2 = table(
        4,
        &[
            ("s1s2s3s4", "s2s3"),
            ("s1s2s3", "s2s3"),
            ("s1s2s4", "s2"),
            ("s1s3s4", "s3"),
            ("s2s3s4", "s2s3"),
            ("s1s2", "s2"),
            ("s1s3", "s3"),
            ("s1s4", "s4"),
            ("s2s3", "s2s3"),
            ("s2s4", "s2"),
            ("s3s4", "s3"),
            ("s1", "s1"),
            ("s2", "s2"),
            ("s3", "s3"),
            ("s4", "s4"),
        ],
    );
    vec![c1.clone(), c2.clone(), c1, c2]
}

/// The TREADA instance: quotas `(2, 1, 1, 1)`, `μ^{t-1}` = i1:s2, i2:s4, i3:s3.
pub fn treada_example_problem() -> DynamicProblem {
    let schools = Arc::new(Schools::numbered(vec![2, 1, 1, 1]));
    let priorities = PriorityProfile::new(
        4,
        vec![vec![3, 0, 2, 1], vec![2, 1, 0, 3], vec![0, 2, 1, 3], vec![3, 0, 2, 1]],
    )
    .expect("permutations");
    let previous = Matching::from_assignments(
        4,
        ["s2", "s4", "s3", ""].iter().map(|s| schools_from_labels(s)).collect(),
    );
    DynamicProblem::new(
        schools,
        Teacher::numbered(4),
        example_choice_functions(),
        priorities,
        previous,
    )
    .expect("fixture problem is valid")
}

/// TRDA output on [`treada_example_problem`]: i1:s2, i2:s4, i3:s3, i4:s1.
pub fn example_round0_matching() -> Matching {
    Matching::from_assignments(
        4,
        ["s2", "s4", "s3", "s1"].iter().map(|s| schools_from_labels(s)).collect(),
    )
}

/// TREADA output under full consent: i1:s4, i2:s3, i3:s2, i4:s1.
pub fn example_final_matching() -> Matching {
    Matching::from_assignments(
        4,
        ["s4", "s3", "s2", "s1"].iter().map(|s| schools_from_labels(s)).collect(),
    )
}

/// Two schools of quota one held by i1 and i2; entrant i3 ranks below both everywhere.
pub fn small_tenure_problem() -> DynamicProblem {
    let schools = Arc::new(Schools::numbered(vec![1, 1]));
    let choices = vec![
        preference(2, &["s1", "s2"]).induce_choice().expect("substitutable"),
        preference(2, &["s2", "s1"]).induce_choice().expect("substitutable"),
        preference(2, &["s1", "s2"]).induce_choice().expect("substitutable"),
    ];
    let priorities = PriorityProfile::new(3, vec![vec![0, 1, 2], vec![0, 1, 2]]).expect("permutations");
    let previous = Matching::from_assignments(
        2,
        vec![SchoolSet::singleton(0), SchoolSet::singleton(1), SchoolSet::EMPTY],
    );
    DynamicProblem::new(schools, Teacher::numbered(3), choices, priorities, previous)
        .expect("fixture problem is valid")
}

const PAIR_FIRST: [&str; 5] = ["s2s3", "s2", "s3", "s4", "s1"];
const S4_FIRST: [&str; 4] = ["s4", "s2", "s3", "s1"];

/// The two-period TRDA economy in which i4 profits in period 2 by moving `s1` above `s4`.
pub fn manipulation_economy() -> Economy {
    let schools = Arc::new(Schools::numbered(vec![2, 1, 1, 1]));
    let prefs = [&S4_FIRST[..], &PAIR_FIRST, &S4_FIRST, &PAIR_FIRST, &PAIR_FIRST];
    let teachers = prefs
        .iter()
        .enumerate()
        .map(|(k, p)| (format!("i{}", k + 1), TeacherReport::Preference(preference(4, p))))
        .collect();
    let period1 = Period {
        roster: (0..4).map(TeacherId).collect(),
        priorities: PriorityProfile::new(
            4,
            vec![vec![0, 1, 2, 3], vec![0, 2, 1, 3], vec![0, 2, 1, 3], vec![1, 3, 0, 2]],
        )
        .expect("permutations"),
    };
    // Roster positions: i1, i3, i4, i5.
    let period2 = Period {
        roster: [0, 2, 3, 4].into_iter().map(TeacherId).collect(),
        priorities: PriorityProfile::new(
            4,
            vec![vec![0, 1, 3, 2], vec![0, 1, 2, 3], vec![0, 1, 2, 3], vec![3, 2, 0, 1]],
        )
        .expect("permutations"),
    };
    let initial = ["s2", "s4", "s3", "", ""].iter().map(|s| schools_from_labels(s)).collect();
    Economy::new(schools, teachers, vec![period1, period2], initial, Mechanism::Trda)
        .expect("fixture economy is valid")
}

/// i4's profitable misreport.
pub fn manipulation_misreport() -> SubsetPreference {
    preference(4, &["s2s3", "s2", "s3", "s1", "s4"])
}

/// Co-reports that leave i4 at `s4` in both periods whatever it reports.
pub fn manipulation_adversary_profile() -> CoProfile {
    CoProfile {
        label: "adversary".into(),
        reports: vec![
            (TeacherId(0), preference(4, &["s1", "s4", "s2", "s3"])),
            (TeacherId(1), preference(4, &["s1", "s2s3", "s2", "s3", "s4"])),
            (TeacherId(2), preference(4, &["s2s3", "s2", "s3", "s4", "s1"])),
            (TeacherId(4), preference(4, &["s1", "s2s3", "s2", "s3", "s4"])),
        ],
    }
}
