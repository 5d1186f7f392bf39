//! Tenure-respecting efficiency-adjusted deferred acceptance.

use serde::Serialize;

use crate::choice::ChoiceFunction;
use crate::da::{detect_interrupters, run_da, DaTrace, InterrupterPair};
use crate::error::Result;
use crate::model::Matching;
use crate::problem::DynamicProblem;
use crate::set::TeacherSet;

/// Which roster members waive priority when they interrupt.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ConsentProfile(TeacherSet);

impl ConsentProfile {
    pub fn all(teachers: usize) -> Self {
        ConsentProfile(TeacherSet::full(teachers))
    }

    pub fn none() -> Self {
        ConsentProfile(TeacherSet::EMPTY)
    }

    pub fn only(teachers: TeacherSet) -> Self {
        ConsentProfile(teachers)
    }

    pub fn consenting(&self) -> TeacherSet {
        self.0
    }

    pub fn consents(&self, teacher: usize) -> bool {
        self.0.contains(teacher)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreadaRound {
    /// Choice functions this round ran with.
    pub choices: Vec<ChoiceFunction>,
    pub trace: DaTrace,
    pub matching: Matching,
    /// Consenting interrupters found in this round's trace; truncated before the next round.
    pub truncated: Vec<InterrupterPair>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TreadaLog {
    pub rounds: Vec<TreadaRound>,
}

impl TreadaLog {
    /// Index of the last round.
    pub fn final_round(&self) -> usize {
        self.rounds.len() - 1
    }
}

/// Round 0 is TRDA; every later round reruns it after truncating the previous round's
/// consenting interrupters. Derived priorities do not depend on choices and are computed once.
pub fn run_treada(
    problem: &DynamicProblem,
    consent: &ConsentProfile,
) -> Result<(Matching, TreadaLog)> {
    let derived = problem.derive_priorities()?;
    let mut working = problem.clone();
    let mut log = TreadaLog::default();
    loop {
        let (matching, trace) = run_da(&working.static_problem(&derived));
        let found = detect_interrupters(&trace, consent.consenting());
        let stop = found.pairs.is_empty();
        let choices = working.choices().to_vec();
        if !stop {
            let mut next = choices.clone();
            for pair in &found.pairs {
                next[pair.teacher] = next[pair.teacher].truncate(pair.school);
            }
            working = working.with_choices_unchecked(next);
        }
        log.rounds.push(TreadaRound {
            choices,
            trace,
            matching,
            truncated: found.pairs,
        });
        if stop {
            break;
        }
    }
    let output = log.rounds.last().expect("at least one round").matching.clone();
    Ok((output, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::trda::run_trda;

    fn pairs(round: &TreadaRound) -> Vec<(usize, usize)> {
        round.truncated.iter().map(|p| (p.teacher, p.school)).collect()
    }

    #[test]
    fn worked_example_full_consent() {
        let problem = fixtures::treada_example_problem();
        let (mu, log) = run_treada(&problem, &ConsentProfile::all(4)).unwrap();
        assert_eq!(log.rounds.len(), 3);
        assert_eq!(pairs(&log.rounds[0]), vec![(3, 3)]);
        assert_eq!(pairs(&log.rounds[1]), vec![(1, 1)]);
        assert!(log.rounds[2].truncated.is_empty());
        assert_eq!(log.rounds[0].matching, fixtures::example_round0_matching());
        assert_eq!(log.rounds[1].matching, fixtures::example_final_matching());
        assert_eq!(log.rounds[1].trace.len(), 3);
        assert_eq!(mu, fixtures::example_final_matching());
        // Round 1 runs with C_i4 truncated at s4 only.
        assert_eq!(log.rounds[1].choices[3], problem.choice(3).truncate(3));
        assert_eq!(log.rounds[1].choices[1], *problem.choice(1));
        assert_eq!(log.rounds[2].choices[1], problem.choice(1).truncate(1));
    }

    #[test]
    fn only_i4_consents() {
        let problem = fixtures::treada_example_problem();
        let consent = ConsentProfile::only(TeacherSet::singleton(3));
        let (mu, log) = run_treada(&problem, &consent).unwrap();
        assert_eq!(log.rounds.len(), 2);
        assert_eq!(mu, fixtures::example_final_matching());
    }

    #[test]
    fn no_consent_is_trda() {
        let problem = fixtures::treada_example_problem();
        let (mu, log) = run_treada(&problem, &ConsentProfile::none()).unwrap();
        assert_eq!(log.rounds.len(), 1);
        assert_eq!(mu, run_trda(&problem).unwrap().0);
    }
}
