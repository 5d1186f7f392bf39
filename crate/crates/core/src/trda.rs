//! Tenure-respecting deferred acceptance and the cohort-sequential variant.

use crate::da::{run_da, DaTrace};
use crate::error::{Error, Result};
use crate::model::{Matching, Schools};
use crate::priority::PriorityProfile;
use crate::problem::{DynamicProblem, StaticProblem};
use crate::set::{SchoolSet, TeacherSet};

/// DA on the related static problem under derived priorities.
pub fn run_trda(problem: &DynamicProblem) -> Result<(Matching, DaTrace)> {
    let derived = problem.derive_priorities()?;
    Ok(run_da(&problem.static_problem(&derived)))
}

/// The default cohort split of a single problem: employed teachers, then everyone else.
pub fn tenure_cohorts(problem: &DynamicProblem) -> Vec<TeacherSet> {
    let employed = problem.employed();
    let rest = TeacherSet::full(problem.teacher_count()).difference(employed);
    [employed, rest].into_iter().filter(|c| !c.is_empty()).collect()
}

/// Runs DA cohort by cohort against residual capacities, freezing earlier placements.
///
/// `cohorts` must partition the roster, earliest entry first. Every prefix union of cohorts has
/// to be ranked above the remaining teachers at every school, which for the two-cohort split of
/// [`tenure_cohorts`] is exactly lexicographic-by-tenure priorities.
pub fn run_cohort_da(problem: &DynamicProblem, cohorts: &[TeacherSet]) -> Result<Matching> {
    let n = problem.teacher_count();
    let m = problem.schools().len();
    let mut seen = TeacherSet::EMPTY;
    for c in cohorts {
        if !c.difference(TeacherSet::full(n)).is_empty() || seen.bits() & c.bits() != 0 {
            return Err(Error::invalid("cohorts must be disjoint subsets of the roster"));
        }
        seen = seen.union(*c);
    }
    if seen != TeacherSet::full(n) {
        return Err(Error::invalid("cohorts must cover the roster"));
    }
    let mut earlier = TeacherSet::EMPTY;
    for c in cohorts {
        earlier = earlier.union(*c);
        if let Some(v) = problem.priorities().tenure_violation(earlier) {
            return Err(Error::NotLexicographicByTenure {
                school: problem.schools().label(v.school).to_owned(),
                employed: problem.label(v.employed).to_owned(),
                entrant: problem.label(v.entrant).to_owned(),
            });
        }
    }

    let derived = problem.derive_priorities()?;
    let mut residual: Vec<usize> = problem.schools().quotas().to_vec();
    let mut assignment = vec![SchoolSet::EMPTY; n];
    for cohort in cohorts {
        let members: Vec<usize> = cohort.iter().collect();
        let orders = (0..m)
            .map(|s| {
                derived
                    .order(s)
                    .iter()
                    .filter_map(|t| members.iter().position(|x| x == t))
                    .collect()
            })
            .collect();
        let priorities = PriorityProfile::new(members.len(), orders)?;
        let schools = Schools::new(problem.schools().labels().to_vec(), residual.clone())?;
        let choices: Vec<_> = members.iter().map(|&t| problem.choice(t).clone()).collect();
        let (mu, _) = run_da(&StaticProblem {
            schools: &schools,
            choices: &choices,
            priorities: &priorities,
        });
        for (k, &t) in members.iter().enumerate() {
            assignment[t] = mu.assignment(k);
        }
        for (s, r) in residual.iter_mut().enumerate() {
            *r -= mu.assigned_to(s).len();
        }
    }
    Ok(Matching::from_assignments(m, assignment))
}
