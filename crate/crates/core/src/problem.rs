//! Static and dynamic problems.

use std::sync::Arc;

use crate::choice::ChoiceFunction;
use crate::error::{Error, Result};
use crate::model::{Matching, MatchingViolation, Schools, TeacherId};
use crate::priority::{derive_priorities, DerivedPriorityProfile, PriorityProfile};
use crate::set::{SchoolSet, TeacherSet, MAX_TEACHERS};

/// A teacher on a period roster.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Teacher {
    pub id: TeacherId,
    pub label: Arc<str>,
}

impl Teacher {
    pub fn new(id: TeacherId, label: impl Into<Arc<str>>) -> Self {
        Teacher {
            id,
            label: label.into(),
        }
    }

    /// Teachers `i1..in` with ids `0..n`.
    pub fn numbered(n: usize) -> Vec<Teacher> {
        (0..n)
            .map(|k| Teacher::new(TeacherId(k as u32), format!("i{}", k + 1)))
            .collect()
    }
}

/// `(I, S, C_I, >_S, q_S)`, borrowed. Priorities may be original or derived.
#[derive(Clone, Copy, Debug)]
pub struct StaticProblem<'a> {
    pub schools: &'a Schools,
    pub choices: &'a [ChoiceFunction],
    pub priorities: &'a PriorityProfile,
}

impl StaticProblem<'_> {
    pub fn teachers(&self) -> usize {
        self.choices.len()
    }
}

/// One period's problem `(I^t, S, C_{I^t}, >^t_S, q_S, μ^{t-1})`.
///
/// Teachers are addressed by roster position; `previous` is already restricted to the roster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicProblem {
    schools: Arc<Schools>,
    teachers: Vec<Teacher>,
    choices: Vec<ChoiceFunction>,
    priorities: PriorityProfile,
    previous: Matching,
}

impl DynamicProblem {
    pub fn new(
        schools: Arc<Schools>,
        teachers: Vec<Teacher>,
        choices: Vec<ChoiceFunction>,
        priorities: PriorityProfile,
        previous: Matching,
    ) -> Result<Self> {
        let n = teachers.len();
        let m = schools.len();
        if n > MAX_TEACHERS {
            return Err(Error::too_large(format!(
                "{n} teachers exceed the cap of {MAX_TEACHERS}"
            )));
        }
        if choices.len() != n {
            return Err(Error::invalid(format!(
                "{} choice functions for {n} teachers",
                choices.len()
            )));
        }
        for (k, t) in teachers.iter().enumerate() {
            if teachers[..k].iter().any(|u| u.id == t.id || u.label == t.label) {
                return Err(Error::invalid(format!("teacher `{}` listed twice", t.label)));
            }
        }
        for (t, cf) in teachers.iter().zip(&choices) {
            if cf.schools() != m {
                return Err(Error::invalid(format!(
                    "choice function of `{}` is over {} schools, expected {m}",
                    t.label,
                    cf.schools()
                )));
            }
            if let Some(v) = cf.validate().violations().first() {
                return Err(Error::SubstitutabilityViolation {
                    detail: format!(
                        "choice function of `{}`: {:?} between offers {:?} and {:?}",
                        t.label, v.property, v.offered, v.other
                    ),
                });
            }
        }
        if priorities.teachers() != n || priorities.schools() != m {
            return Err(Error::invalid(format!(
                "priorities cover {} teachers at {} schools, expected {n} at {m}",
                priorities.teachers(),
                priorities.schools()
            )));
        }
        if previous.teachers() != n {
            return Err(Error::invalid("previous matching does not cover the roster"));
        }
        let report = previous.validate(schools.quotas())?;
        if let Some(v) = report.violations().first() {
            return Err(match *v {
                MatchingViolation::QuotaExceeded {
                    school,
                    assigned,
                    quota,
                } => Error::QuotaExceededByTenure {
                    school: schools.label(school).to_owned(),
                    tenured: assigned,
                    quota,
                },
                MatchingViolation::Inconsistent { .. } => {
                    Error::invalid("previous matching sides disagree")
                }
            });
        }
        Ok(DynamicProblem {
            schools,
            teachers,
            choices,
            priorities,
            previous,
        })
    }

    /// Skips validation; callers guarantee the invariants of [`DynamicProblem::new`].
    pub(crate) fn new_unchecked(
        schools: Arc<Schools>,
        teachers: Vec<Teacher>,
        choices: Vec<ChoiceFunction>,
        priorities: PriorityProfile,
        previous: Matching,
    ) -> Self {
        DynamicProblem {
            schools,
            teachers,
            choices,
            priorities,
            previous,
        }
    }

    pub fn schools(&self) -> &Schools {
        &self.schools
    }

    pub fn schools_arc(&self) -> &Arc<Schools> {
        &self.schools
    }

    pub fn teachers(&self) -> &[Teacher] {
        &self.teachers
    }

    pub fn teacher_count(&self) -> usize {
        self.teachers.len()
    }

    pub fn label(&self, teacher: usize) -> &str {
        &self.teachers[teacher].label
    }

    pub fn position_of(&self, label: &str) -> Option<usize> {
        self.teachers.iter().position(|t| &*t.label == label)
    }

    pub fn position_of_id(&self, id: TeacherId) -> Option<usize> {
        self.teachers.iter().position(|t| t.id == id)
    }

    pub fn choices(&self) -> &[ChoiceFunction] {
        &self.choices
    }

    pub fn choice(&self, teacher: usize) -> &ChoiceFunction {
        &self.choices[teacher]
    }

    pub fn priorities(&self) -> &PriorityProfile {
        &self.priorities
    }

    pub fn previous(&self) -> &Matching {
        &self.previous
    }

    /// `I_E^t`: roster members holding a position in the previous period.
    pub fn employed(&self) -> TeacherSet {
        TeacherSet::from_indices(
            (0..self.teachers.len()).filter(|&t| !self.previous.assignment(t).is_empty()),
        )
    }

    pub fn derive_priorities(&self) -> Result<DerivedPriorityProfile> {
        derive_priorities(&self.priorities, &self.previous, &self.schools)
    }

    /// The same problem under other (already path-independent) choice functions.
    pub(crate) fn with_choices_unchecked(&self, choices: Vec<ChoiceFunction>) -> Self {
        DynamicProblem {
            choices,
            ..self.clone()
        }
    }

    /// The same problem under other choice functions, fully revalidated.
    pub fn with_choices(&self, choices: Vec<ChoiceFunction>) -> Result<Self> {
        DynamicProblem::new(
            self.schools.clone(),
            self.teachers.clone(),
            choices,
            self.priorities.clone(),
            self.previous.clone(),
        )
    }

    pub fn static_problem<'a>(&'a self, priorities: &'a PriorityProfile) -> StaticProblem<'a> {
        StaticProblem {
            schools: &self.schools,
            choices: &self.choices,
            priorities,
        }
    }

    /// Labels of a school set.
    pub fn school_labels(&self, set: SchoolSet) -> Vec<String> {
        self.schools.set_labels(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn worked_example_is_valid() {
        let p = fixtures::treada_example_problem();
        assert_eq!(p.teacher_count(), 4);
        assert_eq!(p.employed(), TeacherSet::from_indices([0, 1, 2]));
        assert_eq!(p.position_of("i3"), Some(2));
    }

    #[test]
    fn previous_assignment_outside_the_choice_is_accepted() {
        let p = fixtures::treada_example_problem();
        // i1 previously at {s1, s2}: C_i1({s1,s2}) = {s2}.
        let mut by_teacher = p.previous().assignments().to_vec();
        by_teacher[0] = SchoolSet::from_indices([0, 1]);
        by_teacher[3] = SchoolSet::EMPTY;
        let q = DynamicProblem::new(
            p.schools_arc().clone(),
            p.teachers().to_vec(),
            p.choices().to_vec(),
            p.priorities().clone(),
            Matching::from_assignments(4, by_teacher),
        )
        .unwrap();
        let (mu, _) = crate::trda::run_trda(&q).unwrap();
        assert!(crate::audit::dynamically_stable(&q, &mu));
    }

    #[test]
    fn over_quota_previous_matching_is_rejected() {
        let p = fixtures::treada_example_problem();
        let by_teacher = vec![SchoolSet::singleton(1); 4];
        let err = DynamicProblem::new(
            p.schools_arc().clone(),
            p.teachers().to_vec(),
            p.choices().to_vec(),
            p.priorities().clone(),
            Matching::from_assignments(4, by_teacher),
        )
        .unwrap_err();
        assert!(matches!(err, Error::QuotaExceededByTenure { tenured: 4, .. }));
    }
}
