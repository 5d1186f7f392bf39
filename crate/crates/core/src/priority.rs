//! School priorities, tenure-derived priorities and the structural checks on them.

use std::ops::Deref;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Matching, Schools, TeacherId};
use crate::report::ValidationReport;
use crate::set::TeacherSet;

/// One strict order over the roster per school, best first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PriorityProfile {
    teachers: usize,
    orders: Vec<Vec<usize>>,
    // ranks[s * teachers + t]: position of roster teacher `t` in the order of school `s`.
    ranks: Vec<u16>,
}

impl PriorityProfile {
    /// Every order must be a permutation of `0..teachers`.
    pub fn new(teachers: usize, orders: Vec<Vec<usize>>) -> Result<Self> {
        let mut ranks = vec![u16::MAX; teachers * orders.len()];
        for (s, order) in orders.iter().enumerate() {
            if order.len() != teachers {
                return Err(Error::invalid(format!(
                    "priority of school index {s} ranks {} teachers, expected {teachers}",
                    order.len()
                )));
            }
            for (pos, &t) in order.iter().enumerate() {
                if t >= teachers || ranks[s * teachers + t] != u16::MAX {
                    return Err(Error::invalid(format!(
                        "priority of school index {s} is not a permutation of the roster"
                    )));
                }
                ranks[s * teachers + t] = pos as u16;
            }
        }
        Ok(PriorityProfile {
            teachers,
            orders,
            ranks,
        })
    }

    pub fn teachers(&self) -> usize {
        self.teachers
    }

    pub fn schools(&self) -> usize {
        self.orders.len()
    }

    pub fn order(&self, school: usize) -> &[usize] {
        &self.orders[school]
    }

    pub fn orders(&self) -> &[Vec<usize>] {
        &self.orders
    }

    #[inline]
    pub fn rank(&self, school: usize, teacher: usize) -> usize {
        self.ranks[school * self.teachers + teacher] as usize
    }

    /// `a >_s b`.
    #[inline]
    pub fn prefers(&self, school: usize, a: usize, b: usize) -> bool {
        self.rank(school, a) < self.rank(school, b)
    }

    /// The `quota` highest-priority members of `pool` at `school`.
    #[inline]
    pub fn top(&self, school: usize, pool: TeacherSet, quota: usize) -> TeacherSet {
        if pool.len() <= quota {
            return pool;
        }
        let mut kept = TeacherSet::EMPTY;
        let mut left = quota;
        for &t in &self.orders[school] {
            if left == 0 {
                break;
            }
            if pool.contains(t) {
                kept = kept.with(t);
                left -= 1;
            }
        }
        kept
    }

    /// First `(school, employed, entrant)` where an entrant outranks an employed teacher.
    pub fn tenure_violation(&self, employed: TeacherSet) -> Option<TenureViolation> {
        for (s, order) in self.orders.iter().enumerate() {
            // Every employed teacher must come before the first entrant.
            let mut first_entrant = None;
            for &t in order {
                if employed.contains(t) {
                    if let Some(entrant) = first_entrant {
                        return Some(TenureViolation {
                            school: s,
                            employed: t,
                            entrant,
                        });
                    }
                } else if first_entrant.is_none() {
                    first_entrant = Some(t);
                }
            }
        }
        None
    }

    /// Every employed teacher precedes every other teacher at every school.
    pub fn is_lexicographic_by_tenure(&self, employed: TeacherSet) -> bool {
        self.tenure_violation(employed).is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TenureViolation {
    pub school: usize,
    pub employed: usize,
    pub entrant: usize,
}

/// Priorities that lift each school's previous-period teachers above everybody else while keeping
/// the original relative order inside both groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivedPriorityProfile(PriorityProfile);

impl DerivedPriorityProfile {
    pub fn into_inner(self) -> PriorityProfile {
        self.0
    }
}

impl Deref for DerivedPriorityProfile {
    type Target = PriorityProfile;

    fn deref(&self) -> &PriorityProfile {
        &self.0
    }
}

/// Builds `≫` from `>` and the previous matching (already restricted to the roster).
pub fn derive_priorities(
    priorities: &PriorityProfile,
    previous: &Matching,
    schools: &Schools,
) -> Result<DerivedPriorityProfile> {
    let n = priorities.teachers();
    let mut orders = Vec::with_capacity(priorities.schools());
    for (s, order) in priorities.orders().iter().enumerate() {
        let tenured = previous.assigned_to(s);
        if tenured.len() > schools.quota(s) {
            return Err(Error::QuotaExceededByTenure {
                school: schools.label(s).to_owned(),
                tenured: tenured.len(),
                quota: schools.quota(s),
            });
        }
        let mut derived = Vec::with_capacity(n);
        derived.extend(order.iter().copied().filter(|&t| tenured.contains(t)));
        derived.extend(order.iter().copied().filter(|&t| !tenured.contains(t)));
        orders.push(derived);
    }
    Ok(DerivedPriorityProfile(PriorityProfile::new(n, orders)?))
}

/// A pair of teachers whose relative order at a school flips between two periods.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConsistencyViolation {
    pub school: usize,
    pub first: TeacherId,
    pub second: TeacherId,
    pub periods: (usize, usize),
}

/// One period's roster (economy ids, by roster position) and priorities.
pub struct PeriodPriorities<'a> {
    pub roster: &'a [TeacherId],
    pub priorities: &'a PriorityProfile,
}

/// Checks that every school orders teachers common to two periods identically in both.
///
/// `first` in a reported violation is the teacher ranked higher in the earlier period.
pub fn validate_priority_consistency(
    periods: &[PeriodPriorities<'_>],
) -> ValidationReport<ConsistencyViolation> {
    let mut report = ValidationReport::default();
    for (a, pa) in periods.iter().enumerate() {
        for (b, pb) in periods.iter().enumerate().skip(a + 1) {
            let common: Vec<(TeacherId, usize, usize)> = pa
                .roster
                .iter()
                .enumerate()
                .filter_map(|(ia, id)| {
                    pb.roster.iter().position(|x| x == id).map(|ib| (*id, ia, ib))
                })
                .collect();
            for s in 0..pa.priorities.schools() {
                for (x, &(id1, a1, b1)) in common.iter().enumerate() {
                    for &(id2, a2, b2) in &common[x + 1..] {
                        let earlier = pa.priorities.prefers(s, a1, a2);
                        let later = pb.priorities.prefers(s, b1, b2);
                        if earlier != later {
                            let (first, second) = if earlier { (id1, id2) } else { (id2, id1) };
                            report.push(ConsistencyViolation {
                                school: s,
                                first,
                                second,
                                periods: (a, b),
                            });
                        }
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::set::SchoolSet;

    #[test]
    fn derived_priorities_of_worked_example() {
        let problem = fixtures::treada_example_problem();
        let derived = problem.derive_priorities().unwrap();
        // Roster positions 0..4 are i1..i4.
        assert_eq!(derived.order(0), &[3, 0, 2, 1]);
        assert_eq!(derived.order(1), &[0, 2, 1, 3]);
        assert_eq!(derived.order(2), &[2, 0, 1, 3]);
        assert_eq!(derived.order(3), &[1, 3, 0, 2]);
    }

    #[test]
    fn no_tenure_leaves_priorities_unchanged() {
        let base = PriorityProfile::new(3, vec![vec![2, 0, 1], vec![0, 1, 2]]).unwrap();
        let schools = Schools::numbered(vec![1, 1]);
        let derived = derive_priorities(&base, &Matching::empty(3, 2), &schools).unwrap();
        assert_eq!(*derived, base);
    }

    #[test]
    fn single_tenured_teacher_moves_to_top() {
        let base = PriorityProfile::new(2, vec![vec![0, 1]]).unwrap();
        let previous = Matching::from_assignments(1, vec![SchoolSet::EMPTY, SchoolSet::singleton(0)]);
        let derived = derive_priorities(&base, &previous, &Schools::numbered(vec![1])).unwrap();
        assert_eq!(derived.order(0), &[1, 0]);
    }

    #[test]
    fn tenure_beyond_quota_is_an_error() {
        let base = PriorityProfile::new(2, vec![vec![0, 1]]).unwrap();
        let previous = Matching::from_assignments(1, vec![SchoolSet::singleton(0); 2]);
        let err = derive_priorities(&base, &previous, &Schools::numbered(vec![1])).unwrap_err();
        assert!(matches!(err, Error::QuotaExceededByTenure { tenured: 2, quota: 1, .. }));
    }

    #[test]
    fn lexicographic_by_tenure_checks() {
        let p = PriorityProfile::new(3, vec![vec![0, 1, 2], vec![2, 0, 1]]).unwrap();
        assert!(p.is_lexicographic_by_tenure(TeacherSet::EMPTY));
        assert!(p.is_lexicographic_by_tenure(TeacherSet::full(3)));
        assert!(!p.is_lexicographic_by_tenure(TeacherSet::from_indices([0])));
        assert_eq!(
            p.tenure_violation(TeacherSet::from_indices([0, 1])),
            Some(TenureViolation { school: 1, employed: 0, entrant: 2 })
        );
        assert!(!p.is_lexicographic_by_tenure(TeacherSet::from_indices([2])));
    }

    #[test]
    fn top_respects_quota_and_order() {
        let p = PriorityProfile::new(4, vec![vec![3, 1, 0, 2]]).unwrap();
        let pool = TeacherSet::from_indices([0, 1, 2]);
        assert_eq!(p.top(0, pool, 2), TeacherSet::from_indices([1, 0]));
        assert_eq!(p.top(0, pool, 0), TeacherSet::EMPTY);
        assert_eq!(p.top(0, pool, 5), pool);
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(PriorityProfile::new(2, vec![vec![0, 0]]).is_err());
        assert!(PriorityProfile::new(2, vec![vec![0]]).is_err());
    }

    #[test]
    fn consistency_detects_a_swap() {
        let ids = [TeacherId(1), TeacherId(2), TeacherId(3)];
        let first = PriorityProfile::new(3, vec![vec![0, 1, 2]]).unwrap();
        let second = PriorityProfile::new(2, vec![vec![1, 0]]).unwrap();
        let same = PriorityProfile::new(2, vec![vec![0, 1]]).unwrap();
        let roster2 = [TeacherId(1), TeacherId(3)];
        let report = validate_priority_consistency(&[
            PeriodPriorities { roster: &ids, priorities: &first },
            PeriodPriorities { roster: &roster2, priorities: &second },
        ]);
        assert_eq!(
            report.violations(),
            &[ConsistencyViolation {
                school: 0,
                first: TeacherId(1),
                second: TeacherId(3),
                periods: (0, 1)
            }]
        );
        let ok = validate_priority_consistency(&[
            PeriodPriorities { roster: &ids, priorities: &first },
            PeriodPriorities { roster: &roster2, priorities: &same },
        ]);
        assert!(ok.is_ok());
        assert!(validate_priority_consistency(&[PeriodPriorities { roster: &ids, priorities: &first }]).is_ok());
    }
}
