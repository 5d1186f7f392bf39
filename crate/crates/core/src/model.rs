//! Agents and matchings.
//!
//! Inside a single problem teachers are addressed by their roster position (`usize`) and schools
//! by their index in [`Schools`]. [`TeacherId`] is the economy-wide identity that stays fixed as
//! teachers enter and leave.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::ValidationReport;
use crate::set::{SchoolSet, TeacherSet, MAX_SCHOOLS};

/// Economy-wide teacher identity.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct TeacherId(pub u32);

impl fmt::Display for TeacherId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// The fixed school side: labels and quotas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schools {
    labels: Vec<String>,
    quotas: Vec<usize>,
}

impl Schools {
    pub fn new(labels: Vec<String>, quotas: Vec<usize>) -> Result<Self> {
        if labels.len() != quotas.len() {
            return Err(Error::invalid("one quota per school is required"));
        }
        if labels.len() > MAX_SCHOOLS {
            return Err(Error::too_large(format!(
                "{} schools exceed the cap of {MAX_SCHOOLS}",
                labels.len()
            )));
        }
        for (k, label) in labels.iter().enumerate() {
            if labels[..k].contains(label) {
                return Err(Error::invalid(format!("school `{label}` declared twice")));
            }
        }
        Ok(Schools { labels, quotas })
    }

    /// Schools labelled `s1..sn`.
    pub fn numbered(quotas: Vec<usize>) -> Self {
        let labels = (1..=quotas.len()).map(|k| format!("s{k}")).collect();
        Schools::new(labels, quotas).expect("numbered schools are well formed")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, school: usize) -> &str {
        &self.labels[school]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn quota(&self, school: usize) -> usize {
        self.quotas[school]
    }

    pub fn quotas(&self) -> &[usize] {
        &self.quotas
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn all(&self) -> SchoolSet {
        SchoolSet::full(self.len())
    }

    pub fn set_labels(&self, set: SchoolSet) -> Vec<String> {
        set.iter().map(|s| self.labels[s].clone()).collect()
    }
}

/// A many-to-many assignment of teachers (by roster position) to school sets.
///
/// Both directions are stored; constructors keep them consistent.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    by_teacher: Vec<SchoolSet>,
    by_school: Vec<TeacherSet>,
}

impl Matching {
    pub fn empty(teachers: usize, schools: usize) -> Self {
        Matching {
            by_teacher: vec![SchoolSet::EMPTY; teachers],
            by_school: vec![TeacherSet::EMPTY; schools],
        }
    }

    pub fn from_assignments(schools: usize, by_teacher: Vec<SchoolSet>) -> Self {
        let mut by_school = vec![TeacherSet::EMPTY; schools];
        for (t, set) in by_teacher.iter().enumerate() {
            for s in set.iter() {
                by_school[s] = by_school[s].with(t);
            }
        }
        Matching {
            by_teacher,
            by_school,
        }
    }

    pub fn from_school_sides(teachers: usize, by_school: Vec<TeacherSet>) -> Self {
        let mut by_teacher = vec![SchoolSet::EMPTY; teachers];
        for (s, set) in by_school.iter().enumerate() {
            for t in set.iter() {
                by_teacher[t] = by_teacher[t].with(s);
            }
        }
        Matching {
            by_teacher,
            by_school,
        }
    }

    /// Both sides as given, without reconciling them. Only useful to exercise validation.
    pub fn from_parts_unchecked(by_teacher: Vec<SchoolSet>, by_school: Vec<TeacherSet>) -> Self {
        Matching {
            by_teacher,
            by_school,
        }
    }

    pub fn teachers(&self) -> usize {
        self.by_teacher.len()
    }

    pub fn schools(&self) -> usize {
        self.by_school.len()
    }

    #[inline]
    pub fn assignment(&self, teacher: usize) -> SchoolSet {
        self.by_teacher[teacher]
    }

    #[inline]
    pub fn assigned_to(&self, school: usize) -> TeacherSet {
        self.by_school[school]
    }

    pub fn assignments(&self) -> &[SchoolSet] {
        &self.by_teacher
    }

    pub fn school_sides(&self) -> &[TeacherSet] {
        &self.by_school
    }

    /// Checks quotas (iii) and bilateral consistency (iv); (i) and (ii) hold by construction of
    /// the encodings once ids are in range, which is an error rather than a violation.
    pub fn validate(&self, quotas: &[usize]) -> Result<ValidationReport<MatchingViolation>> {
        if quotas.len() != self.by_school.len() {
            return Err(Error::UnknownAgent {
                kind: "school",
                name: format!("index {}", quotas.len().min(self.by_school.len())),
            });
        }
        let all_schools = SchoolSet::full(quotas.len());
        let all_teachers = TeacherSet::full(self.by_teacher.len());
        for (t, set) in self.by_teacher.iter().enumerate() {
            if !set.is_subset_of(all_schools) {
                return Err(Error::UnknownAgent {
                    kind: "school",
                    name: format!("assigned to teacher position {t}: {set:?}"),
                });
            }
        }
        for (s, set) in self.by_school.iter().enumerate() {
            if !set.difference(all_teachers).is_empty() {
                return Err(Error::UnknownAgent {
                    kind: "teacher",
                    name: format!("assigned to school index {s}: {set:?}"),
                });
            }
        }
        let mut report = ValidationReport::default();
        for (s, set) in self.by_school.iter().enumerate() {
            if set.len() > quotas[s] {
                report.push(MatchingViolation::QuotaExceeded {
                    school: s,
                    assigned: set.len(),
                    quota: quotas[s],
                });
            }
        }
        for (t, set) in self.by_teacher.iter().enumerate() {
            for (s, side) in self.by_school.iter().enumerate() {
                if set.contains(s) != side.contains(t) {
                    report.push(MatchingViolation::Inconsistent { teacher: t, school: s });
                }
            }
        }
        Ok(report)
    }

    pub fn is_feasible(&self, quotas: &[usize]) -> bool {
        self.validate(quotas).map(|r| r.is_ok()).unwrap_or(false)
    }
}

impl fmt::Debug for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.by_teacher.iter().enumerate())
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "kebab-case")]
pub enum MatchingViolation {
    QuotaExceeded {
        school: usize,
        assigned: usize,
        quota: usize,
    },
    Inconsistent {
        teacher: usize,
        school: usize,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_sides_agree() {
        let m = Matching::from_assignments(
            3,
            vec![SchoolSet::from_indices([0, 2]), SchoolSet::singleton(2)],
        );
        assert_eq!(m.assigned_to(2), TeacherSet::from_indices([0, 1]));
        assert_eq!(
            Matching::from_school_sides(2, m.school_sides().to_vec()),
            m
        );
        assert!(m.validate(&[1, 0, 2]).unwrap().is_ok());
    }

    #[test]
    fn empty_matching_is_valid() {
        assert!(Matching::empty(4, 4).validate(&[2, 1, 1, 1]).unwrap().is_ok());
    }

    #[test]
    fn quota_violation() {
        let m = Matching::from_assignments(2, vec![SchoolSet::singleton(1); 2]);
        let report = m.validate(&[1, 1]).unwrap();
        assert_eq!(
            report.violations(),
            &[MatchingViolation::QuotaExceeded {
                school: 1,
                assigned: 2,
                quota: 1
            }]
        );
    }

    #[test]
    fn inconsistent_sides_and_unknown_ids() {
        let m = Matching::from_parts_unchecked(
            vec![SchoolSet::singleton(0)],
            vec![TeacherSet::EMPTY],
        );
        let report = m.validate(&[1]).unwrap();
        assert_eq!(
            report.violations(),
            &[MatchingViolation::Inconsistent { teacher: 0, school: 0 }]
        );
        let out_of_range = Matching::from_assignments(3, vec![SchoolSet::singleton(2)]);
        assert!(matches!(
            out_of_range.validate(&[1, 1]),
            Err(Error::UnknownAgent { .. })
        ));
        let bad_teacher = Matching::from_parts_unchecked(vec![], vec![TeacherSet::singleton(3)]);
        assert!(matches!(
            bad_teacher.validate(&[1]),
            Err(Error::UnknownAgent { kind: "teacher", .. })
        ));
    }

    #[test]
    fn duplicate_school_labels_rejected() {
        assert!(Schools::new(vec!["a".into(), "a".into()], vec![1, 1]).is_err());
    }
}
