//! Strict preferences over school subsets and the choice functions they induce.

use std::cmp::Ordering;
use std::collections::HashSet;

use crate::choice::ChoiceFunction;
use crate::error::{Error, Result};
use crate::set::{SchoolSet, MAX_SCHOOLS};

/// A strict ranking of school subsets, best first.
///
/// The ranking always contains `∅`. Sets listed before `∅` are acceptable; sets listed after it
/// or not listed at all are unacceptable and never chosen. Unlisted sets tie with each other
/// below every listed set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubsetPreference {
    schools: u8,
    ranking: Vec<SchoolSet>,
}

impl SubsetPreference {
    pub fn new(schools: usize, ranking: Vec<SchoolSet>) -> Result<Self> {
        if schools > MAX_SCHOOLS {
            return Err(Error::too_large(format!("{schools} schools")));
        }
        let all = SchoolSet::full(schools);
        let mut seen = HashSet::with_capacity(ranking.len());
        for set in &ranking {
            if !set.is_subset_of(all) {
                return Err(Error::invalid(format!("ranked set {set:?} is not a set of schools")));
            }
            if !seen.insert(*set) {
                return Err(Error::invalid(format!("set {set:?} ranked twice")));
            }
        }
        if !seen.contains(&SchoolSet::EMPTY) {
            return Err(Error::invalid("ranking must contain the empty set"));
        }
        Ok(SubsetPreference {
            schools: schools as u8,
            ranking,
        })
    }

    /// Ranks `acceptable` best first and appends `∅`.
    pub fn from_acceptable(schools: usize, acceptable: Vec<SchoolSet>) -> Result<Self> {
        let mut ranking = acceptable;
        if !ranking.contains(&SchoolSet::EMPTY) {
            ranking.push(SchoolSet::EMPTY);
        }
        Self::new(schools, ranking)
    }

    pub fn schools(&self) -> usize {
        self.schools as usize
    }

    pub fn ranking(&self) -> &[SchoolSet] {
        &self.ranking
    }

    /// The sets ranked above `∅`.
    pub fn acceptable(&self) -> &[SchoolSet] {
        let cut = self
            .ranking
            .iter()
            .position(|s| s.is_empty())
            .expect("ranking contains the empty set");
        &self.ranking[..cut]
    }

    /// Position in the ranking; unlisted sets share the worst key.
    pub fn rank_key(&self, set: SchoolSet) -> usize {
        self.ranking
            .iter()
            .position(|s| *s == set)
            .unwrap_or(usize::MAX)
    }

    /// `Greater` when `a` is strictly preferred to `b`.
    pub fn compare(&self, a: SchoolSet, b: SchoolSet) -> Ordering {
        self.rank_key(b).cmp(&self.rank_key(a))
    }

    pub fn prefers(&self, a: SchoolSet, b: SchoolSet) -> bool {
        self.compare(a, b) == Ordering::Greater
    }

    /// Worst element of `options`; `None` when empty.
    pub fn worst<I: IntoIterator<Item = SchoolSet>>(&self, options: I) -> Option<SchoolSet> {
        options.into_iter().max_by_key(|s| self.rank_key(*s))
    }

    /// Best element of `options`; `None` when empty.
    pub fn best<I: IntoIterator<Item = SchoolSet>>(&self, options: I) -> Option<SchoolSet> {
        options.into_iter().min_by_key(|s| self.rank_key(*s))
    }

    /// `C(A) = max_≻ {A' ⊆ A}` without checking substitutability.
    pub fn induce_choice_unchecked(&self) -> ChoiceFunction {
        let acceptable = self.acceptable();
        ChoiceFunction::from_fn(self.schools(), |offered| {
            acceptable
                .iter()
                .copied()
                .find(|s| s.is_subset_of(offered))
                .unwrap_or(SchoolSet::EMPTY)
        })
    }

    /// The induced choice function, rejected when it is not path independent.
    pub fn induce_choice(&self) -> Result<ChoiceFunction> {
        let cf = self.induce_choice_unchecked();
        let report = cf.validate();
        match report.violations().first() {
            None => Ok(cf),
            Some(v) => Err(Error::SubstitutabilityViolation {
                detail: format!(
                    "{:?} violated between offers {:?} and {:?}",
                    v.property, v.offered, v.other
                ),
            }),
        }
    }
}
