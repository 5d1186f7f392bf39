//! Tabular choice functions over school subsets and the Blair partial order they induce.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::report::ValidationReport;
use crate::set::{SchoolSet, MAX_SCHOOLS};

/// A total map `2^S -> 2^S` stored densely, one entry per subset.
///
/// The table is shared behind an `Arc`, so cloning a choice function is cheap; truncation and
/// other transformations produce a fresh table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ChoiceFunction {
    schools: u8,
    table: Arc<[SchoolSet]>,
}

/// Outcome of comparing two school sets under a teacher's Blair order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum BlairOrdering {
    StrictlyBetter,
    StrictlyWorse,
    Equal,
    Incomparable,
}

impl BlairOrdering {
    /// `StrictlyBetter` or `Equal`.
    pub fn is_weakly_better(self) -> bool {
        matches!(self, BlairOrdering::StrictlyBetter | BlairOrdering::Equal)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChoiceProperty {
    /// `C(A) ⊄ A`.
    Selection,
    /// A chosen school stops being chosen when another school is withdrawn.
    Substitutability,
    /// Withdrawing unchosen schools changes the choice.
    Consistency,
}

/// A violated property together with the pair of offered sets witnessing it.
///
/// For `Selection` both sets are the offending offer. For `Substitutability` the witness is
/// `(A, A \ {s'})` where some `s ∈ C(A)` is dropped from `C(A \ {s'})`. For `Consistency` it
/// is `(A, B)` with `C(A) ⊆ B ⊆ A` and `C(B) ≠ C(A)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub struct ChoiceViolation {
    pub property: ChoiceProperty,
    pub offered: SchoolSet,
    pub other: SchoolSet,
}

impl ChoiceFunction {
    /// Builds a choice function from its dense table, indexed by subset bits.
    pub fn from_table(schools: usize, table: Vec<SchoolSet>) -> Result<Self> {
        if schools > MAX_SCHOOLS {
            return Err(Error::too_large(format!(
                "{schools} schools exceed the tabular cap of {MAX_SCHOOLS}"
            )));
        }
        let size = 1usize << schools;
        if table.len() != size {
            return Err(Error::invalid(format!(
                "choice table has {} rows, expected {size}",
                table.len()
            )));
        }
        let all = SchoolSet::full(schools);
        if let Some(bad) = table.iter().find(|c| !c.is_subset_of(all)) {
            return Err(Error::invalid(format!(
                "choice table selects {bad:?} outside the school set"
            )));
        }
        Ok(ChoiceFunction {
            schools: schools as u8,
            table: table.into(),
        })
    }

    pub fn from_fn(schools: usize, f: impl Fn(SchoolSet) -> SchoolSet) -> Self {
        assert!(schools <= MAX_SCHOOLS);
        let table: Vec<SchoolSet> = (0..1usize << schools)
            .map(|bits| f(SchoolSet::from_bits(bits as u16)))
            .collect();
        ChoiceFunction {
            schools: schools as u8,
            table: table.into(),
        }
    }

    /// `C(A) = A` for every `A`.
    pub fn identity(schools: usize) -> Self {
        Self::from_fn(schools, |a| a)
    }

    /// Nothing is ever chosen.
    pub fn empty(schools: usize) -> Self {
        Self::from_fn(schools, |_| SchoolSet::EMPTY)
    }

    pub fn schools(&self) -> usize {
        self.schools as usize
    }

    pub fn table(&self) -> &[SchoolSet] {
        &self.table
    }

    /// `C(offered)`. The offer must be a subset of `S`.
    #[inline]
    pub fn choose(&self, offered: SchoolSet) -> SchoolSet {
        self.table[offered.index()]
    }

    /// `s ∈ C({s})`.
    pub fn is_acceptable(&self, school: usize) -> bool {
        self.choose(SchoolSet::singleton(school)).contains(school)
    }

    /// `C(A) = A`, i.e. `A ⪰^B ∅`.
    pub fn is_rational(&self, assigned: SchoolSet) -> bool {
        self.choose(assigned) == assigned
    }

    /// Compares `a` against `b`: `a ⪰^B b` whenever `a = C(a ∪ b)`.
    pub fn blair_compare(&self, a: SchoolSet, b: SchoolSet) -> BlairOrdering {
        if a == b {
            return BlairOrdering::Equal;
        }
        let chosen = self.choose(a.union(b));
        if chosen == a {
            BlairOrdering::StrictlyBetter
        } else if chosen == b {
            BlairOrdering::StrictlyWorse
        } else {
            BlairOrdering::Incomparable
        }
    }

    /// The `s`-truncation: `C^s(A) = C(A \ {s})`.
    pub fn truncate(&self, school: usize) -> ChoiceFunction {
        debug_assert!(school < self.schools());
        ChoiceFunction::from_fn(self.schools(), |a| self.choose(a.without(school)))
    }

    /// Checks selection, substitutability and consistency.
    ///
    /// Substitutability is checked one withdrawn school at a time, which is equivalent to the
    /// general statement. Consistency is checked by withdrawing a single unchosen school; chaining
    /// such withdrawals reaches every `B` with `C(A) ⊆ B ⊆ A`, so the local test is equivalent too.
    /// Together the two are equivalent to path independence.
    pub fn validate(&self) -> ValidationReport<ChoiceViolation> {
        let mut report = ValidationReport::default();
        let n = self.schools();
        for bits in 0..1usize << n {
            let offered = SchoolSet::from_bits(bits as u16);
            let chosen = self.choose(offered);
            if !chosen.is_subset_of(offered) {
                report.push(ChoiceViolation {
                    property: ChoiceProperty::Selection,
                    offered,
                    other: offered,
                });
                continue;
            }
            for withdrawn in offered.iter() {
                let smaller = offered.without(withdrawn);
                let kept = self.choose(smaller);
                if chosen.without(withdrawn).is_subset_of(kept) {
                    if !chosen.contains(withdrawn) && kept != chosen {
                        report.push(ChoiceViolation {
                            property: ChoiceProperty::Consistency,
                            offered,
                            other: smaller,
                        });
                    }
                } else {
                    report.push(ChoiceViolation {
                        property: ChoiceProperty::Substitutability,
                        offered,
                        other: smaller,
                    });
                }
            }
        }
        report
    }

    pub fn is_path_independent(&self) -> bool {
        self.validate().is_ok()
    }
}

impl fmt::Debug for ChoiceFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (bits, chosen) in self.table.iter().enumerate() {
            map.entry(&SchoolSet::from_bits(bits as u16), chosen);
        }
        map.finish()
    }
}
