//! Definition-level verifiers and brute-force oracles over the space of feasible matchings.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::choice::ChoiceFunction;
use crate::error::{Error, Result};
use crate::model::{Matching, Schools};
use crate::priority::PriorityProfile;
use crate::problem::DynamicProblem;
use crate::set::{SchoolSet, TeacherSet};

/// Largest roster the enumeration oracles accept.
pub const ORACLE_MAX_TEACHERS: usize = 6;
/// Largest school set the enumeration oracles accept.
pub const ORACLE_MAX_SCHOOLS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimKind {
    Justified,
    Unjustified,
}

/// `claimant` wants `school` and outranks `displaced`, who holds a seat there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Claim {
    pub claimant: usize,
    pub school: usize,
    pub displaced: usize,
    pub kind: ClaimKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StabilityVerdict {
    pub individually_rational: bool,
    pub dynamically_rational: bool,
    pub non_wasteful: bool,
    pub claims: Vec<Claim>,
    pub dynamically_stable: bool,
}

impl StabilityVerdict {
    pub fn justified_claims(&self) -> impl Iterator<Item = &Claim> {
        self.claims.iter().filter(|c| c.kind == ClaimKind::Justified)
    }
}

/// `s ∉ μ(i)` and `s ∈ C_i(μ(i) ∪ {s})`.
#[inline]
fn desires(cf: &ChoiceFunction, assigned: SchoolSet, school: usize) -> bool {
    !assigned.contains(school) && cf.choose(assigned.with(school)).contains(school)
}

/// Every claim under the original priorities, classified by the previous matching.
pub fn find_claims(problem: &DynamicProblem, mu: &Matching) -> Vec<Claim> {
    let previous = problem.previous();
    let priorities = problem.priorities();
    let mut claims = Vec::new();
    for (i, cf) in problem.choices().iter().enumerate() {
        let assigned = mu.assignment(i);
        for s in 0..problem.schools().len() {
            if !desires(cf, assigned, s) {
                continue;
            }
            for j in mu.assigned_to(s).iter() {
                if priorities.prefers(s, i, j) {
                    let kind = if previous.assigned_to(s).contains(j) {
                        ClaimKind::Unjustified
                    } else {
                        ClaimKind::Justified
                    };
                    claims.push(Claim {
                        claimant: i,
                        school: s,
                        displaced: j,
                        kind,
                    });
                }
            }
        }
    }
    claims
}

/// `C_i(μ(i)) = μ(i)` for every teacher.
pub fn is_individually_rational(choices: &[ChoiceFunction], mu: &Matching) -> bool {
    choices
        .iter()
        .enumerate()
        .all(|(i, cf)| cf.is_rational(mu.assignment(i)))
}

/// Individually rational, and no employed teacher is Blair-worse off than in the previous period.
pub fn is_dynamically_rational(problem: &DynamicProblem, mu: &Matching) -> bool {
    let previous = problem.previous();
    is_individually_rational(problem.choices(), mu)
        && problem.choices().iter().enumerate().all(|(i, cf)| {
            let before = previous.assignment(i);
            let now = mu.assignment(i);
            before.is_empty() || cf.choose(now.union(before)) == now
        })
}

/// Every desired school is full.
pub fn is_nonwasteful(schools: &Schools, choices: &[ChoiceFunction], mu: &Matching) -> bool {
    (0..schools.len()).all(|s| {
        mu.assigned_to(s).len() >= schools.quota(s)
            || choices
                .iter()
                .enumerate()
                .all(|(i, cf)| !desires(cf, mu.assignment(i), s))
    })
}

fn has_claim(
    choices: &[ChoiceFunction],
    priorities: &PriorityProfile,
    mu: &Matching,
    exempt: Option<&Matching>,
) -> bool {
    choices.iter().enumerate().any(|(i, cf)| {
        let assigned = mu.assignment(i);
        (0..mu.schools()).any(|s| {
            desires(cf, assigned, s)
                && mu.assigned_to(s).iter().any(|j| {
                    priorities.prefers(s, i, j)
                        && !exempt.is_some_and(|prev| prev.assigned_to(s).contains(j))
                })
        })
    })
}

fn check_feasible(problem: &DynamicProblem, mu: &Matching) -> Result<()> {
    if mu.teachers() != problem.teacher_count() {
        return Err(Error::UnknownAgent {
            kind: "teacher",
            name: format!("matching covers {} teachers", mu.teachers()),
        });
    }
    let report = mu.validate(problem.schools().quotas())?;
    match report.violations().first() {
        None => Ok(()),
        Some(v) => Err(Error::InfeasibleMatching {
            detail: format!("{v:?}"),
        }),
    }
}

pub fn is_dynamically_stable(problem: &DynamicProblem, mu: &Matching) -> Result<StabilityVerdict> {
    check_feasible(problem, mu)?;
    let individually_rational = is_individually_rational(problem.choices(), mu);
    let dynamically_rational = is_dynamically_rational(problem, mu);
    let non_wasteful = is_nonwasteful(problem.schools(), problem.choices(), mu);
    let claims = find_claims(problem, mu);
    let dynamically_stable = dynamically_rational
        && non_wasteful
        && claims.iter().all(|c| c.kind == ClaimKind::Unjustified);
    Ok(StabilityVerdict {
        individually_rational,
        dynamically_rational,
        non_wasteful,
        claims,
        dynamically_stable,
    })
}

/// Boolean dynamic stability without building a verdict. The matching must be feasible.
pub fn dynamically_stable(problem: &DynamicProblem, mu: &Matching) -> bool {
    is_dynamically_rational(problem, mu)
        && is_nonwasteful(problem.schools(), problem.choices(), mu)
        && !has_claim(
            problem.choices(),
            problem.priorities(),
            mu,
            Some(problem.previous()),
        )
}

/// Static stability: individually rational, non-wasteful and claim-free under `priorities`.
pub fn is_statically_stable(
    schools: &Schools,
    choices: &[ChoiceFunction],
    priorities: &PriorityProfile,
    mu: &Matching,
) -> bool {
    is_individually_rational(choices, mu)
        && is_nonwasteful(schools, choices, mu)
        && !has_claim(choices, priorities, mu, None)
}

/// `𝒰(μ)`: `(claimant, school)` pairs of unjustified claims.
pub fn unjustified_pairs(problem: &DynamicProblem, mu: &Matching) -> BTreeSet<(usize, usize)> {
    find_claims(problem, mu)
        .into_iter()
        .filter(|c| c.kind == ClaimKind::Unjustified)
        .map(|c| (c.claimant, c.school))
        .collect()
}

/// Every teacher weakly Blair-prefers `a` to `b`.
pub fn weakly_blair_dominates(choices: &[ChoiceFunction], a: &Matching, b: &Matching) -> bool {
    choices.iter().enumerate().all(|(i, cf)| {
        let (x, y) = (a.assignment(i), b.assignment(i));
        x == y || cf.choose(x.union(y)) == x
    })
}

/// Weak dominance with at least one strict improvement.
pub fn blair_dominates(choices: &[ChoiceFunction], a: &Matching, b: &Matching) -> bool {
    a.assignments() != b.assignments() && weakly_blair_dominates(choices, a, b)
}

/// Every feasible matching of a roster of `teachers` over `schools`, addressable by index.
///
/// School `s` picks one of the teacher subsets of size at most `q_s`; the index is read in mixed
/// radix with school 0 as the least significant digit.
#[derive(Clone, Debug)]
pub struct MatchingSpace {
    teachers: usize,
    options: Vec<Vec<TeacherSet>>,
    len: u64,
}

impl MatchingSpace {
    pub fn new(schools: &Schools, teachers: usize) -> Result<Self> {
        if teachers > ORACLE_MAX_TEACHERS || schools.len() > ORACLE_MAX_SCHOOLS {
            return Err(Error::too_large(format!(
                "{teachers} teachers and {} schools exceed the enumeration guard of \
                 {ORACLE_MAX_TEACHERS} teachers and {ORACLE_MAX_SCHOOLS} schools",
                schools.len()
            )));
        }
        let everyone = TeacherSet::full(teachers);
        let options: Vec<Vec<TeacherSet>> = (0..schools.len())
            .map(|s| {
                (0..1u64 << teachers)
                    .map(TeacherSet::from_bits)
                    .filter(|set| set.len() <= schools.quota(s) && set.difference(everyone).is_empty())
                    .collect()
            })
            .collect();
        let len = options.iter().map(|o| o.len() as u64).product();
        Ok(MatchingSpace {
            teachers,
            options,
            len,
        })
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, mut index: u64) -> Matching {
        debug_assert!(index < self.len);
        let mut sides = Vec::with_capacity(self.options.len());
        for opts in &self.options {
            let k = opts.len() as u64;
            sides.push(opts[(index % k) as usize]);
            index /= k;
        }
        Matching::from_school_sides(self.teachers, sides)
    }

    pub fn iter(&self) -> impl Iterator<Item = Matching> + '_ {
        (0..self.len).map(|k| self.get(k))
    }
}

pub fn enumerate_matchings(problem: &DynamicProblem) -> Result<MatchingSpace> {
    MatchingSpace::new(problem.schools(), problem.teacher_count())
}

/// `𝒟𝒮^t`, in enumeration order.
pub fn enumerate_dynamically_stable(problem: &DynamicProblem) -> Result<Vec<Matching>> {
    let space = enumerate_matchings(problem)?;
    Ok(space.iter().filter(|mu| dynamically_stable(problem, mu)).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EfficiencyVerdict {
    pub efficient: bool,
    /// A feasible matching that Blair-dominates the audited one.
    pub witness: Option<Matching>,
}

/// Searches every feasible matching for one that Blair-dominates `mu`.
pub fn is_blair_efficient(problem: &DynamicProblem, mu: &Matching) -> Result<EfficiencyVerdict> {
    check_feasible(problem, mu)?;
    let space = enumerate_matchings(problem)?;
    let witness = space
        .iter()
        .find(|nu| blair_dominates(problem.choices(), nu, mu));
    Ok(EfficiencyVerdict {
        efficient: witness.is_none(),
        witness,
    })
}

/// True when no dynamically stable matching has a strictly smaller set of unjustified claims.
pub fn minimality_of_unjustified_claims(problem: &DynamicProblem, mu: &Matching) -> Result<bool> {
    check_feasible(problem, mu)?;
    if !dynamically_stable(problem, mu) {
        return Err(Error::NotStableInput);
    }
    let own = unjustified_pairs(problem, mu);
    if own.is_empty() {
        return Ok(true);
    }
    let stable = enumerate_dynamically_stable(problem)?;
    Ok(!stable.iter().any(|nu| {
        let other = unjustified_pairs(problem, nu);
        other.len() < own.len() && other.is_subset(&own)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::trda::run_trda;

    fn assign(m: usize, v: &[&[usize]]) -> Matching {
        Matching::from_assignments(
            m,
            v.iter().map(|s| SchoolSet::from_indices(s.iter().copied())).collect(),
        )
    }

    #[test]
    fn round_zero_is_dynamically_stable() {
        let p = fixtures::treada_example_problem();
        let mu0 = fixtures::example_round0_matching();
        let v = is_dynamically_stable(&p, &mu0).unwrap();
        assert!(v.dynamically_rational && v.non_wasteful && v.dynamically_stable);
        assert!(dynamically_stable(&p, &mu0));
    }

    #[test]
    fn final_matching_has_a_justified_claim_by_i4() {
        let p = fixtures::treada_example_problem();
        let mu2 = fixtures::example_final_matching();
        let v = is_dynamically_stable(&p, &mu2).unwrap();
        assert!(!v.dynamically_stable);
        let justified: Vec<&Claim> = v.justified_claims().collect();
        assert_eq!(
            justified,
            vec![&Claim {
                claimant: 3,
                school: 3,
                displaced: 0,
                kind: ClaimKind::Justified
            }]
        );
    }

    #[test]
    fn moving_i1_to_s1_breaks_dynamic_rationality() {
        let p = fixtures::treada_example_problem();
        let moved = assign(4, &[&[0], &[3], &[2], &[0]]);
        assert!(!is_dynamically_rational(&p, &moved));
        assert!(is_dynamically_rational(&p, p.previous()));
    }

    #[test]
    fn wastefulness() {
        let p = fixtures::treada_example_problem();
        assert!(is_nonwasteful(p.schools(), p.choices(), &fixtures::example_round0_matching()));
        assert!(!is_nonwasteful(p.schools(), p.choices(), &Matching::empty(4, 4)));
        let closed = Schools::numbered(vec![0, 0, 0, 0]);
        assert!(is_nonwasteful(&closed, p.choices(), &Matching::empty(4, 4)));
    }

    #[test]
    fn tiny_enumeration_counts() {
        let one = Schools::numbered(vec![1]);
        assert_eq!(MatchingSpace::new(&one, 1).unwrap().len(), 2);
        assert_eq!(MatchingSpace::new(&one, 2).unwrap().len(), 3);
        let big = Schools::numbered(vec![1; 6]);
        assert!(matches!(MatchingSpace::new(&big, 2), Err(Error::DomainTooLarge { .. })));
        assert!(matches!(
            MatchingSpace::new(&one, 7),
            Err(Error::DomainTooLarge { .. })
        ));
    }

    #[test]
    fn enumeration_is_exhaustive_and_distinct() {
        let p = fixtures::treada_example_problem();
        let space = enumerate_matchings(&p).unwrap();
        assert_eq!(space.len(), 11 * 5 * 5 * 5);
        let distinct: std::collections::HashSet<Matching> = space.iter().collect();
        assert_eq!(distinct.len() as u64, space.len());
        assert!(space.iter().all(|m| m.is_feasible(p.schools().quotas())));
    }

    #[test]
    fn stable_set_of_worked_example_contains_round_zero() {
        let p = fixtures::treada_example_problem();
        let stable = enumerate_dynamically_stable(&p).unwrap();
        assert!(stable.contains(&run_trda(&p).unwrap().0));
    }

    #[test]
    fn efficiency_of_worked_example() {
        let p = fixtures::treada_example_problem();
        let mu2 = fixtures::example_final_matching();
        assert!(is_blair_efficient(&p, &mu2).unwrap().efficient);
        let v = is_blair_efficient(&p, &fixtures::example_round0_matching()).unwrap();
        assert!(!v.efficient);
        let w = v.witness.unwrap();
        assert!(blair_dominates(p.choices(), &w, &fixtures::example_round0_matching()));
        assert!(blair_dominates(p.choices(), &mu2, &fixtures::example_round0_matching()));
    }

    #[test]
    fn minimality_rejects_unstable_input() {
        let p = fixtures::treada_example_problem();
        assert_eq!(
            minimality_of_unjustified_claims(&p, &fixtures::example_final_matching()),
            Err(Error::NotStableInput)
        );
        assert!(minimality_of_unjustified_claims(&p, &fixtures::example_round0_matching()).unwrap());
    }

    #[test]
    fn infeasible_matching_is_an_error() {
        let p = fixtures::treada_example_problem();
        let crowded = assign(4, &[&[1], &[1], &[], &[]]);
        assert!(matches!(
            is_dynamically_stable(&p, &crowded),
            Err(Error::InfeasibleMatching { .. })
        ));
    }
}
