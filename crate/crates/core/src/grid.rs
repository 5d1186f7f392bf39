//! Instance generators for exhaustive and seeded sweeps.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::choice::ChoiceFunction;
use crate::domain::{exhaustive_domain, random_path_independent, random_substitutable_preference};
use crate::economy::{Economy, Mechanism, Period, TeacherReport};
use crate::error::Result;
use crate::model::{Matching, Schools, TeacherId};
use crate::par::{self, Execution};
use crate::priority::PriorityProfile;
use crate::problem::{DynamicProblem, Teacher};
use crate::set::SchoolSet;

/// Everything about a dynamic problem except the teachers' choice functions.
#[derive(Clone, Debug)]
pub struct Frame {
    pub schools: Arc<Schools>,
    pub priorities: PriorityProfile,
    pub previous: Vec<SchoolSet>,
}

impl Frame {
    pub fn teachers(&self) -> usize {
        self.previous.len()
    }

    fn problem(&self, choices: Vec<ChoiceFunction>) -> DynamicProblem {
        DynamicProblem::new_unchecked(
            self.schools.clone(),
            Teacher::numbered(self.teachers()),
            choices,
            self.priorities.clone(),
            Matching::from_assignments(self.schools.len(), self.previous.clone()),
        )
    }
}

/// Slices of the exhaustive grid of small dynamic problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tier {
    /// Up to two schools and three teachers; quotas in `{0, 1, 2}`; every priority profile and
    /// every feasible previous matching.
    Small,
    /// Three schools, one or two teachers; quotas in `{1, 2}`; every priority profile and every
    /// feasible previous matching.
    ThreeSchools,
    /// Three schools and three teachers under every choice-function profile, over a fixed set of
    /// frames.
    ThreeByThree,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Small, Tier::ThreeSchools, Tier::ThreeByThree];
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for k in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(k, n - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}

fn product<T: Clone>(factors: &[Vec<T>]) -> Vec<Vec<T>> {
    factors.iter().fold(vec![Vec::new()], |acc, f| {
        acc.iter()
            .flat_map(|prefix| {
                f.iter().map(move |x| {
                    let mut v = prefix.clone();
                    v.push(x.clone());
                    v
                })
            })
            .collect()
    })
}

fn feasible_previous(teachers: usize, quotas: &[usize]) -> Vec<Vec<SchoolSet>> {
    let subsets: Vec<SchoolSet> = SchoolSet::full(quotas.len()).subsets().collect();
    product(&vec![subsets; teachers])
        .into_iter()
        .filter(|assignment| {
            quotas
                .iter()
                .enumerate()
                .all(|(s, &q)| assignment.iter().filter(|a| a.contains(s)).count() <= q)
        })
        .collect()
}

fn full_frames(schools: usize, teachers: usize, quota_values: &[usize]) -> Vec<Frame> {
    let mut out = Vec::new();
    for quotas in product(&vec![quota_values.to_vec(); schools]) {
        let sch = Arc::new(Schools::numbered(quotas.clone()));
        let previous = feasible_previous(teachers, &quotas);
        for orders in product(&vec![permutations(teachers); schools]) {
            let priorities = PriorityProfile::new(teachers, orders).expect("permutations");
            for prev in &previous {
                out.push(Frame {
                    schools: sch.clone(),
                    priorities: priorities.clone(),
                    previous: prev.clone(),
                });
            }
        }
    }
    out
}

fn sets(groups: &[&[usize]]) -> Vec<SchoolSet> {
    groups.iter().map(|g| SchoolSet::from_indices(g.iter().copied())).collect()
}

/// The frames of one tier.
pub fn frames(tier: Tier) -> Vec<Frame> {
    match tier {
        Tier::Small => (1..=2)
            .flat_map(|m| (1..=3).flat_map(move |n| full_frames(m, n, &[0, 1, 2])))
            .collect(),
        Tier::ThreeSchools => (1..=2).flat_map(|n| full_frames(3, n, &[1, 2])).collect(),
        Tier::ThreeByThree => {
            type Fixed = (&'static [usize], [[usize; 3]; 3], &'static [&'static [usize]]);
            let fixed: [Fixed; 5] = [
                (&[1, 1, 1], [[0, 1, 2], [0, 1, 2], [0, 1, 2]], &[&[], &[], &[]]),
                (&[1, 1, 1], [[0, 1, 2], [1, 2, 0], [2, 0, 1]], &[&[0], &[], &[]]),
                (&[2, 1, 1], [[0, 1, 2], [2, 1, 0], [1, 2, 0]], &[&[1], &[2], &[]]),
                (&[1, 2, 1], [[2, 0, 1], [1, 2, 0], [0, 1, 2]], &[&[], &[], &[0, 2]]),
                (&[2, 2, 2], [[0, 1, 2], [1, 2, 0], [2, 0, 1]], &[&[0, 1], &[1], &[]]),
            ];
            fixed
                .iter()
                .map(|(quotas, orders, prev)| Frame {
                    schools: Arc::new(Schools::numbered(quotas.to_vec())),
                    priorities: PriorityProfile::new(3, orders.iter().map(|o| o.to_vec()).collect())
                        .expect("permutations"),
                    previous: sets(prev),
                })
                .collect()
        }
    }
}

/// Outcome of a sweep: instances visited and failure descriptions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepReport {
    pub instances: u64,
    pub failures: Vec<String>,
}

impl SweepReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn merge(&mut self, other: SweepReport) {
        self.instances += other.instances;
        self.failures.extend(other.failures);
    }

    fn absorb(&mut self, results: Vec<Vec<String>>) {
        self.instances += results.len() as u64;
        self.failures.extend(results.into_iter().flatten());
    }
}

/// Runs `check` on every problem of the tier; `check` records failure descriptions.
pub fn sweep_tier<F>(tier: Tier, exec: Execution, check: F) -> SweepReport
where
    F: Fn(&DynamicProblem, &mut Vec<String>) + Sync + Send,
{
    let mut report = SweepReport::default();
    for frame in frames(tier) {
        let pool = &exhaustive_domain(frame.schools.len()).expect("within guard").choices;
        let n = frame.teachers();
        let total = pool.len().pow(n as u32);
        let results = par::map_range(exec, total, |mut index| {
            let choices = (0..n)
                .map(|_| {
                    let cf = pool[index % pool.len()].clone();
                    index /= pool.len();
                    cf
                })
                .collect();
            let mut failures = Vec::new();
            check(&frame.problem(choices), &mut failures);
            failures
        });
        report.absorb(results);
    }
    report
}

/// A random valid dynamic problem with quotas in `{1, 2}`.
pub fn random_problem<R: Rng + ?Sized>(teachers: usize, schools: usize, rng: &mut R) -> DynamicProblem {
    let quotas: Vec<usize> = (0..schools).map(|_| rng.gen_range(1..=2)).collect();
    let choices: Vec<ChoiceFunction> = (0..teachers)
        .map(|_| random_path_independent(schools, rng))
        .collect();
    let mut load = vec![0; schools];
    let previous: Vec<SchoolSet> = choices
        .iter()
        .map(|cf| {
            let chosen = cf.choose(SchoolSet::full(schools));
            let mut held = SchoolSet::EMPTY;
            for s in chosen.iter() {
                if load[s] < quotas[s] && rng.gen_bool(0.4) {
                    load[s] += 1;
                    held = held.with(s);
                }
            }
            held
        })
        .collect();
    let orders = (0..schools)
        .map(|_| {
            let mut o: Vec<usize> = (0..teachers).collect();
            o.shuffle(rng);
            o
        })
        .collect();
    DynamicProblem::new(
        Arc::new(Schools::numbered(quotas)),
        Teacher::numbered(teachers),
        choices,
        PriorityProfile::new(teachers, orders).expect("permutations"),
        Matching::from_assignments(schools, previous),
    )
    .expect("subsets of chosen sets are rational and within quota")
}

/// Runs `check` on `count` random problems drawn from `seed`.
pub fn sweep_random<F>(
    count: usize,
    teachers: usize,
    schools: usize,
    seed: u64,
    exec: Execution,
    check: F,
) -> SweepReport
where
    F: Fn(&DynamicProblem, &mut Vec<String>) + Sync + Send,
{
    use rand::SeedableRng;
    let results = par::map_range(exec, count, |k| {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let mut failures = Vec::new();
        check(&random_problem(teachers, schools, &mut rng), &mut failures);
        failures
    });
    let mut report = SweepReport::default();
    report.absorb(results);
    report
}

struct LexBuilder {
    schools: Arc<Schools>,
    reports: Vec<(String, TeacherReport)>,
    /// Per school, teachers in priority order; later blocks are appended.
    orders: Vec<Vec<usize>>,
    initial: Vec<SchoolSet>,
    periods: Vec<Period>,
}

impl LexBuilder {
    fn add_teacher<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let k = self.reports.len();
        let pref = random_substitutable_preference(self.schools.len(), rng);
        self.reports.push((format!("i{}", k + 1), TeacherReport::Preference(pref)));
        self.initial.push(SchoolSet::EMPTY);
        k
    }

    fn append_block<R: Rng + ?Sized>(&mut self, block: &[usize], rng: &mut R) {
        for order in &mut self.orders {
            let mut b = block.to_vec();
            b.shuffle(rng);
            order.extend(b);
        }
    }

    fn push_period(&mut self, roster: Vec<usize>) {
        let position = |t: usize| roster.iter().position(|&r| r == t);
        let orders = self
            .orders
            .iter()
            .map(|o| o.iter().filter_map(|&t| position(t)).collect())
            .collect();
        self.periods.push(Period {
            priorities: PriorityProfile::new(roster.len(), orders).expect("restriction of a permutation"),
            roster: roster.into_iter().map(|t| TeacherId(t as u32)).collect(),
        });
    }

    fn build(&self, mechanism: Mechanism) -> Result<Economy> {
        Economy::new(
            self.schools.clone(),
            self.reports.clone(),
            self.periods.clone(),
            self.initial.clone(),
            mechanism,
        )
    }
}

/// A random economy whose priorities are lexicographic by tenure in every period.
///
/// Each period's roster is the previous period's employed teachers (each staying with
/// probability 0.8) plus new entrants ranked below everyone already present. Rosters after the
/// first are fixed by simulating TRDA, so the guarantee holds for TRDA outcomes.
pub fn random_lex_economy<R: Rng + ?Sized>(
    periods: usize,
    schools: usize,
    mechanism: Mechanism,
    rng: &mut R,
) -> Economy {
    let quotas: Vec<usize> = (0..schools).map(|_| rng.gen_range(1..=2)).collect();
    let mut b = LexBuilder {
        schools: Arc::new(Schools::numbered(quotas.clone())),
        reports: Vec::new(),
        orders: vec![Vec::new(); schools],
        initial: Vec::new(),
        periods: Vec::new(),
    };
    let mut load = vec![0; schools];
    let mut tenured = Vec::new();
    let mut entrants = Vec::new();
    for _ in 0..rng.gen_range(1..=4) {
        let k = b.add_teacher(rng);
        let TeacherReport::Preference(p) = &b.reports[k].1 else { unreachable!() };
        let chosen = p.induce_choice_unchecked().choose(SchoolSet::full(schools));
        for s in chosen.iter() {
            if load[s] < quotas[s] && rng.gen_bool(0.5) {
                load[s] += 1;
                b.initial[k] = b.initial[k].with(s);
            }
        }
        if b.initial[k].is_empty() {
            entrants.push(k);
        } else {
            tenured.push(k);
        }
    }
    b.append_block(&tenured, rng);
    b.append_block(&entrants, rng);
    let mut roster: Vec<usize> = (0..b.reports.len()).collect();
    b.push_period(roster.clone());
    for _ in 1..periods {
        let economy = b.build(Mechanism::Trda).expect("generated economy is valid");
        let last = economy.simulate().expect("TRDA succeeds").pop().expect("one period");
        let mut next: Vec<usize> = roster
            .iter()
            .copied()
            .filter(|&t| {
                last.assignment_of(TeacherId(t as u32)).is_some_and(|a| !a.is_empty())
                    && rng.gen_bool(0.8)
            })
            .collect();
        let fresh: Vec<usize> = (0..rng.gen_range(0..=2).min(4 - next.len().min(4)))
            .map(|_| b.add_teacher(rng))
            .collect();
        b.append_block(&fresh, rng);
        next.extend(fresh);
        roster = next;
        b.push_period(roster.clone());
    }
    b.build(mechanism).expect("generated economy is valid")
}

/// A named economy for the exhaustive obviousness sweep.
#[derive(Clone, Debug)]
pub struct SweepEconomy {
    pub name: String,
    pub economy: Economy,
}

/// Priority blocks: tenured teachers, first-period entrants, second-period entrants.
struct Shape {
    name: &'static str,
    tenured: &'static [&'static [usize]],
    entrants1: usize,
    /// Teachers (by index, tenured first) continuing into the second period, if any.
    second: Option<(&'static [usize], usize)>,
    /// Try every within-block order at every school instead of one fixed order.
    all_orders: bool,
}

const SHAPES: [Shape; 9] = [
    Shape { name: "one-tenured-two-entrants", tenured: &[&[0]], entrants1: 2, second: None, all_orders: true },
    Shape { name: "tenured-pair-held", tenured: &[&[0, 1]], entrants1: 1, second: None, all_orders: true },
    Shape { name: "two-tenured-one-entrant", tenured: &[&[0], &[1]], entrants1: 1, second: None, all_orders: true },
    Shape { name: "three-entrants", tenured: &[], entrants1: 3, second: None, all_orders: true },
    Shape { name: "stay-and-enter", tenured: &[&[0]], entrants1: 1, second: Some((&[0, 1], 1)), all_orders: true },
    Shape { name: "tenured-leaves", tenured: &[&[0]], entrants1: 1, second: Some((&[1], 1)), all_orders: true },
    Shape { name: "entrants-only", tenured: &[], entrants1: 2, second: Some((&[0], 1)), all_orders: true },
    Shape { name: "four-teachers-one-leaves", tenured: &[&[0]], entrants1: 2, second: Some((&[0, 1], 1)), all_orders: false },
    Shape { name: "four-teachers-tenured-leaves", tenured: &[&[0], &[1]], entrants1: 1, second: Some((&[1, 2], 1)), all_orders: false },
];

fn within_block_orders(blocks: &[Vec<usize>], schools: usize, all: bool) -> Vec<Vec<Vec<usize>>> {
    let per_block: Vec<Vec<Vec<usize>>> = blocks
        .iter()
        .map(|b| {
            permutations(b.len())
                .into_iter()
                .map(|p| p.into_iter().map(|k| b[k]).collect())
                .collect()
        })
        .collect();
    let one_school: Vec<Vec<usize>> = product(&per_block)
        .into_iter()
        .map(|parts| parts.concat())
        .collect();
    if !all {
        // Alternate the first and last within-block orders across schools.
        let (first, last) = (&one_school[0], &one_school[one_school.len() - 1]);
        return vec![(0..schools)
            .map(|s| if s % 2 == 0 { first.clone() } else { last.clone() })
            .collect()];
    }
    product(&vec![one_school; schools])
}

/// Small economies with lexicographic-by-tenure priorities in every period: up to three
/// schools, two periods and three teachers per period.
///
/// Priorities rank tenured teachers, then first-period entrants, then second-period entrants at
/// every school, with within-block orders fixed across periods. At most one first-period entrant
/// continues, so an unmatched continuing entrant never outranks an employed one.
pub fn lex_sweep_economies(mechanism: &Mechanism) -> Vec<SweepEconomy> {
    let mut out = Vec::new();
    for (m, quota_sets) in [(2usize, vec![vec![1, 1], vec![2, 1]]), (3, vec![vec![1, 1, 1], vec![2, 1, 1]])] {
        let domain = exhaustive_domain(m).expect("within guard");
        for shape in &SHAPES {
            for quotas in &quota_sets {
                if !shape.all_orders && (m != 3 || quotas != &quota_sets[1]) {
                    continue;
                }
                let t = shape.tenured.len();
                let n1 = t + shape.entrants1;
                let n = n1 + shape.second.map_or(0, |(_, e)| e);
                let initial: Vec<SchoolSet> = (0..n)
                    .map(|k| shape.tenured.get(k).map_or(SchoolSet::EMPTY, |g| SchoolSet::from_indices(g.iter().copied())))
                    .collect();
                if (0..m).any(|s| initial.iter().filter(|a| a.contains(s)).count() > quotas[s]) {
                    continue;
                }
                let blocks: Vec<Vec<usize>> = vec![(0..t).collect(), (t..n1).collect(), (n1..n).collect()];
                let reports: Vec<(String, TeacherReport)> = (0..n)
                    .map(|k| {
                        let class = (0..domain.class_count())
                            .find(|&c| domain.choices[c].is_rational(initial[k]))
                            .expect("some class keeps any set rational");
                        (format!("i{}", k + 1), TeacherReport::Preference(domain.representative(class).clone()))
                    })
                    .collect();
                let mut orders_list = within_block_orders(&blocks, m, shape.all_orders);
                // Without tenure, relabelling teachers maps economies onto each other.
                if shape.tenured.is_empty() {
                    let first = orders_list[0][0].clone();
                    orders_list.retain(|o| o[0] == first);
                }
                for (v, orders) in orders_list.into_iter().enumerate() {
                    let restrict = |roster: &[usize]| {
                        PriorityProfile::new(
                            roster.len(),
                            orders
                                .iter()
                                .map(|o| o.iter().filter_map(|x| roster.iter().position(|r| r == x)).collect())
                                .collect(),
                        )
                        .expect("restriction of a permutation")
                    };
                    let first: Vec<usize> = (0..n1).collect();
                    let mut periods = vec![Period {
                        priorities: restrict(&first),
                        roster: first.iter().map(|&k| TeacherId(k as u32)).collect(),
                    }];
                    if let Some((stay, _)) = shape.second {
                        let roster: Vec<usize> = stay.iter().copied().chain(n1..n).collect();
                        periods.push(Period {
                            priorities: restrict(&roster),
                            roster: roster.iter().map(|&k| TeacherId(k as u32)).collect(),
                        });
                    }
                    let economy = Economy::new(
                        Arc::new(Schools::numbered(quotas.clone())),
                        reports.clone(),
                        periods,
                        initial.clone(),
                        mechanism.clone(),
                    )
                    .expect("sweep economy is valid");
                    out.push(SweepEconomy {
                        name: format!("{}/S{m}/q{quotas:?}/#{v}", shape.name),
                        economy,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn permutation_counts() {
        assert_eq!(permutations(0).len(), 1);
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(3)[0], vec![0, 1, 2]);
    }

    #[test]
    fn feasible_previous_respects_quotas() {
        // One school of quota one, two teachers: (∅,∅), ({s},∅), (∅,{s}).
        assert_eq!(feasible_previous(2, &[1]).len(), 3);
        assert_eq!(feasible_previous(2, &[0, 0]).len(), 1);
    }

    #[test]
    fn frames_are_valid_problems() {
        for tier in Tier::ALL {
            for frame in frames(tier).iter().take(200) {
                let cfs = vec![ChoiceFunction::identity(frame.schools.len()); frame.teachers()];
                assert!(DynamicProblem::new(
                    frame.schools.clone(),
                    Teacher::numbered(frame.teachers()),
                    cfs,
                    frame.priorities.clone(),
                    Matching::from_assignments(frame.schools.len(), frame.previous.clone()),
                )
                .is_ok());
            }
        }
    }

    #[test]
    fn random_problems_are_seed_stable() {
        let a = random_problem(4, 4, &mut ChaCha8Rng::seed_from_u64(3));
        let b = random_problem(4, 4, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a.choices(), b.choices());
        assert_eq!(a.previous(), b.previous());
    }

    #[test]
    fn random_lex_economies_stay_lexicographic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let e = random_lex_economy(3, 3, Mechanism::Trda, &mut rng);
            for outcome in e.simulate().unwrap() {
                let p = &outcome.problem;
                assert!(p.priorities().is_lexicographic_by_tenure(p.employed()));
            }
        }
    }

    #[test]
    fn sweep_economies_are_lexicographic_under_truth() {
        let list = lex_sweep_economies(&Mechanism::Trda);
        assert!(list.len() > 20);
        for item in &list {
            for outcome in item.economy.simulate().unwrap() {
                let p = &outcome.problem;
                assert!(p.priorities().is_lexicographic_by_tenure(p.employed()), "{}", item.name);
            }
        }
    }
}
