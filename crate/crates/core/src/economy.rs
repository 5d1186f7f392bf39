//! Multi-period economies, simulation, option sets and the search for obvious dynamic
//! manipulations.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::choice::ChoiceFunction;
use crate::da::DaTrace;
use crate::domain::{exhaustive_domain, random_substitutable_preference, EXHAUSTIVE_MAX_SCHOOLS};
use crate::error::{Error, Result};
use crate::model::{Matching, Schools, TeacherId};
use crate::par::{self, Execution};
use crate::preference::SubsetPreference;
use crate::priority::{validate_priority_consistency, PeriodPriorities, PriorityProfile};
use crate::problem::{DynamicProblem, Teacher};
use crate::set::{SchoolSet, TeacherSet, MAX_TEACHERS};
use crate::trda::{run_cohort_da, run_trda};
use crate::treada::{run_treada, ConsentProfile, TreadaLog};

/// Largest co-report space a manipulation search will enumerate.
pub const MAX_PROFILES: u64 = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Consent {
    All,
    None,
    Only(Vec<TeacherId>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Mechanism {
    Trda,
    Treada(Consent),
    /// Cohort-sequential DA; requires lexicographic-by-tenure priorities in every period.
    Cohort,
}

/// What a teacher reports on entry.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TeacherReport {
    Preference(SubsetPreference),
    Table(ChoiceFunction),
}

impl TeacherReport {
    pub fn choice(&self) -> Result<ChoiceFunction> {
        match self {
            TeacherReport::Preference(p) => p.induce_choice(),
            TeacherReport::Table(cf) => {
                if let Some(v) = cf.validate().violations().first() {
                    return Err(Error::SubstitutabilityViolation {
                        detail: format!("{:?} between offers {:?} and {:?}", v.property, v.offered, v.other),
                    });
                }
                Ok(cf.clone())
            }
        }
    }

    pub fn preference(&self) -> Option<&SubsetPreference> {
        match self {
            TeacherReport::Preference(p) => Some(p),
            TeacherReport::Table(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EconomyTeacher {
    pub id: TeacherId,
    pub label: Arc<str>,
    pub report: TeacherReport,
    choice: ChoiceFunction,
}

impl EconomyTeacher {
    pub fn choice(&self) -> &ChoiceFunction {
        &self.choice
    }
}

/// One period's roster and priorities; priorities index roster positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Period {
    pub roster: Vec<TeacherId>,
    pub priorities: PriorityProfile,
}

/// Teachers are identified by their position in the economy: `TeacherId(k)` is teacher `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Economy {
    schools: Arc<Schools>,
    teachers: Vec<EconomyTeacher>,
    periods: Vec<Period>,
    initial: Vec<SchoolSet>,
    mechanism: Mechanism,
}

/// Result of one period of a simulation.
#[derive(Clone, Debug)]
pub struct PeriodOutcome {
    /// 1-based.
    pub period: usize,
    pub problem: DynamicProblem,
    pub matching: Matching,
    pub run: MechanismRun,
}

#[derive(Clone, Debug)]
pub enum MechanismRun {
    Trda(DaTrace),
    Treada(TreadaLog),
    Cohort(Vec<TeacherSet>),
}

impl PeriodOutcome {
    /// Assignment of an economy teacher, `None` when absent this period.
    pub fn assignment_of(&self, id: TeacherId) -> Option<SchoolSet> {
        self.problem
            .position_of_id(id)
            .map(|k| self.matching.assignment(k))
    }
}

impl Economy {
    /// `initial` is `μ^0`, indexed by teacher.
    pub fn new(
        schools: Arc<Schools>,
        teachers: Vec<(String, TeacherReport)>,
        periods: Vec<Period>,
        initial: Vec<SchoolSet>,
        mechanism: Mechanism,
    ) -> Result<Self> {
        if teachers.len() > MAX_TEACHERS {
            return Err(Error::too_large(format!("{} teachers", teachers.len())));
        }
        let mut built = Vec::with_capacity(teachers.len());
        for (k, (label, report)) in teachers.into_iter().enumerate() {
            if built.iter().any(|t: &EconomyTeacher| *t.label == *label) {
                return Err(Error::invalid(format!("teacher `{label}` declared twice")));
            }
            let size = match &report {
                TeacherReport::Preference(p) => p.schools(),
                TeacherReport::Table(cf) => cf.schools(),
            };
            if size != schools.len() {
                return Err(Error::invalid(format!(
                    "report of `{label}` is over {size} schools, expected {}",
                    schools.len()
                )));
            }
            let choice = report.choice().map_err(|e| match e {
                Error::SubstitutabilityViolation { detail } => Error::SubstitutabilityViolation {
                    detail: format!("teacher `{label}`: {detail}"),
                },
                other => other,
            })?;
            built.push(EconomyTeacher {
                id: TeacherId(k as u32),
                label: label.into(),
                report,
                choice,
            });
        }
        if periods.is_empty() {
            return Err(Error::invalid("an economy needs at least one period"));
        }
        for (t, period) in periods.iter().enumerate() {
            for (k, id) in period.roster.iter().enumerate() {
                if id.0 as usize >= built.len() {
                    return Err(Error::UnknownAgent {
                        kind: "teacher",
                        name: id.to_string(),
                    });
                }
                if period.roster[..k].contains(id) {
                    return Err(Error::invalid(format!(
                        "teacher `{}` listed twice in period {}",
                        built[id.0 as usize].label,
                        t + 1
                    )));
                }
            }
            if period.priorities.teachers() != period.roster.len()
                || period.priorities.schools() != schools.len()
            {
                return Err(Error::invalid(format!(
                    "priorities of period {} do not match its roster and schools",
                    t + 1
                )));
            }
        }
        let views: Vec<PeriodPriorities<'_>> = periods
            .iter()
            .map(|p| PeriodPriorities {
                roster: &p.roster,
                priorities: &p.priorities,
            })
            .collect();
        let report = validate_priority_consistency(&views);
        if let Some(v) = report.violations().first() {
            return Err(Error::invalid(format!(
                "priorities of school `{}` order `{}` and `{}` differently in periods {} and {}",
                schools.label(v.school),
                built[v.first.0 as usize].label,
                built[v.second.0 as usize].label,
                v.periods.0 + 1,
                v.periods.1 + 1
            )));
        }
        if initial.len() != built.len() {
            return Err(Error::invalid("initial matching must list every teacher"));
        }
        let m0 = Matching::from_assignments(schools.len(), initial.clone());
        let m0_report = m0.validate(schools.quotas())?;
        if !m0_report.is_ok() {
            return Err(Error::invalid(format!(
                "initial matching is infeasible: {:?}",
                m0_report.violations()
            )));
        }
        if let Mechanism::Treada(Consent::Only(ids)) = &mechanism {
            if let Some(bad) = ids.iter().find(|id| id.0 as usize >= built.len()) {
                return Err(Error::UnknownAgent {
                    kind: "teacher",
                    name: bad.to_string(),
                });
            }
        }
        let economy = Economy {
            schools,
            teachers: built,
            periods,
            initial,
            mechanism,
        };
        economy.period_problem(0, &economy.truthful_choices(), &economy.initial, true)?;
        Ok(economy)
    }

    /// A single-period economy around one dynamic problem.
    pub fn from_problem(problem: &DynamicProblem, mechanism: Mechanism) -> Result<Self> {
        let teachers = problem
            .teachers()
            .iter()
            .zip(problem.choices())
            .map(|(t, cf)| (t.label.to_string(), TeacherReport::Table(cf.clone())))
            .collect();
        let roster = (0..problem.teacher_count()).map(|k| TeacherId(k as u32)).collect();
        Economy::new(
            problem.schools_arc().clone(),
            teachers,
            vec![Period {
                roster,
                priorities: problem.priorities().clone(),
            }],
            problem.previous().assignments().to_vec(),
            mechanism,
        )
    }

    pub fn schools(&self) -> &Schools {
        &self.schools
    }

    pub fn schools_arc(&self) -> &Arc<Schools> {
        &self.schools
    }

    pub fn teachers(&self) -> &[EconomyTeacher] {
        &self.teachers
    }

    pub fn teacher(&self, id: TeacherId) -> &EconomyTeacher {
        &self.teachers[id.0 as usize]
    }

    pub fn teacher_by_label(&self, label: &str) -> Option<TeacherId> {
        self.teachers.iter().find(|t| &*t.label == label).map(|t| t.id)
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn initial(&self) -> &[SchoolSet] {
        &self.initial
    }

    pub fn mechanism(&self) -> &Mechanism {
        &self.mechanism
    }

    pub fn with_mechanism(&self, mechanism: Mechanism) -> Self {
        Economy {
            mechanism,
            ..self.clone()
        }
    }

    pub fn truthful_choices(&self) -> Vec<ChoiceFunction> {
        self.teachers.iter().map(|t| t.choice.clone()).collect()
    }

    /// 0-based index of the first period listing `id`.
    pub fn entry_period(&self, id: TeacherId) -> Option<usize> {
        self.periods.iter().position(|p| p.roster.contains(&id))
    }

    /// 0-based indices of the periods listing `id`.
    pub fn presence(&self, id: TeacherId) -> Vec<usize> {
        (0..self.periods.len())
            .filter(|&t| self.periods[t].roster.contains(&id))
            .collect()
    }

    /// The first period as a dynamic problem under truthful reports.
    pub fn first_problem(&self) -> Result<DynamicProblem> {
        self.period_problem(0, &self.truthful_choices(), &self.initial, true)
    }

    fn period_problem(
        &self,
        t: usize,
        choices: &[ChoiceFunction],
        previous: &[SchoolSet],
        checked: bool,
    ) -> Result<DynamicProblem> {
        let period = &self.periods[t];
        let roster: Vec<Teacher> = period
            .roster
            .iter()
            .map(|id| Teacher {
                id: *id,
                label: self.teachers[id.0 as usize].label.clone(),
            })
            .collect();
        let cfs = period.roster.iter().map(|id| choices[id.0 as usize].clone()).collect();
        let prev = Matching::from_assignments(
            self.schools.len(),
            period.roster.iter().map(|id| previous[id.0 as usize]).collect(),
        );
        if checked {
            DynamicProblem::new(
                self.schools.clone(),
                roster,
                cfs,
                period.priorities.clone(),
                prev,
            )
        } else {
            Ok(DynamicProblem::new_unchecked(
                self.schools.clone(),
                roster,
                cfs,
                period.priorities.clone(),
                prev,
            ))
        }
    }

    fn consent_profile(&self, consent: &Consent, problem: &DynamicProblem) -> ConsentProfile {
        match consent {
            Consent::All => ConsentProfile::all(problem.teacher_count()),
            Consent::None => ConsentProfile::none(),
            Consent::Only(ids) => ConsentProfile::only(TeacherSet::from_indices(
                ids.iter().filter_map(|id| problem.position_of_id(*id)),
            )),
        }
    }

    // Employed teachers grouped by the period they first held a position, then everyone else.
    fn cohorts(&self, problem: &DynamicProblem, joined: &[Option<usize>]) -> Vec<TeacherSet> {
        let employed = problem.employed();
        let mut keys: Vec<usize> = employed
            .iter()
            .map(|k| joined[problem.teachers()[k].id.0 as usize].expect("employed teachers joined"))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let mut cohorts: Vec<TeacherSet> = keys
            .iter()
            .map(|&j| {
                TeacherSet::from_indices(
                    employed
                        .iter()
                        .filter(|&k| joined[problem.teachers()[k].id.0 as usize] == Some(j)),
                )
            })
            .collect();
        let rest = TeacherSet::full(problem.teacher_count()).difference(employed);
        if !rest.is_empty() {
            cohorts.push(rest);
        }
        cohorts
    }

    fn apply(
        &self,
        mechanism: &Mechanism,
        problem: &DynamicProblem,
        joined: &[Option<usize>],
    ) -> Result<(Matching, MechanismRun)> {
        match mechanism {
            Mechanism::Trda => {
                let (mu, trace) = run_trda(problem)?;
                Ok((mu, MechanismRun::Trda(trace)))
            }
            Mechanism::Treada(consent) => {
                let profile = self.consent_profile(consent, problem);
                let (mu, log) = run_treada(problem, &profile)?;
                Ok((mu, MechanismRun::Treada(log)))
            }
            Mechanism::Cohort => {
                let cohorts = self.cohorts(problem, joined);
                let mu = run_cohort_da(problem, &cohorts)?;
                Ok((mu, MechanismRun::Cohort(cohorts)))
            }
        }
    }

    /// Runs periods `0..horizon` under `choices`, which must already be path independent.
    fn run(
        &self,
        choices: &[ChoiceFunction],
        horizon: usize,
        mechanism: &Mechanism,
        require_lex: bool,
        mut visit: impl FnMut(usize, DynamicProblem, Matching, MechanismRun),
    ) -> Result<()> {
        let mut previous = self.initial.clone();
        let mut joined: Vec<Option<usize>> = self
            .initial
            .iter()
            .map(|s| (!s.is_empty()).then_some(0))
            .collect();
        for t in 0..horizon {
            let problem = self.period_problem(t, choices, &previous, t == 0)?;
            if require_lex {
                if let Some(v) = problem.priorities().tenure_violation(problem.employed()) {
                    return Err(Error::NotLexicographicByTenure {
                        school: self.schools.label(v.school).to_owned(),
                        employed: problem.label(v.employed).to_owned(),
                        entrant: problem.label(v.entrant).to_owned(),
                    });
                }
            }
            let (mu, run) = self.apply(mechanism, &problem, &joined)?;
            previous.iter_mut().for_each(|s| *s = SchoolSet::EMPTY);
            for (k, teacher) in problem.teachers().iter().enumerate() {
                let a = mu.assignment(k);
                previous[teacher.id.0 as usize] = a;
                let j = &mut joined[teacher.id.0 as usize];
                if j.is_none() && !a.is_empty() {
                    *j = Some(t + 1);
                }
            }
            visit(t, problem, mu, run);
        }
        Ok(())
    }

    /// Applies the economy's mechanism period by period under truthful reports.
    pub fn simulate(&self) -> Result<Vec<PeriodOutcome>> {
        self.simulate_with(&self.truthful_choices())
    }

    /// Simulation under other reported choice functions, one per economy teacher.
    pub fn simulate_with(&self, choices: &[ChoiceFunction]) -> Result<Vec<PeriodOutcome>> {
        self.check_choices(choices)?;
        let mut out = Vec::with_capacity(self.periods.len());
        self.run(choices, self.periods.len(), &self.mechanism, false, |t, problem, matching, run| {
            out.push(PeriodOutcome {
                period: t + 1,
                problem,
                matching,
                run,
            })
        })?;
        Ok(out)
    }

    fn check_choices(&self, choices: &[ChoiceFunction]) -> Result<()> {
        if choices.len() != self.teachers.len() {
            return Err(Error::invalid("one report per economy teacher is required"));
        }
        for (t, cf) in self.teachers.iter().zip(choices) {
            if cf.schools() != self.schools.len() || !cf.is_path_independent() {
                return Err(Error::SubstitutabilityViolation {
                    detail: format!("report of `{}`", t.label),
                });
            }
        }
        Ok(())
    }

    /// Per period `0..horizon`, each economy teacher's assignment (`None` when absent).
    fn assignment_path(
        &self,
        choices: &[ChoiceFunction],
        horizon: usize,
        mechanism: &Mechanism,
        require_lex: bool,
    ) -> Result<Vec<Vec<Option<SchoolSet>>>> {
        let mut out = Vec::with_capacity(horizon);
        self.run(choices, horizon, mechanism, require_lex, |_, problem, mu, _| {
            let mut row = vec![None; self.teachers.len()];
            for (k, t) in problem.teachers().iter().enumerate() {
                row[t.id.0 as usize] = Some(mu.assignment(k));
            }
            out.push(row);
        })?;
        Ok(out)
    }
}

/// A co-report profile: reports of some teachers; everyone else reports truthfully.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoProfile {
    pub label: String,
    pub reports: Vec<(TeacherId, SubsetPreference)>,
}

impl CoProfile {
    pub fn truthful() -> Self {
        CoProfile {
            label: "truthful".into(),
            reports: Vec::new(),
        }
    }
}

/// The reports other teachers may submit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AdversaryDomain {
    /// Every substitutable preference, deduplicated by induced choice function (at most three
    /// schools).
    Exhaustive,
    /// Every other teacher independently reports any member of this set.
    Product(Vec<SubsetPreference>),
    /// Exactly these co-report profiles.
    Profiles(Vec<CoProfile>),
    /// `samples` profiles drawn uniformly from the exhaustive domain (or from a random
    /// substitutable generator beyond three schools).
    Sampled { seed: u64, samples: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Coverage {
    /// The full substitutable domain.
    Exhaustive,
    /// An explicit finite domain.
    Explicit,
    /// A seeded sample; absence of findings is not proof.
    Sampled { seed: u64 },
}

/// Outcomes available to a teacher in one period as co-reports range over a domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptionSet {
    pub teacher: TeacherId,
    /// 1-based.
    pub period: usize,
    /// Sorted by subset bits, without duplicates.
    pub outcomes: Vec<SchoolSet>,
    pub coverage: Coverage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Obviousness {
    NotObvious,
    ObviousByWorst,
    ObviousByBest,
}

/// Co-reports of every other relevant teacher in a witnessing profile.
pub type CoReports = Vec<(TeacherId, TeacherReport)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    /// Profile where the misreport beats truth-telling.
    pub gain: CoReports,
    pub worst_truthful: CoReports,
    pub worst_misreport: CoReports,
    pub best_truthful: CoReports,
    pub best_misreport: CoReports,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManipulationFinding {
    pub teacher: TeacherId,
    pub truth: SubsetPreference,
    pub misreport: SubsetPreference,
    /// 1-based period of the gain and of the worst/best comparison.
    pub period: usize,
    pub gained: SchoolSet,
    pub truthful: SchoolSet,
    /// `(truthful, misreport)` worst outcomes under the true preference.
    pub worst: (SchoolSet, SchoolSet),
    /// `(truthful, misreport)` best outcomes under the true preference.
    pub best: (SchoolSet, SchoolSet),
    pub obviousness: Obviousness,
    pub coverage: Coverage,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManipulationReport {
    pub teacher: TeacherId,
    pub coverage: Coverage,
    pub profiles: u64,
    pub misreports: usize,
    /// Every dynamic manipulation found, obvious or not.
    pub findings: Vec<ManipulationFinding>,
}

impl ManipulationReport {
    pub fn obvious(&self) -> impl Iterator<Item = &ManipulationFinding> {
        self.findings
            .iter()
            .filter(|f| f.obviousness != Obviousness::NotObvious)
    }

    pub fn has_obvious(&self) -> bool {
        self.obvious().next().is_some()
    }
}

#[derive(Clone, Debug)]
struct Candidate {
    report: TeacherReport,
    choice: ChoiceFunction,
}

/// Co-report space over `others`: either the full product of per-teacher candidates or an
/// explicit list of candidate indices.
struct ProfileSpace {
    others: Vec<TeacherId>,
    candidates: Vec<Vec<Candidate>>,
    explicit: Option<Vec<Vec<usize>>>,
    coverage: Coverage,
}

impl ProfileSpace {
    fn len(&self) -> u64 {
        match &self.explicit {
            Some(list) => list.len() as u64,
            None => self.candidates.iter().map(|c| c.len() as u64).product(),
        }
    }

    fn digits(&self, mut index: u64) -> Vec<usize> {
        match &self.explicit {
            Some(list) => list[index as usize].clone(),
            None => self
                .candidates
                .iter()
                .map(|c| {
                    let k = c.len() as u64;
                    let d = (index % k) as usize;
                    index /= k;
                    d
                })
                .collect(),
        }
    }

    fn co_reports(&self, digits: &[usize]) -> CoReports {
        self.others
            .iter()
            .zip(digits)
            .zip(&self.candidates)
            .map(|((id, &d), c)| (*id, c[d].report.clone()))
            .collect()
    }
}

fn candidate(pref: &SubsetPreference, cf: ChoiceFunction) -> Candidate {
    Candidate {
        report: TeacherReport::Preference(pref.clone()),
        choice: cf,
    }
}

fn resolve_space(
    economy: &Economy,
    others: Vec<TeacherId>,
    domain: &AdversaryDomain,
) -> Result<ProfileSpace> {
    let m = economy.schools().len();
    let truthful = |id: TeacherId| Candidate {
        report: economy.teacher(id).report.clone(),
        choice: economy.teacher(id).choice.clone(),
    };
    let space = match domain {
        AdversaryDomain::Exhaustive => {
            let d = exhaustive_domain(m)?;
            let all: Vec<Candidate> = (0..d.class_count())
                .map(|c| candidate(d.representative(c), d.choices[c].clone()))
                .collect();
            let candidates = vec![all; others.len()];
            ProfileSpace {
                others,
                candidates,
                explicit: None,
                coverage: Coverage::Exhaustive,
            }
        }
        AdversaryDomain::Product(prefs) => {
            let mut pool = Vec::with_capacity(prefs.len());
            for p in prefs {
                if p.schools() != m {
                    return Err(Error::invalid("adversary preference over the wrong schools"));
                }
                pool.push(candidate(p, p.induce_choice()?));
            }
            if pool.is_empty() {
                return Err(Error::invalid("empty adversary domain"));
            }
            let candidates = vec![pool; others.len()];
            ProfileSpace {
                others,
                candidates,
                explicit: None,
                coverage: Coverage::Explicit,
            }
        }
        AdversaryDomain::Profiles(profiles) => {
            let mut candidates: Vec<Vec<Candidate>> =
                others.iter().map(|&id| vec![truthful(id)]).collect();
            let mut explicit = Vec::with_capacity(profiles.len());
            for profile in profiles {
                let mut digits = vec![0; others.len()];
                for (id, pref) in &profile.reports {
                    let Some(slot) = others.iter().position(|o| o == id) else {
                        continue;
                    };
                    if pref.schools() != m {
                        return Err(Error::invalid("adversary preference over the wrong schools"));
                    }
                    let cand = candidate(pref, pref.induce_choice()?);
                    let list = &mut candidates[slot];
                    let d = match list
                        .iter()
                        .position(|c| c.report == cand.report)
                    {
                        Some(d) => d,
                        None => {
                            list.push(cand);
                            list.len() - 1
                        }
                    };
                    digits[slot] = d;
                }
                explicit.push(digits);
            }
            ProfileSpace {
                others,
                candidates,
                explicit: Some(explicit),
                coverage: Coverage::Explicit,
            }
        }
        AdversaryDomain::Sampled { seed, samples } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut candidates: Vec<Vec<Candidate>> = Vec::with_capacity(others.len());
            let mut explicit = vec![Vec::with_capacity(others.len()); *samples];
            for _ in &others {
                let mut list: Vec<Candidate> = Vec::new();
                for row in explicit.iter_mut() {
                    let cand = if m <= EXHAUSTIVE_MAX_SCHOOLS {
                        let d = exhaustive_domain(m)?;
                        let c = rng.gen_range(0..d.class_count());
                        candidate(d.representative(c), d.choices[c].clone())
                    } else {
                        let p = random_substitutable_preference(m, &mut rng);
                        let cf = p.induce_choice_unchecked();
                        candidate(&p, cf)
                    };
                    let d = match list.iter().position(|c| c.report == cand.report) {
                        Some(d) => d,
                        None => {
                            list.push(cand);
                            list.len() - 1
                        }
                    };
                    row.push(d);
                }
                candidates.push(list);
            }
            ProfileSpace {
                others,
                candidates,
                explicit: Some(explicit),
                coverage: Coverage::Sampled { seed: *seed },
            }
        }
    };
    let len = space.len();
    if len > MAX_PROFILES {
        return Err(Error::too_large(format!(
            "{len} co-report profiles exceed the cap of {MAX_PROFILES}"
        )));
    }
    Ok(space)
}

/// Teachers other than `teacher` who appear in periods `0..horizon`.
fn co_reporters(economy: &Economy, teacher: TeacherId, horizon: usize) -> Vec<TeacherId> {
    economy
        .teachers()
        .iter()
        .map(|t| t.id)
        .filter(|&id| id != teacher && economy.periods()[..horizon].iter().any(|p| p.roster.contains(&id)))
        .collect()
}

/// For each profile, the teacher's assignment in each period of `periods` (0-based).
fn outcome_table(
    economy: &Economy,
    space: &ProfileSpace,
    teacher: TeacherId,
    report: &ChoiceFunction,
    periods: &[usize],
    exec: Execution,
) -> Result<Vec<Vec<SchoolSet>>> {
    let horizon = periods.iter().max().map_or(0, |t| t + 1);
    let rows = par::map_range(exec, space.len() as usize, |p| {
        let digits = space.digits(p as u64);
        let mut choices = economy.truthful_choices();
        choices[teacher.0 as usize] = report.clone();
        for ((id, &d), c) in space.others.iter().zip(&digits).zip(&space.candidates) {
            choices[id.0 as usize] = c[d].choice.clone();
        }
        let path = economy.assignment_path(&choices, horizon, economy.mechanism(), false)?;
        Ok(periods
            .iter()
            .map(|&t| path[t][teacher.0 as usize].expect("teacher present"))
            .collect())
    });
    rows.into_iter().collect()
}

fn preference_of(economy: &Economy, teacher: TeacherId) -> Result<&SubsetPreference> {
    economy.teacher(teacher).report.preference().ok_or_else(|| {
        Error::invalid(format!(
            "teacher `{}` reports a choice table; manipulation analysis needs a preference",
            economy.teacher(teacher).label
        ))
    })
}

/// The option set left open by `report` for `teacher` in 1-based `period`.
pub fn option_set(
    economy: &Economy,
    teacher: TeacherId,
    report: &SubsetPreference,
    period: usize,
    domain: &AdversaryDomain,
    exec: Execution,
) -> Result<OptionSet> {
    if period == 0
        || period > economy.periods().len()
        || !economy.periods()[period - 1].roster.contains(&teacher)
    {
        return Err(Error::invalid(format!(
            "teacher `{}` is not present in period {period}",
            economy.teacher(teacher).label
        )));
    }
    let space = resolve_space(economy, co_reporters(economy, teacher, period), domain)?;
    let cf = report.induce_choice()?;
    let table = outcome_table(economy, &space, teacher, &cf, &[period - 1], exec)?;
    let mut outcomes: Vec<SchoolSet> = table.into_iter().map(|row| row[0]).collect();
    outcomes.sort_unstable_by_key(|s| s.bits());
    outcomes.dedup();
    Ok(OptionSet {
        teacher,
        period,
        outcomes,
        coverage: space.coverage,
    })
}

/// Class representatives of the exhaustive domain that differ from the teacher's truthful choice
/// function.
pub fn exhaustive_misreports(economy: &Economy, teacher: TeacherId) -> Result<Vec<SubsetPreference>> {
    let d = exhaustive_domain(economy.schools().len())?;
    let truth = economy.teacher(teacher).choice();
    Ok((0..d.class_count())
        .filter(|&c| d.choices[c] != *truth)
        .map(|c| d.representative(c).clone())
        .collect())
}

/// `count` distinct seeded random misreports.
pub fn sampled_misreports(
    economy: &Economy,
    teacher: TeacherId,
    seed: u64,
    count: usize,
) -> Vec<SubsetPreference> {
    let m = economy.schools().len();
    let truth = economy.teacher(teacher).report.preference();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut out: Vec<SubsetPreference> = Vec::with_capacity(count);
    for _ in 0..count.saturating_mul(50) {
        if out.len() == count {
            break;
        }
        let p = random_substitutable_preference(m, &mut rng);
        if truth != Some(&p) && !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// Searches for dynamic manipulations by `teacher` and classifies their obviousness.
///
/// Every period from entry on in which the teacher is present is a candidate gain period; worst
/// and best outcomes are compared in that same period under the teacher's true preference.
pub fn find_obvious_manipulations(
    economy: &Economy,
    teacher: TeacherId,
    misreports: &[SubsetPreference],
    adversary: &AdversaryDomain,
    exec: Execution,
) -> Result<ManipulationReport> {
    let truth = preference_of(economy, teacher)?.clone();
    let periods = economy.presence(teacher);
    let Some(&last) = periods.last() else {
        return Err(Error::invalid("teacher never present"));
    };
    let space = resolve_space(economy, co_reporters(economy, teacher, last + 1), adversary)?;
    let truthful = outcome_table(economy, &space, teacher, economy.teacher(teacher).choice(), &periods, exec)?;
    let mut findings = Vec::new();
    let mut evaluated = 0;
    for misreport in misreports {
        if *misreport == truth {
            continue;
        }
        if misreport.schools() != economy.schools().len() {
            return Err(Error::invalid("misreport over the wrong schools"));
        }
        let cf = misreport.induce_choice()?;
        evaluated += 1;
        let lied = outcome_table(economy, &space, teacher, &cf, &periods, exec)?;
        for (k, &t) in periods.iter().enumerate() {
            let Some(gain) = (0..lied.len()).find(|&p| truth.prefers(lied[p][k], truthful[p][k]))
            else {
                continue;
            };
            let key = |rows: &Vec<Vec<SchoolSet>>, p: usize| truth.rank_key(rows[p][k]);
            let worst = |rows: &Vec<Vec<SchoolSet>>| {
                (0..rows.len()).max_by_key(|&p| (key(rows, p), std::cmp::Reverse(p))).expect("nonempty")
            };
            let best = |rows: &Vec<Vec<SchoolSet>>| {
                (0..rows.len()).min_by_key(|&p| (key(rows, p), p)).expect("nonempty")
            };
            let (wt, wm, bt, bm) = (worst(&truthful), worst(&lied), best(&truthful), best(&lied));
            let obviousness = if key(&lied, wm) < key(&truthful, wt) {
                Obviousness::ObviousByWorst
            } else if key(&lied, bm) < key(&truthful, bt) {
                Obviousness::ObviousByBest
            } else {
                Obviousness::NotObvious
            };
            let reports = |p: usize| space.co_reports(&space.digits(p as u64));
            findings.push(ManipulationFinding {
                teacher,
                truth: truth.clone(),
                misreport: misreport.clone(),
                period: t + 1,
                gained: lied[gain][k],
                truthful: truthful[gain][k],
                worst: (truthful[wt][k], lied[wm][k]),
                best: (truthful[bt][k], lied[bm][k]),
                obviousness,
                coverage: space.coverage,
                certificate: Certificate {
                    gain: reports(gain),
                    worst_truthful: reports(wt),
                    worst_misreport: reports(wm),
                    best_truthful: reports(bt),
                    best_misreport: reports(bm),
                },
            });
        }
    }
    Ok(ManipulationReport {
        teacher,
        coverage: space.coverage,
        profiles: space.len(),
        misreports: evaluated,
        findings,
    })
}

/// An obvious dynamic manipulation found by [`exhaustive_obviousness_sweep`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepWitness {
    pub teacher: TeacherId,
    pub truth: SubsetPreference,
    pub misreport: SubsetPreference,
    pub period: usize,
    pub obviousness: Obviousness,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepSummary {
    pub profiles: u64,
    /// Profiles left out because some period's priorities stop being lexicographic by tenure.
    pub excluded: u64,
    /// `(teacher, true preference, misreport class, period)` comparisons made.
    pub comparisons: u64,
    pub obvious: u64,
    pub witnesses: Vec<SweepWitness>,
}

const ABSENT: u16 = u16::MAX;

/// Checks every teacher, every true substitutable preference and every misreport class for an
/// obvious dynamic manipulation, with all co-reports ranging over the exhaustive domain.
///
/// Option sets depend only on induced choice functions, so the simulation table is built once
/// over class profiles and every true preference is then checked against it. With
/// `require_lex`, profiles under which some period's priorities are not lexicographic by tenure
/// are left out of every option set.
pub fn exhaustive_obviousness_sweep(
    economy: &Economy,
    require_lex: bool,
    exec: Execution,
) -> Result<SweepSummary> {
    let m = economy.schools().len();
    let domain = exhaustive_domain(m)?;
    let horizon = economy.periods().len();
    let participants: Vec<TeacherId> = economy
        .teachers()
        .iter()
        .map(|t| t.id)
        .filter(|&id| economy.entry_period(id).is_some())
        .collect();
    let classes: Vec<Vec<usize>> = vec![(0..domain.class_count()).collect(); participants.len()];
    let total: u64 = classes.iter().map(|c| c.len() as u64).product();
    if total > MAX_PROFILES {
        return Err(Error::too_large(format!(
            "{total} report profiles exceed the cap of {MAX_PROFILES}"
        )));
    }
    let k = participants.len();
    let width = k * horizon;
    let rows: Vec<Result<Option<Vec<u16>>>> = par::map_range(exec, total as usize, |p| {
        let mut index = p as u64;
        let mut choices = economy.truthful_choices();
        for (j, id) in participants.iter().enumerate() {
            let n = classes[j].len() as u64;
            choices[id.0 as usize] = domain.choices[classes[j][(index % n) as usize]].clone();
            index /= n;
        }
        let path = match economy.assignment_path(&choices, horizon, economy.mechanism(), require_lex) {
            Ok(path) => path,
            Err(Error::NotLexicographicByTenure { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let mut row = vec![ABSENT; width];
        for (j, id) in participants.iter().enumerate() {
            for t in 0..horizon {
                if let Some(s) = path[t][id.0 as usize] {
                    row[j * horizon + t] = s.bits();
                }
            }
        }
        Ok(Some(row))
    });
    // options[j][class slot][t]: bitmask over the 2^m subsets reached.
    let mut options = vec![Vec::new(); k];
    for (j, slots) in classes.iter().enumerate() {
        options[j] = vec![vec![0u64; horizon]; slots.len()];
    }
    let mut excluded = 0;
    for (p, row) in rows.into_iter().enumerate() {
        let Some(row) = row? else {
            excluded += 1;
            continue;
        };
        let mut index = p as u64;
        for j in 0..k {
            let n = classes[j].len() as u64;
            let slot = (index % n) as usize;
            index /= n;
            for t in 0..horizon {
                let bits = row[j * horizon + t];
                if bits != ABSENT {
                    options[j][slot][t] |= 1 << bits;
                }
            }
        }
    }

    let mut summary = SweepSummary {
        profiles: total,
        excluded,
        ..SweepSummary::default()
    };
    let subsets = 1usize << m;
    for (j, &id) in participants.iter().enumerate() {
        let present = economy.presence(id);
        for (pi, truth) in domain.preferences.iter().enumerate() {
            let Some(own) = classes[j].iter().position(|&c| c == domain.class_of[pi]) else {
                continue;
            };
            let keys: Vec<usize> = (0..subsets)
                .map(|b| truth.rank_key(SchoolSet::from_bits(b as u16)))
                .collect();
            let extremes = |mask: u64| {
                let mut worst = 0;
                let mut best = usize::MAX;
                for (b, &key) in keys.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        worst = worst.max(key);
                        best = best.min(key);
                    }
                }
                (worst, best)
            };
            for &t in &present {
                let (worst_truth, best_truth) = extremes(options[j][own][t]);
                for (slot, &class) in classes[j].iter().enumerate() {
                    if slot == own {
                        continue;
                    }
                    if options[j][own][t] == 0 || options[j][slot][t] == 0 {
                        continue;
                    }
                    summary.comparisons += 1;
                    let (worst_lie, best_lie) = extremes(options[j][slot][t]);
                    let verdict = if worst_lie < worst_truth {
                        Obviousness::ObviousByWorst
                    } else if best_lie < best_truth {
                        Obviousness::ObviousByBest
                    } else {
                        continue;
                    };
                    summary.obvious += 1;
                    if summary.witnesses.len() < 16 {
                        summary.witnesses.push(SweepWitness {
                            teacher: id,
                            truth: truth.clone(),
                            misreport: domain.representative(class).clone(),
                            period: t + 1,
                            obviousness: verdict,
                        });
                    }
                }
            }
        }
    }
    Ok(summary)
}
