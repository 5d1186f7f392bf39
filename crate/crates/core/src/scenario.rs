//! Scenario documents (JSON) and canonical serialization of traces and reports.
//!
//! School sets are written as arrays of school labels in school order. Output keys are sorted
//! and pretty-printed with a trailing newline, so equal objects serialize to equal bytes.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::audit::{Claim, EfficiencyVerdict, StabilityVerdict};
use crate::choice::ChoiceFunction;
use crate::da::DaTrace;
use crate::economy::{
    Certificate, CoProfile, CoReports, Consent, Coverage, Economy, ManipulationFinding,
    ManipulationReport, Mechanism, MechanismRun, Obviousness, PeriodOutcome, Period, TeacherReport,
};
use crate::error::Error;
use crate::model::{Matching, Schools, TeacherId};
use crate::preference::SubsetPreference;
use crate::priority::PriorityProfile;
use crate::problem::DynamicProblem;
use crate::set::{SchoolSet, TeacherSet};
use crate::treada::TreadaLog;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema version {found} is not supported (expected {expected})")]
    SchemaVersionMismatch { found: u32, expected: u32 },
    #[error("{path}: {source}")]
    Validation {
        path: String,
        #[source]
        source: Error,
    },
}

fn at(path: impl Into<String>) -> impl FnOnce(Error) -> ScenarioError {
    let path = path.into();
    move |source| ScenarioError::Validation { path, source }
}

fn invalid(path: impl Into<String>, detail: impl Into<String>) -> ScenarioError {
    at(path)(Error::Invalid {
        detail: detail.into(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchoolDoc {
    label: String,
    quota: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowDoc {
    offered: Vec<String>,
    chosen: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TeacherDoc {
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preference: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    choice_table: Option<Vec<RowDoc>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrderDoc {
    school: String,
    order: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodDoc {
    roster: Vec<String>,
    priorities: Vec<OrderDoc>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum MechanismKind {
    #[default]
    Trda,
    Treada,
    Cohort,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum ConsentDoc {
    Keyword(String),
    List(Vec<String>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MechanismDoc {
    kind: MechanismKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    consent: Option<ConsentDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    label: String,
    reports: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpectationsDoc {
    /// Per period, the expected assignment of every roster member.
    matchings: Vec<BTreeMap<String, Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    schools: Vec<SchoolDoc>,
    teachers: Vec<TeacherDoc>,
    #[serde(default)]
    initial_matching: BTreeMap<String, Vec<String>>,
    periods: Vec<PeriodDoc>,
    #[serde(default)]
    mechanism: MechanismDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    adversary_profiles: Vec<ProfileDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expectations: Option<ExpectationsDoc>,
}

/// A parsed and fully validated scenario.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub name: Option<String>,
    pub economy: Economy,
    pub adversary_profiles: Vec<CoProfile>,
    /// Per period, expected `(teacher, assignment)` for every roster member.
    pub expected_matchings: Option<Vec<Vec<(TeacherId, SchoolSet)>>>,
}

struct Labels<'a> {
    schools: &'a Schools,
    teachers: &'a [String],
}

impl Labels<'_> {
    fn school_set(&self, path: &str, labels: &[String]) -> Result<SchoolSet, ScenarioError> {
        let mut set = SchoolSet::EMPTY;
        for (k, label) in labels.iter().enumerate() {
            let s = self.schools.index_of(label).ok_or_else(|| {
                at(format!("{path}[{k}]"))(Error::UnknownAgent {
                    kind: "school",
                    name: label.clone(),
                })
            })?;
            if set.contains(s) {
                return Err(invalid(format!("{path}[{k}]"), format!("school `{label}` repeated")));
            }
            set = set.with(s);
        }
        Ok(set)
    }

    fn teacher(&self, path: &str, label: &str) -> Result<TeacherId, ScenarioError> {
        self.teachers
            .iter()
            .position(|t| t == label)
            .map(|k| TeacherId(k as u32))
            .ok_or_else(|| {
                at(path)(Error::UnknownAgent {
                    kind: "teacher",
                    name: label.to_owned(),
                })
            })
    }

    fn preference(&self, path: &str, ranked: &[Vec<String>]) -> Result<SubsetPreference, ScenarioError> {
        let sets = ranked
            .iter()
            .enumerate()
            .map(|(k, labels)| self.school_set(&format!("{path}[{k}]"), labels))
            .collect::<Result<Vec<_>, _>>()?;
        let m = self.schools.len();
        let pref = if sets.contains(&SchoolSet::EMPTY) {
            SubsetPreference::new(m, sets)
        } else {
            SubsetPreference::from_acceptable(m, sets)
        };
        let pref = pref.map_err(at(path))?;
        pref.induce_choice().map_err(at(path))?;
        Ok(pref)
    }
}

fn parse_error(e: &serde_json::Error) -> ScenarioError {
    ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: Value = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
    if let Some(v) = raw.get("schema_version").and_then(Value::as_u64) {
        if v != SCHEMA_VERSION as u64 {
            return Err(ScenarioError::SchemaVersionMismatch {
                found: v as u32,
                expected: SCHEMA_VERSION,
            });
        }
    }
    // Re-read from text so structural errors keep their line and column.
    let doc: Document = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
    from_document(doc)
}

fn from_document(doc: Document) -> Result<Scenario, ScenarioError> {
    let schools = Schools::new(
        doc.schools.iter().map(|s| s.label.clone()).collect(),
        doc.schools.iter().map(|s| s.quota).collect(),
    )
    .map_err(at("schools"))?;
    let m = schools.len();
    let teacher_labels: Vec<String> = doc.teachers.iter().map(|t| t.label.clone()).collect();
    let labels = Labels {
        schools: &schools,
        teachers: &teacher_labels,
    };

    let mut reports = Vec::with_capacity(doc.teachers.len());
    for (k, t) in doc.teachers.iter().enumerate() {
        let path = format!("teachers[{k}]");
        if teacher_labels[..k].contains(&t.label) {
            return Err(invalid(format!("{path}.label"), format!("teacher `{}` declared twice", t.label)));
        }
        let report = match (&t.preference, &t.choice_table) {
            (Some(p), None) => TeacherReport::Preference(labels.preference(&format!("{path}.preference"), p)?),
            (None, Some(rows)) => {
                let tpath = format!("{path}.choice_table");
                let mut table: Vec<Option<SchoolSet>> = vec![None; 1 << m];
                for (r, row) in rows.iter().enumerate() {
                    let offered = labels.school_set(&format!("{tpath}[{r}].offered"), &row.offered)?;
                    let chosen = labels.school_set(&format!("{tpath}[{r}].chosen"), &row.chosen)?;
                    if table[offered.index()].replace(chosen).is_some() {
                        return Err(invalid(format!("{tpath}[{r}]"), "offer listed twice"));
                    }
                }
                if let Some(missing) = table.iter().position(Option::is_none) {
                    return Err(invalid(
                        tpath,
                        format!(
                            "all {} rows are required; missing offer {:?}",
                            1 << m,
                            schools.set_labels(SchoolSet::from_bits(missing as u16))
                        ),
                    ));
                }
                let cf = ChoiceFunction::from_table(m, table.into_iter().map(Option::unwrap).collect())
                    .map_err(at(tpath.clone()))?;
                let report = TeacherReport::Table(cf);
                report.choice().map_err(at(tpath))?;
                report
            }
            _ => {
                return Err(invalid(path, "exactly one of `preference` and `choice_table` is required"));
            }
        };
        reports.push((t.label.clone(), report));
    }

    let mut initial = vec![SchoolSet::EMPTY; teacher_labels.len()];
    for (label, held) in &doc.initial_matching {
        let path = format!("initial_matching.{label}");
        let id = labels.teacher(&path, label)?;
        initial[id.0 as usize] = labels.school_set(&path, held)?;
    }

    let mut periods = Vec::with_capacity(doc.periods.len());
    for (t, p) in doc.periods.iter().enumerate() {
        let path = format!("periods[{t}]");
        let roster = p
            .roster
            .iter()
            .enumerate()
            .map(|(k, l)| labels.teacher(&format!("{path}.roster[{k}]"), l))
            .collect::<Result<Vec<_>, _>>()?;
        let mut orders: Vec<Option<Vec<usize>>> = vec![None; m];
        for (k, o) in p.priorities.iter().enumerate() {
            let opath = format!("{path}.priorities[{k}]");
            let s = schools.index_of(&o.school).ok_or_else(|| {
                at(format!("{opath}.school"))(Error::UnknownAgent {
                    kind: "school",
                    name: o.school.clone(),
                })
            })?;
            let mut order = Vec::with_capacity(o.order.len());
            for (r, l) in o.order.iter().enumerate() {
                let id = labels.teacher(&format!("{opath}.order[{r}]"), l)?;
                let pos = roster.iter().position(|x| *x == id).ok_or_else(|| {
                    invalid(format!("{opath}.order[{r}]"), format!("teacher `{l}` is not on the roster"))
                })?;
                if order.contains(&pos) {
                    return Err(invalid(format!("{opath}.order[{r}]"), format!("teacher `{l}` ranked twice")));
                }
                order.push(pos);
            }
            if let Some(missing) = (0..roster.len()).find(|x| !order.contains(x)) {
                return Err(invalid(
                    format!("{opath}.order"),
                    format!(
                        "school `{}` does not rank teacher `{}`",
                        o.school, teacher_labels[roster[missing].0 as usize]
                    ),
                ));
            }
            if orders[s].replace(order).is_some() {
                return Err(invalid(opath, format!("school `{}` listed twice", o.school)));
            }
        }
        if let Some(s) = orders.iter().position(Option::is_none) {
            return Err(invalid(
                format!("{path}.priorities"),
                format!("no priority order for school `{}`", schools.label(s)),
            ));
        }
        let priorities = PriorityProfile::new(roster.len(), orders.into_iter().map(Option::unwrap).collect())
            .map_err(at(format!("{path}.priorities")))?;
        periods.push(Period { roster, priorities });
    }

    let consent = match &doc.mechanism.consent {
        None => Consent::All,
        Some(ConsentDoc::Keyword(k)) if k == "all" => Consent::All,
        Some(ConsentDoc::Keyword(k)) if k == "none" => Consent::None,
        Some(ConsentDoc::Keyword(k)) => {
            return Err(invalid("mechanism.consent", format!("expected `all`, `none` or a list, got `{k}`")));
        }
        Some(ConsentDoc::List(list)) => Consent::Only(
            list.iter()
                .enumerate()
                .map(|(k, l)| labels.teacher(&format!("mechanism.consent[{k}]"), l))
                .collect::<Result<_, _>>()?,
        ),
    };
    let mechanism = match doc.mechanism.kind {
        MechanismKind::Trda => Mechanism::Trda,
        MechanismKind::Treada => Mechanism::Treada(consent),
        MechanismKind::Cohort => Mechanism::Cohort,
    };

    let mut adversary_profiles = Vec::with_capacity(doc.adversary_profiles.len());
    for (k, p) in doc.adversary_profiles.iter().enumerate() {
        let mut reports = Vec::with_capacity(p.reports.len());
        for (label, ranked) in &p.reports {
            let path = format!("adversary_profiles[{k}].reports.{label}");
            let id = labels.teacher(&path, label)?;
            reports.push((id, labels.preference(&path, ranked)?));
        }
        reports.sort_by_key(|(id, _)| *id);
        adversary_profiles.push(CoProfile {
            label: p.label.clone(),
            reports,
        });
    }

    let expected_matchings = match &doc.expectations {
        None => None,
        Some(e) => {
            let mut out = Vec::with_capacity(e.matchings.len());
            for (t, period) in e.matchings.iter().enumerate() {
                let mut row = Vec::with_capacity(period.len());
                for (label, held) in period {
                    let path = format!("expectations.matchings[{t}].{label}");
                    row.push((labels.teacher(&path, label)?, labels.school_set(&path, held)?));
                }
                row.sort_by_key(|(id, _)| *id);
                out.push(row);
            }
            Some(out)
        }
    };

    let economy = Economy::new(Arc::new(schools), reports, periods, initial, mechanism).map_err(|e| {
        let path = match &e {
            Error::QuotaExceededByTenure { .. } => "initial_matching",
            Error::NotLexicographicByTenure { .. } => "periods",
            Error::Invalid { detail } if detail.contains("priorities") => "periods",
            Error::Invalid { detail } if detail.contains("initial") => "initial_matching",
            _ => "",
        };
        at(path)(e)
    })?;
    Ok(Scenario {
        name: doc.name,
        economy,
        adversary_profiles,
        expected_matchings,
    })
}

fn set_labels(schools: &Schools, set: SchoolSet) -> Vec<String> {
    schools.set_labels(set)
}

fn preference_doc(schools: &Schools, pref: &SubsetPreference) -> Vec<Vec<String>> {
    let ranking = pref.ranking();
    let cut = ranking.iter().position(|s| s.is_empty()).expect("ranking contains the empty set");
    let shown = if cut + 1 == ranking.len() { &ranking[..cut] } else { ranking };
    shown.iter().map(|s| set_labels(schools, *s)).collect()
}

fn teacher_label(economy: &Economy, id: TeacherId) -> String {
    economy.teacher(id).label.to_string()
}

impl Scenario {
    /// Every teacher's reports and the economy's periods as a single dynamic problem; valid
    /// only for single-period scenarios.
    pub fn problem(&self) -> crate::error::Result<DynamicProblem> {
        self.economy.first_problem()
    }

    /// Mismatches between a simulation and the expected matchings.
    pub fn check_expectations(&self, outcomes: &[PeriodOutcome]) -> Vec<String> {
        let Some(expected) = &self.expected_matchings else {
            return Vec::new();
        };
        let schools = self.economy.schools();
        let mut out = Vec::new();
        if expected.len() != outcomes.len() {
            out.push(format!("expected {} periods, simulated {}", expected.len(), outcomes.len()));
        }
        for (t, (want, got)) in expected.iter().zip(outcomes).enumerate() {
            for &(id, set) in want {
                let actual = got.assignment_of(id);
                if actual != Some(set) {
                    out.push(format!(
                        "period {}: `{}` expected {:?}, got {:?}",
                        t + 1,
                        teacher_label(&self.economy, id),
                        set_labels(schools, set),
                        actual.map(|a| set_labels(schools, a))
                    ));
                }
            }
        }
        out
    }

    fn to_document(&self) -> Document {
        let e = &self.economy;
        let schools = e.schools();
        let teachers = e
            .teachers()
            .iter()
            .map(|t| match &t.report {
                TeacherReport::Preference(p) => TeacherDoc {
                    label: t.label.to_string(),
                    preference: Some(preference_doc(schools, p)),
                    choice_table: None,
                },
                TeacherReport::Table(cf) => TeacherDoc {
                    label: t.label.to_string(),
                    preference: None,
                    choice_table: Some(
                        SchoolSet::full(schools.len())
                            .subsets()
                            .map(|a| RowDoc {
                                offered: set_labels(schools, a),
                                chosen: set_labels(schools, cf.choose(a)),
                            })
                            .collect(),
                    ),
                },
            })
            .collect();
        let initial_matching = e
            .initial()
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.is_empty())
            .map(|(k, s)| (teacher_label(e, TeacherId(k as u32)), set_labels(schools, *s)))
            .collect();
        let periods = e
            .periods()
            .iter()
            .map(|p| PeriodDoc {
                roster: p.roster.iter().map(|id| teacher_label(e, *id)).collect(),
                priorities: (0..schools.len())
                    .map(|s| OrderDoc {
                        school: schools.label(s).to_owned(),
                        order: p
                            .priorities
                            .order(s)
                            .iter()
                            .map(|&k| teacher_label(e, p.roster[k]))
                            .collect(),
                    })
                    .collect(),
            })
            .collect();
        let consent_doc = |c: &Consent| match c {
            Consent::All => None,
            Consent::None => Some(ConsentDoc::Keyword("none".into())),
            Consent::Only(ids) => Some(ConsentDoc::List(ids.iter().map(|id| teacher_label(e, *id)).collect())),
        };
        let mechanism = match e.mechanism() {
            Mechanism::Trda => MechanismDoc::default(),
            Mechanism::Treada(c) => MechanismDoc {
                kind: MechanismKind::Treada,
                consent: consent_doc(c),
            },
            Mechanism::Cohort => MechanismDoc {
                kind: MechanismKind::Cohort,
                consent: None,
            },
        };
        Document {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            schools: (0..schools.len())
                .map(|s| SchoolDoc {
                    label: schools.label(s).to_owned(),
                    quota: schools.quota(s),
                })
                .collect(),
            teachers,
            initial_matching,
            periods,
            mechanism,
            adversary_profiles: self
                .adversary_profiles
                .iter()
                .map(|p| ProfileDoc {
                    label: p.label.clone(),
                    reports: p
                        .reports
                        .iter()
                        .map(|(id, pref)| (teacher_label(e, *id), preference_doc(schools, pref)))
                        .collect(),
                })
                .collect(),
            expectations: self.expected_matchings.as_ref().map(|periods| ExpectationsDoc {
                matchings: periods
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|(id, s)| (teacher_label(e, *id), set_labels(schools, *s)))
                            .collect()
                    })
                    .collect(),
            }),
        }
    }
}

fn canonical(value: Value) -> String {
    let mut text = serde_json::to_string_pretty(&value).expect("values serialize");
    text.push('\n');
    text
}

/// The scenario in canonical form.
pub fn emit_scenario(scenario: &Scenario) -> String {
    canonical(serde_json::to_value(scenario.to_document()).expect("documents serialize"))
}

fn teacher_set_labels(problem: &DynamicProblem, set: TeacherSet) -> Vec<String> {
    set.iter().map(|k| problem.label(k).to_owned()).collect()
}

fn matching_value(problem: &DynamicProblem, mu: &Matching) -> Value {
    Value::Object(
        (0..problem.teacher_count())
            .map(|k| {
                (
                    problem.label(k).to_owned(),
                    json!(problem.school_labels(mu.assignment(k))),
                )
            })
            .collect(),
    )
}

fn trace_value(problem: &DynamicProblem, trace: &DaTrace) -> Value {
    let schools = problem.schools();
    let by_school = |sets: &[TeacherSet]| -> Value {
        Value::Object(
            sets.iter()
                .enumerate()
                .map(|(s, set)| (schools.label(s).to_owned(), json!(teacher_set_labels(problem, *set))))
                .collect(),
        )
    };
    let steps: Vec<Value> = trace
        .steps
        .iter()
        .enumerate()
        .map(|(k, st)| {
            json!({
                "step": k + 1,
                "proposals": Value::Object(
                    st.proposals
                        .iter()
                        .enumerate()
                        .map(|(i, a)| (problem.label(i).to_owned(), json!(problem.school_labels(*a))))
                        .collect()
                ),
                "held": by_school(&st.held_after),
                "rejected": by_school(&st.rejected),
            })
        })
        .collect();
    json!({ "steps": steps })
}

/// A DA run on `problem`: its step table and output matching.
pub fn emit_trace(problem: &DynamicProblem, trace: &DaTrace, mu: &Matching) -> String {
    let mut v = trace_value(problem, trace);
    v["kind"] = json!("da-trace");
    v["matching"] = matching_value(problem, mu);
    canonical(v)
}

fn treada_value(problem: &DynamicProblem, log: &TreadaLog) -> Value {
    let rounds: Vec<Value> = log
        .rounds
        .iter()
        .enumerate()
        .map(|(r, round)| {
            let mut v = trace_value(problem, &round.trace);
            v["round"] = json!(r);
            v["matching"] = matching_value(problem, &round.matching);
            v["truncated"] = json!(round
                .truncated
                .iter()
                .map(|p| json!({
                    "teacher": problem.label(p.teacher),
                    "school": problem.schools().label(p.school),
                    "held_from": p.held_from,
                    "rejected_at": p.rejected_at,
                }))
                .collect::<Vec<_>>());
            v
        })
        .collect();
    json!({ "rounds": rounds })
}

/// A TREADA run: every round's trace, matching and truncations.
pub fn emit_treada_log(problem: &DynamicProblem, log: &TreadaLog) -> String {
    let mut v = treada_value(problem, log);
    v["kind"] = json!("treada-log");
    v["matching"] = matching_value(problem, &log.rounds[log.final_round()].matching);
    canonical(v)
}

/// A multi-period simulation: per period the matching and the mechanism's run.
pub fn emit_simulation(outcomes: &[PeriodOutcome]) -> String {
    let periods: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            let run = match &o.run {
                MechanismRun::Trda(trace) => {
                    let mut v = trace_value(&o.problem, trace);
                    v["mechanism"] = json!("trda");
                    v
                }
                MechanismRun::Treada(log) => {
                    let mut v = treada_value(&o.problem, log);
                    v["mechanism"] = json!("treada");
                    v
                }
                MechanismRun::Cohort(cohorts) => json!({
                    "mechanism": "cohort",
                    "cohorts": cohorts
                        .iter()
                        .map(|c| teacher_set_labels(&o.problem, *c))
                        .collect::<Vec<_>>(),
                }),
            };
            json!({
                "period": o.period,
                "matching": matching_value(&o.problem, &o.matching),
                "run": run,
            })
        })
        .collect();
    canonical(json!({ "kind": "simulation", "periods": periods }))
}

fn claim_value(problem: &DynamicProblem, c: &Claim) -> Value {
    json!({
        "claimant": problem.label(c.claimant),
        "school": problem.schools().label(c.school),
        "displaced": problem.label(c.displaced),
        "kind": c.kind,
    })
}

/// Results of the audit checks run on one matching.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub stability: Option<StabilityVerdict>,
    /// Whether the matching weakly Blair-dominates every dynamically stable matching.
    pub constrained_efficiency: Option<bool>,
    pub efficiency: Option<EfficiencyVerdict>,
    pub claim_minimality: Option<bool>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.stability.as_ref().is_none_or(|v| v.dynamically_stable)
            && self.constrained_efficiency.unwrap_or(true)
            && self.efficiency.as_ref().is_none_or(|v| v.efficient)
            && self.claim_minimality.unwrap_or(true)
    }
}

pub fn emit_audit(problem: &DynamicProblem, mu: &Matching, report: &AuditReport) -> String {
    let mut checks = serde_json::Map::new();
    if let Some(v) = &report.stability {
        checks.insert(
            "stability".into(),
            json!({
                "passed": v.dynamically_stable,
                "individually_rational": v.individually_rational,
                "dynamically_rational": v.dynamically_rational,
                "non_wasteful": v.non_wasteful,
                "claims": v.claims.iter().map(|c| claim_value(problem, c)).collect::<Vec<_>>(),
            }),
        );
    }
    if let Some(ok) = report.constrained_efficiency {
        checks.insert("constrained-efficiency".into(), json!({ "passed": ok }));
    }
    if let Some(v) = &report.efficiency {
        checks.insert(
            "efficiency".into(),
            json!({
                "passed": v.efficient,
                "witness": v.witness.as_ref().map(|w| matching_value(problem, w)),
            }),
        );
    }
    if let Some(ok) = report.claim_minimality {
        checks.insert("claim-minimality".into(), json!({ "passed": ok }));
    }
    canonical(json!({
        "kind": "audit",
        "matching": matching_value(problem, mu),
        "passed": report.passed(),
        "checks": checks,
    }))
}

fn co_reports_value(economy: &Economy, reports: &CoReports) -> Value {
    let schools = economy.schools();
    Value::Object(
        reports
            .iter()
            .map(|(id, r)| {
                let v = match r {
                    TeacherReport::Preference(p) => json!(preference_doc(schools, p)),
                    TeacherReport::Table(_) => json!("truthful"),
                };
                (teacher_label(economy, *id), v)
            })
            .collect(),
    )
}

fn coverage_value(c: &Coverage) -> Value {
    serde_json::to_value(c).expect("coverage serializes")
}

fn finding_value(economy: &Economy, f: &ManipulationFinding) -> Value {
    let schools = economy.schools();
    let labels = |s: SchoolSet| set_labels(schools, s);
    let cert: &Certificate = &f.certificate;
    json!({
        "teacher": teacher_label(economy, f.teacher),
        "truth": preference_doc(schools, &f.truth),
        "misreport": preference_doc(schools, &f.misreport),
        "period": f.period,
        "gained": labels(f.gained),
        "truthful": labels(f.truthful),
        "worst": { "truthful": labels(f.worst.0), "misreport": labels(f.worst.1) },
        "best": { "truthful": labels(f.best.0), "misreport": labels(f.best.1) },
        "obviousness": f.obviousness,
        "coverage": coverage_value(&f.coverage),
        "certificate": {
            "gain": co_reports_value(economy, &cert.gain),
            "worst_truthful": co_reports_value(economy, &cert.worst_truthful),
            "worst_misreport": co_reports_value(economy, &cert.worst_misreport),
            "best_truthful": co_reports_value(economy, &cert.best_truthful),
            "best_misreport": co_reports_value(economy, &cert.best_misreport),
        },
    })
}

pub fn emit_manipulation_report(economy: &Economy, report: &ManipulationReport) -> String {
    let obvious = report
        .findings
        .iter()
        .filter(|f| f.obviousness != Obviousness::NotObvious)
        .count();
    canonical(json!({
        "kind": "manipulation-report",
        "teacher": teacher_label(economy, report.teacher),
        "coverage": coverage_value(&report.coverage),
        "profiles": report.profiles,
        "misreports": report.misreports,
        "obvious": obvious,
        "findings": report.findings.iter().map(|f| finding_value(economy, f)).collect::<Vec<_>>(),
    }))
}

/// Parses a list of best-first preferences written as arrays of school-label arrays.
pub fn parse_preferences(schools: &Schools, text: &str) -> Result<Vec<SubsetPreference>, ScenarioError> {
    let raw: Vec<Vec<Vec<String>>> = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
    let labels = Labels {
        schools,
        teachers: &[],
    };
    raw.iter()
        .enumerate()
        .map(|(k, p)| labels.preference(&format!("[{k}]"), p))
        .collect()
}

/// Writes preferences in the format read by [`parse_preferences`].
pub fn emit_preferences(schools: &Schools, prefs: &[SubsetPreference]) -> String {
    canonical(json!(prefs.iter().map(|p| preference_doc(schools, p)).collect::<Vec<_>>()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const MINIMAL: &str = r#"{
  "schema_version": 1,
  "schools": [{"label": "a", "quota": 1}, {"label": "b", "quota": 1}],
  "teachers": [
    {"label": "x", "preference": [["a"], ["b"]]},
    {"label": "y", "preference": [["a"]]}
  ],
  "initial_matching": {"y": ["a"]},
  "periods": [{
    "roster": ["x", "y"],
    "priorities": [{"school": "a", "order": ["y", "x"]}, {"school": "b", "order": ["x", "y"]}]
  }]
}"#;

    #[test]
    fn minimal_document_parses() {
        let s = parse_scenario(MINIMAL).unwrap();
        let outcome = s.economy.simulate().unwrap();
        assert_eq!(outcome[0].matching.assignment(0), SchoolSet::singleton(1));
        assert_eq!(outcome[0].matching.assignment(1), SchoolSet::singleton(0));
    }

    #[test]
    fn round_trip_is_identity() {
        let s = parse_scenario(MINIMAL).unwrap();
        let text = emit_scenario(&s);
        let again = parse_scenario(&text).unwrap();
        assert_eq!(again, s);
        assert_eq!(emit_scenario(&again), text);
    }

    #[test]
    fn omitted_teacher_is_named() {
        let text = MINIMAL.replace(r#""order": ["x", "y"]"#, r#""order": ["x"]"#);
        let err = parse_scenario(&text).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ScenarioError::Validation { .. }));
        assert!(msg.contains("school `b`") && msg.contains("teacher `y`"), "{msg}");
    }

    #[test]
    fn schema_version_is_checked() {
        let text = MINIMAL.replace(r#""schema_version": 1"#, r#""schema_version": 2"#);
        assert_eq!(
            parse_scenario(&text).unwrap_err(),
            ScenarioError::SchemaVersionMismatch { found: 2, expected: 1 }
        );
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_scenario("{\n  \"schema_version\": 1,\n  oops\n}").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn unknown_school_in_preference_has_a_path() {
        let text = MINIMAL.replace(r#"[["a"], ["b"]]"#, r#"[["a"], ["c"]]"#);
        match parse_scenario(&text).unwrap_err() {
            ScenarioError::Validation { path, .. } => assert_eq!(path, "teachers[0].preference[1][0]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn over_quota_initial_matching_is_rejected() {
        let text = MINIMAL.replace(r#"{"y": ["a"]}"#, r#"{"x": ["a"], "y": ["a"]}"#);
        match parse_scenario(&text).unwrap_err() {
            ScenarioError::Validation { path, source } => {
                assert_eq!(path, "initial_matching");
                assert!(source.to_string().contains("infeasible"), "{source}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_trace_is_canonical() {
        let problem = DynamicProblem::new(
            Arc::new(Schools::numbered(vec![1])),
            Vec::new(),
            Vec::new(),
            PriorityProfile::new(0, vec![Vec::new()]).unwrap(),
            Matching::empty(0, 1),
        )
        .unwrap();
        let (mu, trace) = crate::trda::run_trda(&problem).unwrap();
        assert_eq!(
            emit_trace(&problem, &trace, &mu),
            "{\n  \"kind\": \"da-trace\",\n  \"matching\": {},\n  \"steps\": []\n}\n"
        );
    }

    #[test]
    fn emission_is_deterministic() {
        let p = fixtures::treada_example_problem();
        let (mu, trace) = crate::trda::run_trda(&p).unwrap();
        assert_eq!(emit_trace(&p, &trace, &mu), emit_trace(&p, &trace, &mu));
    }

    #[test]
    fn preferences_round_trip() {
        let schools = Schools::numbered(vec![2, 1, 1, 1]);
        let prefs = vec![fixtures::manipulation_misreport()];
        let text = emit_preferences(&schools, &prefs);
        assert_eq!(parse_preferences(&schools, &text).unwrap(), prefs);
    }
}
