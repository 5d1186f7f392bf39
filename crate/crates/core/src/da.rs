//! Teacher-proposing deferred acceptance with a full step trace, and interrupter detection.

use serde::Serialize;

use crate::model::Matching;
use crate::problem::StaticProblem;
use crate::set::{SchoolSet, TeacherSet};

/// State of one simultaneous proposal step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DaStep {
    /// Per teacher: `C_i(S \ R_i)`.
    pub proposals: Vec<SchoolSet>,
    /// Per school: teachers held when the step starts.
    pub held_before: Vec<TeacherSet>,
    /// Per school: teachers held when the step ends.
    pub held_after: Vec<TeacherSet>,
    /// Per school: teachers rejected at this step.
    pub rejected: Vec<TeacherSet>,
}

impl DaStep {
    pub fn has_rejections(&self) -> bool {
        self.rejected.iter().any(|r| !r.is_empty())
    }
}

/// Steps are 1-indexed in every public accessor; `steps[0]` is step 1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DaTrace {
    pub steps: Vec<DaStep>,
}

impl DaTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Step `k`, counting from 1.
    pub fn step(&self, k: usize) -> &DaStep {
        &self.steps[k - 1]
    }
}

/// Runs DA on a static problem and returns the final holds together with the trace.
///
/// With no teachers the trace is empty.
pub fn run_da(problem: &StaticProblem<'_>) -> (Matching, DaTrace) {
    let n = problem.teachers();
    let m = problem.schools.len();
    let all = problem.schools.all();
    let mut refused = vec![SchoolSet::EMPTY; n];
    let mut held = vec![TeacherSet::EMPTY; m];
    let mut trace = DaTrace::default();
    if n == 0 {
        return (Matching::empty(0, m), trace);
    }
    loop {
        let proposals: Vec<SchoolSet> = (0..n)
            .map(|i| problem.choices[i].choose(all.difference(refused[i])))
            .collect();
        let mut applicants = vec![TeacherSet::EMPTY; m];
        for (i, p) in proposals.iter().enumerate() {
            for s in p.iter() {
                applicants[s] = applicants[s].with(i);
            }
        }
        let held_before = held.clone();
        let mut rejected = vec![TeacherSet::EMPTY; m];
        for s in 0..m {
            let kept = problem
                .priorities
                .top(s, applicants[s], problem.schools.quota(s));
            rejected[s] = applicants[s].difference(kept);
            held[s] = kept;
            for i in rejected[s].iter() {
                refused[i] = refused[i].with(s);
            }
        }
        let step = DaStep {
            proposals,
            held_before,
            held_after: held.clone(),
            rejected,
        };
        let done = !step.has_rejections();
        trace.steps.push(step);
        if done {
            break;
        }
    }
    (Matching::from_school_sides(n, held), trace)
}

/// `(i, s)` where `i` held `s` from step `held_from` until `s` rejected `i` at step `rejected_at`,
/// and `s` rejected some other teacher in between.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct InterrupterPair {
    pub teacher: usize,
    pub school: usize,
    pub held_from: usize,
    pub rejected_at: usize,
}

/// All interrupter pairs of a trace, ordered by `(rejected_at, teacher, school)`.
pub fn interrupter_pairs(trace: &DaTrace) -> Vec<InterrupterPair> {
    let Some(first) = trace.steps.first() else {
        return Vec::new();
    };
    let n = first.proposals.len();
    let m = first.held_after.len();
    let mut pairs = Vec::new();
    for s in 0..m {
        for i in 0..n {
            let Some(p) = trace.steps.iter().position(|st| st.held_after[s].contains(i)) else {
                continue;
            };
            let Some(q) = trace.steps[p + 1..]
                .iter()
                .position(|st| st.rejected[s].contains(i))
                .map(|k| k + p + 1)
            else {
                continue;
            };
            let interrupts = trace.steps[p..q]
                .iter()
                .any(|st| !st.rejected[s].without(i).is_empty());
            if interrupts {
                pairs.push(InterrupterPair {
                    teacher: i,
                    school: s,
                    held_from: p + 1,
                    rejected_at: q + 1,
                });
            }
        }
    }
    pairs.sort_by_key(|p| (p.rejected_at, p.teacher, p.school));
    pairs
}

/// The consenting interrupter pairs at the last step where any consenting teacher is rejected by
/// a school for which it is an interrupter.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Interrupters {
    /// `None` when no consenting interrupter exists.
    pub last_step: Option<usize>,
    pub pairs: Vec<InterrupterPair>,
}

pub fn detect_interrupters(trace: &DaTrace, consenting: TeacherSet) -> Interrupters {
    let candidates: Vec<InterrupterPair> = interrupter_pairs(trace)
        .into_iter()
        .filter(|p| consenting.contains(p.teacher))
        .collect();
    let Some(last) = candidates.iter().map(|p| p.rejected_at).max() else {
        return Interrupters::default();
    };
    Interrupters {
        last_step: Some(last),
        pairs: candidates
            .into_iter()
            .filter(|p| p.rejected_at == last)
            .collect(),
    }
}
