//! Dynamic many-to-many school choice with tenured positions.
//!
//! Teachers hold sets of schools; schools hold up to a quota of teachers. Each period a
//! mechanism rematches the current roster while respecting the positions teachers held in the
//! previous period. [`run_trda`] and [`run_treada`] are the mechanisms, [`audit`] holds the
//! verification oracles and [`economy`] the multi-period simulation and manipulation search.

pub mod audit;
pub mod choice;
pub mod da;
pub mod domain;
pub mod economy;
pub mod error;
pub mod fixtures;
pub mod grid;
pub mod model;
pub mod par;
pub mod preference;
pub mod priority;
pub mod problem;
pub mod report;
pub mod scenario;
pub mod set;
pub mod trda;
pub mod treada;

pub use choice::{BlairOrdering, ChoiceFunction};
pub use da::{detect_interrupters, run_da, DaStep, DaTrace, InterrupterPair};
pub use economy::{Consent, Economy, Mechanism};
pub use error::{Error, Result};
pub use model::{Matching, Schools, TeacherId};
pub use par::Execution;
pub use preference::SubsetPreference;
pub use priority::{derive_priorities, DerivedPriorityProfile, PriorityProfile};
pub use problem::{DynamicProblem, StaticProblem, Teacher};
pub use report::ValidationReport;
pub use set::{SchoolSet, TeacherSet};
pub use trda::{run_cohort_da, run_trda, tenure_cohorts};
pub use treada::{run_treada, ConsentProfile, TreadaLog, TreadaRound};
