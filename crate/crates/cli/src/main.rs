//! `tenure-match`: run, audit and probe dynamic school-choice scenarios.
//!
//! Exit codes: 0 success, 1 a requested check failed or an obvious manipulation was found,
//! 2 usage, parse or validation error, 3 an oracle guard was exceeded, 4 no obvious
//! manipulation was found over a non-exhaustive domain.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tenure_match::audit::{
    enumerate_dynamically_stable, enumerate_matchings, is_blair_efficient, is_dynamically_stable,
    minimality_of_unjustified_claims, weakly_blair_dominates,
};
use tenure_match::economy::{
    exhaustive_misreports, find_obvious_manipulations, sampled_misreports, AdversaryDomain,
    CoProfile, Coverage, PeriodOutcome,
};
use tenure_match::scenario::{
    emit_audit, emit_manipulation_report, emit_scenario, emit_simulation, parse_preferences,
    parse_scenario, AuditReport, Scenario, ScenarioError,
};
use tenure_match::{Consent, Economy, Error, Execution, Matching, Mechanism, TeacherId};

#[derive(Parser, Debug)]
#[command(name = "tenure-match", version, about = "Dynamic school choice with tenured positions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for oracle sweeps; 1 runs sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print per-period detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate every period and print the matchings.
    Run(RunArgs),
    /// Simulate and check each period's matching against the oracles.
    Audit(AuditArgs),
    /// Search for obvious dynamic manipulations by one teacher.
    Manipulate(ManipulateArgs),
    /// List the dynamically stable matchings of each period.
    Enumerate(EnumerateArgs),
    /// Parse a scenario and check its expectations.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct Common {
    scenario: PathBuf,
    #[arg(long, value_enum)]
    mechanism: Option<MechanismArg>,
    /// `all`, `none` or a comma-separated list of teacher labels.
    #[arg(long)]
    consent: Option<String>,
    /// Write canonical JSON output here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MechanismArg {
    Trda,
    Treada,
    Cohort,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CheckArg {
    Stability,
    ConstrainedEfficiency,
    Efficiency,
    ClaimMinimality,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "stability")]
    check: Vec<CheckArg>,
    /// Refuse oracle checks whose matching space exceeds this many matchings.
    #[arg(long, default_value_t = 50_000_000)]
    max_matchings: u64,
}

#[derive(Args, Debug)]
struct ManipulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    teacher: String,
    /// JSON list of misreports, each a best-first list of school-label sets.
    #[arg(long)]
    misreport_file: Option<PathBuf>,
    /// Range misreports and co-reports over the full substitutable domain.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Sampled co-report profiles and misreports.
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 50_000_000)]
    max_matchings: u64,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    scenario: PathBuf,
    /// Write the scenario in canonical form here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Scenario(ScenarioError),
    Model(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Scenario(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Model(Error::DomainTooLarge { .. }) => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) => f.write_str(m),
            Failure::Scenario(e) => write!(f, "{e}"),
            Failure::Model(e) => write!(f, "{e}"),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = match configure_jobs(cli.jobs) {
        Ok(exec) => exec,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.code());
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, cli.verbose),
        Command::Audit(a) => cmd_audit(a, cli.verbose),
        Command::Manipulate(a) => cmd_manipulate(a, exec, cli.verbose),
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn configure_jobs(jobs: Option<usize>) -> Result<Execution, Failure> {
    match jobs {
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        Some(1) => Ok(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            Ok(Execution::Parallel)
        }
        _ => Ok(Execution::default()),
    }
}

fn load(common: &Common) -> Result<Scenario, Failure> {
    let mut scenario = read_scenario(&common.scenario)?;
    let economy = &scenario.economy;
    let consent = match common.consent.as_deref() {
        None => None,
        Some("all") => Some(Consent::All),
        Some("none") => Some(Consent::None),
        Some(list) => Some(Consent::Only(
            list.split(',')
                .map(|l| {
                    let l = l.trim();
                    economy
                        .teacher_by_label(l)
                        .ok_or_else(|| Failure::Usage(format!("--consent: unknown teacher `{l}`")))
                })
                .collect::<Result<_, _>>()?,
        )),
    };
    let mechanism = match (common.mechanism, consent) {
        (None, None) => return Ok(scenario),
        (Some(MechanismArg::Trda), None) => Mechanism::Trda,
        (Some(MechanismArg::Cohort), None) => Mechanism::Cohort,
        (Some(MechanismArg::Treada), c) => Mechanism::Treada(c.unwrap_or(Consent::All)),
        (None, Some(c)) => match economy.mechanism() {
            Mechanism::Treada(_) => Mechanism::Treada(c),
            _ => return Err(Failure::Usage("--consent applies only to --mechanism treada".into())),
        },
        (Some(_), Some(_)) => {
            return Err(Failure::Usage("--consent applies only to --mechanism treada".into()))
        }
    };
    scenario.economy = economy.with_mechanism(mechanism);
    Ok(scenario)
}

fn read_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_scenario(&text)?)
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    if let Some(path) = path {
        fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn mechanism_name(m: &Mechanism) -> String {
    match m {
        Mechanism::Trda => "trda".into(),
        Mechanism::Cohort => "cohort".into(),
        Mechanism::Treada(Consent::All) => "treada (consent: all)".into(),
        Mechanism::Treada(Consent::None) => "treada (consent: none)".into(),
        Mechanism::Treada(Consent::Only(ids)) => format!("treada (consent: {} teachers)", ids.len()),
    }
}

fn matching_line(outcome: &PeriodOutcome, mu: &Matching) -> String {
    let p = &outcome.problem;
    if p.teacher_count() == 0 {
        return "(no teachers)".into();
    }
    let mut line = String::new();
    for k in 0..p.teacher_count() {
        if k > 0 {
            line.push_str(", ");
        }
        let _ = write!(line, "{}: {{{}}}", p.label(k), p.school_labels(mu.assignment(k)).join(", "));
    }
    line
}

fn cmd_run(args: &RunArgs, verbose: u8) -> Outcome {
    let scenario = load(&args.common)?;
    let outcomes = scenario.economy.simulate()?;
    println!("mechanism {}", mechanism_name(scenario.economy.mechanism()));
    for o in &outcomes {
        println!("period {}: {}", o.period, matching_line(o, &o.matching));
        if verbose > 0 {
            print_run(o);
        }
    }
    write_out(args.common.out.as_ref(), &emit_simulation(&outcomes))?;
    Ok(0)
}

fn print_run(o: &PeriodOutcome) {
    use tenure_match::economy::MechanismRun;
    match &o.run {
        MechanismRun::Trda(trace) => println!("  {} DA steps", trace.len()),
        MechanismRun::Treada(log) => {
            for (r, round) in log.rounds.iter().enumerate() {
                let cut: Vec<String> = round
                    .truncated
                    .iter()
                    .map(|t| format!("{}@{}", o.problem.label(t.teacher), o.problem.schools().label(t.school)))
                    .collect();
                println!(
                    "  round {r}: {} | truncated [{}]",
                    matching_line(o, &round.matching),
                    cut.join(", ")
                );
            }
        }
        MechanismRun::Cohort(cohorts) => println!("  {} cohorts", cohorts.len()),
    }
}

fn cmd_audit(args: &AuditArgs, verbose: u8) -> Outcome {
    let scenario = load(&args.common)?;
    let outcomes = scenario.economy.simulate()?;
    let oracle_backed = args.check.iter().any(|c| *c != CheckArg::Stability);
    let mut all_passed = true;
    let mut documents = Vec::new();
    for o in &outcomes {
        let p = &o.problem;
        if oracle_backed {
            guard(enumerate_matchings(p)?.len(), args.max_matchings)?;
        }
        let mut report = AuditReport::default();
        for check in &args.check {
            match check {
                CheckArg::Stability => report.stability = Some(is_dynamically_stable(p, &o.matching)?),
                CheckArg::ConstrainedEfficiency => {
                    let stable = enumerate_dynamically_stable(p)?;
                    report.constrained_efficiency = Some(
                        stable
                            .iter()
                            .all(|nu| weakly_blair_dominates(p.choices(), &o.matching, nu)),
                    );
                }
                CheckArg::Efficiency => report.efficiency = Some(is_blair_efficient(p, &o.matching)?),
                CheckArg::ClaimMinimality => {
                    report.claim_minimality = match minimality_of_unjustified_claims(p, &o.matching) {
                        Ok(ok) => Some(ok),
                        Err(Error::NotStableInput) => Some(false),
                        Err(e) => return Err(e.into()),
                    }
                }
            }
        }
        println!("period {}: {}", o.period, matching_line(o, &o.matching));
        if let Some(v) = &report.stability {
            println!("  stability: {}", verdict(v.dynamically_stable));
            for c in v.justified_claims() {
                println!(
                    "    justified claim: {} at {} over {}",
                    p.label(c.claimant),
                    p.schools().label(c.school),
                    p.label(c.displaced)
                );
            }
            if verbose > 0 {
                println!(
                    "    individually rational {}, dynamically rational {}, non-wasteful {}",
                    v.individually_rational, v.dynamically_rational, v.non_wasteful
                );
            }
        }
        if let Some(ok) = report.constrained_efficiency {
            println!("  constrained-efficiency: {}", verdict(ok));
        }
        if let Some(v) = &report.efficiency {
            println!("  efficiency: {}", verdict(v.efficient));
            if let Some(w) = &v.witness {
                println!("    dominated by {}", matching_line(o, w));
            }
        }
        if let Some(ok) = report.claim_minimality {
            println!("  claim-minimality: {}", verdict(ok));
        }
        all_passed &= report.passed();
        documents.push(emit_audit(p, &o.matching, &report));
    }
    write_out(args.common.out.as_ref(), &join_documents(&documents))?;
    Ok(if all_passed { 0 } else { 1 })
}

/// One document per period as a JSON array, preserving each document's canonical layout.
fn join_documents(documents: &[String]) -> String {
    let values: Vec<serde_json::Value> = documents
        .iter()
        .map(|d| serde_json::from_str(d).expect("emitted documents are JSON"))
        .collect();
    let mut text = serde_json::to_string_pretty(&values).expect("values serialize");
    text.push('\n');
    text
}

fn guard(len: u64, max: u64) -> Result<(), Failure> {
    if len > max {
        return Err(Failure::Model(Error::DomainTooLarge {
            detail: format!("{len} feasible matchings exceed --max-matchings {max}"),
        }));
    }
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn cmd_manipulate(args: &ManipulateArgs, exec: Execution, verbose: u8) -> Outcome {
    let scenario = load(&args.common)?;
    let economy: &Economy = &scenario.economy;
    let teacher: TeacherId = economy
        .teacher_by_label(&args.teacher)
        .ok_or_else(|| Failure::Usage(format!("--teacher: unknown teacher `{}`", args.teacher)))?;
    let sampled = || {
        args.seed
            .ok_or_else(|| Failure::Usage("sampled domains need --seed".into()))
    };
    let (misreports, misreports_exhaustive) = match (&args.misreport_file, args.exhaustive) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
            (parse_preferences(economy.schools(), &text)?, false)
        }
        (None, true) => (exhaustive_misreports(economy, teacher)?, true),
        (None, false) => (sampled_misreports(economy, teacher, sampled()?, args.samples), false),
    };
    let adversary = if args.exhaustive {
        AdversaryDomain::Exhaustive
    } else if !scenario.adversary_profiles.is_empty() || args.seed.is_none() {
        let mut profiles = vec![CoProfile::truthful()];
        profiles.extend(scenario.adversary_profiles.iter().cloned());
        AdversaryDomain::Profiles(profiles)
    } else {
        AdversaryDomain::Sampled {
            seed: sampled()?,
            samples: args.samples,
        }
    };
    let report = find_obvious_manipulations(economy, teacher, &misreports, &adversary, exec)?;
    let exhaustive = misreports_exhaustive && report.coverage == Coverage::Exhaustive;
    println!(
        "teacher {}: {} misreports against {} co-report profiles ({})",
        args.teacher,
        report.misreports,
        report.profiles,
        coverage_name(report.coverage)
    );
    for f in &report.findings {
        if verbose == 0 && f.obviousness == tenure_match::economy::Obviousness::NotObvious {
            continue;
        }
        let labels = |s| economy.schools().set_labels(s).join(", ");
        println!(
            "  period {}: {:?} gains {{{}}} over {{{}}}; worst {{{}}} vs {{{}}}; best {{{}}} vs {{{}}}",
            f.period,
            f.obviousness,
            labels(f.gained),
            labels(f.truthful),
            labels(f.worst.1),
            labels(f.worst.0),
            labels(f.best.1),
            labels(f.best.0)
        );
    }
    write_out(args.common.out.as_ref(), &emit_manipulation_report(economy, &report))?;
    if report.has_obvious() {
        println!("obvious manipulation found");
        Ok(1)
    } else if exhaustive {
        println!("no obvious manipulation (exhaustive)");
        Ok(0)
    } else {
        println!("no obvious manipulation found (non-exhaustive domain)");
        Ok(4)
    }
}

fn coverage_name(c: Coverage) -> String {
    match c {
        Coverage::Exhaustive => "exhaustive".into(),
        Coverage::Explicit => "explicit".into(),
        Coverage::Sampled { seed } => format!("sampled, seed {seed}"),
    }
}

fn cmd_enumerate(args: &EnumerateArgs) -> Outcome {
    let scenario = load(&args.common)?;
    let outcomes = scenario.economy.simulate()?;
    let mut periods = Vec::new();
    for o in &outcomes {
        let p = &o.problem;
        guard(enumerate_matchings(p)?.len(), args.max_matchings)?;
        let stable = enumerate_dynamically_stable(p)?;
        println!("period {}: {} dynamically stable matchings", o.period, stable.len());
        for mu in &stable {
            println!("  {}", matching_line(o, mu));
        }
        let listed: Vec<serde_json::Value> = stable
            .iter()
            .map(|mu| {
                serde_json::Value::Object(
                    (0..p.teacher_count())
                        .map(|k| (p.label(k).to_owned(), serde_json::json!(p.school_labels(mu.assignment(k)))))
                        .collect(),
                )
            })
            .collect();
        periods.push(serde_json::json!({ "period": o.period, "stable": listed }));
    }
    let mut text = serde_json::to_string_pretty(&serde_json::json!({
        "kind": "stable-matchings",
        "periods": periods,
    }))
    .expect("values serialize");
    text.push('\n');
    write_out(args.common.out.as_ref(), &text)?;
    Ok(0)
}

fn cmd_validate(args: &ValidateArgs) -> Outcome {
    let scenario = read_scenario(&args.scenario)?;
    let economy = &scenario.economy;
    println!(
        "{}: {} schools, {} teachers, {} periods, mechanism {}",
        scenario.name.as_deref().unwrap_or("scenario"),
        economy.schools().len(),
        economy.teachers().len(),
        economy.periods().len(),
        mechanism_name(economy.mechanism())
    );
    write_out(args.out.as_ref(), &emit_scenario(&scenario))?;
    if scenario.expected_matchings.is_none() {
        return Ok(0);
    }
    let mismatches = scenario.check_expectations(&economy.simulate()?);
    if mismatches.is_empty() {
        println!("expectations met");
        Ok(0)
    } else {
        for m in &mismatches {
            println!("  {m}");
        }
        Ok(1)
    }
}
