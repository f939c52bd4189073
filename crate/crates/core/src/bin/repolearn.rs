//! Batch experiment runner: generate or load instances, run a learner
//! against a fresh oracle, verify the answer against the brute-force oracle
//! where feasible, and emit query-count reports.
//!
//! Exit codes: 0 on success, 1 when any run's verdict is not exact, 2 on
//! configuration errors.

use std::collections::BTreeSet;
use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use repolearn::cff::{
    build_randomized_cff, cff_union_size_estimate, randomized_family_size, verify_family,
    CffCheck, CffJson,
};
use repolearn::fixtures::{FixtureKind, FixtureSpec};
use repolearn::gbs::{find_defects, group_testing_lower_bound};
use repolearn::generate::{random_instance, realized_bounds, GeneratorParams};
use repolearn::json::InstanceJson;
use repolearn::learn::{
    anytime_full_learning, learn_full_known_deps, learn_full_known_deps_adaptive,
    learn_full_unknown_deps, learn_full_unknown_deps_adaptive, learn_full_unknown_deps_layered,
    learn_max_subrepo, LearnedModel,
};
use repolearn::truth;
use repolearn::{Bounds, InstallationOracle, RepositoryInstance};

#[derive(Parser)]
#[command(
    name = "repolearn",
    version,
    about = "Learn hidden repository constraints from installation attempts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random or fixture instance as JSON.
    Gen(GenArgs),
    /// Run a learning algorithm and report query counts and verdicts.
    Run(RunArgs),
    /// Build a randomized cover-free family and verify it exhaustively.
    VerifyCff(VerifyCffArgs),
    /// Compute the exhaustive ground-truth report for an instance file.
    Bruteforce(BruteforceArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Package count.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Probability of each forward known-dependency edge.
    #[arg(long, default_value_t = 0.15)]
    density: f64,
    /// Number of root defects.
    #[arg(long, default_value_t = 0)]
    d: usize,
    /// Number of unknown dependencies.
    #[arg(long, default_value_t = 0)]
    u: usize,
    /// Number of conflicts.
    #[arg(long, default_value_t = 0)]
    c: usize,
    /// Forbid dependencies into root defects.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit a named fixture instead of a random instance (path-root-defect,
    /// star-defects, conflict-chain, single-conflict-path,
    /// single-unknown-dep-path, full-learning-conflict-fan,
    /// adaptive-lb-cycles).
    #[arg(long)]
    fixture: Option<String>,
    /// Pivot index for the path-style fixtures.
    #[arg(long, default_value_t = 1)]
    pivot: usize,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    Gbs,
    MaxSubrepo,
    FullKnown,
    FullKnownAdaptive,
    FullUnknown,
    FullUnknownLayered,
    FullUnknownAdaptive,
    Anytime,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Gbs => "gbs",
            Algorithm::MaxSubrepo => "max-subrepo",
            Algorithm::FullKnown => "full-known",
            Algorithm::FullKnownAdaptive => "full-known-adaptive",
            Algorithm::FullUnknown => "full-unknown",
            Algorithm::FullUnknownLayered => "full-unknown-layered",
            Algorithm::FullUnknownAdaptive => "full-unknown-adaptive",
            Algorithm::Anytime => "anytime",
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    algorithm: Algorithm,
    /// Instance file (exactly one of --instance, --fixture, --random).
    #[arg(long)]
    instance: Option<std::path::PathBuf>,
    /// Fixture name (see `gen --fixture`).
    #[arg(long)]
    fixture: Option<String>,
    /// Generate a fresh random instance per repetition.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Bound overrides; defaults come from the instance file or generator.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    u: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    /// Root-defect budget for gbs.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 0.15)]
    density: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, default_value_t = 1)]
    pivot: usize,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct VerifyCffArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    a: usize,
    #[arg(long)]
    b: usize,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Verify a family from a JSON export instead of building one.
    #[arg(long)]
    family: Option<std::path::PathBuf>,
    /// Write the built family as JSON.
    #[arg(long)]
    export: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct BruteforceArgs {
    #[arg(long)]
    instance: std::path::PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::VerifyCff(args) => cmd_verify_cff(args),
        Command::Bruteforce(args) => cmd_bruteforce(args),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn write_output(out: &Option<std::path::PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| e.to_string()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.write_all(b"\n"))
                .map_err(|e| e.to_string())
        }
    }
}

fn build_fixture(
    name: &str,
    n: usize,
    d: usize,
    u: usize,
    c: usize,
    pivot: usize,
) -> Result<RepositoryInstance, String> {
    let kind = FixtureKind::from_name(name).ok_or_else(|| {
        format!(
            "unknown fixture {name:?}; expected one of path-root-defect, star-defects, \
             conflict-chain, single-conflict-path, single-unknown-dep-path, \
             full-learning-conflict-fan, adaptive-lb-cycles"
        )
    })?;
    FixtureSpec {
        kind,
        n,
        d,
        u,
        c,
        pivot,
    }
    .build()
    .map_err(|e| e.to_string())
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode, String> {
    let (instance, fixture_name) = match &args.fixture {
        Some(name) => (
            build_fixture(name, args.n, args.d, args.u, args.c, args.pivot)?,
            Some(name.clone()),
        ),
        None => {
            let params = GeneratorParams {
                n: args.n,
                known_density: args.density,
                unknown_deps: args.u,
                conflicts: args.c,
                root_defects: args.d,
                strict: args.strict,
            };
            (
                random_instance(&params, args.seed).map_err(|e| e.to_string())?,
                None,
            )
        }
    };
    let bounds = realized_bounds(&instance);
    let mut doc = InstanceJson::from_instance(&instance, Some(bounds));
    doc.fixture = fixture_name;
    let text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
    write_output(&args.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

struct RunRecord {
    rep: usize,
    n: usize,
    bounds: Bounds,
    r: usize,
    queries: u64,
    bound: u64,
    verdict: String,
    ms: u128,
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, String> {
    let sources = [args.instance.is_some(), args.fixture.is_some(), args.random];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(
            "choose exactly one instance source: --instance, --fixture, or --random".into(),
        );
    }
    if args.reps == 0 {
        return Err("--reps must be at least 1".into());
    }

    // A file or fixture instance is shared across repetitions; --random
    // draws a fresh instance per repetition from the derived seed.
    let shared: Option<(RepositoryInstance, Option<Bounds>)> = if let Some(path) = &args.instance {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let doc: InstanceJson = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let inst = doc.build().map_err(|e| e.to_string())?;
        Some((inst, doc.bounds))
    } else if let Some(name) = &args.fixture {
        let inst = build_fixture(
            name,
            args.n,
            args.d.unwrap_or(1),
            args.u.unwrap_or(1),
            args.c.unwrap_or(1),
            args.pivot,
        )?;
        Some((inst, None))
    } else {
        None
    };

    let records: Vec<Result<RunRecord, String>> = (0..args.reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = args.seed.wrapping_add(rep as u64);
            let (instance, file_bounds) = match &shared {
                Some((inst, b)) => (inst.clone(), *b),
                None => {
                    let params = GeneratorParams {
                        n: args.n,
                        known_density: args.density,
                        unknown_deps: args.u.unwrap_or(0),
                        conflicts: args.c.unwrap_or(0),
                        root_defects: args.d.unwrap_or(0),
                        strict: false,
                    };
                    (
                        random_instance(&params, rep_seed).map_err(|e| e.to_string())?,
                        None,
                    )
                }
            };
            let realized = realized_bounds(&instance);
            let defaults = file_bounds.unwrap_or(realized);
            let bounds = Bounds {
                d: args.d.unwrap_or(defaults.d),
                u: args.u.unwrap_or(defaults.u),
                c: args.c.unwrap_or(defaults.c),
            };
            let r = args
                .r
                .unwrap_or_else(|| instance.dependency_root_defects().len());
            Ok(run_one(
                rep,
                args.algorithm,
                instance,
                bounds,
                r,
                args.delta,
                rep_seed,
            ))
        })
        .collect();

    let mut rows = Vec::with_capacity(records.len());
    for record in records {
        rows.push(record?);
    }

    let any_failure = rows
        .iter()
        .any(|r| r.verdict != "exact" && r.verdict != "unverified");
    let text = match args.format {
        Format::Csv => {
            let mut text = String::from("rep,algorithm,n,d,u,c,r,queries,bound,verdict,ms\n");
            for row in &rows {
                text.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    row.rep,
                    args.algorithm.name(),
                    row.n,
                    row.bounds.d,
                    row.bounds.u,
                    row.bounds.c,
                    row.r,
                    row.queries,
                    row.bound,
                    row.verdict,
                    row.ms
                ));
            }
            text.pop();
            text
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| {
                    json!({
                        "rep": row.rep,
                        "algorithm": args.algorithm.name(),
                        "n": row.n,
                        "bounds": {"d": row.bounds.d, "u": row.bounds.u, "c": row.bounds.c},
                        "r": row.r,
                        "queries": row.queries,
                        "bound": row.bound,
                        "verdict": row.verdict,
                        "ms": row.ms as u64,
                    })
                })
                .collect();
            serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())?
        }
    };
    write_output(&args.out, &text)?;
    Ok(if any_failure {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn run_one(
    rep: usize,
    algorithm: Algorithm,
    instance: RepositoryInstance,
    bounds: Bounds,
    r: usize,
    delta: f64,
    seed: u64,
) -> RunRecord {
    let n = instance.n();
    let start = Instant::now();
    let oracle = InstallationOracle::new(instance.clone());
    let planned_bound = planned_query_bound(algorithm, n, bounds, r, delta);

    let verdict = match algorithm {
        Algorithm::Gbs => match find_defects(&oracle, r) {
            Ok(found) => verify_root_defects(&instance, &found),
            Err(e) => format!("error({e})"),
        },
        Algorithm::MaxSubrepo => match learn_max_subrepo(&oracle, bounds, delta, seed) {
            Ok(keep) => verify_max_subrepo(&instance, &keep),
            Err(e) => format!("error({e})"),
        },
        Algorithm::Anytime => match anytime_full_learning(&oracle, delta, seed, None) {
            Ok(outcome) if outcome.consistent => verify_model(&instance, &outcome.model, true),
            Ok(_) => "inconsistent".to_string(),
            Err(e) => format!("error({e})"),
        },
        _ => {
            let model = match algorithm {
                Algorithm::FullKnown => learn_full_known_deps(&oracle, bounds, delta, seed),
                Algorithm::FullKnownAdaptive => {
                    learn_full_known_deps_adaptive(&oracle, bounds, delta, seed)
                }
                Algorithm::FullUnknown => learn_full_unknown_deps(&oracle, bounds, delta, seed),
                Algorithm::FullUnknownLayered => {
                    learn_full_unknown_deps_layered(&oracle, bounds, delta, seed)
                }
                Algorithm::FullUnknownAdaptive => {
                    learn_full_unknown_deps_adaptive(&oracle, bounds, delta, seed)
                }
                _ => unreachable!(),
            };
            match model {
                Ok(model) => {
                    let check_deps = matches!(
                        algorithm,
                        Algorithm::FullUnknown
                            | Algorithm::FullUnknownLayered
                            | Algorithm::FullUnknownAdaptive
                    );
                    verify_model(&instance, &model, check_deps)
                }
                Err(e) => format!("error({e})"),
            }
        }
    };

    RunRecord {
        rep,
        n,
        bounds,
        r,
        queries: oracle.query_count(),
        bound: planned_bound,
        verdict,
        ms: start.elapsed().as_millis(),
    }
}

/// A-priori query budget: the group-testing bound for gbs, the union-bound
/// family sizes for the non-adaptive learners (adaptive phase-2 sizes are
/// bounded by the full-universe family). The anytime search has none.
fn planned_query_bound(
    algorithm: Algorithm,
    n: usize,
    bounds: Bounds,
    r: usize,
    delta: f64,
) -> u64 {
    let size = |a: usize, b: usize, d: f64| -> u64 {
        randomized_family_size(n, a, b, d)
            .map(|m| m as u64)
            .unwrap_or(0)
    };
    let Bounds { d, u, c } = bounds;
    match algorithm {
        Algorithm::Gbs => group_testing_lower_bound(n, r)
            .map(|b| b + r.saturating_sub(1) as u64)
            .unwrap_or(0),
        Algorithm::MaxSubrepo => size(d, u + 1, delta),
        Algorithm::FullKnown => size(d + c, 2, delta),
        Algorithm::FullKnownAdaptive => size(d + c, 1, delta / 2.0) + size(c, 2, delta / 2.0),
        Algorithm::FullUnknown => size(d + c + u + 1, u + 2, delta),
        Algorithm::FullUnknownLayered => cff_union_size_estimate(n, d, u, c, delta)
            .map(|(layered, _)| layered as u64)
            .unwrap_or(0),
        Algorithm::FullUnknownAdaptive => {
            size(u + c + d, u + 1, delta / 2.0) + size(u + c + d + 1, u + 2, delta / 2.0)
        }
        Algorithm::Anytime => 0,
    }
}

fn verify_root_defects(instance: &RepositoryInstance, found: &[usize]) -> String {
    if !instance.unknown_deps().is_empty() || !instance.conflicts().is_empty() {
        return "unsupported-instance".to_string();
    }
    let expected = instance.dependency_root_defects();
    if found == expected.as_slice() {
        "exact".to_string()
    } else {
        "mismatch".to_string()
    }
}

fn verify_max_subrepo(instance: &RepositoryInstance, keep: &repolearn::Installation) -> String {
    if instance.n() > truth::MAX_BRUTE_FORCE_N {
        return "unverified".to_string();
    }
    let report = match truth::weak_relations(instance) {
        Ok(r) => r,
        Err(e) => return format!("error({e})"),
    };
    let non_defects: Vec<usize> = (0..instance.n())
        .filter(|p| !report.true_defects.contains(p))
        .collect();
    let max = match truth::max_subrepo_bruteforce(instance) {
        Ok(m) => m,
        Err(e) => return format!("error({e})"),
    };
    if keep.indices() == non_defects && keep.indices() == max.indices() {
        "exact".to_string()
    } else {
        "mismatch".to_string()
    }
}

fn verify_model(instance: &RepositoryInstance, model: &LearnedModel, check_deps: bool) -> String {
    if instance.n() > truth::MAX_BRUTE_FORCE_N {
        return "unverified".to_string();
    }
    let report = match truth::weak_relations(instance) {
        Ok(r) => r,
        Err(e) => return format!("error({e})"),
    };
    let mut exact = model.defects == report.true_defects
        && model.weak_conflicts == report.weak_conflict_pairs;
    if exact && check_deps {
        let truth_deps: BTreeSet<(usize, usize)> = report.weak_dep_pairs.iter().copied().collect();
        match model.effective_deps(instance.n(), instance.known_deps()) {
            Ok(effective) => exact = effective == truth_deps,
            Err(e) => return format!("error({e})"),
        }
    }
    if exact {
        "exact".to_string()
    } else {
        "mismatch".to_string()
    }
}

fn cmd_verify_cff(args: VerifyCffArgs) -> Result<ExitCode, String> {
    let (family, origin) = match &args.family {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
            let doc: CffJson = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            (doc.into_family().map_err(|e| e.to_string())?, "file")
        }
        None => (
            build_randomized_cff(args.n, args.a, args.b, args.delta, args.seed)
                .map_err(|e| e.to_string())?,
            "built",
        ),
    };
    if let Some(path) = &args.export {
        let doc = CffJson::from_family(&family);
        let text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
        std::fs::write(path, text).map_err(|e| e.to_string())?;
    }
    let check = verify_family(family.n(), family.a(), family.b(), family.vectors())
        .map_err(|e| e.to_string())?;
    match check {
        CffCheck::Holds => {
            println!(
                "pass: ({}, {}, {}) family of size {} ({origin})",
                family.n(),
                family.a(),
                family.b(),
                family.realized_size()
            );
            Ok(ExitCode::SUCCESS)
        }
        CffCheck::Counterexample { excluded, included } => {
            println!(
                "counterexample: no vector is zero on {excluded:?} and one on {included:?} \
                 (size {})",
                family.realized_size()
            );
            Ok(ExitCode::from(1))
        }
    }
}

fn cmd_bruteforce(args: BruteforceArgs) -> Result<ExitCode, String> {
    let text = std::fs::read_to_string(&args.instance).map_err(|e| e.to_string())?;
    let doc: InstanceJson = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let instance = doc.build().map_err(|e| e.to_string())?;
    let report = truth::weak_relations(&instance).map_err(|e| e.to_string())?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report.to_json()).map_err(|e| e.to_string())?
    );
    Ok(ExitCode::SUCCESS)
}
