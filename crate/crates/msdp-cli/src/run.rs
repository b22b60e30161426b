//! Solver dispatch shared by `solve` and `bench`.

use std::time::Instant;

use msdp_core::adapters::dfa::assemble_sequence;
use msdp_core::baselines::{
    exhaustive_search_threaded, simulated_annealing, NeighborKind, SaConfig,
    DEFAULT_ENUMERATION_CAP,
};
use msdp_core::{msdp_solve, SearchSpace, SolveReport, SurvivorMode, SurvivorPolicy};

use crate::format::{BuiltInstance, LoadedInstance};
use crate::report::{report_dto, row_err, row_ok, InstanceReport, RowDto};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SolverKind {
    Msdp,
    Es,
    Sa,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Msdp => "msdp",
            SolverKind::Es => "es",
            SolverKind::Sa => "sa",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub policy: SurvivorPolicy,
    pub sa_iters: Option<u64>,
    pub sa_seed: u64,
    /// Worker threads for the enumeration baseline; results are identical
    /// for any value.
    pub threads: usize,
    pub es_cap: u128,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            policy: SurvivorPolicy::default(),
            sa_iters: None,
            sa_seed: 42,
            threads: 1,
            es_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// Builds the policy from CLI flags plus the `MSDP_BUDGET` environment
/// override for the completion-search budget.
pub fn policy_from_flags(
    ne_cap: Option<usize>,
    merge_dominated: bool,
) -> Result<SurvivorPolicy, CliError> {
    let mode = match ne_cap {
        Some(0) => return Err(CliError::Parse(String::from("--ne-cap must be at least 1"))),
        Some(k) => SurvivorMode::Cap(k),
        None => SurvivorMode::KeepAllFeasible,
    };
    let mut policy = SurvivorPolicy { mode, merge_dominated, completion_budget: None };
    if let Ok(raw) = std::env::var("MSDP_BUDGET") {
        let budget: u64 = raw
            .parse()
            .map_err(|_| CliError::Parse(format!("MSDP_BUDGET must be an integer, got {raw:?}")))?;
        policy.completion_budget = Some(budget);
    }
    Ok(policy)
}

/// Annealing budgets tuned per bundled benchmark so the default proposal
/// counts land within the published comparison totals.
fn default_sa_iters(label: &str) -> u64 {
    match label {
        "adc" => 2609,
        "dfa" => 189,
        _ => SaConfig::default().iterations,
    }
}

fn sa_config(built: &BuiltInstance, opts: &RunOptions) -> SaConfig {
    let neighbor = match built.problem.structure() {
        SearchSpace::Permutation => NeighborKind::AdjacentSwap,
        SearchSpace::Vector => NeighborKind::SingleSymbolFlip,
    };
    SaConfig {
        iterations: opts.sa_iters.unwrap_or_else(|| default_sa_iters(built.label)),
        neighbor,
        seed: opts.sa_seed,
        ..SaConfig::default()
    }
}

/// Runs one solver on a freshly built copy of the instance.
pub fn execute(
    loaded: &LoadedInstance,
    solver: SolverKind,
    opts: &RunOptions,
) -> Result<(SolveReport, BuiltInstance, f64), CliError> {
    let built = loaded.build()?;
    let start = Instant::now();
    let outcome = match solver {
        SolverKind::Msdp => msdp_solve(&built.problem, &opts.policy),
        SolverKind::Es => exhaustive_search_threaded(&built.problem, opts.es_cap, opts.threads),
        SolverKind::Sa => simulated_annealing(&built.problem, &sa_config(&built, opts)),
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1000.0;
    let report = outcome?;
    Ok((report, built, wall_ms))
}

/// Pairwise similarity is symmetric, so an optimal ordering carries no
/// direction. Merge both orientations and keep the tighter one (more
/// overlap captured means a shorter reconstruction).
pub fn oriented_assembly(order: &[usize], fragments: &[String]) -> Result<String, CliError> {
    let forward = assemble_sequence(order, fragments)?;
    let mut reversed = order.to_vec();
    reversed.reverse();
    let backward = assemble_sequence(&reversed, fragments)?;
    Ok(if backward.len() < forward.len() { backward } else { forward })
}

/// Runs a solver list, collecting one row each; individual solver failures
/// become error rows instead of aborting the rest.
pub fn instance_report(
    name: &str,
    loaded: &LoadedInstance,
    solvers: &[SolverKind],
    opts: &RunOptions,
) -> Result<InstanceReport, CliError> {
    let mut rows: Vec<RowDto> = Vec::new();
    let mut assembly: Option<String> = None;
    for &solver in solvers {
        let start = Instant::now();
        match execute(loaded, solver, opts) {
            Ok((report, built, wall_ms)) => {
                if assembly.is_none() && solver != SolverKind::Sa {
                    if let Some(fragments) = &built.fragments {
                        assembly = Some(oriented_assembly(&report.best.values, fragments)?);
                    }
                }
                rows.push(row_ok(solver.name(), wall_ms, report_dto(&report, &built.domain)));
            }
            Err(CliError::Io(e)) => return Err(CliError::Io(e)),
            Err(CliError::Parse(e)) => return Err(CliError::Parse(e)),
            Err(e) => {
                let wall_ms = start.elapsed().as_secs_f64() * 1000.0;
                rows.push(row_err(solver.name(), wall_ms, e.to_string()));
            }
        }
    }
    Ok(InstanceReport { instance: name.to_string(), rows, assembly })
}
