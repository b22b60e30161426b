//! Multi-survivor trellis sweep.
//!
//! Classic dynamic programming keeps one best partial assignment per trellis
//! node. Under coupled constraints that is wrong: the prefix that looks best
//! at stage `i` may admit only poor completions, while a worse-looking
//! prefix completes to the optimum. The fix is to let each stage carry a
//! population of survivors. With no cap on the population size the sweep is
//! exhaustive over feasible-completable prefixes and provably exact; with a
//! cap it degrades gracefully and reports whether the result is still
//! certified optimal (no potentially useful survivor was ever evicted).
//!
//! Survivors are filtered by the constraint oracle at every extension.
//! `Unknown` answers fall back to a budgeted depth-first completion search;
//! if even that budget runs out the survivor is kept conservatively, which
//! can waste work but never loses the optimum.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::problem::{
    extend, Assignment, CoreError, Counters, Digest, Feasibility, PartialAssignment, ProblemH,
    SymbolId,
};
use crate::trellis::{build_trellis, Trellis};

/// A live partial assignment, with its dominance key when the oracle
/// provides one.
#[derive(Clone, Debug)]
pub struct Survivor {
    pub partial: PartialAssignment,
    pub digest: Option<Digest>,
}

/// How many survivors a stage may retain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurvivorMode {
    /// No cap: exhaustive over feasible-completable prefixes, always exact.
    KeepAllFeasible,
    /// At most `k` survivors per stage, shared across the stage's nodes.
    Cap(usize),
    /// Shorthand for `Cap(1)`: the classic single-survivor recursion.
    SingleSurvivor,
}

/// Retention policy for the sweep.
#[derive(Clone, Copy, Debug)]
pub struct SurvivorPolicy {
    pub mode: SurvivorMode,
    /// Merge survivors whose oracle digests match, keeping the best. Only
    /// sound when equal digests imply interchangeable futures; oracles that
    /// cannot promise that return no digest and are never merged.
    pub merge_dominated: bool,
    /// Node-expansion budget for one completion search. `None` uses
    /// `10 * M^min(4, remaining stages)`.
    pub completion_budget: Option<u64>,
}

impl Default for SurvivorPolicy {
    fn default() -> Self {
        SurvivorPolicy {
            mode: SurvivorMode::KeepAllFeasible,
            merge_dominated: false,
            completion_budget: None,
        }
    }
}

impl SurvivorPolicy {
    pub fn keep_all() -> Self {
        SurvivorPolicy::default()
    }

    pub fn cap(k: usize) -> Self {
        SurvivorPolicy { mode: SurvivorMode::Cap(k), ..SurvivorPolicy::default() }
    }

    fn validated_cap(&self) -> Result<Option<usize>, SolveError> {
        match self.mode {
            SurvivorMode::KeepAllFeasible => Ok(None),
            SurvivorMode::Cap(0) => Err(SolveError::Core(CoreError::InvalidInstance(
                String::from("survivor cap must be at least 1"),
            ))),
            SurvivorMode::Cap(k) => Ok(Some(k)),
            SurvivorMode::SingleSurvivor => Ok(Some(1)),
        }
    }
}

/// Solver outcome plus the bookkeeping needed to audit it.
#[derive(Clone, Debug)]
pub struct SolveReport {
    /// Best feasible assignment found; ties broken toward the
    /// lexicographically smallest symbol sequence.
    pub best: Assignment,
    /// Final-stage survivors in rank order, truncated to the 16 best.
    pub top_k: Vec<Assignment>,
    pub counters: Counters,
    /// Per-stage survivor counts before any merging or truncation: how many
    /// the stage demanded for an exact sweep.
    pub survivor_demand: Vec<usize>,
    /// The same counts split per node: `node_demand[i][j]` survivors wanted
    /// to enter the stage-`i+1` node for symbol `j`.
    pub node_demand: Vec<Vec<usize>>,
    /// High-water mark of survivors actually retained per stage.
    pub ne_used: usize,
    /// True when no stage evicted a survivor that could still have mattered,
    /// so the result is guaranteed optimal.
    pub optimal_certified: bool,
}

impl SolveReport {
    /// Smallest per-stage survivor cap certain to reproduce the exact
    /// result: the largest stage demand observed.
    pub fn ne_bound(&self) -> usize {
        self.survivor_demand.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    Core(CoreError),
    /// Every survivor died at this stage: no feasible assignment exists
    /// (or, under a tight completion budget, none was provable).
    Infeasible { died_at_stage: usize },
    /// A standalone completion search ran out of its expansion budget
    /// before deciding.
    CompletionBudgetExhausted { stage: usize, budget: u64 },
    /// The enumeration baseline refused a search space larger than its cap.
    EnumerationTooLarge { estimate: u128, cap: u128 },
    /// Annealing could not find a feasible starting point.
    NoFeasibleStart { attempts: u32 },
}

impl From<CoreError> for SolveError {
    fn from(e: CoreError) -> Self {
        SolveError::Core(e)
    }
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Core(e) => write!(f, "{e}"),
            SolveError::Infeasible { died_at_stage } => {
                write!(f, "instance infeasible: all survivors died at stage {died_at_stage}")
            }
            SolveError::CompletionBudgetExhausted { stage, budget } => {
                write!(f, "completion search at stage {stage} exhausted its budget of {budget}")
            }
            SolveError::EnumerationTooLarge { estimate, cap } => {
                write!(f, "search space of about {estimate} assignments exceeds the cap of {cap}")
            }
            SolveError::NoFeasibleStart { attempts } => {
                write!(f, "no feasible starting point found in {attempts} attempts")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SolveError {}

/// Rank survivors: higher accumulated value first, then lexicographically
/// smaller prefix. Values compare exactly; this is also the tie-break the
/// enumeration baseline applies, so both report the same argmax.
fn survivor_order(a: &Survivor, b: &Survivor) -> Ordering {
    match b.partial.lambda().partial_cmp(&a.partial.lambda()) {
        Some(Ordering::Equal) | None => a.partial.prefix().cmp(b.partial.prefix()),
        Some(o) => o,
    }
}

fn default_completion_budget(m: usize, remaining_stages: usize) -> u64 {
    let exp = remaining_stages.min(4) as u32;
    10u64.saturating_mul((m as u64).saturating_pow(exp))
}

/// Depth-first completability search under `remaining` node expansions.
/// `Some(answer)` is exact; `None` means the budget ran out first.
fn complete_within(
    trellis: &Trellis<'_>,
    partial: &PartialAssignment,
    remaining: &mut u64,
    counters: &mut Counters,
) -> Option<bool> {
    let problem = trellis.problem();
    let n = problem.n();
    let next = partial.stage() + 1;
    for symbol in trellis.stage_symbols(next) {
        if let Some(&last) = partial.prefix().last() {
            if !problem.transition_allowed(next - 1, last, symbol) {
                continue;
            }
        }
        if *remaining == 0 {
            return None;
        }
        *remaining -= 1;
        counters.csf_evals += 1;
        let child = match extend(partial, symbol, problem) {
            Ok(c) => c,
            Err(_) => return Some(false),
        };
        if child.stage() == n {
            if problem.csf().full_check(child.prefix()) {
                return Some(true);
            }
        } else {
            match problem.csf().partial_check(&child) {
                Feasibility::Feasible => return Some(true),
                Feasibility::Infeasible => {}
                Feasibility::Unknown => match complete_within(trellis, &child, remaining, counters) {
                    Some(true) => return Some(true),
                    Some(false) => {}
                    None => return None,
                },
            }
        }
    }
    Some(false)
}

/// Decide whether `partial` has any feasible completion, expanding at most
/// `budget` candidate nodes. Each expansion costs one `csf_evals`.
pub fn completion_search(
    partial: &PartialAssignment,
    problem: &ProblemH,
    budget: u64,
    counters: &mut Counters,
) -> Result<bool, SolveError> {
    let n = problem.n();
    if partial.stage() > n {
        return Err(SolveError::Core(CoreError::InvalidAssignment(String::from(
            "prefix longer than N",
        ))));
    }
    if partial.stage() == n {
        counters.csf_evals += 1;
        return Ok(problem.csf().full_check(partial.prefix()));
    }
    let trellis = build_trellis(problem, None)?;
    let mut remaining = budget;
    complete_within(&trellis, partial, &mut remaining, counters)
        .ok_or(SolveError::CompletionBudgetExhausted { stage: partial.stage(), budget })
}

/// Extend every incoming survivor into (`stage`, `node`), filter by the
/// oracle, and return the keepers sorted by rank. No merging or truncation
/// happens here; the caller owns those so it can first record demand.
fn extend_into_node<'a, I>(
    trellis: &Trellis<'_>,
    stage: usize,
    node: SymbolId,
    incoming: I,
    policy: &SurvivorPolicy,
    counters: &mut Counters,
) -> Result<Vec<Survivor>, SolveError>
where
    I: Iterator<Item = &'a Survivor>,
{
    let problem = trellis.problem();
    let n = problem.n();
    let mut kept = Vec::new();
    for s in incoming {
        if stage > 1 {
            let from = *s.partial.prefix().last().expect("survivor past stage 1 has a prefix");
            if !problem.transition_allowed(stage - 1, from, node) {
                continue;
            }
        }
        counters.acms_ops += 1;
        let child = extend(&s.partial, node, problem)?;
        let keep = if stage == n {
            counters.csf_evals += 1;
            let feasible = problem.csf().full_check(child.prefix());
            if feasible {
                problem.csf().observe_feasible(child.prefix(), child.lambda());
            }
            feasible
        } else {
            counters.csf_evals += 1;
            match problem.csf().partial_check(&child) {
                Feasibility::Feasible => true,
                Feasibility::Infeasible => false,
                Feasibility::Unknown => {
                    let budget = policy
                        .completion_budget
                        .unwrap_or_else(|| default_completion_budget(problem.m(), n - stage));
                    let mut remaining = budget;
                    // A budget miss keeps the survivor: wasteful but safe,
                    // the final-stage full check still guards the result.
                    complete_within(trellis, &child, &mut remaining, counters).unwrap_or(true)
                }
            }
        };
        if keep {
            let digest = problem.csf().state_digest(&child);
            kept.push(Survivor { partial: child, digest });
        }
    }
    kept.sort_by(survivor_order);
    Ok(kept)
}

/// Drop lower-ranked survivors whose digest was already seen. Input must be
/// sorted by rank; survivors without a digest always stay.
fn merge_by_digest(sorted: Vec<Survivor>) -> Vec<Survivor> {
    let mut seen: BTreeSet<u128> = BTreeSet::new();
    let mut out = Vec::with_capacity(sorted.len());
    for s in sorted {
        match s.digest {
            Some(Digest(d)) => {
                if seen.insert(d) {
                    out.push(s);
                }
            }
            None => out.push(s),
        }
    }
    out
}

/// One add-compare-multiple-select step: feasible extensions of `incoming`
/// into (`stage`, `node`), ranked, then merged and truncated per `policy`.
pub fn acms(
    problem: &ProblemH,
    stage: usize,
    node: SymbolId,
    incoming: &[Survivor],
    policy: &SurvivorPolicy,
    counters: &mut Counters,
) -> Result<Vec<Survivor>, SolveError> {
    if stage < 1 || stage > problem.n() {
        return Err(SolveError::Core(CoreError::InvalidAssignment(String::from(
            "stage out of range",
        ))));
    }
    if node >= problem.m() {
        return Err(SolveError::Core(CoreError::InvalidAssignment(String::from(
            "node symbol out of alphabet range",
        ))));
    }
    let cap = policy.validated_cap()?;
    let trellis = build_trellis(problem, None)?;
    if !trellis.allows(stage, node) {
        return Err(SolveError::Core(CoreError::InvalidAssignment(String::from(
            "node symbol not allowed at this stage",
        ))));
    }
    for s in incoming {
        if s.partial.stage() != stage - 1 {
            return Err(SolveError::Core(CoreError::InvalidAssignment(String::from(
                "incoming survivor not at the previous stage",
            ))));
        }
    }
    let mut kept = extend_into_node(&trellis, stage, node, incoming.iter(), policy, counters)?;
    if policy.merge_dominated {
        kept = merge_by_digest(kept);
    }
    if let Some(k) = cap {
        kept.truncate(k);
    }
    Ok(kept)
}

/// Sweep the trellis stage by stage, retaining survivors per `policy`.
///
/// With `KeepAllFeasible` the result is exact and `optimal_certified` is
/// true. Under a cap, truncation at any non-final stage clears the flag
/// (an evicted survivor might have completed better); truncation at the
/// final stage cannot change the maximum and keeps it set.
pub fn msdp_solve(problem: &ProblemH, policy: &SurvivorPolicy) -> Result<SolveReport, SolveError> {
    let cap = policy.validated_cap()?;
    let trellis = build_trellis(problem, None)?;
    let n = problem.n();
    let m = problem.m();
    let mut counters = Counters::default();
    let mut certified = true;
    let mut survivor_demand = Vec::with_capacity(n);
    let mut node_demand = Vec::with_capacity(n);
    let mut ne_used = 0usize;

    let root = Survivor { partial: PartialAssignment::empty(), digest: None };
    let mut prev: Vec<Vec<Survivor>> = alloc::vec![Vec::new(); m];

    for stage in 1..=n {
        let mut lists: Vec<Vec<Survivor>> = alloc::vec![Vec::new(); m];
        let mut demands = alloc::vec![0usize; m];
        for node in trellis.stage_symbols(stage) {
            let kept = if stage == 1 {
                extend_into_node(
                    &trellis,
                    stage,
                    node,
                    core::slice::from_ref(&root).iter(),
                    policy,
                    &mut counters,
                )?
            } else {
                extend_into_node(
                    &trellis,
                    stage,
                    node,
                    prev.iter().flat_map(|l| l.iter()),
                    policy,
                    &mut counters,
                )?
            };
            demands[node] = kept.len();
            lists[node] = if policy.merge_dominated { merge_by_digest(kept) } else { kept };
        }
        survivor_demand.push(demands.iter().sum());
        node_demand.push(demands);

        let mut total: usize = lists.iter().map(Vec::len).sum();
        if let Some(k) = cap {
            if total > k {
                let mut flat: Vec<Survivor> = lists.into_iter().flatten().collect();
                flat.sort_by(survivor_order);
                flat.truncate(k);
                if stage < n {
                    certified = false;
                }
                lists = alloc::vec![Vec::new(); m];
                for s in flat {
                    let node = *s.partial.prefix().last().expect("survivor has a prefix");
                    lists[node].push(s);
                }
                total = k;
            }
        }
        if total == 0 {
            return Err(SolveError::Infeasible { died_at_stage: stage });
        }
        ne_used = ne_used.max(total);
        prev = lists;
    }

    let mut finals: Vec<Survivor> = prev.into_iter().flatten().collect();
    finals.sort_by(survivor_order);
    let to_assignment = |s: &Survivor| Assignment {
        values: s.partial.prefix().to_vec(),
        objective: Some(s.partial.lambda()),
    };
    let best = to_assignment(&finals[0]);
    let top_k = finals.iter().take(16).map(to_assignment).collect();
    Ok(SolveReport {
        best,
        top_k,
        counters,
        survivor_demand,
        node_demand,
        ne_used,
        optimal_certified: certified,
    })
}

/// Measure the per-stage survivor demand of an exact sweep and return its
/// maximum: any cap at least this large is guaranteed to stay exact. Runs
/// with an effectively unlimited completion budget so conservative keeps
/// cannot inflate the measurement.
pub fn measure_ne_bound(problem: &ProblemH) -> Result<usize, SolveError> {
    let policy = SurvivorPolicy {
        mode: SurvivorMode::KeepAllFeasible,
        merge_dominated: false,
        completion_budget: Some(u64::MAX),
    };
    let report = msdp_solve(problem, &policy)?;
    Ok(report.ne_bound())
}
