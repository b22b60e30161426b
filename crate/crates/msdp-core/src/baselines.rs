//! Reference solvers: exhaustive enumeration and simulated annealing.
//!
//! The enumerator is the ground truth the sweep is tested against. It walks
//! the whole search space in lexicographic order and keeps the first strict
//! maximum, which makes its tie-break (lexicographically smallest argmax)
//! identical to the sweep's by construction. Annealing is the cheap
//! heuristic foil: no guarantees, but feasible output and a reproducible
//! trajectory for a fixed seed.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::problem::{Assignment, CoreError, Counters, ProblemH, SearchSpace, SymbolId};
use crate::solver::{SolveError, SolveReport};

/// Refuse to enumerate more than this many assignments by default.
pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000_000;

struct BestTracker {
    values: Vec<SymbolId>,
    objective: f64,
}

/// Per-stage allowed symbol lists, in index order.
fn allowed_lists(problem: &ProblemH) -> Vec<Vec<SymbolId>> {
    (0..problem.n())
        .map(|i| (0..problem.m()).filter(|&j| problem.stage_allows(i + 1, j)).collect())
        .collect()
}

fn space_estimate(problem: &ProblemH, allowed: &[Vec<SymbolId>]) -> u128 {
    match problem.structure() {
        SearchSpace::Vector => {
            let mut est: u128 = 1;
            for row in allowed {
                est = est.saturating_mul(row.len() as u128);
            }
            est
        }
        SearchSpace::Permutation => {
            let mut est: u128 = 1;
            for k in 1..=problem.n() as u128 {
                est = est.saturating_mul(k);
            }
            est
        }
    }
}

fn transitions_ok(problem: &ProblemH, values: &[SymbolId]) -> bool {
    (1..values.len()).all(|i| problem.transition_allowed(i, values[i - 1], values[i]))
}

/// Check one complete assignment, updating counters and the running best.
/// Enumeration order is lexicographic and only strict improvements replace
/// the best, so ties resolve toward the smaller symbol sequence.
fn visit(problem: &ProblemH, values: &[SymbolId], counters: &mut Counters, best: &mut Option<BestTracker>) {
    counters.csf_evals += 1;
    if !problem.csf().full_check(values) {
        return;
    }
    counters.acms_ops += 1;
    let f = problem.objective_of(values);
    if best.as_ref().map_or(true, |b| f > b.objective) {
        *best = Some(BestTracker { values: values.to_vec(), objective: f });
    }
}

/// Enumerate every vector whose first symbol is `first`, lexicographically.
fn enumerate_vectors_from(
    problem: &ProblemH,
    allowed: &[Vec<SymbolId>],
    first: SymbolId,
    counters: &mut Counters,
    best: &mut Option<BestTracker>,
) {
    let n = problem.n();
    let filtered = problem.has_transition_filter();
    if n == 1 {
        visit(problem, &[first], counters, best);
        return;
    }
    // Odometer over stages 2..=N; stage 1 is pinned to `first`.
    // `idx[k]` indexes into `allowed[k + 1]`.
    let mut idx = alloc::vec![0usize; n - 1];
    let mut values = alloc::vec![first; n];
    loop {
        for (k, &i) in idx.iter().enumerate() {
            values[k + 1] = allowed[k + 1][i];
        }
        if !filtered || transitions_ok(problem, &values) {
            visit(problem, &values, counters, best);
        }
        let mut pos = n - 1;
        loop {
            if pos == 0 {
                return;
            }
            idx[pos - 1] += 1;
            if idx[pos - 1] < allowed[pos].len() {
                break;
            }
            idx[pos - 1] = 0;
            pos -= 1;
        }
    }
}

fn next_permutation(x: &mut [SymbolId]) -> bool {
    if x.len() < 2 {
        return false;
    }
    let mut i = x.len() - 1;
    while i > 0 && x[i - 1] >= x[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = x.len() - 1;
    while x[j] <= x[i - 1] {
        j -= 1;
    }
    x.swap(i - 1, j);
    x[i..].reverse();
    true
}

/// Enumerate permutations of `0..N` starting with `first`, lexicographically.
fn enumerate_permutations_from(
    problem: &ProblemH,
    first: SymbolId,
    counters: &mut Counters,
    best: &mut Option<BestTracker>,
) {
    let n = problem.n();
    let filtered = problem.has_transition_filter();
    let masked = problem.has_stage_mask();
    if !problem.stage_allows(1, first) {
        return;
    }
    let mut tail: Vec<SymbolId> = (0..n).filter(|&s| s != first).collect();
    let mut values = alloc::vec![first; n];
    loop {
        values[1..].copy_from_slice(&tail);
        let walk_ok = (!masked || (1..n).all(|i| problem.stage_allows(i + 1, values[i])))
            && (!filtered || transitions_ok(problem, &values));
        if walk_ok {
            visit(problem, &values, counters, best);
        }
        if !next_permutation(&mut tail) {
            return;
        }
    }
}

fn enumerate_from(
    problem: &ProblemH,
    allowed: &[Vec<SymbolId>],
    first: SymbolId,
    counters: &mut Counters,
    best: &mut Option<BestTracker>,
) {
    match problem.structure() {
        SearchSpace::Vector => enumerate_vectors_from(problem, allowed, first, counters, best),
        SearchSpace::Permutation => enumerate_permutations_from(problem, first, counters, best),
    }
}

fn report_from(best: Option<BestTracker>, counters: Counters, n: usize) -> Result<SolveReport, SolveError> {
    match best {
        Some(b) => {
            let best = Assignment { values: b.values, objective: Some(b.objective) };
            Ok(SolveReport {
                top_k: alloc::vec![best.clone()],
                best,
                counters,
                survivor_demand: Vec::new(),
                node_demand: Vec::new(),
                ne_used: 0,
                optimal_certified: true,
            })
        }
        None => Err(SolveError::Infeasible { died_at_stage: n }),
    }
}

/// Exhaustive search with the default enumeration cap.
pub fn exhaustive_search(problem: &ProblemH) -> Result<SolveReport, SolveError> {
    exhaustive_search_with_cap(problem, DEFAULT_ENUMERATION_CAP)
}

/// Enumerate the whole search space (all vectors over the allowed symbols,
/// or all permutations for permutation-structured problems) and return the
/// exact maximum. Refuses spaces estimated above `cap`.
pub fn exhaustive_search_with_cap(problem: &ProblemH, cap: u128) -> Result<SolveReport, SolveError> {
    let allowed = allowed_lists(problem);
    let estimate = space_estimate(problem, &allowed);
    if estimate > cap {
        return Err(SolveError::EnumerationTooLarge { estimate, cap });
    }
    let mut counters = Counters::default();
    let mut best: Option<BestTracker> = None;
    let firsts: Vec<SymbolId> = match problem.structure() {
        SearchSpace::Vector => allowed[0].clone(),
        SearchSpace::Permutation => (0..problem.n()).collect(),
    };
    for first in firsts {
        enumerate_from(problem, &allowed, first, &mut counters, &mut best);
    }
    report_from(best, counters, problem.n())
}

/// Exhaustive search split across `threads` workers by first symbol.
/// Results and counters are merged in symbol order, so the outcome is
/// identical to the sequential run whatever the thread count.
#[cfg(feature = "std")]
pub fn exhaustive_search_threaded(
    problem: &ProblemH,
    cap: u128,
    threads: usize,
) -> Result<SolveReport, SolveError> {
    if threads <= 1 {
        return exhaustive_search_with_cap(problem, cap);
    }
    let allowed = allowed_lists(problem);
    let estimate = space_estimate(problem, &allowed);
    if estimate > cap {
        return Err(SolveError::EnumerationTooLarge { estimate, cap });
    }
    let firsts: Vec<SymbolId> = match problem.structure() {
        SearchSpace::Vector => allowed[0].clone(),
        SearchSpace::Permutation => (0..problem.n()).collect(),
    };
    let mut slots: Vec<Option<(Counters, Option<BestTracker>)>> = Vec::new();
    slots.resize_with(firsts.len(), || None);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (slot, &first) in firsts.iter().enumerate() {
            let allowed = &allowed;
            handles.push((
                slot,
                scope.spawn(move || {
                    let mut counters = Counters::default();
                    let mut best = None;
                    enumerate_from(problem, allowed, first, &mut counters, &mut best);
                    (counters, best)
                }),
            ));
            // Keep at most `threads` workers in flight.
            if handles.len() == threads {
                let (s, h) = handles.remove(0);
                slots[s] = Some(h.join().expect("enumeration worker panicked"));
            }
        }
        for (s, h) in handles {
            slots[s] = Some(h.join().expect("enumeration worker panicked"));
        }
    });
    let mut counters = Counters::default();
    let mut best: Option<BestTracker> = None;
    for slot in slots.into_iter().flatten() {
        counters.merge(&slot.0);
        if let Some(b) = slot.1 {
            // Strict improvement only: earlier slots hold lexicographically
            // smaller assignments, so ties keep the earlier one.
            if best.as_ref().map_or(true, |cur| b.objective > cur.objective) {
                best = Some(b);
            }
        }
    }
    report_from(best, counters, problem.n())
}

/// Move proposal shape for annealing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NeighborKind {
    /// Replace one stage's symbol with a different allowed symbol.
    SingleSymbolFlip,
    /// Swap two adjacent positions; requires permutation structure.
    AdjacentSwap,
}

#[derive(Clone, Copy, Debug)]
pub struct SaConfig {
    pub initial_temperature: f64,
    /// Geometric cooling factor applied after every iteration, in (0, 1].
    pub cooling_rate: f64,
    pub iterations: u64,
    pub neighbor: NeighborKind,
    pub seed: u64,
    /// Random restarts allowed while hunting a feasible starting point.
    pub max_init_attempts: u32,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            initial_temperature: 1.0,
            cooling_rate: 0.995,
            iterations: 1000,
            neighbor: NeighborKind::SingleSymbolFlip,
            seed: 42,
            max_init_attempts: 1000,
        }
    }
}

fn validate_sa(problem: &ProblemH, config: &SaConfig) -> Result<(), SolveError> {
    if !(config.initial_temperature.is_finite() && config.initial_temperature > 0.0) {
        return Err(CoreError::InvalidInstance(String::from("initial temperature must be positive")).into());
    }
    if !(config.cooling_rate > 0.0 && config.cooling_rate <= 1.0) {
        return Err(CoreError::InvalidInstance(String::from("cooling rate must lie in (0, 1]")).into());
    }
    if config.iterations == 0 {
        return Err(CoreError::InvalidInstance(String::from("iteration count must be at least 1")).into());
    }
    if config.max_init_attempts == 0 {
        return Err(CoreError::InvalidInstance(String::from("need at least one init attempt")).into());
    }
    if config.neighbor == NeighborKind::AdjacentSwap && problem.structure() != SearchSpace::Permutation {
        return Err(CoreError::InvalidInstance(String::from(
            "adjacent-swap neighborhood requires permutation structure",
        ))
        .into());
    }
    Ok(())
}

/// Metropolis simulated annealing over feasible assignments.
///
/// Starts from a canonical assignment (all minimum allowed symbols, or the
/// identity permutation) and falls back to seeded random restarts when that
/// is infeasible. Infeasible proposals are always rejected; feasible ones
/// are accepted when improving, or with probability `exp(delta / T)` when
/// not. The result is the best feasible assignment visited, never certified.
pub fn simulated_annealing(problem: &ProblemH, config: &SaConfig) -> Result<SolveReport, SolveError> {
    validate_sa(problem, config)?;
    let n = problem.n();
    let allowed = allowed_lists(problem);
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut counters = Counters::default();

    let canonical: Vec<SymbolId> = match config.neighbor {
        NeighborKind::SingleSymbolFlip => allowed.iter().map(|row| row[0]).collect(),
        NeighborKind::AdjacentSwap => (0..n).collect(),
    };
    let mut current: Option<Vec<SymbolId>> = None;
    for attempt in 0..config.max_init_attempts {
        let candidate = if attempt == 0 {
            canonical.clone()
        } else {
            match config.neighbor {
                NeighborKind::SingleSymbolFlip => allowed
                    .iter()
                    .map(|row| row[rng.gen_range(0..row.len())])
                    .collect(),
                NeighborKind::AdjacentSwap => {
                    let mut perm: Vec<SymbolId> = (0..n).collect();
                    for i in (1..n).rev() {
                        perm.swap(i, rng.gen_range(0..=i));
                    }
                    perm
                }
            }
        };
        if !transitions_ok(problem, &candidate) {
            continue;
        }
        counters.csf_evals += 1;
        if problem.csf().full_check(&candidate) {
            current = Some(candidate);
            break;
        }
    }
    let mut current = current.ok_or(SolveError::NoFeasibleStart { attempts: config.max_init_attempts })?;
    counters.acms_ops += 1;
    let mut current_f = problem.objective_of(&current);
    let mut best = current.clone();
    let mut best_f = current_f;

    // Stages where a flip can actually change something.
    let flippable: Vec<usize> = (0..n).filter(|&i| allowed[i].len() >= 2).collect();
    let degenerate = match config.neighbor {
        NeighborKind::SingleSymbolFlip => flippable.is_empty(),
        NeighborKind::AdjacentSwap => n < 2,
    };

    let mut temperature = config.initial_temperature;
    if !degenerate {
        for _ in 0..config.iterations {
            let mut proposal = current.clone();
            match config.neighbor {
                NeighborKind::SingleSymbolFlip => {
                    let stage = flippable[rng.gen_range(0..flippable.len())];
                    let row = &allowed[stage];
                    let cur = row
                        .iter()
                        .position(|&s| s == proposal[stage])
                        .expect("current symbol is always allowed");
                    // Uniform over the other allowed symbols of this stage.
                    let mut pick = rng.gen_range(0..row.len() - 1);
                    if pick >= cur {
                        pick += 1;
                    }
                    proposal[stage] = row[pick];
                }
                NeighborKind::AdjacentSwap => {
                    let i = rng.gen_range(0..n - 1);
                    proposal.swap(i, i + 1);
                }
            }
            if !transitions_ok(problem, &proposal) {
                temperature *= config.cooling_rate;
                continue;
            }
            counters.csf_evals += 1;
            if problem.csf().full_check(&proposal) {
                counters.acms_ops += 1;
                let f = problem.objective_of(&proposal);
                let delta = f - current_f;
                let accept = delta >= 0.0
                    || (temperature > 0.0 && rng.gen::<f64>() < libm::exp(delta / temperature));
                if accept {
                    current = proposal;
                    current_f = f;
                    if current_f > best_f {
                        best = current.clone();
                        best_f = current_f;
                    }
                }
            }
            temperature *= config.cooling_rate;
        }
    }

    let best = Assignment { values: best, objective: Some(best_f) };
    Ok(SolveReport {
        top_k: alloc::vec![best.clone()],
        best,
        counters,
        survivor_demand: Vec::new(),
        node_demand: Vec::new(),
        ne_used: 0,
        optimal_certified: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{BudgetCsf, PermutationCsf, RandomCsf, Unconstrained};
    use crate::problem::{Alphabet, CsfOracle, Reward};
    use crate::solver::{msdp_solve, SurvivorPolicy};
    use alloc::boxed::Box;

    fn problem_with(n: usize, m: usize, table: Vec<Vec<f64>>, csf: Box<dyn CsfOracle>) -> ProblemH {
        ProblemH::new(n, Alphabet::indexed(m).unwrap(), alloc::vec![1.0; n], Reward::Table(table), csf)
            .unwrap()
    }

    #[test]
    fn counts_unconstrained_space_exactly() {
        let p = problem_with(3, 2, alloc::vec![alloc::vec![0.0, 1.0]; 3], Box::new(Unconstrained));
        let r = exhaustive_search(&p).unwrap();
        assert_eq!(r.counters.csf_evals, 8);
        assert_eq!(r.counters.acms_ops, 8);
        assert_eq!(r.best.values, alloc::vec![1, 1, 1]);
        assert_eq!(r.best.objective, Some(3.0));
        assert!(r.optimal_certified);
    }

    #[test]
    fn agrees_with_sweep_on_awkward_constraints() {
        for seed in [11u64, 23, 35] {
            let table = alloc::vec![
                alloc::vec![0.4, -1.0, 2.1],
                alloc::vec![1.1, 0.0, -0.3],
                alloc::vec![0.9, 2.2, 0.5],
            ];
            let make =
                || problem_with(3, 3, table.clone(), Box::new(RandomCsf::new(seed, 0.5).unwrap()));
            let es = exhaustive_search(&make());
            let dp = msdp_solve(&make(), &SurvivorPolicy::keep_all());
            match (es, dp) {
                (Ok(a), Ok(b)) => {
                    assert_eq!(a.best.values, b.best.values, "seed {seed}");
                    assert_eq!(a.best.objective, b.best.objective, "seed {seed}");
                }
                (Err(SolveError::Infeasible { .. }), Err(SolveError::Infeasible { .. })) => {}
                (a, b) => panic!("disagreement at seed {seed}: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn permutation_structure_enumerates_factorially() {
        let table = alloc::vec![
            alloc::vec![3.0, 1.0, 0.0],
            alloc::vec![0.0, 2.0, 1.0],
            alloc::vec![1.0, 0.0, 4.0],
        ];
        let p = ProblemH::new(
            3,
            Alphabet::indexed(3).unwrap(),
            alloc::vec![1.0; 3],
            Reward::Table(table),
            Box::new(PermutationCsf::new(3).unwrap()),
        )
        .unwrap()
        .with_permutation_structure()
        .unwrap();
        let r = exhaustive_search(&p).unwrap();
        assert_eq!(r.counters.csf_evals, 6);
        assert_eq!(r.counters.acms_ops, 6);
        // Identity scores 3+2+4 = 9, the diagonal argmax.
        assert_eq!(r.best.values, alloc::vec![0, 1, 2]);
        assert_eq!(r.best.objective, Some(9.0));
    }

    #[test]
    fn refuses_oversized_spaces() {
        let p = problem_with(8, 4, alloc::vec![alloc::vec![0.0; 4]; 8], Box::new(Unconstrained));
        match exhaustive_search_with_cap(&p, 1000) {
            Err(SolveError::EnumerationTooLarge { estimate, cap: 1000 }) => {
                assert_eq!(estimate, 65536);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn reports_infeasible_when_nothing_passes() {
        let cost = alloc::vec![alloc::vec![5.0, 6.0]; 2];
        let p = problem_with(
            2,
            2,
            alloc::vec![alloc::vec![0.0, 1.0]; 2],
            Box::new(BudgetCsf::new(cost, 1.0).unwrap()),
        );
        assert!(matches!(exhaustive_search(&p), Err(SolveError::Infeasible { died_at_stage: 2 })));
    }

    #[cfg(feature = "std")]
    #[test]
    fn threaded_enumeration_matches_sequential() {
        let table = alloc::vec![
            alloc::vec![0.4, -1.0, 2.1, 0.2],
            alloc::vec![1.1, 0.0, -0.3, 1.4],
            alloc::vec![0.9, 2.2, 0.5, -0.6],
            alloc::vec![0.1, 0.3, 1.9, 0.8],
        ];
        let make = || problem_with(4, 4, table.clone(), Box::new(RandomCsf::new(3, 0.5).unwrap()));
        let seq = exhaustive_search(&make()).unwrap();
        for threads in [2usize, 3, 8] {
            let par = exhaustive_search_threaded(&make(), DEFAULT_ENUMERATION_CAP, threads).unwrap();
            assert_eq!(par.best.values, seq.best.values);
            assert_eq!(par.best.objective, seq.best.objective);
            assert_eq!(par.counters, seq.counters);
        }
    }

    #[test]
    fn annealing_is_seed_deterministic_and_never_beats_exact() {
        let table = alloc::vec![
            alloc::vec![0.5, 2.0, -0.5],
            alloc::vec![1.0, 0.0, 3.0],
            alloc::vec![-1.0, 1.5, 0.5],
        ];
        let cost = alloc::vec![alloc::vec![1.0, 2.0, 3.0]; 3];
        let make = || {
            problem_with(3, 3, table.clone(), Box::new(BudgetCsf::new(cost.clone(), 6.0).unwrap()))
        };
        let config = SaConfig { iterations: 200, seed: 7, ..SaConfig::default() };
        let a = simulated_annealing(&make(), &config).unwrap();
        let b = simulated_annealing(&make(), &config).unwrap();
        assert_eq!(a.best.values, b.best.values);
        assert_eq!(a.counters, b.counters);
        assert!(!a.optimal_certified);
        let exact = exhaustive_search(&make()).unwrap();
        assert!(a.best.objective.unwrap() <= exact.best.objective.unwrap());
        assert!(make().csf().full_check(&a.best.values));
    }

    #[test]
    fn annealing_swaps_permutations_feasibly() {
        let sim = alloc::vec![
            alloc::vec![0.0, 5.0, 1.0],
            alloc::vec![5.0, 0.0, 2.0],
            alloc::vec![1.0, 2.0, 0.0],
        ];
        let make = || {
            ProblemH::new(
                3,
                Alphabet::indexed(3).unwrap(),
                alloc::vec![1.0; 3],
                Reward::Pairwise(sim.clone()),
                Box::new(PermutationCsf::new(3).unwrap()),
            )
            .unwrap()
            .with_permutation_structure()
            .unwrap()
        };
        let config = SaConfig {
            neighbor: NeighborKind::AdjacentSwap,
            iterations: 100,
            seed: 3,
            ..SaConfig::default()
        };
        let r = simulated_annealing(&make(), &config).unwrap();
        assert!(make().csf().full_check(&r.best.values));
        let exact = exhaustive_search(&make()).unwrap();
        assert!(r.best.objective.unwrap() <= exact.best.objective.unwrap());
    }

    #[test]
    fn adjacent_swap_needs_permutation_structure() {
        let p = problem_with(2, 2, alloc::vec![alloc::vec![0.0, 1.0]; 2], Box::new(Unconstrained));
        let config = SaConfig { neighbor: NeighborKind::AdjacentSwap, ..SaConfig::default() };
        assert!(matches!(
            simulated_annealing(&p, &config),
            Err(SolveError::Core(CoreError::InvalidInstance(_)))
        ));
    }

    #[test]
    fn annealing_handles_single_point_spaces() {
        let p = problem_with(2, 1, alloc::vec![alloc::vec![2.5]; 2], Box::new(Unconstrained));
        let r = simulated_annealing(&p, &SaConfig::default()).unwrap();
        assert_eq!(r.best.values, alloc::vec![0, 0]);
        assert_eq!(r.best.objective, Some(5.0));
    }
}
