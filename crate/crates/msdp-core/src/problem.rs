//! Problem definition for stage-separable constrained maximization.
//!
//! An instance asks for a length-`N` vector `x` over a finite alphabet of
//! `M` symbols maximizing `f(x) = sum_i b_i * phi_i(x_i)` subject to an
//! arbitrary feasibility predicate supplied as a [`CsfOracle`]. The additive
//! structure is what the trellis sweep exploits; the oracle is deliberately
//! opaque so that coupled constraints (budgets, orderings, permutations,
//! random subsets) all fit behind one interface.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Index into the alphabet, `0..M`.
pub type SymbolId = usize;

/// Three-valued feasibility answer for a partial assignment.
///
/// `Feasible` and `Infeasible` are promises: `Feasible` means at least one
/// feasible completion exists, `Infeasible` means none does. Oracles that
/// cannot decide cheaply return `Unknown` and the solver falls back to an
/// explicit completion search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible,
    Unknown,
}

/// Opaque equivalence-class key for dominance merging.
///
/// Two partial assignments with equal digests must have identical feasible
/// completion sets, so keeping only the higher-value one is lossless.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(pub u128);

/// Work counters threaded through every solver and baseline.
///
/// `csf_evals` counts feasibility queries (full checks, partial checks and
/// completion-search node expansions). `acms_ops` counts survivor extensions
/// processed, or objective evaluations for the enumeration baselines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub csf_evals: u64,
    pub acms_ops: u64,
}

impl Counters {
    pub fn total(&self) -> u64 {
        self.csf_evals + self.acms_ops
    }

    pub fn merge(&mut self, other: &Counters) {
        self.csf_evals += other.csf_evals;
        self.acms_ops += other.acms_ops;
    }
}

/// Constraint satisfaction function: the feasibility side of an instance.
///
/// `full_check` is the ground truth on complete vectors. `partial_check` may
/// only return `Feasible`/`Infeasible` when it can prove the answer for the
/// prefix (some feasible completion exists / none does); when in doubt it
/// must return `Unknown` rather than guess.
pub trait CsfOracle: Send + Sync {
    /// Exact feasibility of a complete assignment (`values.len() == N`).
    fn full_check(&self, values: &[SymbolId]) -> bool;

    /// Conservative completability test for a prefix. Defaults to `Unknown`.
    fn partial_check(&self, partial: &PartialAssignment) -> Feasibility {
        let _ = partial;
        Feasibility::Unknown
    }

    /// Optional dominance key. Return `Some` only when equal digests imply
    /// equal feasible completion sets for the two prefixes.
    fn state_digest(&self, partial: &PartialAssignment) -> Option<Digest> {
        let _ = partial;
        None
    }

    /// Hook invoked by solvers when a feasible complete assignment and its
    /// objective value are discovered. Oracles may use it to tighten
    /// internal bounds; the default does nothing.
    fn observe_feasible(&self, values: &[SymbolId], objective: f64) {
        let _ = (values, objective);
    }
}

/// Per-stage reward term `phi_i(x_i)`, in one of three shapes.
pub enum Reward {
    /// Dense table, `table[i][j] = phi_i(symbol j)`.
    Table(Vec<Vec<f64>>),
    /// Pairwise reward on consecutive symbols: stage 1 contributes 0 and
    /// stage `i > 1` contributes `pair[x_{i-1}][x_i]`.
    Pairwise(Vec<Vec<f64>>),
    /// History-dependent term: `f(prefix, symbol)` is the stage reward for
    /// appending `symbol` after `prefix`. Must be deterministic.
    Prefix(Box<dyn Fn(&[SymbolId], SymbolId) -> f64 + Send + Sync>),
}

impl fmt::Debug for Reward {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reward::Table(t) => write!(f, "Reward::Table({}x{})", t.len(), t.first().map_or(0, Vec::len)),
            Reward::Pairwise(p) => write!(f, "Reward::Pairwise({0}x{0})", p.len()),
            Reward::Prefix(_) => write!(f, "Reward::Prefix(..)"),
        }
    }
}

/// Finite alphabet shared by every stage.
#[derive(Clone, Debug)]
pub struct Alphabet {
    m: usize,
    labels: Option<Vec<String>>,
}

impl Alphabet {
    /// Alphabet of `m` unlabeled symbols, identified by index.
    pub fn indexed(m: usize) -> Result<Self, CoreError> {
        if m == 0 {
            return Err(CoreError::InvalidInstance(String::from("alphabet must be non-empty")));
        }
        Ok(Alphabet { m, labels: None })
    }

    /// Alphabet with display labels (one per symbol, must be distinct).
    pub fn labeled(labels: Vec<String>) -> Result<Self, CoreError> {
        if labels.is_empty() {
            return Err(CoreError::InvalidInstance(String::from("alphabet must be non-empty")));
        }
        for i in 0..labels.len() {
            for j in i + 1..labels.len() {
                if labels[i] == labels[j] {
                    return Err(CoreError::InvalidInstance(String::from("alphabet labels must be distinct")));
                }
            }
        }
        Ok(Alphabet { m: labels.len(), labels: Some(labels) })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Display label for a symbol; falls back to its index.
    pub fn label(&self, symbol: SymbolId) -> String {
        match &self.labels {
            Some(l) if symbol < l.len() => l[symbol].clone(),
            _ => {
                let mut s = String::new();
                fmt::write(&mut s, format_args!("{symbol}")).ok();
                s
            }
        }
    }

    pub fn symbols(&self) -> core::ops::Range<SymbolId> {
        0..self.m
    }
}

/// Search-space structure hint used by the enumeration baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchSpace {
    /// All `M^N` vectors.
    Vector,
    /// Permutations of `0..N` (requires `M == N`); the feasible set is the
    /// `N!` orderings, so the baseline enumerates those directly.
    Permutation,
}

/// A complete assignment together with its objective value when known.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub values: Vec<SymbolId>,
    pub objective: Option<f64>,
}

/// Prefix of an assignment with its accumulated objective `lambda`.
///
/// `lambda` is the exact partial sum `sum_{i<=m} b_i * phi_i(x_i)` built by
/// repeated [`extend`] calls, never recomputed, so two solvers extending the
/// same prefix in the same order agree bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialAssignment {
    prefix: Vec<SymbolId>,
    lambda: f64,
}

impl PartialAssignment {
    /// The empty prefix at stage 0 with `lambda = 0`.
    pub fn empty() -> Self {
        PartialAssignment { prefix: Vec::new(), lambda: 0.0 }
    }

    /// Number of assigned stages.
    pub fn stage(&self) -> usize {
        self.prefix.len()
    }

    pub fn prefix(&self) -> &[SymbolId] {
        &self.prefix
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Rebuild from parts. `lambda` must equal the partial objective of
    /// `prefix` under the target problem; prefer [`extend`] where possible.
    pub fn from_parts(prefix: Vec<SymbolId>, lambda: f64) -> Self {
        PartialAssignment { prefix, lambda }
    }

    pub fn into_values(self) -> Vec<SymbolId> {
        self.prefix
    }
}

/// Why an instance or an operation on it is malformed.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Structural problem with instance data (dimensions, NaN, empty parts).
    InvalidInstance(String),
    /// An assignment or prefix does not fit the problem it was used with.
    InvalidAssignment(String),
    /// Extension past stage `N`.
    StageOverflow { stage: usize, n: usize },
    /// A stage whose allowed-symbol set is empty.
    EmptyStage { stage: usize },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidInstance(msg) => write!(f, "invalid instance: {msg}"),
            CoreError::InvalidAssignment(msg) => write!(f, "invalid assignment: {msg}"),
            CoreError::StageOverflow { stage, n } => {
                write!(f, "cannot extend past final stage: stage {stage} of {n}")
            }
            CoreError::EmptyStage { stage } => write!(f, "stage {stage} allows no symbols"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}

/// A maximization instance: objective structure plus feasibility oracle.
pub struct ProblemH {
    n: usize,
    alphabet: Alphabet,
    weights: Vec<f64>,
    reward: Reward,
    csf: Box<dyn CsfOracle>,
    stage_mask: Option<Vec<Vec<bool>>>,
    transition_filter: Option<Box<dyn Fn(usize, SymbolId, SymbolId) -> bool + Send + Sync>>,
    structure: SearchSpace,
}

impl fmt::Debug for ProblemH {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemH")
            .field("n", &self.n)
            .field("m", &self.alphabet.len())
            .field("reward", &self.reward)
            .field("structure", &self.structure)
            .finish_non_exhaustive()
    }
}

fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

impl ProblemH {
    pub fn new(
        n: usize,
        alphabet: Alphabet,
        weights: Vec<f64>,
        reward: Reward,
        csf: Box<dyn CsfOracle>,
    ) -> Result<Self, CoreError> {
        if n == 0 {
            return Err(CoreError::InvalidInstance(String::from("N must be at least 1")));
        }
        if weights.len() != n {
            return Err(CoreError::InvalidInstance(String::from("weight vector length must equal N")));
        }
        if !all_finite(&weights) {
            return Err(CoreError::InvalidInstance(String::from("weights must be finite")));
        }
        let m = alphabet.len();
        match &reward {
            Reward::Table(table) => {
                if table.len() != n || table.iter().any(|row| row.len() != m) {
                    return Err(CoreError::InvalidInstance(String::from("reward table must be N x M")));
                }
                if table.iter().any(|row| !all_finite(row)) {
                    return Err(CoreError::InvalidInstance(String::from("reward table must be finite")));
                }
            }
            Reward::Pairwise(pair) => {
                if pair.len() != m || pair.iter().any(|row| row.len() != m) {
                    return Err(CoreError::InvalidInstance(String::from("pairwise reward must be M x M")));
                }
                if pair.iter().any(|row| !all_finite(row)) {
                    return Err(CoreError::InvalidInstance(String::from("pairwise reward must be finite")));
                }
            }
            Reward::Prefix(_) => {}
        }
        Ok(ProblemH {
            n,
            alphabet,
            weights,
            reward,
            csf,
            stage_mask: None,
            transition_filter: None,
            structure: SearchSpace::Vector,
        })
    }

    /// Restrict the symbols allowed at each stage. `mask[i][j]` says whether
    /// symbol `j` may appear at stage `i + 1`.
    pub fn with_stage_mask(mut self, mask: Vec<Vec<bool>>) -> Result<Self, CoreError> {
        if mask.len() != self.n || mask.iter().any(|row| row.len() != self.alphabet.len()) {
            return Err(CoreError::InvalidInstance(String::from("stage mask must be N x M")));
        }
        for (i, row) in mask.iter().enumerate() {
            if !row.iter().any(|&a| a) {
                return Err(CoreError::EmptyStage { stage: i + 1 });
            }
        }
        self.stage_mask = Some(mask);
        Ok(self)
    }

    /// Forbid specific stage-to-stage transitions. `filter(i, from, to)`
    /// is consulted for the edge leaving stage `i` (1-based) toward stage
    /// `i + 1`; returning false removes the edge.
    pub fn with_transition_filter(
        mut self,
        filter: Box<dyn Fn(usize, SymbolId, SymbolId) -> bool + Send + Sync>,
    ) -> Self {
        self.transition_filter = Some(filter);
        self
    }

    /// Declare that feasible assignments are exactly the permutations of
    /// `0..N`. Requires `M == N`.
    pub fn with_permutation_structure(mut self) -> Result<Self, CoreError> {
        if self.alphabet.len() != self.n {
            return Err(CoreError::InvalidInstance(String::from(
                "permutation structure requires M == N",
            )));
        }
        self.structure = SearchSpace::Permutation;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.alphabet.len()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn csf(&self) -> &dyn CsfOracle {
        self.csf.as_ref()
    }

    pub(crate) fn reward_ref(&self) -> &Reward {
        &self.reward
    }

    pub fn structure(&self) -> SearchSpace {
        self.structure
    }

    /// Whether symbol `j` may appear at 1-based stage `i`.
    pub fn stage_allows(&self, stage: usize, symbol: SymbolId) -> bool {
        debug_assert!(stage >= 1 && stage <= self.n);
        match &self.stage_mask {
            Some(mask) => mask[stage - 1][symbol],
            None => true,
        }
    }

    /// Whether the edge from symbol `from` at 1-based stage `i` to symbol
    /// `to` at stage `i + 1` exists.
    pub fn transition_allowed(&self, stage: usize, from: SymbolId, to: SymbolId) -> bool {
        match &self.transition_filter {
            Some(f) => f(stage, from, to),
            None => true,
        }
    }

    pub fn has_stage_mask(&self) -> bool {
        self.stage_mask.is_some()
    }

    pub fn has_transition_filter(&self) -> bool {
        self.transition_filter.is_some()
    }

    /// Weighted stage reward for appending `symbol` after `prefix`:
    /// `b_{m+1} * phi_{m+1}(symbol)` where `m = prefix.len()`.
    pub fn extension_value(&self, prefix: &[SymbolId], symbol: SymbolId) -> f64 {
        let stage = prefix.len();
        let phi = match &self.reward {
            Reward::Table(table) => table[stage][symbol],
            Reward::Pairwise(pair) => {
                if stage == 0 {
                    0.0
                } else {
                    pair[prefix[stage - 1]][symbol]
                }
            }
            Reward::Prefix(f) => f(prefix, symbol),
        };
        self.weights[stage] * phi
    }

    /// Objective of a complete assignment, accumulated in stage order with
    /// the exact same additions a stage-by-stage solver performs.
    pub(crate) fn objective_of(&self, values: &[SymbolId]) -> f64 {
        let mut acc = 0.0;
        for i in 0..values.len() {
            acc += self.extension_value(&values[..i], values[i]);
        }
        acc
    }
}

/// Evaluate `f(x)` for a complete assignment, validating shape and symbols.
pub fn evaluate_objective(problem: &ProblemH, values: &[SymbolId]) -> Result<f64, CoreError> {
    if values.len() != problem.n() {
        return Err(CoreError::InvalidAssignment(String::from("assignment length must equal N")));
    }
    if values.iter().any(|&v| v >= problem.m()) {
        return Err(CoreError::InvalidAssignment(String::from("symbol out of alphabet range")));
    }
    Ok(problem.objective_of(values))
}

/// Append one symbol to a prefix, accumulating the weighted stage reward.
pub fn extend(
    partial: &PartialAssignment,
    symbol: SymbolId,
    problem: &ProblemH,
) -> Result<PartialAssignment, CoreError> {
    let stage = partial.stage();
    if stage >= problem.n() {
        return Err(CoreError::StageOverflow { stage: stage + 1, n: problem.n() });
    }
    if symbol >= problem.m() {
        return Err(CoreError::InvalidAssignment(String::from("symbol out of alphabet range")));
    }
    let value = problem.extension_value(partial.prefix(), symbol);
    let mut prefix = Vec::with_capacity(stage + 1);
    prefix.extend_from_slice(partial.prefix());
    prefix.push(symbol);
    Ok(PartialAssignment { prefix, lambda: partial.lambda() + value })
}
