//! Fragment ordering for DNA sequence assembly.
//!
//! Given `N` sequenced fragments, find the ordering that maximizes the sum
//! of local-alignment similarities between consecutive fragments. High
//! adjacent similarity is the standard proxy for true adjacency in the
//! source sequence; once an ordering is chosen, overlapping fragments are
//! merged back into a single sequence.
//!
//! Stages are positions in the ordering, symbols are fragment indices, and
//! feasible assignments are exactly the permutations. The first stage earns
//! nothing; every later stage earns the similarity between its fragment and
//! the previous one.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::problem::{
    Alphabet, CoreError, CsfOracle, Digest, Feasibility, PartialAssignment, ProblemH, Reward,
    SymbolId,
};

/// Local alignment scoring: positive for a base match, penalties for a
/// mismatch or a gap (linear gap model).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwScores {
    pub matching: f64,
    pub mismatch: f64,
    pub gap: f64,
}

impl Default for SwScores {
    fn default() -> Self {
        SwScores { matching: 1.0, mismatch: -1.0, gap: -1.0 }
    }
}

impl SwScores {
    fn validate(&self) -> Result<(), CoreError> {
        if !(self.matching.is_finite() && self.mismatch.is_finite() && self.gap.is_finite()) {
            return Err(CoreError::InvalidInstance(String::from("alignment scores must be finite")));
        }
        Ok(())
    }
}

fn parse_bases(s: &str) -> Result<Vec<u8>, CoreError> {
    let mut out = Vec::with_capacity(s.len());
    for c in s.chars() {
        match c.to_ascii_uppercase() {
            'A' => out.push(0u8),
            'C' => out.push(1),
            'G' => out.push(2),
            'T' => out.push(3),
            other => {
                return Err(CoreError::InvalidInstance(format!(
                    "invalid base character {other:?} in fragment"
                )))
            }
        }
    }
    Ok(out)
}

/// Best local alignment score between two fragments, linear gap penalty.
/// The score matrix cell is `max(0, diagonal + substitution, up + gap,
/// left + gap)` and the result is the largest cell.
pub fn smith_waterman(a: &str, b: &str, scores: &SwScores) -> Result<f64, CoreError> {
    scores.validate()?;
    let xa = parse_bases(a)?;
    let xb = parse_bases(b)?;
    let mut prev = alloc::vec![0.0f64; xb.len() + 1];
    let mut row = alloc::vec![0.0f64; xb.len() + 1];
    let mut best = 0.0f64;
    for &ca in &xa {
        for j in 1..=xb.len() {
            let sub = if ca == xb[j - 1] { scores.matching } else { scores.mismatch };
            let mut h = prev[j - 1] + sub;
            h = h.max(prev[j] + scores.gap);
            h = h.max(row[j - 1] + scores.gap);
            h = h.max(0.0);
            row[j] = h;
            if h > best {
                best = h;
            }
        }
        core::mem::swap(&mut prev, &mut row);
    }
    Ok(best)
}

/// A fragment-ordering instance: fragments, scoring, and whether to prune
/// orderings that provably cannot beat the best one seen so far.
pub struct DfaInstance {
    fragments: Vec<String>,
    scores: SwScores,
    similarity: Vec<Vec<f64>>,
    bound_enabled: bool,
}

impl DfaInstance {
    pub fn new(fragments: Vec<String>, scores: SwScores, bound_enabled: bool) -> Result<Self, CoreError> {
        scores.validate()?;
        let n = fragments.len();
        if n < 2 {
            return Err(CoreError::InvalidInstance(String::from("need at least two fragments")));
        }
        if n > 128 {
            return Err(CoreError::InvalidInstance(String::from("at most 128 fragments supported")));
        }
        let mut normalized = Vec::with_capacity(n);
        for f in &fragments {
            if f.is_empty() {
                return Err(CoreError::InvalidInstance(String::from("fragments must be non-empty")));
            }
            parse_bases(f)?;
            normalized.push(f.to_ascii_uppercase());
        }
        let mut similarity = alloc::vec![alloc::vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..n {
                similarity[i][j] = smith_waterman(&normalized[i], &normalized[j], &scores)?;
            }
        }
        Ok(DfaInstance { fragments: normalized, scores, similarity, bound_enabled })
    }

    pub fn n(&self) -> usize {
        self.fragments.len()
    }

    pub fn fragments(&self) -> &[String] {
        &self.fragments
    }

    pub fn scores(&self) -> &SwScores {
        &self.scores
    }

    /// Pairwise similarity matrix, including the self-alignment diagonal.
    /// The diagonal never enters an objective: orderings are permutations.
    pub fn similarity(&self) -> &[Vec<f64>] {
        &self.similarity
    }
}

/// Greedy nearest-neighbor ordering: from every start fragment, repeatedly
/// append the most similar unused fragment (ties toward the smallest
/// index). Returns the best of the `N` chains.
pub fn greedy_ordering(similarity: &[Vec<f64>]) -> (Vec<SymbolId>, f64) {
    let n = similarity.len();
    let mut best: Option<(Vec<SymbolId>, f64)> = None;
    for start in 0..n {
        let mut order = alloc::vec![start];
        let mut used = 1u128 << start;
        let mut total = 0.0;
        for _ in 1..n {
            let last = *order.last().unwrap();
            let mut pick = None;
            let mut pick_sim = f64::NEG_INFINITY;
            for j in 0..n {
                if used & (1u128 << j) == 0 && similarity[last][j] > pick_sim {
                    pick = Some(j);
                    pick_sim = similarity[last][j];
                }
            }
            let j = pick.expect("an unused fragment remains");
            order.push(j);
            used |= 1u128 << j;
            total += pick_sim;
        }
        if best.as_ref().map_or(true, |(_, bt)| total > *bt) {
            best = Some((order, total));
        }
    }
    best.expect("at least one start")
}

/// Permutation feasibility with an optional branch-and-bound style filter:
/// a prefix whose accumulated similarity plus an optimistic completion
/// estimate cannot reach the best complete ordering seen so far is treated
/// as not worth completing. The estimate is admissible (remaining edges
/// each scored at the largest open pair similarity), and ties survive the
/// strict comparison, so the filter never hides an optimal ordering.
struct DfaCsf {
    n: usize,
    similarity: Arc<Vec<Vec<f64>>>,
    bound_enabled: bool,
    /// Bit pattern of the best known complete objective.
    best_known: AtomicU64,
}

impl DfaCsf {
    fn used_mask(values: &[SymbolId]) -> Option<u128> {
        let mut mask = 0u128;
        for &v in values {
            let bit = 1u128 << v;
            if mask & bit != 0 {
                return None;
            }
            mask |= bit;
        }
        Some(mask)
    }

    /// Largest similarity on any edge still available to the completion:
    /// from the current last fragment or any unused one, into an unused one.
    fn max_open_edge(&self, last: SymbolId, used: u128) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for j in 0..self.n {
            if used & (1u128 << j) != 0 {
                continue;
            }
            if self.similarity[last][j] > best {
                best = self.similarity[last][j];
            }
            for i in 0..self.n {
                if i != j && used & (1u128 << i) == 0 && self.similarity[i][j] > best {
                    best = self.similarity[i][j];
                }
            }
        }
        best
    }
}

impl CsfOracle for DfaCsf {
    fn full_check(&self, values: &[SymbolId]) -> bool {
        values.len() == self.n && Self::used_mask(values).is_some()
    }

    fn partial_check(&self, partial: &PartialAssignment) -> Feasibility {
        let prefix = partial.prefix();
        let used = match Self::used_mask(prefix) {
            Some(u) => u,
            None => return Feasibility::Infeasible,
        };
        if self.bound_enabled && !prefix.is_empty() && prefix.len() < self.n {
            let remaining = (self.n - prefix.len()) as f64;
            let optimistic =
                partial.lambda() + remaining * self.max_open_edge(*prefix.last().unwrap(), used);
            if optimistic < f64::from_bits(self.best_known.load(Ordering::Relaxed)) {
                return Feasibility::Infeasible;
            }
        }
        Feasibility::Feasible
    }

    fn state_digest(&self, partial: &PartialAssignment) -> Option<Digest> {
        // Completions of a prefix depend only on which fragments are used
        // and (via the pairwise reward) on the last one; survivors are
        // grouped per node, so the used set alone is a sound key.
        Self::used_mask(partial.prefix()).map(Digest)
    }

    fn observe_feasible(&self, _values: &[SymbolId], objective: f64) {
        let mut cur = self.best_known.load(Ordering::Relaxed);
        while objective > f64::from_bits(cur) {
            match self.best_known.compare_exchange_weak(
                cur,
                objective.to_bits(),
                Ordering::Relaxed,
                Ordering::Relaxed,
            ) {
                Ok(_) => break,
                Err(actual) => cur = actual,
            }
        }
    }
}

/// Build the ordering problem for a fragment set. Stage count and alphabet
/// size are both `N`; the problem carries permutation structure so the
/// enumeration baseline iterates orderings rather than all `N^N` vectors.
pub fn dfa_problem(instance: &DfaInstance) -> Result<ProblemH, CoreError> {
    let n = instance.n();
    let similarity = Arc::new(instance.similarity.clone());
    let best_known = if instance.bound_enabled {
        let (_, greedy_value) = greedy_ordering(&instance.similarity);
        AtomicU64::new(greedy_value.to_bits())
    } else {
        AtomicU64::new(f64::NEG_INFINITY.to_bits())
    };
    let csf = DfaCsf {
        n,
        similarity: Arc::clone(&similarity),
        bound_enabled: instance.bound_enabled,
        best_known,
    };
    let labels: Vec<String> = (1..=n).map(|i| format!("F{i}")).collect();
    ProblemH::new(
        n,
        Alphabet::labeled(labels)?,
        alloc::vec![1.0; n],
        Reward::Pairwise(instance.similarity.clone()),
        Box::new(csf),
    )?
    .with_permutation_structure()
}

/// Merge fragments in the given order into one sequence, greedily using the
/// longest exact suffix-prefix overlap at each junction.
pub fn assemble_sequence(order: &[SymbolId], fragments: &[String]) -> Result<String, CoreError> {
    let n = fragments.len();
    if order.len() != n || n == 0 {
        return Err(CoreError::InvalidAssignment(String::from(
            "order must list every fragment exactly once",
        )));
    }
    let mut seen = alloc::vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return Err(CoreError::InvalidAssignment(String::from(
                "order must list every fragment exactly once",
            )));
        }
        seen[i] = true;
    }
    for f in fragments {
        parse_bases(f)?;
    }
    let mut assembled = fragments[order[0]].to_ascii_uppercase();
    for &i in &order[1..] {
        let next = fragments[i].to_ascii_uppercase();
        let max_k = assembled.len().min(next.len());
        let mut overlap = 0;
        for k in (1..=max_k).rev() {
            if assembled.as_bytes()[assembled.len() - k..] == next.as_bytes()[..k] {
                overlap = k;
                break;
            }
        }
        assembled.push_str(&next[overlap..]);
    }
    Ok(assembled)
}
