//! Reusable constraint satisfaction functions.
//!
//! Each type here implements [`CsfOracle`] for one constraint family. The
//! partial checks are conservative by contract: they answer `Feasible` or
//! `Infeasible` only when the answer is provable from the prefix alone and
//! fall back to `Unknown` otherwise.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::problem::{CoreError, CsfOracle, Digest, Feasibility, PartialAssignment, SymbolId};

/// Accepts everything.
pub struct Unconstrained;

impl CsfOracle for Unconstrained {
    fn full_check(&self, _values: &[SymbolId]) -> bool {
        true
    }

    fn partial_check(&self, _partial: &PartialAssignment) -> Feasibility {
        Feasibility::Feasible
    }
}

/// Additive resource budget: `sum_i cost[i][x_i] <= limit`.
///
/// The partial check is exact because the cheapest completion is known in
/// closed form: extend the prefix with the minimum-cost symbol of every
/// remaining stage.
pub struct BudgetCsf {
    cost: Vec<Vec<f64>>,
    limit: f64,
    /// Cheapest symbol cost per stage, used to extend a prefix sum into
    /// the cost of its cheapest completion.
    row_min: Vec<f64>,
}

impl BudgetCsf {
    pub fn new(cost: Vec<Vec<f64>>, limit: f64) -> Result<Self, CoreError> {
        if cost.is_empty() || cost.iter().any(Vec::is_empty) {
            return Err(CoreError::InvalidInstance(String::from("budget cost table must be non-empty")));
        }
        let m = cost[0].len();
        if cost.iter().any(|row| row.len() != m) {
            return Err(CoreError::InvalidInstance(String::from("budget cost rows must have equal length")));
        }
        if cost.iter().any(|row| row.iter().any(|c| !c.is_finite())) || !limit.is_finite() {
            return Err(CoreError::InvalidInstance(String::from("budget costs and limit must be finite")));
        }
        let row_min = cost
            .iter()
            .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        Ok(BudgetCsf { cost, limit, row_min })
    }

    fn prefix_cost(&self, prefix: &[SymbolId]) -> f64 {
        let mut acc = 0.0;
        for (i, &s) in prefix.iter().enumerate() {
            acc += self.cost[i][s];
        }
        acc
    }

    /// Cost of the cheapest completion, accumulated in the same order
    /// `full_check` uses so the comparison against the limit is exact even
    /// at the boundary.
    fn cheapest_completion(&self, prefix: &[SymbolId]) -> f64 {
        let mut acc = self.prefix_cost(prefix);
        for i in prefix.len()..self.cost.len() {
            acc += self.row_min[i];
        }
        acc
    }
}

impl CsfOracle for BudgetCsf {
    fn full_check(&self, values: &[SymbolId]) -> bool {
        self.prefix_cost(values) <= self.limit
    }

    fn partial_check(&self, partial: &PartialAssignment) -> Feasibility {
        // Addition on floats is monotone, so the min-cost completion has
        // the least accumulated total of all completions. If it fits, the
        // prefix is completable by that witness; if not, nothing fits.
        if self.cheapest_completion(partial.prefix()) > self.limit {
            Feasibility::Infeasible
        } else {
            Feasibility::Feasible
        }
    }

    fn state_digest(&self, partial: &PartialAssignment) -> Option<Digest> {
        // Completions depend on the prefix only through spent budget.
        let used = self.prefix_cost(partial.prefix());
        Some(Digest(used.to_bits() as u128))
    }
}

/// Monotone ordering of symbol indices along the assignment.
///
/// The partial check assumes every symbol is allowed at every remaining
/// stage (no stage mask), under which a monotone prefix is always
/// completable by repeating its last symbol.
pub struct OrderingCsf {
    non_increasing: bool,
}

impl OrderingCsf {
    pub fn non_increasing() -> Self {
        OrderingCsf { non_increasing: true }
    }

    pub fn non_decreasing() -> Self {
        OrderingCsf { non_increasing: false }
    }

    fn ordered(&self, values: &[SymbolId]) -> bool {
        values.windows(2).all(|w| if self.non_increasing { w[0] >= w[1] } else { w[0] <= w[1] })
    }
}

impl CsfOracle for OrderingCsf {
    fn full_check(&self, values: &[SymbolId]) -> bool {
        self.ordered(values)
    }

    fn partial_check(&self, partial: &PartialAssignment) -> Feasibility {
        if self.ordered(partial.prefix()) {
            Feasibility::Feasible
        } else {
            Feasibility::Infeasible
        }
    }

    fn state_digest(&self, partial: &PartialAssignment) -> Option<Digest> {
        // Only the last symbol constrains the future.
        partial.prefix().last().map(|&s| Digest(s as u128))
    }
}

/// All symbols distinct; with `M == N` this makes assignments permutations.
pub struct PermutationCsf {
    n: usize,
}

impl PermutationCsf {
    pub fn new(n: usize) -> Result<Self, CoreError> {
        if n == 0 || n > 128 {
            return Err(CoreError::InvalidInstance(String::from("permutation size must be in 1..=128")));
        }
        Ok(PermutationCsf { n })
    }

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
}

impl CsfOracle for PermutationCsf {
    fn full_check(&self, values: &[SymbolId]) -> bool {
        values.len() == self.n && Self::used_mask(values).is_some()
    }

    fn partial_check(&self, partial: &PartialAssignment) -> Feasibility {
        // A duplicate can never be repaired; a distinct prefix always
        // completes with the unused symbols in any order.
        match Self::used_mask(partial.prefix()) {
            Some(_) => Feasibility::Feasible,
            None => Feasibility::Infeasible,
        }
    }

    fn state_digest(&self, partial: &PartialAssignment) -> Option<Digest> {
        Self::used_mask(partial.prefix()).map(Digest)
    }
}

/// Pseudo-random feasible subset: a vector is feasible when a seeded hash
/// of its symbols falls below `density`. Prefixes are undecidable, so the
/// partial check is always `Unknown`; this family exists to exercise the
/// completion-search fallback.
pub struct RandomCsf {
    seed: u64,
    density: f64,
}

impl RandomCsf {
    pub fn new(seed: u64, density: f64) -> Result<Self, CoreError> {
        if !(0.0..=1.0).contains(&density) {
            return Err(CoreError::InvalidInstance(String::from("density must lie in [0, 1]")));
        }
        Ok(RandomCsf { seed, density })
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

impl CsfOracle for RandomCsf {
    fn full_check(&self, values: &[SymbolId]) -> bool {
        let mut h = splitmix64(self.seed ^ 0x5bf0_3635);
        for &v in values {
            h = splitmix64(h ^ v as u64);
        }
        // Map to [0, 1) with 53 bits of the hash.
        let u = (h >> 11) as f64 / (1u64 << 53) as f64;
        u < self.density
    }
}

/// Conjunction of constraints.
///
/// A vector is feasible when every part accepts it. For prefixes, any part
/// answering `Infeasible` settles the question; unanimous `Feasible` does
/// not, because each part certifies completability against itself only and
/// the parts may have no common completion. The conjunction therefore
/// answers `Infeasible` or `Unknown`, never `Feasible`.
pub struct AllOfCsf {
    parts: Vec<Box<dyn CsfOracle>>,
}

impl AllOfCsf {
    pub fn new(parts: Vec<Box<dyn CsfOracle>>) -> Result<Self, CoreError> {
        if parts.is_empty() {
            return Err(CoreError::InvalidInstance(String::from("conjunction needs at least one part")));
        }
        Ok(AllOfCsf { parts })
    }
}

impl CsfOracle for AllOfCsf {
    fn full_check(&self, values: &[SymbolId]) -> bool {
        self.parts.iter().all(|p| p.full_check(values))
    }

    fn partial_check(&self, partial: &PartialAssignment) -> Feasibility {
        for part in &self.parts {
            if part.partial_check(partial) == Feasibility::Infeasible {
                return Feasibility::Infeasible;
            }
        }
        Feasibility::Unknown
    }

    // No digest: combining per-part digests soundly would require an
    // injective pairing, and a hash of hashes could merge states whose
    // completion sets differ.
}
