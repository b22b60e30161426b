//! Stage-by-stage trellis view of a problem.
//!
//! The trellis has a source `S`, one node per (stage, allowed symbol) pair,
//! and a sink `F`. Every S-to-F walk spells a complete assignment, and the
//! rewards accumulated along the walk reproduce the objective exactly: the
//! edge entering the stage-`i` node for symbol `j` carries the weighted
//! stage reward of choosing `j` at stage `i`. The structure is stored as an
//! allowed-symbol table instead of explicit adjacency; at desk scale the
//! dense form is simpler and the solver only ever sweeps stage by stage.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::problem::{CoreError, ProblemH, Reward, SymbolId};

pub struct Trellis<'a> {
    problem: &'a ProblemH,
    /// `allowed[i][j]`: symbol `j` usable at 1-based stage `i + 1`, after
    /// intersecting the problem's stage mask with the extra mask.
    allowed: Vec<Vec<bool>>,
}

/// Build the trellis for `problem`, optionally restricting each stage to a
/// further subset of symbols. Fails if any stage ends up empty.
pub fn build_trellis<'a>(
    problem: &'a ProblemH,
    extra_mask: Option<&[Vec<bool>]>,
) -> Result<Trellis<'a>, CoreError> {
    let n = problem.n();
    let m = problem.m();
    if let Some(mask) = extra_mask {
        if mask.len() != n || mask.iter().any(|row| row.len() != m) {
            return Err(CoreError::InvalidInstance(String::from("trellis mask must be N x M")));
        }
    }
    let mut allowed = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(m);
        for j in 0..m {
            let extra = extra_mask.map_or(true, |mask| mask[i][j]);
            row.push(extra && problem.stage_allows(i + 1, j));
        }
        if !row.iter().any(|&a| a) {
            return Err(CoreError::EmptyStage { stage: i + 1 });
        }
        allowed.push(row);
    }
    Ok(Trellis { problem, allowed })
}

impl<'a> Trellis<'a> {
    pub fn problem(&self) -> &'a ProblemH {
        self.problem
    }

    /// Whether symbol `j` is usable at 1-based stage `i`.
    pub fn allows(&self, stage: usize, symbol: SymbolId) -> bool {
        self.allowed[stage - 1][symbol]
    }

    /// Symbols usable at 1-based stage `i`, in index order.
    pub fn stage_symbols(&self, stage: usize) -> impl Iterator<Item = SymbolId> + '_ {
        self.allowed[stage - 1]
            .iter()
            .enumerate()
            .filter_map(|(j, &a)| if a { Some(j) } else { None })
    }

    /// Whether the edge from `from` at 1-based stage `i` to `to` at stage
    /// `i + 1` exists (both endpoints allowed, transition not filtered).
    pub fn edge_exists(&self, stage: usize, from: SymbolId, to: SymbolId) -> bool {
        self.allows(stage, from)
            && self.allows(stage + 1, to)
            && self.problem.transition_allowed(stage, from, to)
    }

    /// Node count including S and F.
    pub fn node_count(&self) -> usize {
        2 + self.allowed.iter().map(|row| row.iter().filter(|&&a| a).count()).sum::<usize>()
    }

    /// Edge count: S-edges, stage-to-stage edges, and F-edges.
    pub fn edge_count(&self) -> usize {
        let n = self.problem.n();
        let mut count = self.stage_symbols(1).count() + self.stage_symbols(n).count();
        for i in 1..n {
            for from in self.stage_symbols(i) {
                count += self
                    .stage_symbols(i + 1)
                    .filter(|&to| self.problem.transition_allowed(i, from, to))
                    .count();
            }
        }
        count
    }

    /// Accumulate rewards along the S-to-F walk spelled by `values`,
    /// validating that every node and edge on the way exists. The result
    /// equals the objective bit for bit.
    pub fn walk_reward(&self, values: &[SymbolId]) -> Result<f64, CoreError> {
        let n = self.problem.n();
        if values.len() != n {
            return Err(CoreError::InvalidAssignment(String::from("walk length must equal N")));
        }
        if values.iter().any(|&v| v >= self.problem.m()) {
            return Err(CoreError::InvalidAssignment(String::from("symbol out of alphabet range")));
        }
        let mut acc = 0.0;
        for i in 0..n {
            if !self.allows(i + 1, values[i]) {
                return Err(CoreError::InvalidAssignment(String::from("walk visits a masked symbol")));
            }
            if i > 0 && !self.problem.transition_allowed(i, values[i - 1], values[i]) {
                return Err(CoreError::InvalidAssignment(String::from("walk uses a filtered transition")));
            }
            acc += self.problem.extension_value(&values[..i], values[i]);
        }
        Ok(acc)
    }

    /// Graphviz rendering for inspection. Refused above `N * M = 64` nodes;
    /// bigger trellises are not readable as pictures anyway.
    pub fn to_dot(&self) -> Result<String, CoreError> {
        let n = self.problem.n();
        let m = self.problem.m();
        if n * m > 64 {
            return Err(CoreError::InvalidInstance(String::from("trellis too large for DOT output")));
        }
        let mut out = String::new();
        let _ = writeln!(out, "digraph trellis {{");
        let _ = writeln!(out, "  rankdir=LR;");
        let _ = writeln!(out, "  S [shape=point];");
        let _ = writeln!(out, "  F [shape=point];");
        for i in 1..=n {
            for j in self.stage_symbols(i) {
                let _ = writeln!(out, "  s{i}_{j} [label=\"{}|{}\"];", i, self.problem.alphabet().label(j));
            }
        }
        for j in self.stage_symbols(1) {
            match self.edge_label(1, None, j) {
                Some(v) => {
                    let _ = writeln!(out, "  S -> s1_{j} [label=\"{v}\"];");
                }
                None => {
                    let _ = writeln!(out, "  S -> s1_{j};");
                }
            }
        }
        for i in 1..n {
            for from in self.stage_symbols(i) {
                for to in self.stage_symbols(i + 1) {
                    if !self.problem.transition_allowed(i, from, to) {
                        continue;
                    }
                    match self.edge_label(i + 1, Some(from), to) {
                        Some(v) => {
                            let _ = writeln!(out, "  s{i}_{from} -> s{}_{to} [label=\"{v}\"];", i + 1);
                        }
                        None => {
                            let _ = writeln!(out, "  s{i}_{from} -> s{}_{to};", i + 1);
                        }
                    }
                }
            }
        }
        for j in self.stage_symbols(n) {
            let _ = writeln!(out, "  s{n}_{j} -> F;");
        }
        let _ = writeln!(out, "}}");
        Ok(out)
    }

    /// Weighted reward charged on the edge entering (`stage`, `to`), when
    /// it is edge-local. History-dependent rewards have no per-edge value.
    fn edge_label(&self, stage: usize, from: Option<SymbolId>, to: SymbolId) -> Option<f64> {
        let w = self.problem.weights()[stage - 1];
        match (reward_of(self.problem), from) {
            (RewardKind::Table(t), _) => Some(w * t[stage - 1][to]),
            (RewardKind::Pairwise(_), None) => Some(0.0),
            (RewardKind::Pairwise(p), Some(b)) => Some(w * p[b][to]),
            (RewardKind::Prefix, _) => None,
        }
    }
}

enum RewardKind<'a> {
    Table(&'a Vec<Vec<f64>>),
    Pairwise(&'a Vec<Vec<f64>>),
    Prefix,
}

fn reward_of(p: &ProblemH) -> RewardKind<'_> {
    match p.reward_ref() {
        Reward::Table(t) => RewardKind::Table(t),
        Reward::Pairwise(t) => RewardKind::Pairwise(t),
        Reward::Prefix(_) => RewardKind::Prefix,
    }
}
