//! Finite-horizon constrained Markov decision processes as stage problems.
//!
//! A policy over horizon `H` is a sequence of decision rules, one per
//! stage, each mapping states to actions. Treating the rule chosen at stage
//! `i` as the stage's symbol makes the discounted expected reward stage
//! separable: the stage term is the expected one-step reward under the
//! state distribution reached by the rules chosen so far, and the stage
//! weight is `discount^(i-1)`. The discounted expected cost plays the same
//! game on the constraint side against a budget.
//!
//! The state distribution depends on the whole prefix of rules, so the
//! reward is supplied as a history-dependent closure and no dominance
//! digest is offered: two different prefixes rarely share futures exactly.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::problem::{
    Alphabet, CoreError, CsfOracle, Feasibility, PartialAssignment, ProblemH, Reward, SymbolId,
};

#[derive(Clone, Debug)]
pub struct FiniteCmdp {
    pub states: usize,
    pub actions: usize,
    /// `transition[x][a][y]`: probability of moving to `y` from `x` under `a`.
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `reward[x][a]`: one-step reward.
    pub reward: Vec<Vec<f64>>,
    /// `cost[x][a]`: one-step cost charged against the budget.
    pub cost: Vec<Vec<f64>>,
    /// Initial state distribution.
    pub start: Vec<f64>,
    pub discount: f64,
    pub horizon: usize,
    /// Budget on discounted expected cost; `f64::INFINITY` disables it.
    pub budget: f64,
}

const PROB_TOL: f64 = 1e-9;

fn check_distribution(p: &[f64], what: &str) -> Result<(), CoreError> {
    let mut sum = 0.0;
    for &v in p {
        if !v.is_finite() || v < -PROB_TOL || v > 1.0 + PROB_TOL {
            return Err(CoreError::InvalidInstance(alloc::format!(
                "{what} entries must be probabilities"
            )));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(CoreError::InvalidInstance(alloc::format!("{what} must sum to 1")));
    }
    Ok(())
}

impl FiniteCmdp {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.states == 0 || self.actions == 0 {
            return Err(CoreError::InvalidInstance(String::from("need at least one state and action")));
        }
        if self.states * self.actions > 1000 {
            return Err(CoreError::InvalidInstance(String::from(
                "model too large: states x actions must stay within 1000",
            )));
        }
        if self.horizon == 0 {
            return Err(CoreError::InvalidInstance(String::from("horizon must be at least 1")));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(CoreError::InvalidInstance(String::from("discount must lie in [0, 1]")));
        }
        if self.budget.is_nan() {
            return Err(CoreError::InvalidInstance(String::from("budget must not be NaN")));
        }
        let shape_ok = self.transition.len() == self.states
            && self.transition.iter().all(|per_action| {
                per_action.len() == self.actions
                    && per_action.iter().all(|row| row.len() == self.states)
            })
            && self.reward.len() == self.states
            && self.reward.iter().all(|row| row.len() == self.actions)
            && self.cost.len() == self.states
            && self.cost.iter().all(|row| row.len() == self.actions)
            && self.start.len() == self.states;
        if !shape_ok {
            return Err(CoreError::InvalidInstance(String::from(
                "kernel, reward, cost, and start shapes must match states x actions",
            )));
        }
        for per_action in &self.transition {
            for row in per_action {
                check_distribution(row, "transition row")?;
            }
        }
        check_distribution(&self.start, "start distribution")?;
        let finite_table = |t: &Vec<Vec<f64>>| t.iter().all(|row| row.iter().all(|v| v.is_finite()));
        if !finite_table(&self.reward) || !finite_table(&self.cost) {
            return Err(CoreError::InvalidInstance(String::from("rewards and costs must be finite")));
        }
        Ok(())
    }
}

/// Options for turning a model into a stage problem.
#[derive(Clone, Debug)]
pub struct CmdpOptions {
    /// Refuse to auto-enumerate more decision rules than this.
    pub rule_cap: usize,
    /// Explicit rule list (each maps state index to action index); skips
    /// enumeration entirely.
    pub candidate_rules: Option<Vec<Vec<usize>>>,
}

impl Default for CmdpOptions {
    fn default() -> Self {
        CmdpOptions { rule_cap: 1024, candidate_rules: None }
    }
}

/// All `actions^states` deterministic decision rules in lexicographic
/// order, refusing to materialize more than `cap`.
pub fn enumerate_rules(states: usize, actions: usize, cap: usize) -> Result<Vec<Vec<usize>>, CoreError> {
    let mut count: u128 = 1;
    for _ in 0..states {
        count = count.saturating_mul(actions as u128);
        if count > cap as u128 {
            return Err(CoreError::InvalidInstance(alloc::format!(
                "rule space {actions}^{states} exceeds the cap of {cap}; \
                 supply an explicit candidate rule list instead"
            )));
        }
    }
    let mut rules = Vec::with_capacity(count as usize);
    let mut rule = alloc::vec![0usize; states];
    loop {
        rules.push(rule.clone());
        let mut i = states;
        loop {
            if i == 0 {
                return Ok(rules);
            }
            i -= 1;
            rule[i] += 1;
            if rule[i] < actions {
                break;
            }
            rule[i] = 0;
        }
    }
}

fn step_distribution(model: &FiniteCmdp, mu: &[f64], rule: &[usize]) -> Vec<f64> {
    let mut next = alloc::vec![0.0f64; model.states];
    for x in 0..model.states {
        if mu[x] == 0.0 {
            continue;
        }
        let row = &model.transition[x][rule[x]];
        for y in 0..model.states {
            next[y] += mu[x] * row[y];
        }
    }
    next
}

fn expected_over(mu: &[f64], table: &[Vec<f64>], rule: &[usize]) -> f64 {
    let mut acc = 0.0;
    for x in 0..mu.len() {
        acc += mu[x] * table[x][rule[x]];
    }
    acc
}

/// Distribution over states after playing `prefix` from the start.
fn propagate(model: &FiniteCmdp, rules: &[Vec<usize>], prefix: &[SymbolId]) -> Vec<f64> {
    let mut mu = model.start.clone();
    for &r in prefix {
        mu = step_distribution(model, &mu, &rules[r]);
    }
    mu
}

/// Discounted expected cost of the first `values.len()` stages.
fn discounted_cost(model: &FiniteCmdp, rules: &[Vec<usize>], values: &[SymbolId]) -> f64 {
    let mut mu = model.start.clone();
    let mut weight = 1.0;
    let mut total = 0.0;
    for &r in values {
        total += weight * expected_over(&mu, &model.cost, &rules[r]);
        mu = step_distribution(model, &mu, &rules[r]);
        weight *= model.discount;
    }
    total
}

struct CmdpCsf {
    model: Arc<FiniteCmdp>,
    rules: Arc<Vec<Vec<usize>>>,
    /// With nonnegative one-step costs the running cost only grows, so a
    /// prefix over budget is provably dead. Costs of mixed sign make every
    /// prefix undecidable.
    nonneg_costs: bool,
}

impl CsfOracle for CmdpCsf {
    fn full_check(&self, values: &[SymbolId]) -> bool {
        discounted_cost(&self.model, &self.rules, values) <= self.model.budget
    }

    fn partial_check(&self, partial: &PartialAssignment) -> Feasibility {
        if self.nonneg_costs
            && discounted_cost(&self.model, &self.rules, partial.prefix()) > self.model.budget
        {
            return Feasibility::Infeasible;
        }
        Feasibility::Unknown
    }
}

/// Express a model as a stage problem over decision rules. Stage `i`'s
/// symbol picks the rule played at time `i - 1`; the weight vector carries
/// the discounting, so stage 1 has weight 1.
pub fn cmdp_to_h(model: &FiniteCmdp, options: &CmdpOptions) -> Result<ProblemH, CoreError> {
    model.validate()?;
    let rules = match &options.candidate_rules {
        Some(list) => {
            if list.is_empty() {
                return Err(CoreError::InvalidInstance(String::from("candidate rule list is empty")));
            }
            for rule in list {
                if rule.len() != model.states || rule.iter().any(|&a| a >= model.actions) {
                    return Err(CoreError::InvalidInstance(String::from(
                        "candidate rule does not map every state to a valid action",
                    )));
                }
            }
            list.clone()
        }
        None => enumerate_rules(model.states, model.actions, options.rule_cap)?,
    };

    let mut labels = Vec::with_capacity(rules.len());
    for (i, rule) in rules.iter().enumerate() {
        let mut label = String::new();
        for &a in rule {
            let _ = write!(label, "{a}");
        }
        // Duplicate rules in a candidate list get index-qualified labels.
        let _ = write!(label, "#{i}");
        labels.push(label);
    }

    let mut weights = Vec::with_capacity(model.horizon);
    let mut w = 1.0;
    for _ in 0..model.horizon {
        weights.push(w);
        w *= model.discount;
    }

    let model = Arc::new(model.clone());
    let rules = Arc::new(rules);
    let nonneg_costs = model.cost.iter().all(|row| row.iter().all(|&c| c >= 0.0));

    let reward_model = Arc::clone(&model);
    let reward_rules = Arc::clone(&rules);
    let reward = Reward::Prefix(Box::new(move |prefix, symbol| {
        let mu = propagate(&reward_model, &reward_rules, prefix);
        expected_over(&mu, &reward_model.reward, &reward_rules[symbol])
    }));

    let csf = CmdpCsf { model: Arc::clone(&model), rules: Arc::clone(&rules), nonneg_costs };
    ProblemH::new(model.horizon, Alphabet::labeled(labels)?, weights, reward, Box::new(csf))
}
