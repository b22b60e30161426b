//! Instance file schema and loading.
//!
//! An instance is a JSON document:
//!
//! ```json
//! {
//!   "N": 3,
//!   "alphabet": [0, 1],
//!   "b": [1.0, 1.0, 1.0],
//!   "phi": {"table": [[0.0, 1.0], [2.0, 0.5], [0.0, 3.0]]},
//!   "constraints": {"kind": "budget", "cost": [[0,1],[0,1],[0,1]], "limit": 2.0}
//! }
//! ```
//!
//! `phi` is either an explicit reward table or an adapter reference
//! (`{"adapter": "adc"|"dfa"|"cmdp", "params": {...}}`). Adapter instances
//! carry their own constraint structure, so the `constraints` block is
//! rejected there, and the outer `N`/`alphabet`/`b` fields become optional
//! consistency checks on what the adapter derives.

use std::fs;
use std::path::{Path, PathBuf};

use msdp_core::adapters::adc::{adc_problem, AdcInstance};
use msdp_core::adapters::cmdp::{cmdp_to_h, enumerate_rules, CmdpOptions, FiniteCmdp};
use msdp_core::adapters::dfa::{dfa_problem, DfaInstance, SwScores};
use msdp_core::constraints::{
    AllOfCsf, BudgetCsf, OrderingCsf, PermutationCsf, RandomCsf, Unconstrained,
};
use msdp_core::{Alphabet, CsfOracle, ProblemH, Reward};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Vec<Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    pub phi: Phi,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraints: Option<ConstraintBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Phi {
    Table { table: Vec<Vec<f64>> },
    Adapter { adapter: AdapterKind, params: Value },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdapterKind {
    Adc,
    Dfa,
    Cmdp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintBlock {
    None,
    Budget { cost: Vec<Vec<f64>>, limit: f64 },
    Ordering { direction: OrderingDirection },
    Permutation,
    Random { seed: u64, density: f64 },
    AllOf { members: Vec<ConstraintBlock> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingDirection {
    NonIncreasing,
    NonDecreasing,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdcParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub d: Vec<f64>,
    #[serde(rename = "Pt")]
    pub pt: f64,
    pub bits: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DfaParams {
    /// Inline fragment strings; mutually exclusive with `fasta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fragments: Option<Vec<String>>,
    /// Path to a FASTA file, one fragment per record, resolved relative
    /// to the instance file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fasta: Option<String>,
    #[serde(rename = "match", skip_serializing_if = "Option::is_none")]
    pub matching: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    /// Enables best-so-far pruning of survivors that provably cannot win.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CmdpParams {
    pub states: usize,
    pub actions: usize,
    #[serde(rename = "P")]
    pub p: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub gamma: f64,
    pub horizon: usize,
    /// Budget on expected discounted cost; a number, or the string "inf"
    /// to disable the constraint.
    pub d: BudgetValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule_cap: Option<usize>,
    /// Explicit decision rules (state index to action index each), which
    /// bypass full enumeration of the rule alphabet.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rules: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BudgetValue {
    Number(f64),
    Text(String),
}

impl BudgetValue {
    fn as_f64(&self) -> Result<f64, CliError> {
        match self {
            BudgetValue::Number(v) => Ok(*v),
            BudgetValue::Text(s) if s == "inf" => Ok(f64::INFINITY),
            BudgetValue::Text(s) => {
                Err(CliError::Parse(format!("budget d must be a number or \"inf\", got {s:?}")))
            }
        }
    }
}

/// A parsed instance plus the directory its relative references (FASTA
/// paths) resolve against.
#[derive(Clone, Debug)]
pub struct LoadedInstance {
    pub file: InstanceFile,
    pub base_dir: PathBuf,
}

/// How solution symbols translate back to domain values in reports.
#[derive(Clone, Debug)]
pub enum Domain {
    /// Symbol `s` is the alphabet entry at index `s`.
    Values(Vec<Value>),
    /// Symbol `s` prints as `s + 1` (fragment numbering).
    OneBased,
    /// Symbol `s` is a decision rule, printed as its action vector.
    Rules(Vec<Vec<usize>>),
}

impl Domain {
    pub fn value_of(&self, symbol: usize) -> Value {
        match self {
            Domain::Values(v) => v[symbol].clone(),
            Domain::OneBased => Value::from(symbol + 1),
            Domain::Rules(rules) => {
                Value::Array(rules[symbol].iter().map(|&a| Value::from(a)).collect())
            }
        }
    }
}

/// Everything a solver run needs, rebuilt fresh per run so no solver sees
/// state another one left behind (the assembly bound caches a best-known
/// value inside the oracle).
pub struct BuiltInstance {
    pub problem: ProblemH,
    pub domain: Domain,
    /// Fragment strings when this is an assembly instance, for the
    /// post-solve sequence reconstruction.
    pub fragments: Option<Vec<String>>,
    pub label: &'static str,
}

pub fn load_instance(path: &Path) -> Result<LoadedInstance, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    parse_instance(&text, base)
}

pub fn parse_instance(text: &str, base_dir: PathBuf) -> Result<LoadedInstance, CliError> {
    let file: InstanceFile = serde_json::from_str(text)
        .map_err(|e| CliError::Parse(format!("instance parse error: {e}")))?;
    Ok(LoadedInstance { file, base_dir })
}

pub fn to_json_string(file: &InstanceFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("instance serialization");
    s.push('\n');
    s
}

/// Plain FASTA: records start at '>' header lines, sequence lines in a
/// record concatenate.
pub fn parse_fasta(text: &str) -> Result<Vec<String>, CliError> {
    let mut fragments = Vec::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('>') {
            if let Some(seq) = current.take() {
                fragments.push(seq);
            }
            let _ = rest;
            current = Some(String::new());
        } else {
            match current.as_mut() {
                Some(seq) => seq.push_str(line),
                None => {
                    return Err(CliError::Parse(String::from(
                        "FASTA content before the first '>' header",
                    )))
                }
            }
        }
    }
    if let Some(seq) = current.take() {
        fragments.push(seq);
    }
    if fragments.is_empty() {
        return Err(CliError::Parse(String::from("FASTA file has no records")));
    }
    if fragments.iter().any(String::is_empty) {
        return Err(CliError::Parse(String::from("FASTA record with empty sequence")));
    }
    Ok(fragments)
}

fn label_of(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn build_csf(
    block: &ConstraintBlock,
    n: usize,
    m: usize,
) -> Result<Box<dyn CsfOracle>, CliError> {
    Ok(match block {
        ConstraintBlock::None => Box::new(Unconstrained),
        ConstraintBlock::Budget { cost, limit } => {
            if cost.len() != n || cost.iter().any(|row| row.len() != m) {
                return Err(CliError::Parse(format!(
                    "budget cost table must be {n}x{m} to match the instance"
                )));
            }
            Box::new(BudgetCsf::new(cost.clone(), *limit)?)
        }
        ConstraintBlock::Ordering { direction } => match direction {
            OrderingDirection::NonIncreasing => Box::new(OrderingCsf::non_increasing()),
            OrderingDirection::NonDecreasing => Box::new(OrderingCsf::non_decreasing()),
        },
        ConstraintBlock::Permutation => {
            if m != n {
                return Err(CliError::Parse(format!(
                    "permutation constraint needs alphabet size equal to N ({m} vs {n})"
                )));
            }
            Box::new(PermutationCsf::new(n)?)
        }
        ConstraintBlock::Random { seed, density } => Box::new(RandomCsf::new(*seed, *density)?),
        ConstraintBlock::AllOf { members } => {
            let built = members
                .iter()
                .map(|member| build_csf(member, n, m))
                .collect::<Result<Vec<_>, _>>()?;
            Box::new(AllOfCsf::new(built)?)
        }
    })
}

fn involves_permutation(block: &ConstraintBlock) -> bool {
    match block {
        ConstraintBlock::Permutation => true,
        ConstraintBlock::AllOf { members } => members.iter().any(involves_permutation),
        _ => false,
    }
}

fn adapter_params<T: for<'de> Deserialize<'de>>(params: &Value, what: &str) -> Result<T, CliError> {
    serde_json::from_value(params.clone())
        .map_err(|e| CliError::Parse(format!("{what} params: {e}")))
}

fn check_outer_n(file: &InstanceFile, n: usize) -> Result<(), CliError> {
    if let Some(outer) = file.n {
        if outer != n {
            return Err(CliError::Parse(format!(
                "N is {outer} but the adapter instance has {n} stages"
            )));
        }
    }
    Ok(())
}

fn check_outer_alphabet(file: &InstanceFile, expect: &[Value]) -> Result<(), CliError> {
    if let Some(outer) = &file.alphabet {
        if outer != expect {
            return Err(CliError::Parse(String::from(
                "alphabet disagrees with the one the adapter defines",
            )));
        }
    }
    Ok(())
}

fn check_outer_weights(file: &InstanceFile, expect: &[f64]) -> Result<(), CliError> {
    if let Some(outer) = &file.b {
        let ok = outer.len() == expect.len()
            && outer.iter().zip(expect).all(|(x, y)| (x - y).abs() <= 1e-9);
        if !ok {
            return Err(CliError::Parse(String::from(
                "b disagrees with the weights the adapter defines",
            )));
        }
    }
    Ok(())
}

impl LoadedInstance {
    /// Builds a fresh problem. Call once per solver run.
    pub fn build(&self) -> Result<BuiltInstance, CliError> {
        match &self.file.phi {
            Phi::Table { table } => self.build_table(table),
            Phi::Adapter { adapter: AdapterKind::Adc, params } => self.build_adc(params),
            Phi::Adapter { adapter: AdapterKind::Dfa, params } => self.build_dfa(params),
            Phi::Adapter { adapter: AdapterKind::Cmdp, params } => self.build_cmdp(params),
        }
    }

    fn reject_constraints_block(&self, adapter: &str) -> Result<(), CliError> {
        if self.file.constraints.is_some() {
            return Err(CliError::Parse(format!(
                "{adapter} instances define their own constraints; remove the constraints block"
            )));
        }
        Ok(())
    }

    fn build_table(&self, table: &[Vec<f64>]) -> Result<BuiltInstance, CliError> {
        let n = self
            .file
            .n
            .ok_or_else(|| CliError::Parse(String::from("table instances require N")))?;
        let alphabet = self
            .file
            .alphabet
            .as_ref()
            .ok_or_else(|| CliError::Parse(String::from("table instances require alphabet")))?;
        let weights = self
            .file
            .b
            .as_ref()
            .ok_or_else(|| CliError::Parse(String::from("table instances require b")))?;
        let m = alphabet.len();
        if table.len() != n || table.iter().any(|row| row.len() != m) {
            return Err(CliError::Parse(format!("phi.table must be {n}x{m}")));
        }
        let block = self.file.constraints.clone().unwrap_or(ConstraintBlock::None);
        let csf = build_csf(&block, n, m)?;
        let labels = alphabet.iter().map(label_of).collect::<Vec<_>>();
        let mut problem = ProblemH::new(
            n,
            Alphabet::labeled(labels)?,
            weights.clone(),
            Reward::Table(table.to_vec()),
            csf,
        )?;
        if involves_permutation(&block) {
            problem = problem.with_permutation_structure()?;
        }
        Ok(BuiltInstance {
            problem,
            domain: Domain::Values(alphabet.clone()),
            fragments: None,
            label: "table",
        })
    }

    fn build_adc(&self, params: &Value) -> Result<BuiltInstance, CliError> {
        self.reject_constraints_block("adc")?;
        let p: AdcParams = adapter_params(params, "adc")?;
        if p.a.len() != p.n {
            return Err(CliError::Parse(format!(
                "adc N is {} but a has {} entries",
                p.n,
                p.a.len()
            )));
        }
        let instance =
            AdcInstance { a: p.a, b: p.b, d: p.d, p_t: p.pt, bits: p.bits.clone() };
        let problem = adc_problem(&instance)?;
        let alphabet: Vec<Value> = p.bits.iter().map(|&w| Value::from(w)).collect();
        check_outer_n(&self.file, problem.n())?;
        check_outer_alphabet(&self.file, &alphabet)?;
        check_outer_weights(&self.file, problem.weights())?;
        Ok(BuiltInstance {
            problem,
            domain: Domain::Values(alphabet),
            fragments: None,
            label: "adc",
        })
    }

    fn build_dfa(&self, params: &Value) -> Result<BuiltInstance, CliError> {
        self.reject_constraints_block("dfa")?;
        let p: DfaParams = adapter_params(params, "dfa")?;
        let fragments = match (&p.fragments, &p.fasta) {
            (Some(f), None) => f.clone(),
            (None, Some(path)) => {
                let resolved = self.base_dir.join(path);
                let text = fs::read_to_string(&resolved)
                    .map_err(|e| CliError::Io(format!("{}: {e}", resolved.display())))?;
                parse_fasta(&text)?
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Parse(String::from(
                    "dfa params: give fragments or fasta, not both",
                )))
            }
            (None, None) => {
                return Err(CliError::Parse(String::from(
                    "dfa params: fragments or fasta is required",
                )))
            }
        };
        let scores = SwScores {
            matching: p.matching.unwrap_or(SwScores::default().matching),
            mismatch: p.mismatch.unwrap_or(SwScores::default().mismatch),
            gap: p.gap.unwrap_or(SwScores::default().gap),
        };
        let instance = DfaInstance::new(fragments, scores, p.bound.unwrap_or(true))?;
        let kept = instance.fragments().to_vec();
        let n = instance.n();
        let problem = dfa_problem(&instance)?;
        let alphabet: Vec<Value> = (1..=n).map(Value::from).collect();
        check_outer_n(&self.file, n)?;
        check_outer_alphabet(&self.file, &alphabet)?;
        check_outer_weights(&self.file, problem.weights())?;
        Ok(BuiltInstance {
            problem,
            domain: Domain::OneBased,
            fragments: Some(kept),
            label: "dfa",
        })
    }

    fn build_cmdp(&self, params: &Value) -> Result<BuiltInstance, CliError> {
        self.reject_constraints_block("cmdp")?;
        let p: CmdpParams = adapter_params(params, "cmdp")?;
        let model = FiniteCmdp {
            states: p.states,
            actions: p.actions,
            transition: p.p,
            reward: p.r,
            cost: p.c,
            start: p.mu,
            discount: p.gamma,
            horizon: p.horizon,
            budget: p.d.as_f64()?,
        };
        let options = CmdpOptions {
            rule_cap: p.rule_cap.unwrap_or_else(|| CmdpOptions::default().rule_cap),
            candidate_rules: p.rules.clone(),
        };
        let problem = cmdp_to_h(&model, &options)?;
        let rules = match p.rules {
            Some(rules) => rules,
            None => enumerate_rules(model.states, model.actions, options.rule_cap)?,
        };
        if self.file.alphabet.is_some() {
            return Err(CliError::Parse(String::from(
                "cmdp instances imply their alphabet from the rule set; remove alphabet",
            )));
        }
        check_outer_n(&self.file, model.horizon)?;
        check_outer_weights(&self.file, problem.weights())?;
        Ok(BuiltInstance {
            problem,
            domain: Domain::Rules(rules),
            fragments: None,
            label: "cmdp",
        })
    }
}
