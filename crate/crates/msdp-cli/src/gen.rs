//! Deterministic instance generators, including the single-survivor
//! counterexample search.

use std::path::PathBuf;

use msdp_core::baselines::exhaustive_search;
use msdp_core::{msdp_solve, SurvivorMode, SurvivorPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde_json::Value;

use crate::format::{
    AdapterKind, AdcParams, BudgetValue, CmdpParams, ConstraintBlock, DfaParams, InstanceFile,
    LoadedInstance, OrderingDirection, Phi,
};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum GenKind {
    RandomTable,
    Adc,
    DfaRandom,
    CmdpRandom,
    /// Searches random instances for one where keeping a single survivor
    /// per node returns a strictly worse value than enumeration while the
    /// keep-all sweep matches it.
    Witness,
}

#[derive(Clone, Debug)]
pub struct GenRequest {
    pub kind: GenKind,
    pub seed: u64,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub pt: Option<f64>,
    pub frag_len: Option<usize>,
    pub states: Option<usize>,
    pub actions: Option<usize>,
    pub horizon: Option<usize>,
    pub attempts: u64,
}

#[derive(Clone, Debug)]
pub struct WitnessSummary {
    pub attempts_used: u64,
    /// Value the single-survivor recursion reached; None when it starved
    /// with no feasible completion at all.
    pub single_value: Option<f64>,
    pub oracle_value: f64,
}

pub fn generate(req: &GenRequest) -> Result<(InstanceFile, Option<WitnessSummary>), CliError> {
    match req.kind {
        GenKind::RandomTable => Ok((random_table_file(req.seed, req.n, req.m), None)),
        GenKind::Adc => {
            Ok((adc_file(req.seed, req.n.unwrap_or(12), req.pt.unwrap_or(48.0)), None))
        }
        GenKind::DfaRandom => {
            Ok((dfa_random_file(req.seed, req.n.unwrap_or(6), req.frag_len.unwrap_or(8)), None))
        }
        GenKind::CmdpRandom => {
            Ok((cmdp_random_file(req.seed, req.states, req.actions, req.horizon), None))
        }
        GenKind::Witness => {
            let (file, summary) = witness_search(req.seed, req.attempts)?;
            Ok((file, Some(summary)))
        }
    }
}

fn uniform_table(rng: &mut ChaCha12Rng, n: usize, m: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..m).map(|_| rng.gen_range(lo..hi)).collect()).collect()
}

fn budget_block(rng: &mut ChaCha12Rng, n: usize, m: usize, tightness: f64) -> ConstraintBlock {
    let cost = uniform_table(rng, n, m, 0.0, 5.0);
    let min: f64 = cost.iter().map(|row| row.iter().copied().fold(f64::INFINITY, f64::min)).sum();
    let max: f64 =
        cost.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum();
    ConstraintBlock::Budget { cost, limit: min + tightness * (max - min) }
}

/// Random reward-table instance. The constraint family is rolled from the
/// seed: unconstrained, budget, ordering, black-box random, or permutation
/// (which forces a square instance).
pub fn random_table_file(seed: u64, n: Option<usize>, m: Option<usize>) -> InstanceFile {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut roll = rng.gen_range(0..5u32);
    if roll == 4 {
        if let (Some(a), Some(b)) = (n, m) {
            if a != b {
                roll = 1;
            }
        }
    }
    let (n, m) = if roll == 4 {
        let size = n.or(m).unwrap_or_else(|| rng.gen_range(2..=4));
        (size, size)
    } else {
        (n.unwrap_or_else(|| rng.gen_range(1..=8)), m.unwrap_or_else(|| rng.gen_range(1..=4)))
    };
    let table = uniform_table(&mut rng, n, m, -10.0, 10.0);
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let constraints = match roll {
        0 => ConstraintBlock::None,
        1 => {
            let tightness = rng.gen_range(0.2..1.0);
            budget_block(&mut rng, n, m, tightness)
        }
        2 => ConstraintBlock::Ordering {
            direction: if rng.gen::<bool>() {
                OrderingDirection::NonIncreasing
            } else {
                OrderingDirection::NonDecreasing
            },
        },
        3 => ConstraintBlock::Random { seed: rng.gen(), density: rng.gen_range(0.3..0.8) },
        _ => ConstraintBlock::Permutation,
    };
    InstanceFile {
        n: Some(n),
        alphabet: Some((0..m).map(Value::from).collect()),
        b: Some(weights),
        phi: Phi::Table { table },
        constraints: Some(constraints),
    }
}

/// Quantizer-bank instance family: decaying score profile, unit noise
/// floors, and small negative slopes, so wider words always help and the
/// power budget binds.
pub fn adc_file(seed: u64, n: usize, pt: f64) -> InstanceFile {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut profile: Vec<f64> =
        (0..n).map(|i| 1.0 + 3.0 * rng.gen::<f64>() * (-0.3 * i as f64).exp()).collect();
    profile.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let params = AdcParams {
        n,
        a: profile.iter().map(|p| p.sqrt()).collect(),
        b: vec![1.0; n],
        d: (0..n).map(|_| -(0.01 + 0.05 * rng.gen::<f64>())).collect(),
        pt,
        bits: vec![1, 2, 3, 4],
    };
    InstanceFile {
        n: Some(n),
        alphabet: Some(params.bits.iter().map(|&w| Value::from(w)).collect()),
        b: Some(vec![1.0; n]),
        phi: Phi::Adapter {
            adapter: AdapterKind::Adc,
            params: serde_json::to_value(&params).expect("adc params"),
        },
        constraints: None,
    }
}

pub fn dfa_random_file(seed: u64, n: usize, frag_len: usize) -> InstanceFile {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let bases = ['A', 'C', 'G', 'T'];
    let fragments: Vec<String> = (0..n)
        .map(|_| (0..frag_len).map(|_| bases[rng.gen_range(0..4)]).collect())
        .collect();
    let params = DfaParams {
        fragments: Some(fragments),
        fasta: None,
        matching: Some(1.0),
        mismatch: Some(-1.0),
        gap: Some(-1.0),
        bound: Some(true),
    };
    InstanceFile {
        n: Some(n),
        alphabet: Some((1..=n).map(Value::from).collect()),
        b: Some(vec![1.0; n]),
        phi: Phi::Adapter {
            adapter: AdapterKind::Dfa,
            params: serde_json::to_value(&params).expect("dfa params"),
        },
        constraints: None,
    }
}

fn normalized(rng: &mut ChaCha12Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.01..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

pub fn cmdp_random_file(
    seed: u64,
    states: Option<usize>,
    actions: Option<usize>,
    horizon: Option<usize>,
) -> InstanceFile {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let states = states.unwrap_or_else(|| rng.gen_range(2..=4));
    let actions = actions.unwrap_or_else(|| rng.gen_range(2..=3));
    let horizon = horizon.unwrap_or_else(|| rng.gen_range(2..=4));
    let p: Vec<Vec<Vec<f64>>> = (0..states)
        .map(|_| (0..actions).map(|_| normalized(&mut rng, states)).collect())
        .collect();
    let r = uniform_table(&mut rng, states, actions, 0.0, 1.0);
    let c = uniform_table(&mut rng, states, actions, 0.0, 1.0);
    let mu = normalized(&mut rng, states);
    let gamma = rng.gen_range(0.4..0.95);
    let d = rng.gen_range(0.3..1.8);
    let params = CmdpParams {
        states,
        actions,
        p,
        r,
        c,
        mu,
        gamma,
        horizon,
        d: BudgetValue::Number(d),
        rule_cap: None,
        rules: None,
    };
    let mut weights = Vec::with_capacity(horizon);
    let mut w = 1.0;
    for _ in 0..horizon {
        weights.push(w);
        w *= gamma;
    }
    InstanceFile {
        n: Some(horizon),
        alphabet: None,
        b: Some(weights),
        phi: Phi::Adapter {
            adapter: AdapterKind::Cmdp,
            params: serde_json::to_value(&params).expect("cmdp params"),
        },
        constraints: None,
    }
}

/// Draws one witness-search candidate: small, tightly coupled instances
/// where greedy per-node survival is most likely to strand the optimum.
fn witness_candidate(rng: &mut ChaCha12Rng) -> InstanceFile {
    let n = rng.gen_range(3..=4);
    let m = rng.gen_range(2..=3);
    let table = uniform_table(rng, n, m, -10.0, 10.0);
    let weights = vec![1.0; n];
    let constraints = if rng.gen::<bool>() {
        let tightness = rng.gen_range(0.3..0.8);
        budget_block(rng, n, m, tightness)
    } else {
        ConstraintBlock::Random { seed: rng.gen(), density: rng.gen_range(0.35..0.65) }
    };
    InstanceFile {
        n: Some(n),
        alphabet: Some((0..m).map(Value::from).collect()),
        b: Some(weights),
        phi: Phi::Table { table },
        constraints: Some(constraints),
    }
}

pub fn witness_search(
    seed: u64,
    attempts: u64,
) -> Result<(InstanceFile, WitnessSummary), CliError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let single_policy =
        SurvivorPolicy { mode: SurvivorMode::SingleSurvivor, ..SurvivorPolicy::default() };
    for attempt in 1..=attempts {
        let file = witness_candidate(&mut rng);
        let loaded = LoadedInstance { file, base_dir: PathBuf::from(".") };
        let oracle = match exhaustive_search(&loaded.build()?.problem) {
            Ok(report) => report,
            Err(_) => continue,
        };
        let exact = msdp_solve(&loaded.build()?.problem, &SurvivorPolicy::keep_all())
            .expect("keep-all sweep must match a feasible enumeration");
        assert_eq!(
            exact.best.objective.unwrap().to_bits(),
            oracle.best.objective.unwrap().to_bits(),
            "keep-all sweep disagreed with enumeration",
        );
        let oracle_value = oracle.best.objective.unwrap();
        let single_value = match msdp_solve(&loaded.build()?.problem, &single_policy) {
            Ok(report) => {
                let v = report.best.objective.unwrap();
                if v < oracle_value {
                    Some(Some(v))
                } else {
                    None
                }
            }
            Err(_) => Some(None),
        };
        if let Some(single_value) = single_value {
            let summary =
                WitnessSummary { attempts_used: attempt, single_value, oracle_value };
            return Ok((loaded.file, summary));
        }
    }
    Err(CliError::WitnessNotFound { attempts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::to_json_string;

    #[test]
    fn generation_is_deterministic() {
        for kind in [GenKind::RandomTable, GenKind::Adc, GenKind::DfaRandom, GenKind::CmdpRandom] {
            let req = GenRequest {
                kind,
                seed: 7,
                n: None,
                m: None,
                pt: None,
                frag_len: None,
                states: None,
                actions: None,
                horizon: None,
                attempts: 0,
            };
            let (a, _) = generate(&req).unwrap();
            let (b, _) = generate(&req).unwrap();
            assert_eq!(to_json_string(&a), to_json_string(&b));
        }
    }

    #[test]
    fn generated_instances_build_and_round_trip() {
        for seed in 1..=12 {
            let file = random_table_file(seed, None, None);
            let text = to_json_string(&file);
            let again = crate::format::parse_instance(&text, PathBuf::from(".")).unwrap();
            assert_eq!(file, again.file);
            again.build().unwrap();
        }
        let adc = adc_file(1, 12, 48.0);
        let text = to_json_string(&adc);
        let again = crate::format::parse_instance(&text, PathBuf::from(".")).unwrap();
        assert_eq!(adc, again.file);
        again.build().unwrap();
        let cmdp = cmdp_random_file(3, None, None, None);
        let text = to_json_string(&cmdp);
        crate::format::parse_instance(&text, PathBuf::from(".")).unwrap().build().unwrap();
        let dfa = dfa_random_file(5, 5, 8);
        let text = to_json_string(&dfa);
        crate::format::parse_instance(&text, PathBuf::from(".")).unwrap().build().unwrap();
    }

    #[test]
    fn witness_search_finds_a_counterexample() {
        let (file, summary) = witness_search(11, 10_000).unwrap();
        assert!(summary.attempts_used <= 10_000);
        match summary.single_value {
            Some(v) => assert!(v < summary.oracle_value),
            None => {}
        }
        let loaded = LoadedInstance { file, base_dir: PathBuf::from(".") };
        let single = SurvivorPolicy { mode: SurvivorMode::SingleSurvivor, ..Default::default() };
        let oracle = exhaustive_search(&loaded.build().unwrap().problem).unwrap();
        match msdp_solve(&loaded.build().unwrap().problem, &single) {
            Ok(r) => assert!(r.best.objective.unwrap() < oracle.best.objective.unwrap()),
            Err(_) => {}
        }
    }
}
