//! The bundled benchmark pair: a 12-channel quantizer bank under a power
//! budget and a 10-fragment assembly instance, run through every selected
//! solver for a side-by-side comparison report.

use std::path::PathBuf;

use crate::format::{parse_instance, LoadedInstance};
use crate::report::InstanceReport;
use crate::run::{instance_report, RunOptions, SolverKind};
use crate::CliError;

pub const ADC_INSTANCE: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../instances/adc_bank12.json"));
pub const DFA_INSTANCE: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../instances/dfa_ecoli.json"));

pub fn bundled() -> Result<Vec<(&'static str, LoadedInstance)>, CliError> {
    Ok(vec![
        ("adc", parse_instance(ADC_INSTANCE, PathBuf::from("."))?),
        ("dfa", parse_instance(DFA_INSTANCE, PathBuf::from("."))?),
    ])
}

pub fn run_bench(
    solvers: &[SolverKind],
    opts: &RunOptions,
) -> Result<Vec<InstanceReport>, CliError> {
    let mut sections = Vec::new();
    for (name, loaded) in bundled()? {
        sections.push(instance_report(name, &loaded, solvers, opts)?);
    }
    Ok(sections)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_instances_parse_and_build() {
        for (name, loaded) in bundled().unwrap() {
            let built = loaded.build().unwrap();
            match name {
                "adc" => assert_eq!(built.problem.n(), 12),
                "dfa" => {
                    assert_eq!(built.problem.n(), 10);
                    assert!(built.fragments.is_some());
                }
                _ => unreachable!(),
            }
        }
    }
}
