//! Adapters that express concrete applications as stage-separable problems.

pub mod adc;
pub mod cmdp;
pub mod dfa;
