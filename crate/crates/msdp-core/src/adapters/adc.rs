//! Bit allocation across a bank of quantized channels.
//!
//! Each of `N` channels gets a bit width from a small menu. Channel `i`
//! running at `x` bits contributes `a_i^2 / (b_i^2 + d_i * 2^x)` to the
//! objective, a diminishing-returns distortion proxy, while consuming
//! `2^x` units of a shared power budget `P_t`. Allocations must also be
//! non-increasing across channels, which breaks plain per-channel greedy
//! assignment and couples the stages.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::problem::{
    Alphabet, CoreError, CsfOracle, Digest, Feasibility, PartialAssignment, ProblemH, Reward,
    SymbolId,
};

#[derive(Clone, Debug)]
pub struct AdcInstance {
    /// Per-channel signal amplitudes `a_i`.
    pub a: Vec<f64>,
    /// Per-channel noise floors `b_i`.
    pub b: Vec<f64>,
    /// Per-channel quantization slopes `d_i`, nonzero.
    pub d: Vec<f64>,
    /// Total power budget.
    pub p_t: f64,
    /// Menu of bit widths, strictly increasing.
    pub bits: Vec<u32>,
}

impl AdcInstance {
    pub fn validate(&self) -> Result<(), CoreError> {
        let n = self.a.len();
        if n == 0 {
            return Err(CoreError::InvalidInstance(String::from("need at least one channel")));
        }
        if self.b.len() != n || self.d.len() != n {
            return Err(CoreError::InvalidInstance(String::from(
                "channel parameter vectors must have equal length",
            )));
        }
        let finite =
            |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.a) || !finite(&self.b) || !finite(&self.d) {
            return Err(CoreError::InvalidInstance(String::from("channel parameters must be finite")));
        }
        if self.d.iter().any(|&d| d == 0.0) {
            return Err(CoreError::InvalidInstance(String::from("quantization slopes must be nonzero")));
        }
        if !(self.p_t.is_finite() && self.p_t > 0.0) {
            return Err(CoreError::InvalidInstance(String::from("power budget must be positive")));
        }
        if self.bits.is_empty() {
            return Err(CoreError::InvalidInstance(String::from("bit menu must be non-empty")));
        }
        if self.bits.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CoreError::InvalidInstance(String::from("bit menu must be strictly increasing")));
        }
        if *self.bits.last().unwrap() > 52 {
            return Err(CoreError::InvalidInstance(String::from("bit widths above 52 are not supported")));
        }
        for i in 0..n {
            for &w in &self.bits {
                let denom = self.b[i] * self.b[i] + self.d[i] * pow2(w);
                if !(denom.is_finite() && denom > 0.0) {
                    return Err(CoreError::InvalidInstance(String::from(
                        "reward denominator must stay positive over the whole bit menu",
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }
}

fn pow2(w: u32) -> f64 {
    (1u64 << w) as f64
}

/// Feasibility for bit allocation: non-increasing bit widths and total
/// power within budget. Both sides are decidable exactly on any prefix, so
/// this oracle never answers `Unknown`.
struct AdcCsf {
    n: usize,
    /// Power draw per symbol, `2^bits[j]`.
    power: Vec<f64>,
    min_power: f64,
    p_t: f64,
}

impl AdcCsf {
    fn used_power(&self, values: &[SymbolId]) -> f64 {
        values.iter().map(|&s| self.power[s]).sum()
    }

    /// Bit menus are sorted, so non-increasing widths are exactly
    /// non-increasing symbol indices.
    fn ordered(values: &[SymbolId]) -> bool {
        values.windows(2).all(|w| w[0] >= w[1])
    }
}

impl CsfOracle for AdcCsf {
    fn full_check(&self, values: &[SymbolId]) -> bool {
        values.len() == self.n && Self::ordered(values) && self.used_power(values) <= self.p_t
    }

    fn partial_check(&self, partial: &PartialAssignment) -> Feasibility {
        let prefix = partial.prefix();
        if !Self::ordered(prefix) {
            return Feasibility::Infeasible;
        }
        // Cheapest completion: the minimum width everywhere, which also
        // keeps the ordering. Accumulated in the same order `full_check`
        // sums power, so the test is exact even at the budget boundary.
        let mut cheapest = self.used_power(prefix);
        for _ in prefix.len()..self.n {
            cheapest += self.min_power;
        }
        if cheapest > self.p_t {
            Feasibility::Infeasible
        } else {
            Feasibility::Feasible
        }
    }

    fn state_digest(&self, partial: &PartialAssignment) -> Option<Digest> {
        // Completions depend only on spent power and the last width.
        let last = *partial.prefix().last()?;
        let used = self.used_power(partial.prefix());
        Some(Digest((used.to_bits() as u128) | (((last as u128) + 1) << 64)))
    }
}

/// Build the stage-separable problem for a bit-allocation instance.
pub fn adc_problem(instance: &AdcInstance) -> Result<ProblemH, CoreError> {
    instance.validate()?;
    let n = instance.n();
    let m = instance.bits.len();
    let mut table = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(m);
        for &w in &instance.bits {
            let denom = instance.b[i] * instance.b[i] + instance.d[i] * pow2(w);
            row.push(instance.a[i] * instance.a[i] / denom);
        }
        table.push(row);
    }
    let labels: Vec<String> = instance.bits.iter().map(|w| w.to_string()).collect();
    let power: Vec<f64> = instance.bits.iter().map(|&w| pow2(w)).collect();
    let csf = AdcCsf { n, min_power: power[0], power, p_t: instance.p_t };
    ProblemH::new(
        n,
        Alphabet::labeled(labels)?,
        alloc::vec![1.0; n],
        Reward::Table(table),
        Box::new(csf),
    )
}
