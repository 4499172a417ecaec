//! Quantum procedures over an oracle: the double-call Deutsch–Jozsa run and
//! the single-call readout of a phase-encoded function.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{inner_product, projector_probability, BasisLabel, StateVector, EPS_VERDICT};
use crate::oracle::{MembershipTable, OracleSpec, PhaseKind};
use crate::rng::{derive_seed, CounterRng};

/// Oracle calls made by one [`dj_run`].
pub const DJ_ORACLE_CALLS: u32 = 2;
/// Oracle calls made by one [`phase_readout`].
pub const READOUT_ORACLE_CALLS: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiddleOp {
    /// `|x,y⟩ → (-1)^y |x,y⟩`
    SignFlip,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SecondCall {
    #[serde(rename = "forward_u")]
    ForwardU,
    #[serde(rename = "inverse_u")]
    InverseU,
}

impl MiddleOp {
    pub fn name(&self) -> &'static str {
        match self {
            MiddleOp::SignFlip => "sign_flip",
            MiddleOp::Identity => "identity",
        }
    }
}

impl SecondCall {
    pub fn name(&self) -> &'static str {
        match self {
            SecondCall::ForwardU => "forward_u",
            SecondCall::InverseU => "inverse_u",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DJConfig {
    pub middle_op: MiddleOp,
    pub second_call: SecondCall,
    /// Label of the phase regime, carried into reports only.
    pub regime: String,
}

impl DJConfig {
    pub fn new(middle_op: MiddleOp, second_call: SecondCall, phase_kind: &str) -> Self {
        Self {
            middle_op,
            second_call,
            regime: format!("{phase_kind}+{}+{}", middle_op.name(), second_call.name()),
        }
    }

    /// Zero phases, sign flip, forward second call.
    pub fn standard() -> Self {
        Self::new(MiddleOp::SignFlip, SecondCall::ForwardU, "zero")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    /// All strings accepted.
    A,
    /// Exactly half accepted.
    B,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::A => "A",
            Verdict::B => "B",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// A above `1 - EPS_VERDICT`, B below `EPS_VERDICT`, otherwise inconclusive.
pub fn verdict_for(probability: f64) -> Verdict {
    if probability > 1.0 - EPS_VERDICT {
        Verdict::A
    } else if probability < EPS_VERDICT {
        Verdict::B
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DJOutcome {
    /// `⟨ψ|χ⟩`
    pub inner: Complex64,
    /// `|⟨ψ|χ⟩|²`
    pub probability: f64,
    pub verdict: Verdict,
    pub oracle_calls: u32,
}

/// Negates every amplitude with answer bit 1.
pub fn sign_flip(state: &StateVector) -> StateVector {
    let mut out = state.amplitudes().to_vec();
    for pair in out.chunks_exact_mut(2) {
        pair[1] = -pair[1];
    }
    StateVector::from_unitary_image(state.width(), out)
}

pub fn dj_run(oracle: &OracleSpec, config: &DJConfig) -> Result<DJOutcome> {
    dj_run_traced(oracle, config).map(|(outcome, _)| outcome)
}

/// As [`dj_run`], also returning the final state `|χ⟩`.
pub fn dj_run_traced(oracle: &OracleSpec, config: &DJConfig) -> Result<(DJOutcome, StateVector)> {
    let n = oracle.width();
    if n == 0 {
        return Err(Error::Domain("Deutsch–Jozsa run needs width ≥ 1".into()));
    }
    let psi = StateVector::uniform_unchecked(n);
    let after_first = oracle.apply(&psi)?;
    let middle = match config.middle_op {
        MiddleOp::SignFlip => sign_flip(&after_first),
        MiddleOp::Identity => after_first,
    };
    let chi = match config.second_call {
        SecondCall::ForwardU => oracle.apply(&middle)?,
        SecondCall::InverseU => oracle.apply_inverse(&middle)?,
    };
    let inner = inner_product(&psi, &chi)?;
    let probability = inner.norm_sqr();
    Ok((
        DJOutcome {
            inner,
            probability,
            verdict: verdict_for(probability),
            oracle_calls: DJ_ORACLE_CALLS,
        },
        chi,
    ))
}

/// Runs `trials` Deutsch–Jozsa runs on `membership`, each with a fresh
/// uniform random phase profile seeded by `derive_seed(master_seed, t)`.
/// Results are in trial order.
pub fn dj_random_phase_trials(
    membership: &MembershipTable,
    middle_op: MiddleOp,
    second_call: SecondCall,
    master_seed: u64,
    trials: u64,
) -> Result<Vec<(u64, DJOutcome)>> {
    let config = DJConfig::new(middle_op, second_call, "uniform_random");
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(master_seed, t);
            let oracle =
                OracleSpec::with_kind(membership.clone(), PhaseKind::UniformRandom { seed })?;
            Ok((seed, dj_run(&oracle, &config)?))
        })
        .collect()
}

/// Born-rule probability of reading `y = 1` after one oracle call on the
/// uniform superposition. Equals `|X| / 2ⁿ` for any phase profile.
pub fn answer_one_probability(oracle: &OracleSpec) -> Result<f64> {
    let psi = StateVector::uniform_unchecked(oracle.width());
    Ok(oracle.apply(&psi)?.answer_one_probability())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutOutcome {
    pub inner: Complex64,
    pub probability: f64,
    pub bit: u8,
    pub oracle_calls: u32,
}

/// Checks the promise `h(z) = 1` against a known table.
pub fn check_special_string(h: &[u8], z: u64) -> Result<()> {
    match h.get(z as usize) {
        Some(1) => Ok(()),
        Some(v) => Err(Error::Precondition(format!(
            "special string {z} must have h(z) = 1, found {v}"
        ))),
        None => Err(Error::Domain(format!(
            "special string {z} outside an h table of length {}",
            h.len()
        ))),
    }
}

/// Reads `h(x)` from an `f ≡ 0` oracle whose phases encode `h`, given the
/// special string `z` with `h(z) = 1`. The caller is responsible for `h(z) = 1`
/// unless it uses [`phase_readout_validated`].
pub fn phase_readout(oracle: &OracleSpec, z: u64, x: u64) -> Result<u8> {
    phase_readout_outcome(oracle, z, x).map(|o| o.bit)
}

pub fn phase_readout_outcome(oracle: &OracleSpec, z: u64, x: u64) -> Result<ReadoutOutcome> {
    phase_readout_traced(oracle, z, x).map(|(outcome, _)| outcome)
}

pub fn phase_readout_validated(oracle: &OracleSpec, h: &[u8], z: u64, x: u64) -> Result<u8> {
    if h.len() != oracle.membership().bits().len() {
        return Err(Error::Domain(format!(
            "h table length {} does not match oracle width {}",
            h.len(),
            oracle.width()
        )));
    }
    check_special_string(h, z)?;
    phase_readout(oracle, z, x)
}

/// As [`phase_readout_outcome`], also returning `|χ⟩`.
pub fn phase_readout_traced(
    oracle: &OracleSpec,
    z: u64,
    x: u64,
) -> Result<(ReadoutOutcome, StateVector)> {
    let n = oracle.width();
    if x == z {
        return Err(Error::Precondition(format!(
            "degenerate superposition: x and z are both {x}"
        )));
    }
    if oracle.membership().count() != 0 {
        return Err(Error::Precondition(
            "phase readout needs an oracle with f ≡ 0".into(),
        ));
    }
    let z_index = crate::hilbert::basis_index(BasisLabel::new(z, 0), n)?;
    let x_index = crate::hilbert::basis_index(BasisLabel::new(x, 0), n)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); crate::hilbert::dimension(n)];
    amps[z_index] = Complex64::new(1.0, 0.0);
    amps[x_index] = Complex64::new(1.0, 0.0);
    let psi = StateVector::normalized(n, amps)?;
    let chi = oracle.apply(&psi)?;
    let inner = inner_product(&psi, &chi)?;
    let probability = projector_probability(&psi, &chi)?;
    let bit = if probability > 1.0 - EPS_VERDICT {
        1
    } else if probability < EPS_VERDICT {
        0
    } else {
        return Err(Error::ProtocolViolation(format!(
            "readout of x = {x} against z = {z} gave probability {probability}, \
             which is in neither verdict band"
        )));
    };
    Ok((
        ReadoutOutcome {
            inner,
            probability,
            bit,
            oracle_calls: READOUT_ORACLE_CALLS,
        },
        chi,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recovery {
    pub h: Vec<u8>,
    pub oracle_calls: u64,
}

/// Reads every `h(x)`, `x ≠ z`, with one oracle call each; `h(z) = 1` is
/// filled in from the promise.
pub fn recover_function(oracle: &OracleSpec, z: u64) -> Result<Recovery> {
    let len = oracle.membership().bits().len() as u64;
    if z >= len {
        return Err(Error::Domain(format!("special string {z} out of range")));
    }
    let bits = (0..len)
        .into_par_iter()
        .map(|x| {
            if x == z {
                Ok(1)
            } else {
                phase_readout(oracle, z, x)
            }
        })
        .collect::<Result<Vec<u8>>>()?;
    Ok(Recovery {
        h: bits,
        oracle_calls: len - 1,
    })
}

/// Simulates `shots` independent projector measurements with "yes"
/// probability `probability`; returns the number of "yes" outcomes.
pub fn sample_yes_count(probability: f64, shots: u64, rng: &mut CounterRng) -> u64 {
    (0..shots).filter(|_| rng.next_f64() < probability).count() as u64
}

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation over `√count`; zero for fewer than two values.
    pub stderr: f64,
}

impl SampleStats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let stderr = if count < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        };
        Some(Self {
            count,
            mean,
            stderr,
        })
    }
}
