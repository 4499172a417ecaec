//! The phase-decorated oracle unitary
//!
//! ```text
//! U |x,0⟩ = e^{iφ_{x,0}} |x, f(x)⟩
//! U |x,1⟩ = e^{iφ_{x,1}} |x, 1 ⊕ f(x)⟩
//! ```
//!
//! `U` is a permutation with phases that acts on each amplitude pair
//! `(2x, 2x+1)` independently, so it is applied in a single `O(2ⁿ)` pass
//! and never materialized as a matrix.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{self, BasisLabel, StateVector, EPS_NORM};
use crate::rng::CounterRng;

/// Widest oracle for which [`verify_faithful`] runs its exhaustive check.
pub const FAITHFUL_CHECK_MAX_N: u32 = 10;

/// Parses a string of `'0'`/`'1'` characters; character `i` is entry `i`.
pub fn parse_bits(text: &str, expected_len: usize, what: &str) -> Result<Vec<u8>> {
    let bits = text
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::Domain(format!(
                "{what}: expected only '0' or '1', found {other:?}"
            ))),
        })
        .collect::<Result<Vec<u8>>>()?;
    if bits.len() != expected_len {
        return Err(Error::Domain(format!(
            "{what}: expected {expected_len} bits, got {}",
            bits.len()
        )));
    }
    Ok(bits)
}

pub fn bits_to_string(bits: &[u8]) -> String {
    bits.iter()
        .map(|&b| if b == 0 { '0' } else { '1' })
        .collect()
}

/// Widest table the crate will allocate (2³⁰ entries).
const TABLE_MAX_N: u32 = 30;

fn table_len(n: u32) -> Result<usize> {
    if n > TABLE_MAX_N {
        return Err(Error::Domain(format!("width {n} too large for a table")));
    }
    Ok(1usize << n)
}

/// `f: Σⁿ → {0,1}`, with `f[x] = 1` iff `x ∈ X`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MembershipTable {
    n: u32,
    f: Vec<u8>,
}

impl MembershipTable {
    pub fn new(n: u32, f: Vec<u8>) -> Result<Self> {
        let len = table_len(n)?;
        if f.len() != len {
            return Err(Error::Domain(format!(
                "membership table for width {n} needs {len} entries, got {}",
                f.len()
            )));
        }
        if let Some(bad) = f.iter().find(|&&b| b > 1) {
            return Err(Error::Domain(format!(
                "membership entry {bad} is not a bit"
            )));
        }
        Ok(Self { n, f })
    }

    pub fn parse(n: u32, text: &str) -> Result<Self> {
        let len = table_len(n)?;
        Self::new(n, parse_bits(text, len, "membership table")?)
    }

    /// `X = ∅`.
    pub fn empty(n: u32) -> Result<Self> {
        Self::new(n, vec![0; table_len(n)?])
    }

    /// `X = Σⁿ`.
    pub fn full(n: u32) -> Result<Self> {
        Self::new(n, vec![1; table_len(n)?])
    }

    /// Builds the table from its `2ⁿ` low bits: entry `x` is bit `x` of `mask`.
    pub fn from_mask(n: u32, mask: u64) -> Result<Self> {
        if n > 6 {
            return Err(Error::Domain(format!(
                "mask tables need width ≤ 6, got {n}"
            )));
        }
        Self::new(n, (0..1u64 << n).map(|x| ((mask >> x) & 1) as u8).collect())
    }

    pub fn width(&self) -> u32 {
        self.n
    }

    pub fn bits(&self) -> &[u8] {
        &self.f
    }

    pub fn get(&self, x: u64) -> Result<u8> {
        self.f
            .get(x as usize)
            .copied()
            .ok_or_else(|| Error::Domain(format!("query {x} does not fit in {} bits", self.n)))
    }

    /// `|X|`.
    pub fn count(&self) -> usize {
        self.f.iter().filter(|&&b| b == 1).count()
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.f.len()
    }

    pub fn is_balanced(&self) -> bool {
        2 * self.count() == self.f.len()
    }

    /// True when the table satisfies the constant-vs-balanced promise.
    pub fn satisfies_promise(&self) -> bool {
        self.is_full() || self.is_balanced()
    }

    pub fn to_bit_string(&self) -> String {
        bits_to_string(&self.f)
    }
}

/// Generator for a [`PhaseProfile`].
#[derive(Debug, Clone, Copy)]
pub enum PhaseKind<'a> {
    /// All angles zero.
    Zero,
    /// `φ_{x,0} = f(x)·π`, `φ_{x,1} = 0`.
    FPi(&'a MembershipTable),
    /// Every angle independent and uniform on `[0, 2π)`:
    /// `φ_{x,y} = 2π · unit(seed, 2x + y)` under [`CounterRng`].
    UniformRandom { seed: u64 },
    /// `φ_{x,0} = (h(x) + 1)·π mod 2π`, `φ_{x,1} = 0`.
    EncodeFunction(&'a [u8]),
}

impl PhaseKind<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            PhaseKind::Zero => "zero",
            PhaseKind::FPi(_) => "f_pi",
            PhaseKind::UniformRandom { .. } => "uniform_random",
            PhaseKind::EncodeFunction(_) => "encode_function",
        }
    }
}

/// The `2·2ⁿ` angles `φ_{x,y}`, reduced to `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    n: u32,
    phi0: Vec<f64>,
    phi1: Vec<f64>,
}

/// Reduces an angle into `[0, 2π)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid may round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl PhaseProfile {
    pub fn explicit(n: u32, phi0: Vec<f64>, phi1: Vec<f64>) -> Result<Self> {
        let len = table_len(n)?;
        for (name, v) in [("phi0", &phi0), ("phi1", &phi1)] {
            if v.len() != len {
                return Err(Error::Domain(format!(
                    "{name} for width {n} needs {len} angles, got {}",
                    v.len()
                )));
            }
            if v.iter().any(|a| !a.is_finite()) {
                return Err(Error::Domain(format!("{name} contains a non-finite angle")));
            }
        }
        Ok(Self {
            n,
            phi0: phi0.into_iter().map(reduce_angle).collect(),
            phi1: phi1.into_iter().map(reduce_angle).collect(),
        })
    }

    pub fn width(&self) -> u32 {
        self.n
    }

    pub fn phi0(&self) -> &[f64] {
        &self.phi0
    }

    pub fn phi1(&self) -> &[f64] {
        &self.phi1
    }
}

pub fn make_phase_profile(n: u32, kind: PhaseKind<'_>) -> Result<PhaseProfile> {
    let len = table_len(n)?;
    let (phi0, phi1) = match kind {
        PhaseKind::Zero => (vec![0.0; len], vec![0.0; len]),
        PhaseKind::FPi(table) => {
            if table.width() != n {
                return Err(Error::Domain(format!(
                    "membership table has width {}, profile width {n}",
                    table.width()
                )));
            }
            let phi0 = table.bits().iter().map(|&b| f64::from(b) * PI).collect();
            (phi0, vec![0.0; len])
        }
        PhaseKind::UniformRandom { seed } => {
            let rng = CounterRng::new(seed);
            let angle = |i: usize| TAU * rng.unit(i as u64);
            let phi0 = (0..len).map(|x| angle(2 * x)).collect();
            let phi1 = (0..len).map(|x| angle(2 * x + 1)).collect();
            (phi0, phi1)
        }
        PhaseKind::EncodeFunction(h) => {
            if h.len() != len {
                return Err(Error::Domain(format!(
                    "h table for width {n} needs {len} entries, got {}",
                    h.len()
                )));
            }
            let phi0 = h
                .iter()
                .map(|&b| match b {
                    0 => Ok(PI),
                    1 => Ok(0.0),
                    other => Err(Error::Domain(format!("h entry {other} is not a bit"))),
                })
                .collect::<Result<Vec<f64>>>()?;
            (phi0, vec![0.0; len])
        }
    };
    PhaseProfile::explicit(n, phi0, phi1)
}

/// The full oracle: membership table plus phase profile.
#[derive(Debug, Clone)]
pub struct OracleSpec {
    membership: MembershipTable,
    phases: PhaseProfile,
    factor0: Vec<Complex64>,
    factor1: Vec<Complex64>,
}

impl OracleSpec {
    pub fn new(membership: MembershipTable, phases: PhaseProfile) -> Result<Self> {
        if membership.width() != phases.width() {
            return Err(Error::Domain(format!(
                "membership width {} differs from phase width {}",
                membership.width(),
                phases.width()
            )));
        }
        let cis = |v: &[f64]| v.iter().map(|&a| Complex64::cis(a)).collect();
        let factor0 = cis(&phases.phi0);
        let factor1 = cis(&phases.phi1);
        Ok(Self {
            membership,
            phases,
            factor0,
            factor1,
        })
    }

    /// Convenience: build the profile from `kind` and pair it with `membership`.
    pub fn with_kind(membership: MembershipTable, kind: PhaseKind<'_>) -> Result<Self> {
        let phases = make_phase_profile(membership.width(), kind)?;
        Self::new(membership, phases)
    }

    pub fn width(&self) -> u32 {
        self.membership.width()
    }

    pub fn membership(&self) -> &MembershipTable {
        &self.membership
    }

    pub fn phases(&self) -> &PhaseProfile {
        &self.phases
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.width() != self.width() {
            return Err(Error::Domain(format!(
                "state width {} differs from oracle width {}",
                state.width(),
                self.width()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.check_state(state)?;
        let mut out = state.amplitudes().to_vec();
        for (x, pair) in out.chunks_exact_mut(2).enumerate() {
            let (a0, a1) = (pair[0], pair[1]);
            let (e0, e1) = (self.factor0[x], self.factor1[x]);
            if self.membership.f[x] == 0 {
                pair[0] = e0 * a0;
                pair[1] = e1 * a1;
            } else {
                pair[1] = e0 * a0;
                pair[0] = e1 * a1;
            }
        }
        Ok(StateVector::from_unitary_image(self.width(), out))
    }

    pub fn apply_inverse(&self, state: &StateVector) -> Result<StateVector> {
        self.check_state(state)?;
        let mut out = state.amplitudes().to_vec();
        for (x, pair) in out.chunks_exact_mut(2).enumerate() {
            let (a0, a1) = (pair[0], pair[1]);
            let (e0, e1) = (self.factor0[x].conj(), self.factor1[x].conj());
            if self.membership.f[x] == 0 {
                pair[0] = e0 * a0;
                pair[1] = e1 * a1;
            } else {
                // U⁻¹|x,1⟩ = e^{-iφ_{x,0}}|x,0⟩, U⁻¹|x,0⟩ = e^{-iφ_{x,1}}|x,1⟩
                pair[0] = e0 * a1;
                pair[1] = e1 * a0;
            }
        }
        Ok(StateVector::from_unitary_image(self.width(), out))
    }
}

pub fn apply_oracle(oracle: &OracleSpec, state: &StateVector) -> Result<StateVector> {
    oracle.apply(state)
}

pub fn apply_inverse_oracle(oracle: &OracleSpec, state: &StateVector) -> Result<StateVector> {
    oracle.apply_inverse(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FaithfulnessReport {
    Checked {
        is_unitary: bool,
        preserves_membership: bool,
    },
    /// Width beyond [`FAITHFUL_CHECK_MAX_N`]; nothing was verified.
    Unchecked { n: u32 },
}

impl FaithfulnessReport {
    pub fn is_faithful(&self) -> bool {
        matches!(
            self,
            FaithfulnessReport::Checked {
                is_unitary: true,
                preserves_membership: true
            }
        )
    }
}

/// Re-derives unitarity and membership preservation by applying the oracle
/// to every basis state.
///
/// Unitarity is checked as orthonormality of the `2^{n+1}` images. The Gram
/// matrix is accumulated through shared support indices, so pairs whose
/// images have disjoint support contribute an exact zero without being
/// visited.
pub fn verify_faithful(oracle: &OracleSpec) -> Result<FaithfulnessReport> {
    let n = oracle.width();
    if n > FAITHFUL_CHECK_MAX_N {
        return Ok(FaithfulnessReport::Unchecked { n });
    }
    let dim = hilbert::dimension(n);
    let mut by_support: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
    for i in 0..dim {
        let input = StateVector::basis(hilbert::basis_label(i, n)?, n)?;
        let image = oracle.apply(&input)?;
        for (k, &a) in image.amplitudes().iter().enumerate() {
            if a != Complex64::new(0.0, 0.0) {
                by_support[k].push((i, a));
            }
        }
    }
    let mut gram: HashMap<(usize, usize), Complex64> = HashMap::new();
    for entries in &by_support {
        for &(i, ai) in entries {
            for &(j, aj) in entries {
                if i <= j {
                    *gram.entry((i, j)).or_default() += ai.conj() * aj;
                }
            }
        }
    }
    let diagonal_ok = (0..dim).all(|i| {
        gram.get(&(i, i))
            .is_some_and(|g| (g - Complex64::new(1.0, 0.0)).norm() <= EPS_NORM)
    });
    let off_diagonal_ok = gram
        .iter()
        .filter(|((i, j), _)| i != j)
        .all(|(_, g)| g.norm() <= EPS_NORM);

    let mut preserves_membership = true;
    for x in 0..1u64 << n {
        let image = oracle.apply(&StateVector::basis(BasisLabel::new(x, 0), n)?)?;
        let p_one = image.answer_one_probability();
        let want = f64::from(oracle.membership.f[x as usize]);
        if (p_one - want).abs() > EPS_NORM {
            preserves_membership = false;
            break;
        }
    }
    Ok(FaithfulnessReport::Checked {
        is_unitary: diagonal_ok && off_diagonal_ok,
        preserves_membership,
    })
}

/// Oracle file: `{ "n", "f": "<0/1 string>", "phases": { "kind", ... } }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleFile {
    pub n: u32,
    pub f: String,
    pub phases: PhaseFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseFileKind {
    Zero,
    FPi,
    UniformRandom,
    EncodeFunction,
    Explicit,
}

impl PhaseFileKind {
    pub fn name(&self) -> &'static str {
        match self {
            PhaseFileKind::Zero => "zero",
            PhaseFileKind::FPi => "f_pi",
            PhaseFileKind::UniformRandom => "uniform_random",
            PhaseFileKind::EncodeFunction => "encode_function",
            PhaseFileKind::Explicit => "explicit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseFile {
    pub kind: PhaseFileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi1: Option<Vec<f64>>,
}

impl PhaseFile {
    pub fn of_kind(kind: PhaseFileKind) -> Self {
        Self {
            kind,
            seed: None,
            h: None,
            phi0: None,
            phi1: None,
        }
    }
}

impl OracleFile {
    pub fn is_stochastic(&self) -> bool {
        self.phases.kind == PhaseFileKind::UniformRandom
    }

    /// Builds the oracle. `seed_override` replaces the file's seed for the
    /// random profile (used for per-trial seeds).
    pub fn build(&self, seed_override: Option<u64>) -> Result<OracleSpec> {
        let membership = MembershipTable::parse(self.n, &self.f)?;
        let len = membership.bits().len();
        let p = &self.phases;
        let phases = match p.kind {
            PhaseFileKind::Zero => make_phase_profile(self.n, PhaseKind::Zero)?,
            PhaseFileKind::FPi => make_phase_profile(self.n, PhaseKind::FPi(&membership))?,
            PhaseFileKind::UniformRandom => {
                let seed = seed_override
                    .or(p.seed)
                    .ok_or_else(|| Error::Config("uniform_random phases need a seed".into()))?;
                make_phase_profile(self.n, PhaseKind::UniformRandom { seed })?
            }
            PhaseFileKind::EncodeFunction => {
                let text = p.h.as_deref().ok_or_else(|| {
                    Error::Config("encode_function phases need an \"h\" table".into())
                })?;
                let h = parse_bits(text, len, "h table")?;
                make_phase_profile(self.n, PhaseKind::EncodeFunction(&h))?
            }
            PhaseFileKind::Explicit => {
                let (Some(phi0), Some(phi1)) = (&p.phi0, &p.phi1) else {
                    return Err(Error::Config(
                        "explicit phases need both \"phi0\" and \"phi1\"".into(),
                    ));
                };
                PhaseProfile::explicit(self.n, phi0.clone(), phi1.clone())?
            }
        };
        OracleSpec::new(membership, phases)
    }
}
