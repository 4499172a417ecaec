//! Finite-dimensional state vectors over the computational basis `|x,y⟩`.
//!
//! Amplitudes are stored in the order `index(x, y) = 2·x + y`: the answer
//! bit `y` is the least significant bit, so the pair `(|x,0⟩, |x,1⟩)`
//! occupies the adjacent slots `2x` and `2x + 1`. Serialized states use the
//! same order.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ|a|² = 1` for a state to count as normalized.
pub const EPS_NORM: f64 = 1e-10;

/// Width of the band around 0 and 1 used for protocol verdicts.
pub const EPS_VERDICT: f64 = 1e-6;

/// Default upper bound on the register width (2²¹ amplitudes, ~32 MB).
pub const N_MAX_DEFAULT: u32 = 20;

/// Largest width for which `2^{n+1}` amplitudes can be indexed at all.
const N_ADDRESSABLE: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub x: u64,
    pub y: u8,
}

impl BasisLabel {
    pub fn new(x: u64, y: u8) -> Self {
        Self { x, y }
    }
}

/// Maps `|x,y⟩` to its amplitude slot `2·x + y`.
pub fn basis_index(label: BasisLabel, n: u32) -> Result<usize> {
    check_addressable(n)?;
    if label.x >= 1u64 << n {
        return Err(Error::Domain(format!(
            "query string {} does not fit in {n} bits",
            label.x
        )));
    }
    if label.y > 1 {
        return Err(Error::Domain(format!(
            "answer bit must be 0 or 1, got {}",
            label.y
        )));
    }
    Ok((2 * label.x + u64::from(label.y)) as usize)
}

/// Inverse of [`basis_index`].
pub fn basis_label(index: usize, n: u32) -> Result<BasisLabel> {
    check_addressable(n)?;
    if index as u64 >= 1u64 << (n + 1) {
        return Err(Error::Domain(format!(
            "index {index} out of range for width {n}"
        )));
    }
    Ok(BasisLabel {
        x: (index >> 1) as u64,
        y: (index & 1) as u8,
    })
}

fn check_addressable(n: u32) -> Result<()> {
    if n > N_ADDRESSABLE {
        return Err(Error::Domain(format!(
            "register width {n} is not addressable"
        )));
    }
    Ok(())
}

pub(crate) fn dimension(n: u32) -> usize {
    1usize << (n + 1)
}

/// A normalized state of an `n`-bit query register plus one answer bit.
///
/// Values are immutable once built. Every public constructor either
/// verifies unit norm or normalizes explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: u32,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Accepts amplitudes that are already normalized within [`EPS_NORM`].
    pub fn from_amplitudes(n: u32, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_addressable(n)?;
        check_length(n, amplitudes.len())?;
        let norm_sq = norm_sqr(&amplitudes);
        if (norm_sq - 1.0).abs() > EPS_NORM {
            return Err(Error::Precondition(format!(
                "state is not normalized: squared norm {norm_sq}"
            )));
        }
        Ok(Self { n, amplitudes })
    }

    /// Rescales an arbitrary non-zero amplitude vector to unit norm.
    pub fn normalized(n: u32, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        check_addressable(n)?;
        check_length(n, amplitudes.len())?;
        let norm = norm_sqr(&amplitudes).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Domain(format!(
                "cannot normalize a vector of norm {norm}"
            )));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self { n, amplitudes })
    }

    /// Internal constructor for results of norm-preserving maps.
    pub(crate) fn from_unitary_image(n: u32, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), dimension(n));
        Self { n, amplitudes }
    }

    pub fn basis(label: BasisLabel, n: u32) -> Result<Self> {
        let index = basis_index(label, n)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dimension(n)];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amplitudes })
    }

    /// `(1/𝒩) Σ_x |x,0⟩` with `𝒩 = 2^{n/2}`, for `1 ≤ n ≤ N_MAX_DEFAULT`.
    pub fn uniform_superposition(n: u32) -> Result<Self> {
        Self::uniform_superposition_within(n, N_MAX_DEFAULT)
    }

    /// As [`uniform_superposition`](Self::uniform_superposition) with a
    /// caller-chosen width limit.
    pub fn uniform_superposition_within(n: u32, n_max: u32) -> Result<Self> {
        if n == 0 || n > n_max {
            return Err(Error::Config(format!(
                "register width {n} outside the supported range 1..={n_max}"
            )));
        }
        check_addressable(n)?;
        Ok(Self::uniform_unchecked(n))
    }

    pub(crate) fn uniform_unchecked(n: u32) -> Self {
        let amp = Complex64::new((-(n as f64) / 2.0).exp2(), 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let amplitudes = (0..dimension(n))
            .map(|i| if i & 1 == 0 { amp } else { zero })
            .collect();
        Self { n, amplitudes }
    }

    pub fn width(&self) -> u32 {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, label: BasisLabel) -> Result<Complex64> {
        Ok(self.amplitudes[basis_index(label, self.n)?])
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amplitudes).sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (norm_sqr(&self.amplitudes) - 1.0).abs() <= EPS_NORM
    }

    /// Born-rule probability that measuring the answer register yields 1.
    pub fn answer_one_probability(&self) -> f64 {
        self.amplitudes
            .iter()
            .skip(1)
            .step_by(2)
            .map(|a| a.norm_sqr())
            .sum()
    }

    pub fn to_json(&self) -> StateJson {
        StateJson {
            n: self.n,
            amplitudes: self.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
        }
    }

    pub fn from_json(json: &StateJson) -> Result<Self> {
        let amplitudes = json
            .amplitudes
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        Self::from_amplitudes(json.n, amplitudes)
    }
}

/// Wire form `{ "n": int, "amplitudes": [[re, im], ...] }` in basis-index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub n: u32,
    pub amplitudes: Vec<[f64; 2]>,
}

fn check_length(n: u32, len: usize) -> Result<()> {
    if len != dimension(n) {
        return Err(Error::Domain(format!(
            "width {n} needs {} amplitudes, got {len}",
            dimension(n)
        )));
    }
    Ok(())
}

fn norm_sqr(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

/// `⟨a|b⟩ = Σ conj(a_i)·b_i`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.n != b.n {
        return Err(Error::Domain(format!(
            "inner product of widths {} and {}",
            a.n, b.n
        )));
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Probability of the "yes" outcome when measuring `|reference⟩⟨reference|`
/// on `state`, i.e. `|⟨reference|state⟩|²`.
pub fn projector_probability(reference: &StateVector, state: &StateVector) -> Result<f64> {
    for (what, s) in [("reference", reference), ("state", state)] {
        if !s.is_normalized() {
            return Err(Error::Precondition(format!(
                "{what} is not normalized (norm {})",
                s.norm()
            )));
        }
    }
    Ok(inner_product(reference, state)?.norm_sqr())
}
