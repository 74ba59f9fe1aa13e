//! Hardware-independent reversal filter and the four-outcome ancilla POVM.
//!
//! The filter `M_r = diag(√(1−p_r), 1)` is kept unnormalized; the success
//! probability is carried as the weight of the post-selected state instead of
//! being folded into the operator.

use crate::channels::damping_probability;
use crate::error::{check_probability, Error, Result};
use crate::qops::{apply_kraus, real, tensor, DensityMatrix, Operator};

/// Strength `p_r ∈ [0, 1]` of the reversal filter.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ReversalStrength(f64);

impl ReversalStrength {
    pub fn new(p_r: f64) -> Result<Self> {
        Ok(Self(check_probability(p_r)?))
    }

    pub fn p_r(self) -> f64 {
        self.0
    }

    pub fn p_r_bar(self) -> f64 {
        1.0 - self.0
    }
}

/// `diag(√(1 − p_r), 1)`.
pub fn reversal_operator(p_r: f64) -> Result<Operator> {
    check_probability(p_r)?;
    Ok(Operator::diagonal(&[real((1.0 - p_r).sqrt()), real(1.0)]))
}

/// Applies `M_{r1} ⊗ M_{r2}` and conditions on success.
///
/// Returns the normalized filtered state and the success probability
/// `P_r = Tr[(M₁⊗M₂)†(M₁⊗M₂)ρ]`.
pub fn apply_filter(rho: &DensityMatrix, p_r1: f64, p_r2: f64) -> Result<(DensityMatrix, f64)> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, actual: rho.dim() });
    }
    let m = tensor(&reversal_operator(p_r1)?, &reversal_operator(p_r2)?);
    let branch = apply_kraus(rho, &[m], false)?;
    let p_success = branch.weight();
    if p_success <= 0.0 {
        return Err(Error::EmptyPostSelection);
    }
    Ok((branch.normalized()?, p_success))
}

/// Which operator to use for the ancilla-excited ("failure") outcome.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PovmMode {
    /// `diag(√p_r, 0)`: what the shelving circuit produces; complete with `M_r`.
    #[default]
    CircuitDerived,
    /// `diag(√p_r, 1)` as it is usually written; not complete with `M_r`.
    PovmPaper,
}

/// Unnormalized failure-branch operator for one qubit.
pub fn failure_operator(p_r: f64, mode: PovmMode) -> Result<Operator> {
    check_probability(p_r)?;
    let lower = match mode {
        PovmMode::CircuitDerived => 0.0,
        PovmMode::PovmPaper => 1.0,
    };
    Ok(Operator::diagonal(&[real(p_r.sqrt()), real(lower)]))
}

/// One branch of the two-ancilla measurement.
#[derive(Clone, Debug)]
pub struct FilterOutcome {
    /// Conditional state, `None` when the branch has zero probability.
    pub state: Option<DensityMatrix>,
    pub probability: f64,
    /// Ancilla results `(a₁, a₂)`; `(0, 0)` is the accepted branch.
    pub outcome_bits: (u8, u8),
}

/// All four outcomes of the ancilla measurement, ordered
/// `(0,0), (0,1), (1,0), (1,1)`.
///
/// In [`PovmMode::PovmPaper`] the probabilities generally do not sum to one.
pub fn four_outcome_measurement(rho: &DensityMatrix, p_r: f64, mode: PovmMode) -> Result<Vec<FilterOutcome>> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, actual: rho.dim() });
    }
    let ops = [reversal_operator(p_r)?, failure_operator(p_r, mode)?];
    let mut out = Vec::with_capacity(4);
    for a1 in 0..2u8 {
        for a2 in 0..2u8 {
            let e = tensor(&ops[a1 as usize], &ops[a2 as usize]);
            let branch = apply_kraus(rho, &[e], false)?;
            let probability = branch.weight();
            let state = if probability > 0.0 { Some(branch.normalized()?) } else { None };
            out.push(FilterOutcome { state, probability, outcome_bits: (a1, a2) });
        }
    }
    Ok(out)
}

/// Filter strength matched to the decay: `p_r = 1 − exp(−t/T1)`.
pub fn match_strength(t: f64, t1: f64) -> Result<ReversalStrength> {
    ReversalStrength::new(damping_probability(t, t1)?)
}
