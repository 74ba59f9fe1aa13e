//! Filter realized with an entangling ancilla-system phase gate.
//!
//! The ancilla (slot 0) is rotated into `|+⟩`, picks up a conditional phase
//! from a `σz⊗σz` interaction plus a single-qubit `σz` phase, is rotated back
//! and post-selected in `|0⟩`. Warm axial modes are modelled only through a
//! reduced effective phase `χ_eff = χ·O({n̄})`; phonons are not simulated.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{check_probability, Error, Result};
use crate::gates::{y_rotation, z_rotation, zz_phase_gate};
use crate::metrics::ConditionalChannel;
use crate::qops::{partial_trace_matrix, permute_subsystems, tensor, DensityMatrix, Operator, SpaceLayout};
use crate::scheme_a::FilterRun;

/// Lamb-Dicke parameter of the axial centre-of-mass mode.
pub const DEFAULT_ETA_COM: f64 = 0.026;
/// Axial centre-of-mass angular frequency, rad/s.
pub const DEFAULT_OMEGA_COM: f64 = 2.0 * PI * 1.4e6;

const EMPTY_BRANCH_TOL: f64 = 1e-24;

/// Axial mode frequencies of a four-ion chain relative to the COM mode.
pub fn default_freq_ratios() -> Vec<f64> {
    vec![1.0, 3f64.sqrt(), 5.81f64.sqrt(), 9.308f64.sqrt()]
}

/// Axial modes of the ion chain and their thermal occupations.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec {
    eta_com: f64,
    freq_ratios: Vec<f64>,
    nbars: Vec<f64>,
}

impl ChainSpec {
    pub fn new(eta_com: f64, freq_ratios: Vec<f64>, nbars: Vec<f64>) -> Result<Self> {
        if !eta_com.is_finite() || eta_com < 0.0 {
            return Err(Error::InvalidChain(format!("Lamb-Dicke parameter {eta_com} must be non-negative")));
        }
        if freq_ratios.is_empty() || freq_ratios.len() != nbars.len() {
            return Err(Error::InvalidChain(format!(
                "{} frequency ratios for {} occupations",
                freq_ratios.len(),
                nbars.len()
            )));
        }
        if freq_ratios[0] != 1.0 {
            return Err(Error::InvalidChain(format!("first frequency ratio is {}, expected 1", freq_ratios[0])));
        }
        if let Some(r) = freq_ratios.iter().find(|r| !r.is_finite() || **r < 1.0) {
            return Err(Error::InvalidChain(format!("frequency ratio {r} below the COM mode")));
        }
        if let Some(n) = nbars.iter().find(|n| !n.is_finite() || **n < 0.0) {
            return Err(Error::InvalidChain(format!("mean phonon number {n} must be non-negative")));
        }
        Ok(Self { eta_com, freq_ratios, nbars })
    }

    /// Four axial modes with the default parameters, all at occupation `nbar`.
    pub fn uniform(nbar: f64) -> Result<Self> {
        let ratios = default_freq_ratios();
        let nbars = vec![nbar; ratios.len()];
        Self::new(DEFAULT_ETA_COM, ratios, nbars)
    }

    pub fn eta_com(&self) -> f64 {
        self.eta_com
    }

    pub fn freq_ratios(&self) -> &[f64] {
        &self.freq_ratios
    }

    pub fn nbars(&self) -> &[f64] {
        &self.nbars
    }
}

/// First-order reduction `O = 1 − η²·Σ n̄_m·(ω₁/ω_m)` of the entangling phase.
pub fn thermal_correction(chain: &ChainSpec) -> Result<f64> {
    let bracket: f64 = chain.freq_ratios.iter().zip(&chain.nbars).map(|(r, n)| n / r).sum();
    let o = 1.0 - chain.eta_com.powi(2) * bracket;
    if o <= 0.0 {
        return Err(Error::CorrectionBreakdown(o));
    }
    Ok(o)
}

/// `χ = arccos(√(1 − p_r))`.
pub fn chi_from_strength(p_r: f64) -> Result<f64> {
    check_probability(p_r)?;
    Ok((1.0 - p_r).sqrt().acos())
}

/// Ancilla ⊗ system unitary with separate single-qubit (`chi_z`) and
/// entangling (`chi_zz`) phases.
///
/// `⟨0_a|U|0_a⟩ = diag(cos((χz+χzz)/2), cos((χz−χzz)/2))`.
pub fn reversal_unitary_b_phases(chi_z: f64, chi_zz: f64) -> Operator {
    let id = Operator::identity(2);
    let open = tensor(&y_rotation(-FRAC_PI_2), &id);
    let close = tensor(&y_rotation(FRAC_PI_2), &id);
    let local = tensor(&z_rotation(chi_z), &id);
    &(&(&close * &local) * &zz_phase_gate(chi_zz)) * &open
}

/// `e^{iπ/4 σy_a} e^{i(χ/2)σz_a} e^{i(χ/2)σz_a σz_s} e^{−iπ/4 σy_a}`.
pub fn reversal_unitary_b(chi: f64) -> Operator {
    reversal_unitary_b_phases(chi, chi)
}

/// Which phases the thermal factor reduces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PhaseScaling {
    /// Only the phonon-mediated `σz⊗σz` phase.
    #[default]
    ScaleZzOnly,
    /// Both the entangling and the single-qubit phase.
    ScaleAll,
}

/// `(χ_z, χ_zz)` actually applied for strength `p_r` on a given chain.
pub fn effective_phases(p_r: f64, chain: &ChainSpec, mode: PhaseScaling) -> Result<(f64, f64)> {
    let chi = chi_from_strength(p_r)?;
    let chi_eff = chi * thermal_correction(chain)?;
    Ok(match mode {
        PhaseScaling::ScaleZzOnly => (chi, chi_eff),
        PhaseScaling::ScaleAll => (chi_eff, chi_eff),
    })
}

/// Ancilla-`|0⟩` block of a two-qubit ancilla ⊗ system operator.
fn ancilla_ground_block(u: &Operator) -> Operator {
    Operator::from_fn(2, |i, j| u.get(i, j))
}

/// Single-qubit conditional channel of one ancilla/system pair.
pub fn block_conditional_channel_b(p_r: f64, chain: &ChainSpec, mode: PhaseScaling) -> Result<ConditionalChannel> {
    let (chi_z, chi_zz) = effective_phases(p_r, chain, mode)?;
    let block = ancilla_ground_block(&reversal_unitary_b_phases(chi_z, chi_zz));
    ConditionalChannel::from_kraus(vec![block], false)
}

/// Runs the filter on both qubits of `rho_s` by simulating the four-qubit
/// space `a₁ ⊗ s₁ ⊗ a₂ ⊗ s₂` and post-selecting both ancillas in `|0⟩`.
pub fn run_scheme_b(rho_s: &DensityMatrix, p_r: f64, chain: &ChainSpec, mode: PhaseScaling) -> Result<FilterRun> {
    if rho_s.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, actual: rho_s.dim() });
    }
    let (chi_z, chi_zz) = effective_phases(p_r, chain, mode)?;
    let u = reversal_unitary_b_phases(chi_z, chi_zz);

    let qubits = SpaceLayout::new(vec![2; 4])?;
    let ancillas = Operator::basis_op(4, 0, 0);
    let stacked = tensor(&ancillas, &rho_s.as_operator());
    let full = permute_subsystems(stacked.matrix(), &qubits, &[0, 2, 1, 3])?;

    let u2 = tensor(&u, &u);
    let keep_a = tensor(&Operator::basis_op(2, 0, 0), &Operator::identity(2));
    let proj = tensor(&keep_a, &keep_a);
    let branch = proj.matrix() * u2.matrix() * full * u2.matrix().adjoint() * proj.matrix();
    let sys = partial_trace_matrix(&branch, &qubits, &[1, 3])?;
    let weight = sys.trace().re;
    // cos(π/2) is not exactly zero in floating point
    if weight < EMPTY_BRANCH_TOL {
        return Err(Error::EmptyPostSelection);
    }
    FilterRun::from_branch(sys, weight)
}
