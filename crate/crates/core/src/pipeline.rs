//! End-to-end process: a Mølmer-Sørensen gate, amplitude damping of equal
//! strength on both qubits, then one of the filter realizations. Fidelities
//! are scored against the ideal gate.

use crate::channels::damping_kraus;
use crate::error::Result;
use crate::filter::reversal_operator;
use crate::gates::ms_gate;
use crate::metrics::{avg_gate_fidelity, entanglement_fidelity, ChannelOnQubits, ConditionalChannel};
use crate::scheme_a::{block_conditional_channel, LeakagePolicy, ThermalModeSpec};
use crate::scheme_b::{block_conditional_channel_b, ChainSpec, PhaseScaling};

/// Which filter realization to run after the noisy gate.
#[derive(Clone, Debug, PartialEq)]
pub enum FilterBackend {
    Ideal,
    SchemeA { thermal: ThermalModeSpec, policy: LeakagePolicy },
    SchemeB { chain: ChainSpec, mode: PhaseScaling },
}

impl FilterBackend {
    /// Two-qubit conditional channel of the filter at strength `p_r`.
    pub fn channel(&self, p_r: f64) -> Result<ConditionalChannel> {
        let block = match self {
            FilterBackend::Ideal => ChannelOnQubits::from_kraus(vec![reversal_operator(p_r)?], false)?,
            FilterBackend::SchemeA { thermal, policy } => block_conditional_channel(p_r, thermal, *policy)?,
            FilterBackend::SchemeB { chain, mode } => block_conditional_channel_b(p_r, chain, *mode)?,
        };
        Ok(block.tensor(&block))
    }
}

/// Ideal MS gate followed by damping `p` on each qubit.
pub fn noisy_gate(p: f64) -> Result<ChannelOnQubits> {
    let single = ChannelOnQubits::from_kraus(damping_kraus(p)?.kraus().to_vec(), true)?;
    ChannelOnQubits::unitary(&ms_gate()).then(&single.tensor(&single))
}

/// Figures of merit at one decay probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelinePoint {
    pub p: f64,
    pub f_unfiltered: f64,
    pub f_filtered: f64,
    pub p_success: f64,
}

/// Scores the noisy gate with and without the filter at strength `p_r`.
pub fn evaluate_pipeline(p: f64, p_r: f64, backend: &FilterBackend) -> Result<PipelinePoint> {
    let u_id = ms_gate();
    let noisy = noisy_gate(p)?;
    let filtered = noisy.then(&backend.channel(p_r)?)?;
    let d = u_id.dim();
    Ok(PipelinePoint {
        p,
        f_unfiltered: avg_gate_fidelity(entanglement_fidelity(&noisy, &u_id)?, d),
        f_filtered: avg_gate_fidelity(entanglement_fidelity(&filtered, &u_id)?, d),
        p_success: filtered.mean_acceptance(),
    })
}
