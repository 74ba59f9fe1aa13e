//! Filter realized by quantum-logic spectroscopy: a carrier pulse shelves part
//! of `|0⟩` into `|r⟩`, a red sideband on the system ion moves that amplitude
//! into the shared motional mode, a red sideband on the ancilla maps the
//! phonon onto the ancilla, and the ancilla is post-selected in `|0⟩`.
//!
//! Each system/ancilla/mode block acts locally, so the two-qubit filter is the
//! tensor product of two single-qubit conditional channels. A block lives on
//! `system (3) ⊗ ancilla (2) ⊗ mode (n_max + 1)`.
//!
//! Population left in `|r⟩` after post-selection is leakage. By default it
//! counts toward the success probability but not toward any fidelity; see
//! [`LeakagePolicy`].

use nalgebra::DMatrix;

use crate::error::{check_probability, Error, Result};
use crate::gates::{carrier, carrier_area, red_sideband, SidebandTransition, LEVEL_0, LEVEL_1};
use crate::metrics::ConditionalChannel;
use crate::qops::{
    embed, partial_trace_matrix, permute_subsystems, real, tensor, DensityMatrix, Operator, SpaceLayout, C64,
};

pub const DEFAULT_N_MAX: usize = 12;
/// Largest Gibbs weight allowed beyond the Fock cutoff.
pub const GIBBS_TAIL_TOL: f64 = 1e-8;

const SYSTEM_SLOT: usize = 0;
const ANCILLA_SLOT: usize = 1;

/// Fock cutoff of one system/ancilla/mode block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    n_max: usize,
}

impl BlockLayout {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::FockCutoff(n_max));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn space(&self) -> SpaceLayout {
        SpaceLayout::new(vec![3, 2, self.n_max + 1]).expect("non-empty layout")
    }

    pub fn dim(&self) -> usize {
        6 * (self.n_max + 1)
    }
}

/// Mean phonon number of the initial motional state and the Fock cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalModeSpec {
    nbar: f64,
    n_max: usize,
}

impl ThermalModeSpec {
    /// Raises `n_max` until the truncated Gibbs tail is below [`GIBBS_TAIL_TOL`].
    pub fn new(nbar: f64, n_max: usize) -> Result<Self> {
        if !nbar.is_finite() || nbar < 0.0 {
            return Err(Error::InvalidState(format!("mean phonon number {nbar} must be finite and non-negative")));
        }
        if n_max < 1 {
            return Err(Error::FockCutoff(n_max));
        }
        let mut spec = Self { nbar, n_max };
        while spec.tail_weight() >= GIBBS_TAIL_TOL {
            spec.n_max += 1;
        }
        Ok(spec)
    }

    pub fn ground(n_max: usize) -> Result<Self> {
        Self::new(0.0, n_max)
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout { n_max: self.n_max }
    }

    /// Untruncated thermal occupation `p(n) = n̄ⁿ/(1+n̄)^{n+1}`.
    pub fn occupation(&self, n: usize) -> f64 {
        let ratio = self.nbar / (1.0 + self.nbar);
        ratio.powi(n as i32) / (1.0 + self.nbar)
    }

    /// Gibbs weight above the cutoff, `(n̄/(1+n̄))^{n_max+1}`.
    pub fn tail_weight(&self) -> f64 {
        (self.nbar / (1.0 + self.nbar)).powi(self.n_max as i32 + 1)
    }
}

/// Diagonal Gibbs state on `n_max + 1` Fock levels, renormalized to unit trace.
pub fn thermal_state(spec: &ThermalModeSpec) -> DensityMatrix {
    let probs: Vec<f64> = (0..=spec.n_max).map(|n| spec.occupation(n)).collect();
    let total: f64 = probs.iter().sum();
    let diag: Vec<C64> = probs.iter().map(|p| real(p / total)).collect();
    DensityMatrix::from_matrix_unchecked(Operator::diagonal(&diag).into_matrix()).expect("square")
}

/// `O₃·O₂·O₁` on one block: carrier with `cos(θ₁/2) = √(1−p_r)`, then π red
/// sidebands on the system ion and on the ancilla, all at zero phase.
pub fn block_circuit(p_r: f64, layout: BlockLayout) -> Result<Operator> {
    check_probability(p_r)?;
    let space = layout.space();
    let n_max = layout.n_max;
    let o1 = embed(&carrier(carrier_area(p_r), 0.0), &space, SYSTEM_SLOT)?;
    let sys_rsb = red_sideband(std::f64::consts::PI, 0.0, SidebandTransition::SystemShelf, n_max)?;
    // system sideband acts on slots (0, 2); build it on [system, mode, ancilla] and reorder
    let o2 = {
        let padded = tensor(&sys_rsb, &Operator::identity(2));
        let padded_layout = SpaceLayout::new(vec![3, n_max + 1, 2])?;
        Operator::from_matrix(permute_subsystems(padded.matrix(), &padded_layout, &[0, 2, 1])?)?
    };
    let anc_rsb = red_sideband(std::f64::consts::PI, 0.0, SidebandTransition::Ancilla, n_max)?;
    let o3 = tensor(&Operator::identity(3), &anc_rsb);
    Ok(&(&o3 * &o2) * &o1)
}

/// How accepted population stranded in `|r⟩` is scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LeakagePolicy {
    /// Leaked population passed the ancilla check, so it counts toward the
    /// success probability; it carries no fidelity.
    #[default]
    KeepInWeight,
    /// Treat `|r⟩` as an additional rejection.
    Discard,
}

fn ancilla_ground_projector(layout: BlockLayout) -> Result<Operator> {
    embed(&Operator::basis_op(2, 0, 0), &layout.space(), ANCILLA_SLOT)
}

/// Single-qubit conditional channel realized by one block with the mode
/// prepared in the given thermal state and the ancilla in `|0⟩`.
pub fn block_conditional_channel(
    p_r: f64,
    thermal: &ThermalModeSpec,
    policy: LeakagePolicy,
) -> Result<ConditionalChannel> {
    let layout = thermal.layout();
    let u = block_circuit(p_r, layout)?;
    let u_dag = u.adjoint();
    let proj = ancilla_ground_projector(layout)?;
    let env = tensor(&Operator::basis_op(2, 0, 0), &thermal_state(thermal).as_operator());
    let qubit = [LEVEL_0, LEVEL_1];

    let mut choi = Operator::zeros(4);
    let mut acceptance = Operator::zeros(2);
    for (i, &li) in qubit.iter().enumerate() {
        for (j, &lj) in qubit.iter().enumerate() {
            let x = tensor(&Operator::basis_op(3, li, lj), &env);
            let y = &(&(&(&proj * &u) * &x) * &u_dag) * &proj;
            let z = partial_trace_matrix(y.matrix(), &layout.space(), &[SYSTEM_SLOT])?;
            let mut qubit_trace = C64::new(0.0, 0.0);
            for (a, &la) in qubit.iter().enumerate() {
                for (b, &lb) in qubit.iter().enumerate() {
                    choi.set(i * 2 + a, j * 2 + b, z[(la, lb)]);
                }
                qubit_trace += z[(la, la)];
            }
            // Tr[A |i⟩⟨j|] = A_ji
            let accepted = match policy {
                LeakagePolicy::KeepInWeight => z.trace(),
                LeakagePolicy::Discard => qubit_trace,
            };
            acceptance.set(j, i, accepted);
        }
    }
    ConditionalChannel::from_choi(&choi, 2, Some(acceptance))
}

/// Result of running a filter realization on a two-qubit state.
#[derive(Clone, Debug)]
pub struct FilterRun {
    /// Accepted qubit-space state divided by the success probability. Its
    /// trace is `1 − leakage`.
    pub state: DensityMatrix,
    pub success_probability: f64,
    /// Fraction of accepted population outside the qubit space.
    pub leakage: f64,
}

impl FilterRun {
    pub(crate) fn from_branch(branch: DMatrix<C64>, weight: f64) -> Result<Self> {
        if weight <= 0.0 || !weight.is_finite() {
            return Err(Error::EmptyPostSelection);
        }
        let state = DensityMatrix::from_matrix_unchecked(branch / real(weight))?;
        let leakage = (1.0 - state.weight()).max(0.0);
        Ok(Self { state, success_probability: weight, leakage })
    }
}

/// Applies the block channel independently to both qubits of `rho_s`.
pub fn run_scheme_a(
    rho_s: &DensityMatrix,
    p_r: f64,
    thermal: &ThermalModeSpec,
    policy: LeakagePolicy,
) -> Result<FilterRun> {
    if rho_s.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, actual: rho_s.dim() });
    }
    let block = block_conditional_channel(p_r, thermal, policy)?;
    let joint = block.tensor(&block);
    let out = joint.apply(rho_s)?;
    FilterRun::from_branch(out.matrix().clone(), joint.acceptance_weight(rho_s))
}

/// Simulates both blocks on the full joint space
/// `s₁ ⊗ a₁ ⊗ m₁ ⊗ s₂ ⊗ a₂ ⊗ m₂` without assuming locality. Expensive;
/// intended for cross-checks at small cutoffs.
pub fn run_scheme_a_joint(
    rho_s: &DensityMatrix,
    p_r: f64,
    thermal: &ThermalModeSpec,
    policy: LeakagePolicy,
) -> Result<FilterRun> {
    if rho_s.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, actual: rho_s.dim() });
    }
    let layout = thermal.layout();
    let m = layout.n_max + 1;
    let qubit = [LEVEL_0, LEVEL_1];
    let sys9 = Operator::from_fn(9, |r, c| {
        let (r1, r2, c1, c2) = (r / 3, r % 3, c / 3, c % 3);
        match (qubit.iter().position(|&l| l == r1), qubit.iter().position(|&l| l == r2)) {
            (Some(a), Some(b)) => match (qubit.iter().position(|&l| l == c1), qubit.iter().position(|&l| l == c2)) {
                (Some(x), Some(y)) => rho_s.get(a * 2 + b, x * 2 + y),
                _ => real(0.0),
            },
            _ => real(0.0),
        }
    });
    let env = tensor(&Operator::basis_op(2, 0, 0), &thermal_state(thermal).as_operator());
    let stacked = tensor(&tensor(&sys9, &env), &env);
    let stacked_layout = SpaceLayout::new(vec![3, 3, 2, m, 2, m])?;
    let full = permute_subsystems(stacked.matrix(), &stacked_layout, &[0, 2, 3, 1, 4, 5])?;

    let u = block_circuit(p_r, layout)?;
    let u2 = tensor(&u, &u);
    // keep only the rows with both ancillas in |0⟩
    let joint_layout = SpaceLayout::new(vec![3, 2, m, 3, 2, m])?;
    let kept: Vec<usize> = (0..joint_layout.total_dim())
        .filter(|&i| {
            let d = joint_layout.digits(i);
            d[1] == 0 && d[4] == 0
        })
        .collect();
    let v = DMatrix::from_fn(kept.len(), u2.dim(), |r, c| u2.get(kept[r], c));
    let evolved = &v * full * v.adjoint();
    let sys = partial_trace_matrix(&evolved, &SpaceLayout::new(vec![3, m, 3, m])?, &[0, 2])?;

    let total = sys.trace().re;
    let qubit_idx: Vec<usize> = qubit.iter().flat_map(|&a| qubit.iter().map(move |&b| a * 3 + b)).collect();
    let block = DMatrix::from_fn(4, 4, |r, c| sys[(qubit_idx[r], qubit_idx[c])]);
    let weight = match policy {
        LeakagePolicy::KeepInWeight => total,
        LeakagePolicy::Discard => block.trace().re,
    };
    FilterRun::from_branch(block, weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    use crate::filter::reversal_operator;
    use crate::metrics::ChannelOnQubits;

    fn ket(dim: usize, i: usize) -> Vec<C64> {
        (0..dim).map(|k| real(if k == i { 1.0 } else { 0.0 })).collect()
    }

    #[test]
    fn thermal_ground_state() {
        let rho = thermal_state(&ThermalModeSpec::ground(DEFAULT_N_MAX).unwrap());
        assert!(rho.max_abs_diff(&DensityMatrix::basis(DEFAULT_N_MAX + 1, 0)) < 1e-15);
    }

    #[test]
    fn thermal_ratio_and_mean() {
        let spec = ThermalModeSpec::new(0.125, DEFAULT_N_MAX).unwrap();
        let rho = thermal_state(&spec);
        assert_abs_diff_eq!(rho.get(1, 1).re / rho.get(0, 0).re, 1.0 / 9.0, epsilon = 1e-15);
        let mean: f64 = (0..=spec.n_max()).map(|n| n as f64 * rho.get(n, n).re).sum();
        assert_abs_diff_eq!(mean, 0.125, epsilon = 1e-8);
        assert_abs_diff_eq!(rho.weight(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn cutoff_is_raised_for_hot_modes() {
        let spec = ThermalModeSpec::new(2.0, 3).unwrap();
        assert!(spec.n_max() > 3);
        assert!(spec.tail_weight() < GIBBS_TAIL_TOL);
        let rho = thermal_state(&spec);
        let mean: f64 = (0..=spec.n_max()).map(|n| n as f64 * rho.get(n, n).re).sum();
        assert_abs_diff_eq!(mean, 2.0, epsilon = 1e-5);
        assert!(ThermalModeSpec::new(-0.1, 12).is_err());
        assert!(ThermalModeSpec::new(0.1, 0).is_err());
    }

    #[test]
    fn zero_strength_circuit_leaves_ground_block_alone() {
        let layout = BlockLayout::new(4).unwrap();
        let u = block_circuit(0.0, layout).unwrap();
        let out = u.apply(&ket(layout.dim(), 0)).unwrap();
        assert_abs_diff_eq!(out[0].norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn full_strength_shelves_into_ancilla() {
        let layout = BlockLayout::new(4).unwrap();
        let space = layout.space();
        let u = block_circuit(1.0, layout).unwrap();
        let out = u.apply(&ket(layout.dim(), space.flat_index(&[LEVEL_0, 0, 0]))).unwrap();
        let excited: f64 = (0..layout.dim()).filter(|&k| space.digits(k)[1] == 1).map(|k| out[k].norm_sqr()).sum();
        assert_abs_diff_eq!(excited, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn level_one_system_population_is_untouched() {
        let layout = BlockLayout::new(5).unwrap();
        let space = layout.space();
        let u = block_circuit(0.6, layout).unwrap();
        for n in 0..=5 {
            let idx = space.flat_index(&[LEVEL_1, 0, n]);
            let out = u.apply(&ket(layout.dim(), idx)).unwrap();
            let on_one: f64 =
                (0..layout.dim()).filter(|&k| space.digits(k)[0] == LEVEL_1).map(|k| out[k].norm_sqr()).sum();
            assert_abs_diff_eq!(on_one, 1.0, epsilon = 1e-14);
            // the ancilla sideband still exchanges phonons: |0_a, n⟩ ↔ |1_a, n−1⟩
            let expected = (std::f64::consts::PI * (n as f64).sqrt() / 2.0).cos();
            assert_abs_diff_eq!(out[idx].re, expected, epsilon = 1e-14);
        }
        let idx = space.flat_index(&[LEVEL_1, 0, 0]);
        let out = u.apply(&ket(layout.dim(), idx)).unwrap();
        assert_abs_diff_eq!(out[idx].norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn circuit_is_unitary() {
        for p_r in [0.0, 0.3, 1.0] {
            assert!(block_circuit(p_r, BlockLayout::new(6).unwrap()).unwrap().is_unitary());
        }
    }

    #[test]
    fn ground_mode_channel_is_ideal_filter() {
        for p_r in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let ch = block_conditional_channel(
                p_r,
                &ThermalModeSpec::ground(DEFAULT_N_MAX).unwrap(),
                LeakagePolicy::KeepInWeight,
            )
            .unwrap();
            let ideal = ChannelOnQubits::from_kraus(vec![reversal_operator(p_r).unwrap()], false).unwrap();
            assert!(ch.superoperator().max_abs_diff(&ideal.superoperator()) < 1e-9, "p_r={p_r}");
            assert!(ch.acceptance().max_abs_diff(ideal.acceptance()) < 1e-12);
            if p_r < 1.0 {
                assert_eq!(ch.choi_rank(1e-9), 1);
            }
        }
    }

    #[test]
    fn zero_strength_channel() {
        let id = ChannelOnQubits::unitary(&Operator::identity(2));
        let cold = block_conditional_channel(
            0.0,
            &ThermalModeSpec::ground(DEFAULT_N_MAX).unwrap(),
            LeakagePolicy::KeepInWeight,
        )
        .unwrap();
        assert!(cold.superoperator().max_abs_diff(&id.superoperator()) < 1e-9);
        assert!(cold.acceptance().max_abs_diff(&Operator::identity(2)) < 1e-12);
        // Warm modes: the system sideband drives |0, n⟩ ↔ |r, n−1⟩ even with a
        // zero-area carrier, so the map is no longer the identity.
        for nbar in [0.05, 0.125] {
            let spec = ThermalModeSpec::new(nbar, DEFAULT_N_MAX).unwrap();
            let warm = block_conditional_channel(0.0, &spec, LeakagePolicy::KeepInWeight).unwrap();
            assert!(warm.superoperator().max_abs_diff(&id.superoperator()) > 1e-3, "n̄={nbar}");
        }
    }

    #[test]
    fn warm_mode_channel_deviates() {
        let spec = ThermalModeSpec::new(0.125, DEFAULT_N_MAX).unwrap();
        let ch = block_conditional_channel(0.5, &spec, LeakagePolicy::KeepInWeight).unwrap();
        let ideal = ChannelOnQubits::from_kraus(vec![reversal_operator(0.5).unwrap()], false).unwrap();
        assert!(ch.superoperator().max_abs_diff(&ideal.superoperator()) > 1e-3);
    }

    #[test]
    fn leakage_appears_only_when_warm() {
        let rho = DensityMatrix::maximally_mixed(4);
        let cold = run_scheme_a(&rho, 0.5, &ThermalModeSpec::ground(8).unwrap(), LeakagePolicy::KeepInWeight).unwrap();
        assert!(cold.leakage < 1e-10);
        let warm =
            run_scheme_a(&rho, 0.5, &ThermalModeSpec::new(0.05, 8).unwrap(), LeakagePolicy::KeepInWeight).unwrap();
        assert!(warm.leakage > 0.0);
        let discard = run_scheme_a(&rho, 0.5, &ThermalModeSpec::new(0.05, 8).unwrap(), LeakagePolicy::Discard).unwrap();
        assert!(discard.leakage < 1e-12);
        assert!(discard.success_probability < warm.success_probability);
    }
}
