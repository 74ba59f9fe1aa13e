//! Channel representations, fidelity functionals, and closed-form references.
//!
//! Channels may be conditional (post-selected) and therefore trace
//! decreasing. Besides its Kraus operators on the qubit space, every channel
//! carries an *acceptance* effect `A` with `Tr[Λ_accepted(ρ)] = Tr[Aρ]`. For a
//! leak-free channel `A = Σ K†K`; if accepted population can end up outside
//! the qubit space (leakage), `A` exceeds `Σ K†K` by exactly that population.
//!
//! Superoperators act on row-major vectorizations, `vec(ρ)[i·d + j] = ρ_ij`,
//! so `S = Σ K ⊗ K̄`. The Choi matrix is
//! `J = Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)` with the input reference as the left factor.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::qops::{
    completeness_error, hermitian_eigen, real, tensor, DensityMatrix, Operator, C64, COMPLETENESS_TOL, PSD_TOL,
};

/// Alias used where the post-selected nature of the map is the point.
pub type ConditionalChannel = ChannelOnQubits;

/// A completely positive, trace-non-increasing map on a `d`-dimensional space.
#[derive(Clone, Debug)]
pub struct ChannelOnQubits {
    dim: usize,
    kraus: Vec<Operator>,
    acceptance: Operator,
    trace_preserving: bool,
}

fn kraus_effect(kraus: &[Operator], dim: usize) -> Operator {
    kraus.iter().fold(Operator::zeros(dim), |acc, k| &acc + &(&k.adjoint() * k))
}

impl ChannelOnQubits {
    pub fn from_kraus(kraus: Vec<Operator>, trace_preserving: bool) -> Result<Self> {
        let dim =
            kraus.first().map(Operator::dim).ok_or_else(|| Error::InvalidSubsystems("empty Kraus list".into()))?;
        if let Some(bad) = kraus.iter().find(|k| k.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: bad.dim() });
        }
        if trace_preserving {
            let err = completeness_error(&kraus);
            if err > COMPLETENESS_TOL {
                return Err(Error::Incomplete(err));
            }
        }
        let acceptance = kraus_effect(&kraus, dim);
        Ok(Self { dim, kraus, acceptance, trace_preserving })
    }

    /// Kraus operators for the qubit-space output plus a total acceptance
    /// effect that also counts leaked population.
    pub fn with_acceptance(kraus: Vec<Operator>, acceptance: Operator) -> Result<Self> {
        let mut ch = Self::from_kraus(kraus, false)?;
        if acceptance.dim() != ch.dim {
            return Err(Error::DimensionMismatch { expected: ch.dim, actual: acceptance.dim() });
        }
        let leak = &acceptance - &ch.acceptance;
        let min = leak.hermitian_eigenvalues()[0];
        if leak.hermiticity_error() > 1e-10 || min < PSD_TOL {
            return Err(Error::InvalidState(format!("acceptance effect below Σ K†K (min eigenvalue {min:.3e})")));
        }
        ch.acceptance = acceptance;
        Ok(ch)
    }

    pub fn unitary(u: &Operator) -> Self {
        Self::from_kraus(vec![u.clone()], false).expect("single operator").mark_trace_preserving()
    }

    fn mark_trace_preserving(mut self) -> Self {
        self.trace_preserving = completeness_error(&self.kraus) <= COMPLETENESS_TOL;
        self
    }

    /// Builds the channel from its Choi matrix; see [`kraus_from_choi`].
    pub fn from_choi(choi: &Operator, dim: usize, acceptance: Option<Operator>) -> Result<Self> {
        let kraus = kraus_from_choi(choi, dim)?;
        match acceptance {
            Some(a) => Self::with_acceptance(kraus, a),
            None => Ok(Self::from_kraus(kraus, false)?.mark_trace_preserving()),
        }
    }

    pub fn from_superoperator(superop: &Operator, dim: usize) -> Result<Self> {
        Ok(Self::from_kraus(kraus_from_superoperator(superop, dim)?, false)?.mark_trace_preserving())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[Operator] {
        &self.kraus
    }

    pub fn acceptance(&self) -> &Operator {
        &self.acceptance
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// Output restricted to the qubit space, not renormalized.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        crate::qops::apply_kraus(rho, &self.kraus, false)
    }

    /// Total post-selection weight `Tr[Aρ]`.
    pub fn acceptance_weight(&self, rho: &DensityMatrix) -> f64 {
        (self.acceptance.matrix() * rho.matrix()).trace().re
    }

    /// Success probability on the maximally mixed input, `Tr(A)/d`.
    pub fn mean_acceptance(&self) -> f64 {
        self.acceptance.trace().re / self.dim as f64
    }

    pub fn superoperator(&self) -> Operator {
        superoperator_from_kraus(&self.kraus)
    }

    pub fn choi(&self) -> Operator {
        choi_from_superoperator(&self.superoperator(), self.dim)
    }

    /// `next ∘ self`. Population leaked by `self` stays accepted.
    pub fn then(&self, next: &ChannelOnQubits) -> Result<Self> {
        if next.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: next.dim });
        }
        let kraus: Vec<Operator> = next.kraus.iter().flat_map(|b| self.kraus.iter().map(move |a| b * a)).collect();
        let pulled_back = self
            .kraus
            .iter()
            .fold(Operator::zeros(self.dim), |acc, k| &acc + &(&(&k.adjoint() * &next.acceptance) * k));
        let own_leak = &self.acceptance - &kraus_effect(&self.kraus, self.dim);
        let acceptance = &pulled_back + &own_leak;
        Ok(Self { dim: self.dim, kraus, acceptance, trace_preserving: self.trace_preserving && next.trace_preserving })
    }

    /// Independent action on two tensor factors (`self` on the left).
    pub fn tensor(&self, other: &ChannelOnQubits) -> Self {
        let kraus = self.kraus.iter().flat_map(|a| other.kraus.iter().map(move |b| tensor(a, b))).collect();
        Self {
            dim: self.dim * other.dim,
            kraus,
            acceptance: tensor(&self.acceptance, &other.acceptance),
            trace_preserving: self.trace_preserving && other.trace_preserving,
        }
    }

    /// Number of Choi eigenvalues above `tol · λ_max`.
    pub fn choi_rank(&self, tol: f64) -> usize {
        let values = self.choi().hermitian_eigenvalues();
        let max = values.last().copied().unwrap_or(0.0);
        values.iter().filter(|&&v| v > tol * max).count()
    }
}

/// `S = Σ K ⊗ K̄` for row-major vectorization.
pub fn superoperator_from_kraus(kraus: &[Operator]) -> Operator {
    let d = kraus[0].dim();
    kraus
        .iter()
        .fold(Operator::zeros(d * d), |acc, k| &acc + &tensor(k, &Operator::from_fn(d, |i, j| k.get(i, j).conj())))
}

/// Index reshuffle `J[(i,a),(j,b)] = S[(a,b),(i,j)]`; it is its own inverse
/// up to relabeling, see [`superoperator_from_choi`].
pub fn choi_from_superoperator(superop: &Operator, dim: usize) -> Operator {
    Operator::from_fn(dim * dim, |r, c| {
        let (i, a) = (r / dim, r % dim);
        let (j, b) = (c / dim, c % dim);
        superop.get(a * dim + b, i * dim + j)
    })
}

pub fn superoperator_from_choi(choi: &Operator, dim: usize) -> Operator {
    Operator::from_fn(dim * dim, |r, c| {
        let (a, b) = (r / dim, r % dim);
        let (i, j) = (c / dim, c % dim);
        choi.get(i * dim + a, j * dim + b)
    })
}

/// Kraus decomposition from the Choi eigenvectors: `K[a][i] = √λ · v[i·d + a]`.
pub fn kraus_from_choi(choi: &Operator, dim: usize) -> Result<Vec<Operator>> {
    if choi.dim() != dim * dim {
        return Err(Error::DimensionMismatch { expected: dim * dim, actual: choi.dim() });
    }
    let herm = choi.hermiticity_error();
    if herm > 1e-10 {
        return Err(Error::NotCompletelyPositive(-herm));
    }
    let eig = hermitian_eigen(choi.matrix());
    let max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    if let Some(&min) = eig.values.first() {
        if min < PSD_TOL * max.max(1.0) {
            return Err(Error::NotCompletelyPositive(min));
        }
    }
    let cutoff = 1e-14 * max.max(1e-300);
    let mut kraus = Vec::new();
    for (k, &lambda) in eig.values.iter().enumerate().rev() {
        if lambda <= cutoff {
            continue;
        }
        let s = lambda.sqrt();
        kraus.push(Operator::from_fn(dim, |a, i| eig.vectors[(i * dim + a, k)] * s));
    }
    if kraus.is_empty() {
        kraus.push(Operator::zeros(dim));
    }
    Ok(kraus)
}

pub fn kraus_from_superoperator(superop: &Operator, dim: usize) -> Result<Vec<Operator>> {
    if superop.dim() != dim * dim {
        return Err(Error::DimensionMismatch { expected: dim * dim, actual: superop.dim() });
    }
    kraus_from_choi(&choi_from_superoperator(superop, dim), dim)
}

/// Overlap `⟨ψ|ρ|ψ⟩` with a pure target. `rho` is used as given; a state
/// whose trace is below one (e.g. after leakage) scores accordingly.
pub fn state_fidelity(rho: &DensityMatrix, target: &DensityMatrix) -> Result<f64> {
    if rho.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), actual: rho.dim() });
    }
    let purity = target.purity();
    if (purity - 1.0).abs() > 1e-10 || (target.weight() - 1.0).abs() > 1e-10 {
        return Err(Error::NotPure(purity));
    }
    Ok((rho.matrix() * target.matrix()).trace().re)
}

/// `|φ_m⟩ = Σ_α |α⟩|α⟩/√d` as a vector on `d²`.
fn max_entangled(dim: usize) -> Vec<C64> {
    let s = 1.0 / (dim as f64).sqrt();
    (0..dim * dim).map(|k| real(if k / dim == k % dim { s } else { 0.0 })).collect()
}

fn check_gate_dim(channel: &ChannelOnQubits, u_id: &Operator) -> Result<()> {
    if channel.dim() != u_id.dim() {
        return Err(Error::DimensionMismatch { expected: channel.dim(), actual: u_id.dim() });
    }
    if channel.mean_acceptance() <= 0.0 {
        return Err(Error::EmptyPostSelection);
    }
    Ok(())
}

/// Entanglement fidelity from the definition: the channel acts on one half of
/// `|φ_m⟩`, the result is conditioned on acceptance, and the overlap with
/// `(1⊗U_id)|φ_m⟩` is returned.
pub fn entanglement_fidelity(channel: &ChannelOnQubits, u_id: &Operator) -> Result<f64> {
    check_gate_dim(channel, u_id)?;
    let d = channel.dim();
    let p_accept = channel.mean_acceptance();
    // (1⊗Λ)(|φ⟩⟨φ|) = J/d
    let out = channel.choi().scale(real(1.0 / (d as f64 * p_accept)));
    let target_u = tensor(&Operator::identity(d), u_id);
    let phi = max_entangled(d);
    let target = target_u.apply(&phi)?;
    let rho_t = out.apply(&target)?;
    Ok(target.iter().zip(&rho_t).map(|(a, b)| a.conj() * b).sum::<C64>().re)
}

/// Entanglement fidelity from Kraus traces, `Σ_k |Tr(U† E_k)|² / (d² P)`.
pub fn entanglement_fidelity_kraus(channel: &ChannelOnQubits, u_id: &Operator) -> Result<f64> {
    check_gate_dim(channel, u_id)?;
    let d = channel.dim() as f64;
    let u_dag = u_id.adjoint();
    let sum: f64 = channel.kraus().iter().map(|e| (&u_dag * e).trace().norm_sqr()).sum();
    Ok(sum / (d * d * channel.mean_acceptance()))
}

/// `F̄_g = (d·F_e + 1)/(d + 1)`.
pub fn avg_gate_fidelity(f_e: f64, d: usize) -> f64 {
    let d = d as f64;
    (d * f_e + 1.0) / (d + 1.0)
}

/// Average gate fidelity of the unfiltered pipeline with equal decay `p` on both qubits.
pub fn analytic_unfiltered(p: f64) -> f64 {
    let s = 1.0 + (1.0 - p).sqrt();
    (1.0 + s.powi(4) / 4.0) / 5.0
}

/// Average gate fidelity after filtering with `p_r = p`.
pub fn analytic_filtered(p: f64) -> f64 {
    (1.0 + 16.0 / (2.0 + p).powi(2)) / 5.0
}

/// Success probability of the filter with `p_r = p` on the maximally mixed input.
pub fn analytic_success(p: f64) -> f64 {
    (1.0 - p).powi(2) * (2.0 + p).powi(2) / 4.0
}

/// Filtered fidelity of a damped Bell state with `p_r = p`.
pub fn analytic_bell_filtered(label: crate::gates::BellLabel, p: f64) -> f64 {
    use crate::gates::BellLabel::*;
    match label {
        PsiPlus | PsiMinus => 1.0 / (1.0 + p),
        PhiPlus | PhiMinus => (1.0 + p * p / 4.0) / (1.0 + p + p * p / 2.0),
    }
}

/// Monte Carlo estimate of the average gate fidelity over Haar-random pure
/// inputs. Each sample is `⟨ψ|U†Λ(ψ)U|ψ⟩ / P`, with `P` the channel's mean
/// acceptance, so conditional channels are scored consistently with
/// [`avg_gate_fidelity`]. Returns `(mean, standard error)`.
pub fn haar_average_fidelity(
    channel: &ChannelOnQubits,
    u_id: &Operator,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_gate_dim(channel, u_id)?;
    if samples == 0 {
        return Err(Error::InvalidState("need at least one sample".into()));
    }
    let d = channel.dim();
    let p_accept = channel.mean_acceptance();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let mut v: Vec<C64> =
            (0..d).map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        let ideal = u_id.apply(&v)?;
        let rho = DensityMatrix::pure(&v)?;
        let out = channel.apply(&rho)?;
        let m: &DMatrix<C64> = out.matrix();
        let f = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| ideal[i].conj() * m[(i, j)] * ideal[j])
            .sum::<C64>()
            .re
            / p_accept;
        sum += f;
        sum_sq += f * f;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok((mean, (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    use crate::channels::damping_kraus;
    use crate::filter::reversal_operator;
    use crate::gates::{ms_gate, y_rotation};

    fn damped_ms(p: f64) -> ChannelOnQubits {
        let k = damping_kraus(p).unwrap();
        let noise = ChannelOnQubits::from_kraus(k.kraus().to_vec(), true).unwrap();
        ChannelOnQubits::unitary(&ms_gate()).then(&noise.tensor(&noise)).unwrap()
    }

    #[test]
    fn closed_forms() {
        assert_eq!(analytic_unfiltered(0.0), 1.0);
        assert_eq!(analytic_filtered(0.0), 1.0);
        assert_eq!(analytic_success(0.0), 1.0);
        assert_abs_diff_eq!(analytic_unfiltered(0.5), 0.624_632, epsilon = 1e-6);
        assert_abs_diff_eq!(analytic_filtered(0.5), 0.712, epsilon = 1e-15);
        assert_abs_diff_eq!(analytic_success(0.5), 0.390_625, epsilon = 1e-15);
        assert_abs_diff_eq!(analytic_unfiltered(1.0), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(analytic_filtered(1.0), 5.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn gate_fidelity_relation() {
        assert_eq!(avg_gate_fidelity(1.0, 4), 1.0);
        for p in [0.1f64, 0.5, 0.9] {
            let f_e = 4.0 / (2.0 + p).powi(2);
            assert_abs_diff_eq!(avg_gate_fidelity(f_e, 4), analytic_filtered(p), epsilon = 1e-15);
            assert!(avg_gate_fidelity(f_e, 4) >= f_e);
        }
    }

    #[test]
    fn noiseless_entanglement_fidelity() {
        let u = ms_gate();
        let ch = ChannelOnQubits::unitary(&u);
        assert_abs_diff_eq!(entanglement_fidelity(&ch, &u).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(entanglement_fidelity_kraus(&ch, &u).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn unfiltered_entanglement_fidelity_at_half() {
        let ch = damped_ms(0.5);
        let oracle = (1.0 + 0.5f64.sqrt()).powi(4) / 16.0;
        assert_abs_diff_eq!(oracle, 0.530_79, epsilon = 1e-5);
        assert_abs_diff_eq!(entanglement_fidelity(&ch, &ms_gate()).unwrap(), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(entanglement_fidelity_kraus(&ch, &ms_gate()).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn full_decay_limit() {
        let ch = damped_ms(1.0);
        let f_e = entanglement_fidelity(&ch, &ms_gate()).unwrap();
        assert_abs_diff_eq!(f_e, 1.0 / 16.0, epsilon = 1e-14);
        assert_abs_diff_eq!(avg_gate_fidelity(f_e, 4), 0.25, epsilon = 1e-14);
    }

    #[test]
    fn filtered_matches_closed_form() {
        for p in [0.05, 0.3, 0.7, 0.95] {
            let m = reversal_operator(p).unwrap();
            let filter = ChannelOnQubits::from_kraus(vec![tensor(&m, &m)], false).unwrap();
            let ch = damped_ms(p).then(&filter).unwrap();
            assert_abs_diff_eq!(ch.mean_acceptance(), analytic_success(p), epsilon = 1e-14);
            let f_e = entanglement_fidelity(&ch, &ms_gate()).unwrap();
            let f_k = entanglement_fidelity_kraus(&ch, &ms_gate()).unwrap();
            assert_abs_diff_eq!(f_e, f_k, epsilon = 1e-12);
            assert_abs_diff_eq!(avg_gate_fidelity(f_e, 4), analytic_filtered(p), epsilon = 1e-12);
        }
    }

    #[test]
    fn kraus_roundtrip_for_unitary() {
        let u = y_rotation(0.7);
        let ks = kraus_from_superoperator(&superoperator_from_kraus(std::slice::from_ref(&u)), 2).unwrap();
        assert_eq!(ks.len(), 1);
        // equal up to a global phase
        let phase = ks[0].get(0, 0) / u.get(0, 0);
        assert_abs_diff_eq!(phase.norm(), 1.0, epsilon = 1e-12);
        assert!(ks[0].max_abs_diff(&u.scale(phase)) < 1e-12);
    }

    #[test]
    fn kraus_roundtrip_for_damping() {
        let k = damping_kraus(0.5).unwrap();
        let s = superoperator_from_kraus(k.kraus());
        let ks = kraus_from_superoperator(&s, 2).unwrap();
        assert_eq!(ks.len(), 2);
        assert!(superoperator_from_kraus(&ks).max_abs_diff(&s) < 1e-12);
        // singular values of the stacked Kraus map agree up to unitary mixing
        let mut ours: Vec<f64> = ks.iter().map(|k| (&k.adjoint() * k).trace().re).collect();
        let mut theirs: Vec<f64> = k.kraus().iter().map(|k| (&k.adjoint() * k).trace().re).collect();
        ours.sort_by(f64::total_cmp);
        theirs.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&theirs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        for i in 0..2 {
            for j in 0..2 {
                let x = DensityMatrix::from_matrix_unchecked(Operator::basis_op(2, i, j).into_matrix()).unwrap();
                let a = crate::qops::apply_kraus(&x, &ks, false).unwrap();
                let b = crate::qops::apply_kraus(&x, k.kraus(), false).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-12);
            }
        }
    }

    #[test]
    fn choi_superop_reshuffle_inverts() {
        let k = damping_kraus(0.3).unwrap();
        let s = superoperator_from_kraus(k.kraus());
        let back = superoperator_from_choi(&choi_from_superoperator(&s, 2), 2);
        assert!(back.max_abs_diff(&s) < 1e-15);
    }

    #[test]
    fn filter_branch_is_rank_one() {
        let m = reversal_operator(0.4).unwrap();
        let ch = ChannelOnQubits::from_kraus(vec![m], false).unwrap();
        assert_eq!(ch.choi_rank(1e-9), 1);
    }

    #[test]
    fn rejects_non_cp() {
        let bad = Operator::diagonal(&[real(1.0), real(-0.5), real(0.0), real(0.5)]);
        assert!(matches!(kraus_from_choi(&bad, 2), Err(Error::NotCompletelyPositive(_))));
    }

    #[test]
    fn fidelity_requires_pure_target() {
        let mixed = DensityMatrix::maximally_mixed(4);
        assert!(matches!(state_fidelity(&mixed, &mixed), Err(Error::NotPure(_))));
        let b = crate::gates::bell_pair(crate::gates::BellLabel::PsiMinus);
        assert_abs_diff_eq!(state_fidelity(&b, &b).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn haar_identity_channel_is_exact() {
        let u = ms_gate();
        let (mean, err) = haar_average_fidelity(&ChannelOnQubits::unitary(&u), &u, 200, 7).unwrap();
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-12);
        assert!(err < 1e-12);
    }

    #[test]
    fn leak_accounting_in_composition() {
        // half of |0⟩ leaks out of the qubit space but is still accepted
        let k = Operator::diagonal(&[real(0.5f64.sqrt()), real(1.0)]);
        let leaky = ChannelOnQubits::with_acceptance(vec![k], Operator::identity(2)).unwrap();
        assert_abs_diff_eq!(leaky.mean_acceptance(), 1.0, epsilon = 1e-15);
        let m = reversal_operator(0.5).unwrap();
        let filter = ChannelOnQubits::from_kraus(vec![m], false).unwrap();
        // filter after leak: leaked half is still counted
        let ch = leaky.then(&filter).unwrap();
        let p0 = ch.acceptance_weight(&DensityMatrix::basis(2, 0));
        assert_abs_diff_eq!(p0, 0.5 * 0.5 + 0.5, epsilon = 1e-15);
        assert!(ChannelOnQubits::with_acceptance(vec![Operator::identity(2)], Operator::zeros(2)).is_err());
    }
}
