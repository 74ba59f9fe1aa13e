//! Gate library: logic gates, the Mølmer–Sørensen gate, carrier and red-sideband
//! pulses on trapped ions, and the single-/two-qubit rotations of the
//! entangling-gate filter.
//!
//! All pulse exponentials are evaluated block-wise in closed form. A pulse of
//! area `θ` and phase `φ` generated by `G = e^{iφ}|u⟩⟨l| + e^{−iφ}|l⟩⟨u|` is
//! `exp(iθG/2) = cos(θ/2)·1 + i·sin(θ/2)·G` on each two-level doublet.
//!
//! Three-level ion basis: index 0 is `|0⟩`, 1 is `|1⟩`, 2 is the auxiliary
//! level `|r⟩`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{check_probability, Error, Result};
use crate::qops::{c, pauli_x, pauli_y, pauli_z, real, tensor, DensityMatrix, Operator, SpaceLayout, C64};

/// Index of `|0⟩` in the three-level ion.
pub const LEVEL_0: usize = 0;
/// Index of `|1⟩` in the three-level ion.
pub const LEVEL_1: usize = 1;
/// Index of the auxiliary level `|r⟩`.
pub const LEVEL_R: usize = 2;

/// Pulse area and laser phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSpec {
    pub theta: f64,
    pub phi: f64,
}

impl PulseSpec {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if theta.is_nan() || theta < 0.0 {
            return Err(Error::InvalidState(format!("pulse area {theta} must be non-negative")));
        }
        Ok(Self { theta, phi })
    }
}

/// Rabi frequency (rad/s) and pulse duration (s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseTiming {
    pub rabi: f64,
    pub duration: f64,
}

impl PulseTiming {
    pub fn area(&self) -> f64 {
        self.rabi * self.duration
    }
}

/// Red-sideband Rabi frequency `η·Ω_carrier`.
pub fn sideband_rabi(lamb_dicke: f64, carrier_rabi: f64) -> f64 {
    lamb_dicke * carrier_rabi
}

/// Duration of a sideband π pulse.
pub fn sideband_pi_time(lamb_dicke: f64, carrier_rabi: f64) -> f64 {
    PI / sideband_rabi(lamb_dicke, carrier_rabi)
}

pub fn hadamard() -> Operator {
    Operator::from_fn(2, |i, j| real(if i == 1 && j == 1 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 }))
}

/// CNOT with the left factor as control.
pub fn cnot() -> Operator {
    let perm = [0, 1, 3, 2];
    Operator::from_fn(4, |i, j| real(if perm[j] == i { 1.0 } else { 0.0 }))
}

/// The four Bell states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [Self::PhiPlus, Self::PhiMinus, Self::PsiPlus, Self::PsiMinus];

    /// `(+,0) → Φ+`, `(−,0) → Φ−`, `(+,1) → Ψ+`, `(−,1) → Ψ−`.
    pub fn from_sign_bit(positive: bool, bit: u8) -> Result<Self> {
        match (positive, bit) {
            (true, 0) => Ok(Self::PhiPlus),
            (false, 0) => Ok(Self::PhiMinus),
            (true, 1) => Ok(Self::PsiPlus),
            (false, 1) => Ok(Self::PsiMinus),
            _ => Err(Error::UnknownLabel(format!("({}, {bit})", if positive { '+' } else { '-' }))),
        }
    }

    /// Computational-basis input `|x y⟩` mapped onto this state by `CNOT·(H⊗1)`.
    pub fn input_index(self) -> usize {
        match self {
            Self::PhiPlus => 0b00,
            Self::PsiPlus => 0b01,
            Self::PhiMinus => 0b10,
            Self::PsiMinus => 0b11,
        }
    }

    pub fn ket(self) -> [C64; 4] {
        let s = FRAC_1_SQRT_2;
        let z = real(0.0);
        match self {
            Self::PhiPlus => [real(s), z, z, real(s)],
            Self::PhiMinus => [real(s), z, z, real(-s)],
            Self::PsiPlus => [z, real(s), real(s), z],
            Self::PsiMinus => [z, real(s), real(-s), z],
        }
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PhiPlus => "phi+",
            Self::PhiMinus => "phi-",
            Self::PsiPlus => "psi+",
            Self::PsiMinus => "psi-",
        })
    }
}

impl FromStr for BellLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi+" | "phi_plus" | "phiplus" => Ok(Self::PhiPlus),
            "phi-" | "phi_minus" | "phiminus" => Ok(Self::PhiMinus),
            "psi+" | "psi_plus" | "psiplus" => Ok(Self::PsiPlus),
            "psi-" | "psi_minus" | "psiminus" => Ok(Self::PsiMinus),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

pub fn bell_pair(label: BellLabel) -> DensityMatrix {
    DensityMatrix::pure(&label.ket()).expect("Bell kets are normalized")
}

/// `(1 − i σx⊗σx)/√2`.
pub fn ms_gate() -> Operator {
    let xx = tensor(&pauli_x(), &pauli_x());
    Operator::from_fn(4, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        (real(id) - c(0.0, 1.0) * xx.get(i, j)) * FRAC_1_SQRT_2
    })
}

/// Writes the rotation `exp(iθG/2)` of the doublet `(upper, lower)` with
/// generator `G = e^{iφ}|upper⟩⟨lower| + e^{−iφ}|lower⟩⟨upper|` into `u`.
fn write_doublet(u: &mut Operator, upper: usize, lower: usize, angle: f64, phi: f64) {
    let (s, co) = (angle / 2.0).sin_cos();
    u.set(upper, upper, real(co));
    u.set(lower, lower, real(co));
    u.set(upper, lower, c(0.0, s) * C64::from_polar(1.0, phi));
    u.set(lower, upper, c(0.0, s) * C64::from_polar(1.0, -phi));
}

/// Carrier pulse on the three-level ion, coupling `|0⟩ ↔ |r⟩` and leaving
/// `|1⟩` untouched.
///
/// The raising operator is taken as `|r⟩⟨0|`, the only choice consistent with
/// a filter that attenuates `|0⟩`.
pub fn carrier(theta: f64, phi: f64) -> Operator {
    let mut u = Operator::identity(3);
    write_doublet(&mut u, LEVEL_R, LEVEL_0, theta, phi);
    u
}

/// `t₁ = (2/Ω)·arccos(√(1 − p_r))`.
pub fn carrier_duration(p_r: f64, rabi: f64) -> Result<f64> {
    check_probability(p_r)?;
    if rabi.is_nan() || rabi <= 0.0 {
        return Err(Error::InvalidState(format!("Rabi frequency {rabi} must be positive")));
    }
    Ok(carrier_area(p_r) / rabi)
}

/// Pulse area with `cos(θ/2) = √(1 − p_r)`.
pub(crate) fn carrier_area(p_r: f64) -> f64 {
    2.0 * (1.0 - p_r).sqrt().acos()
}

/// Which internal transition a red-sideband pulse drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SidebandTransition {
    /// System ion, `|r, n⟩ ↔ |0, n+1⟩` (three-level ion).
    SystemShelf,
    /// Ancilla qubit, `|1, n⟩ ↔ |0, n+1⟩`.
    Ancilla,
}

impl SidebandTransition {
    pub fn ion_levels(self) -> usize {
        match self {
            Self::SystemShelf => 3,
            Self::Ancilla => 2,
        }
    }

    fn upper_lower(self) -> (usize, usize) {
        match self {
            Self::SystemShelf => (LEVEL_R, LEVEL_0),
            Self::Ancilla => (1, 0),
        }
    }
}

/// Red-sideband pulse on `ion ⊗ mode` with the mode truncated at `n_max`.
///
/// Each Jaynes–Cummings doublet `{|upper, n⟩, |lower, n+1⟩}` rotates by
/// `θ√(n+1)`. `|upper, n_max⟩` has no partner inside the truncation and is left
/// unchanged, as are `|lower, 0⟩` and any level outside the transition.
pub fn red_sideband(theta: f64, phi: f64, transition: SidebandTransition, n_max: usize) -> Result<Operator> {
    if n_max < 1 {
        return Err(Error::FockCutoff(n_max));
    }
    let levels = transition.ion_levels();
    let modes = n_max + 1;
    let layout = SpaceLayout::new(vec![levels, modes])?;
    let (upper, lower) = transition.upper_lower();
    let mut u = Operator::identity(levels * modes);
    for n in 0..n_max {
        let a = layout.flat_index(&[upper, n]);
        let b = layout.flat_index(&[lower, n + 1]);
        write_doublet(&mut u, a, b, theta * ((n + 1) as f64).sqrt(), phi);
    }
    Ok(u)
}

/// `exp(i(χ/2)·σz⊗σz)`.
pub fn zz_phase_gate(chi: f64) -> Operator {
    let plus = C64::from_polar(1.0, chi / 2.0);
    let minus = plus.conj();
    Operator::diagonal(&[plus, minus, minus, plus])
}

/// `exp(iθσy/2)`.
pub fn y_rotation(theta: f64) -> Operator {
    let (s, co) = (theta / 2.0).sin_cos();
    let y = pauli_y();
    Operator::from_fn(2, |i, j| real(if i == j { co } else { 0.0 }) + c(0.0, s) * y.get(i, j))
}

/// `exp(iθσz/2)`.
pub fn z_rotation(theta: f64) -> Operator {
    let z = pauli_z();
    Operator::from_fn(2, |i, j| if i == j { C64::from_polar(1.0, theta / 2.0 * z.get(i, i).re) } else { real(0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    use crate::qops::{apply_unitary, embed};

    fn ket(dim: usize, i: usize) -> Vec<C64> {
        (0..dim).map(|k| real(if k == i { 1.0 } else { 0.0 })).collect()
    }

    #[test]
    fn bell_states_from_circuit() {
        let circuit = &cnot() * &tensor(&hadamard(), &Operator::identity(2));
        for label in BellLabel::ALL {
            let out = circuit.apply(&ket(4, label.input_index())).unwrap();
            let expected = label.ket();
            for (a, b) in out.iter().zip(expected.iter()) {
                assert!((a - b).norm() < 1e-15, "{label}");
            }
        }
        assert_eq!(BellLabel::from_sign_bit(true, 0).unwrap(), BellLabel::PhiPlus);
        assert_eq!(BellLabel::from_sign_bit(false, 1).unwrap(), BellLabel::PsiMinus);
        assert!(BellLabel::from_sign_bit(true, 2).is_err());
        assert!("omega".parse::<BellLabel>().is_err());
    }

    #[test]
    fn bell_states_orthonormal() {
        for a in BellLabel::ALL {
            for b in BellLabel::ALL {
                let overlap: C64 = a.ket().iter().zip(b.ket().iter()).map(|(x, y)| x.conj() * y).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((overlap - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn bell_stabilizer_signs() {
        let xx = tensor(&pauli_x(), &pauli_x());
        let zz = tensor(&pauli_z(), &pauli_z());
        let expect = |label: BellLabel, op: &Operator| (bell_pair(label).matrix() * op.matrix()).trace().re;
        assert_abs_diff_eq!(expect(BellLabel::PhiPlus, &xx), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(expect(BellLabel::PsiMinus, &xx), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(expect(BellLabel::PhiMinus, &xx), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(expect(BellLabel::PsiPlus, &zz), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(expect(BellLabel::PhiPlus, &zz), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ms_gate_entangles_ground_state() {
        let u = ms_gate();
        assert!(u.is_unitary());
        let out = u.apply(&ket(4, 0)).unwrap();
        let s = FRAC_1_SQRT_2;
        let expected = [real(s), real(0.0), real(0.0), c(0.0, -s)];
        for (a, b) in out.iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
        let rho = apply_unitary(&DensityMatrix::basis(4, 0), &u).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::pure(&expected).unwrap()) < 1e-15);
    }

    #[test]
    fn ms_gate_square() {
        let u = ms_gate();
        let xx = tensor(&pauli_x(), &pauli_x());
        assert!((&u * &u).max_abs_diff(&xx.scale(c(0.0, -1.0))) < 1e-15);
    }

    #[test]
    fn carrier_cases() {
        assert_eq!(carrier(0.0, 0.0), Operator::identity(3));
        let p_r = 0.3;
        let u = carrier(carrier_area(p_r), 0.0);
        assert!(u.is_unitary());
        assert_abs_diff_eq!(u.get(LEVEL_0, LEVEL_0).re, (1.0 - p_r).sqrt(), epsilon = 1e-15);
        assert_eq!(u.get(LEVEL_1, LEVEL_1), real(1.0));

        let half_turn = carrier(PI, 0.0).apply(&ket(3, LEVEL_0)).unwrap();
        assert!((half_turn[LEVEL_R] - c(0.0, 1.0)).norm() < 1e-15);
        assert!(half_turn[LEVEL_0].norm() < 1e-15);
    }

    #[test]
    fn carrier_timing() {
        let rabi = 2.0 * PI * 10e3;
        assert_eq!(carrier_duration(0.0, rabi).unwrap(), 0.0);
        assert_abs_diff_eq!(carrier_duration(1.0, rabi).unwrap(), PI / rabi, epsilon = 1e-18);
        let t = carrier_duration(0.5, rabi).unwrap();
        assert_abs_diff_eq!(t, (PI / 2.0) / rabi, epsilon = 1e-18);
        assert_abs_diff_eq!(t, 25e-6, epsilon = 1e-12);
        let area = PulseTiming { rabi, duration: t }.area();
        assert_abs_diff_eq!((area / 2.0).cos(), 0.5f64.sqrt(), epsilon = 1e-15);
        assert!(carrier_duration(1.2, rabi).is_err());
        assert!(carrier_duration(0.5, 0.0).is_err());
    }

    #[test]
    fn sideband_full_transfer_from_vacuum() {
        let n_max = 4;
        let u = red_sideband(PI, 0.0, SidebandTransition::SystemShelf, n_max).unwrap();
        let layout = SpaceLayout::new(vec![3, n_max + 1]).unwrap();
        let out = u.apply(&ket(15, layout.flat_index(&[LEVEL_R, 0]))).unwrap();
        let target = layout.flat_index(&[LEVEL_0, 1]);
        assert!((out[target] - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn sideband_partial_transfer_from_one_phonon() {
        let n_max = 4;
        let u = red_sideband(PI, 0.0, SidebandTransition::SystemShelf, n_max).unwrap();
        let layout = SpaceLayout::new(vec![3, n_max + 1]).unwrap();
        let out = u.apply(&ket(15, layout.flat_index(&[LEVEL_R, 1]))).unwrap();
        let moved = out[layout.flat_index(&[LEVEL_0, 2])].norm_sqr();
        let stayed = out[layout.flat_index(&[LEVEL_R, 1])].norm_sqr();
        let oracle = (PI * 2f64.sqrt() / 2.0).sin().powi(2);
        assert_abs_diff_eq!(moved, oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(moved, 0.633, epsilon = 1e-3);
        assert_abs_diff_eq!(stayed, 1.0 - oracle, epsilon = 1e-15);
    }

    #[test]
    fn sideband_ignores_uncoupled_level() {
        let n_max = 3;
        let u = red_sideband(1.234, 0.3, SidebandTransition::SystemShelf, n_max).unwrap();
        let layout = SpaceLayout::new(vec![3, n_max + 1]).unwrap();
        for n in 0..=n_max {
            let i = layout.flat_index(&[LEVEL_1, n]);
            let out = u.apply(&ket(12, i)).unwrap();
            assert!((out[i] - real(1.0)).norm() < 1e-15);
        }
        assert!(matches!(red_sideband(PI, 0.0, SidebandTransition::Ancilla, 0), Err(Error::FockCutoff(0))));
    }

    #[test]
    fn sideband_matches_generator_exponential_in_doublet() {
        // Compare against the generator e^{iφ}σ⁺a + h.c. built from ladder operators.
        let n_max = 5;
        let (theta, phi) = (0.77, 0.4);
        let layout = SpaceLayout::new(vec![2, n_max + 1]).unwrap();
        let sp = crate::qops::sigma_plus();
        let a = crate::qops::annihilation(n_max);
        let gen_half = &embed(&sp, &layout, 0).unwrap() * &embed(&a, &layout, 1).unwrap();
        let g = &gen_half.scale(C64::from_polar(1.0, phi)) + &gen_half.adjoint().scale(C64::from_polar(1.0, -phi));
        let u = red_sideband(theta, phi, SidebandTransition::Ancilla, n_max).unwrap();
        for n in 0..n_max {
            let up = layout.flat_index(&[1, n]);
            let lo = layout.flat_index(&[0, n + 1]);
            let w = theta * ((n + 1) as f64).sqrt() / 2.0;
            let g_ul = g.get(up, lo) / ((n + 1) as f64).sqrt();
            assert!((u.get(up, lo) - c(0.0, w.sin()) * g_ul).norm() < 1e-15);
            assert!((u.get(up, up) - real(w.cos())).norm() < 1e-15);
        }
    }

    #[test]
    fn sideband_conserves_excitations_below_boundary() {
        let n_max = 6;
        let u = red_sideband(2.1, 0.5, SidebandTransition::SystemShelf, n_max).unwrap();
        let layout = SpaceLayout::new(vec![3, n_max + 1]).unwrap();
        let excitations = |idx: usize| {
            let d = layout.digits(idx);
            d[1] + usize::from(d[0] == LEVEL_R)
        };
        for i in 0..layout.total_dim() {
            for j in 0..layout.total_dim() {
                if u.get(i, j).norm() > 1e-15 {
                    assert_eq!(excitations(i), excitations(j));
                }
            }
        }
        // unitary on the subspace below the truncation boundary
        let keep: Vec<usize> =
            (0..layout.total_dim()).filter(|&i| layout.digits(i)[1] < n_max && excitations(i) < n_max).collect();
        for &i in &keep {
            for &j in &keep {
                let dot: C64 = (0..layout.total_dim()).map(|k| u.get(k, i).conj() * u.get(k, j)).sum();
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((dot - id).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zz_gate_values() {
        assert!(zz_phase_gate(0.0).max_abs_diff(&Operator::identity(4)) < 1e-15);
        let expected = Operator::diagonal(&[c(0.0, 1.0), c(0.0, -1.0), c(0.0, -1.0), c(0.0, 1.0)]);
        assert!(zz_phase_gate(PI).max_abs_diff(&expected) < 1e-15);
        for i in 0..4 {
            assert_abs_diff_eq!(zz_phase_gate(0.77).get(i, i).norm(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn rotations() {
        assert!(y_rotation(0.0).max_abs_diff(&Operator::identity(2)) < 1e-15);
        assert!(z_rotation(0.0).max_abs_diff(&Operator::identity(2)) < 1e-15);
        let out = y_rotation(-PI / 2.0).apply(&ket(2, 0)).unwrap();
        assert!((out[0] - real(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((out[1] - real(FRAC_1_SQRT_2)).norm() < 1e-15);
        let round = &y_rotation(PI / 2.0) * &y_rotation(-PI / 2.0);
        assert!(round.max_abs_diff(&Operator::identity(2)) < 1e-15);
        assert!((z_rotation(0.6).get(0, 0) - C64::from_polar(1.0, 0.3)).norm() < 1e-15);
    }

    #[test]
    fn gate_library_is_unitary() {
        let gates =
            [hadamard(), cnot(), ms_gate(), carrier(1.1, 0.2), zz_phase_gate(0.9), y_rotation(0.4), z_rotation(-1.3)];
        for g in &gates {
            assert!(g.is_unitary(), "{g:?}");
        }
    }

    #[test]
    fn pulse_spec_rejects_negative_area() {
        assert!(PulseSpec::new(-0.1, 0.0).is_err());
        assert!(PulseSpec::new(PI, 0.0).is_ok());
        assert_abs_diff_eq!(sideband_pi_time(0.1, 2.0 * PI * 1e5), PI / (0.1 * 2.0 * PI * 1e5), epsilon = 1e-18);
    }
}
