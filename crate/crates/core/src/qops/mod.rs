//! Dense complex operators, density matrices, and composite-space plumbing.
//!
//! Ordering convention: in a composite space the leftmost tensor factor is
//! slot 0 and varies slowest in the flattened index.

mod eigen;

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

pub use self::eigen::{hermitian_eigen, HermitianEigen};
use crate::error::{Error, Result};

/// Tolerance for unitarity checks.
pub const UNITARY_TOL: f64 = 1e-12;
/// Tolerance for Hermiticity of density matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue allowed for a density matrix; absorbs rounding from
/// roughly ten sequential maps.
pub const PSD_TOL: f64 = -1e-10;
/// Tolerance for `trace == weight`.
pub const TRACE_TOL: f64 = 1e-10;
/// Tolerance for Kraus completeness `Σ K†K = I`.
pub const COMPLETENESS_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A dense square complex matrix acting on a (possibly composite) Hilbert space.
#[derive(Clone, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator{}", self.mat)
    }
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare { rows: mat.nrows(), cols: mat.ncols() });
        }
        Ok(Self { mat })
    }

    /// Builds a `dim × dim` operator from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, actual: entries.len() });
        }
        Ok(Self { mat: DMatrix::from_row_slice(dim, dim, entries) })
    }

    pub(crate) fn from_matrix_unchecked(mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { mat: DMatrix::from_fn(dim, dim, f) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { mat: DMatrix::zeros(dim, dim) }
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, |i, j| if i == j { entries[i] } else { C64::new(0.0, 0.0) })
    }

    /// `|ket⟩⟨bra|` for vectors of equal length.
    pub fn outer(ket: &[C64], bra: &[C64]) -> Result<Self> {
        if ket.len() != bra.len() {
            return Err(Error::DimensionMismatch { expected: ket.len(), actual: bra.len() });
        }
        Ok(Self::from_fn(ket.len(), |i, j| ket[i] * bra[j].conj()))
    }

    /// `|i⟩⟨j|` in a `dim`-dimensional space.
    pub fn basis_op(dim: usize, i: usize, j: usize) -> Self {
        Self::from_fn(dim, |r, s| if r == i && s == j { real(1.0) } else { real(0.0) })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: C64) {
        self.mat[(row, col)] = value;
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        Self { mat: self.mat.transpose() }
    }

    pub fn scale(&self, k: C64) -> Self {
        Self { mat: &self.mat * k }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// Applies the operator to a state vector.
    pub fn apply(&self, ket: &[C64]) -> Result<Vec<C64>> {
        if ket.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: ket.len() });
        }
        Ok((0..self.dim()).map(|i| (0..self.dim()).map(|j| self.mat[(i, j)] * ket[j]).sum()).collect())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_abs_diff on mismatched dimensions");
        max_abs(&(&self.mat - &other.mat))
    }

    pub fn unitarity_error(&self) -> f64 {
        max_abs(&(self.mat.adjoint() * &self.mat - DMatrix::identity(self.dim(), self.dim())))
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_error() <= UNITARY_TOL
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.mat - self.mat.adjoint()))
    }

    /// Deviation from `P² = P = P†`.
    pub fn projector_error(&self) -> f64 {
        let sq = &self.mat * &self.mat;
        max_abs(&(&sq - &self.mat)).max(self.hermiticity_error())
    }

    /// Eigenvalues in ascending order, assuming the operator is Hermitian.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.mat).values
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator product on mismatched dimensions");
        Operator { mat: &self.mat * &rhs.mat }
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator { mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator { mat: &self.mat - &rhs.mat }
    }
}

/// A Hermitian positive-semidefinite matrix whose trace is its `weight`.
///
/// Normalized states have weight 1. Post-selected branches keep their
/// unnormalized trace so that success probabilities fall out of the
/// bookkeeping; call [`DensityMatrix::normalized`] to condition on the branch.
#[derive(Clone, PartialEq)]
pub struct DensityMatrix {
    mat: DMatrix<C64>,
    weight: f64,
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMatrix(weight={}){}", self.weight, self.mat)
    }
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and `weight ≤ 1`; the weight is the trace.
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(mat)?;
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare { rows: mat.nrows(), cols: mat.ncols() });
        }
        let weight = mat.trace().re;
        Ok(Self { mat, weight })
    }

    /// `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn pure(ket: &[C64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("state vector has norm² {norm}")));
        }
        Ok(Self { mat: Operator::outer(ket, ket)?.mat, weight: 1.0 })
    }

    /// `|index⟩⟨index|`.
    pub fn basis(dim: usize, index: usize) -> Self {
        Self { mat: Operator::basis_op(dim, index, index).mat, weight: 1.0 }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { mat: DMatrix::identity(dim, dim) / real(dim as f64), weight: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn as_operator(&self) -> Operator {
        Operator::from_matrix_unchecked(self.mat.clone())
    }

    /// Divides out the weight.
    pub fn normalized(&self) -> Result<Self> {
        if self.weight <= 0.0 {
            return Err(Error::EmptyPostSelection);
        }
        Ok(Self { mat: &self.mat / real(self.weight), weight: 1.0 })
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.mat).values.first().copied().unwrap_or(0.0)
    }

    /// Checks every documented invariant.
    pub fn validate(&self) -> Result<()> {
        let herm = max_abs(&(&self.mat - self.mat.adjoint()));
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = self.mat.trace();
        if (tr.re - self.weight).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from weight {}", self.weight)));
        }
        if self.weight > 1.0 + TRACE_TOL {
            return Err(Error::InvalidState(format!("weight {} exceeds 1", self.weight)));
        }
        let min = self.min_eigenvalue();
        if min < PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "trace distance on mismatched dimensions");
        let diff = &self.mat - &other.mat;
        0.5 * hermitian_eigen(&diff).values.iter().map(|x| x.abs()).sum::<f64>()
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        max_abs(&(&self.mat - &other.mat))
    }
}

/// Ordered subsystem dimensions of a composite space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceLayout {
    dims: Vec<usize>,
}

impl SpaceLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidSubsystems(format!("bad layout {dims:?}")));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Splits a flat index into per-slot digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in self.dims.iter().enumerate().rev() {
            out[slot] = index % d;
            index /= d;
        }
        out
    }

    pub fn flat_index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.total_dim() != dim {
            return Err(Error::DimensionMismatch { expected: self.total_dim(), actual: dim });
        }
        Ok(())
    }
}

/// Kronecker product; the left factor varies slowest.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    Operator { mat: a.mat.kronecker(&b.mat) }
}

pub fn tensor_all<'a>(ops: impl IntoIterator<Item = &'a Operator>) -> Operator {
    ops.into_iter().fold(Operator::identity(1), |acc, op| tensor(&acc, op))
}

pub fn tensor_states(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    DensityMatrix { mat: a.mat.kronecker(&b.mat), weight: a.weight * b.weight }
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` at `slot`.
pub fn embed(op: &Operator, layout: &SpaceLayout, slot: usize) -> Result<Operator> {
    let &d = layout
        .dims
        .get(slot)
        .ok_or_else(|| Error::InvalidSubsystems(format!("slot {slot} outside layout of {}", layout.len())))?;
    if op.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: op.dim() });
    }
    let left: usize = layout.dims[..slot].iter().product();
    let right: usize = layout.dims[slot + 1..].iter().product();
    Ok(tensor(&tensor(&Operator::identity(left), op), &Operator::identity(right)))
}

/// `ρ → UρU†`.
pub fn apply_unitary(rho: &DensityMatrix, u: &Operator) -> Result<DensityMatrix> {
    if rho.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), actual: u.dim() });
    }
    let mat = &u.mat * &rho.mat * u.mat.adjoint();
    Ok(DensityMatrix { mat, weight: rho.weight })
}

/// Max deviation of `Σ K†K` from the identity.
pub fn completeness_error(ks: &[Operator]) -> f64 {
    let Some(first) = ks.first() else { return f64::INFINITY };
    let d = first.dim();
    let sum = ks.iter().fold(DMatrix::<C64>::zeros(d, d), |acc, k| acc + k.mat.adjoint() * &k.mat);
    max_abs(&(sum - DMatrix::identity(d, d)))
}

/// `ρ → Σ K ρ K†`. When `trace_preserving` is set the list is checked for
/// completeness first.
pub fn apply_kraus(rho: &DensityMatrix, ks: &[Operator], trace_preserving: bool) -> Result<DensityMatrix> {
    for k in ks {
        if k.dim() != rho.dim() {
            return Err(Error::DimensionMismatch { expected: rho.dim(), actual: k.dim() });
        }
    }
    if trace_preserving {
        let err = completeness_error(ks);
        if err > COMPLETENESS_TOL {
            return Err(Error::Incomplete(err));
        }
    }
    let d = rho.dim();
    let mat = ks.iter().fold(DMatrix::<C64>::zeros(d, d), |acc, k| acc + &k.mat * &rho.mat * k.mat.adjoint());
    DensityMatrix::from_matrix_unchecked(mat)
}

pub(crate) fn partial_trace_matrix(m: &DMatrix<C64>, layout: &SpaceLayout, keep: &[usize]) -> Result<DMatrix<C64>> {
    layout.check_dim(m.nrows())?;
    if keep.is_empty() {
        return Err(Error::InvalidSubsystems("keep set is empty".into()));
    }
    if keep.iter().any(|&k| k >= layout.len()) || keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSubsystems(format!("keep {keep:?} must be increasing slots of {:?}", layout.dims)));
    }
    let kept = SpaceLayout { dims: keep.iter().map(|&k| layout.dims[k]).collect() };
    let traced: Vec<usize> = (0..layout.len()).filter(|s| !keep.contains(s)).collect();
    let traced_layout = if traced.is_empty() {
        SpaceLayout { dims: vec![1] }
    } else {
        SpaceLayout { dims: traced.iter().map(|&k| layout.dims[k]).collect() }
    };
    let out_dim = kept.total_dim();
    let mut out = DMatrix::<C64>::zeros(out_dim, out_dim);
    let mut full = vec![0usize; layout.len()];
    for r in 0..out_dim {
        let rd = kept.digits(r);
        for col in 0..out_dim {
            let cd = kept.digits(col);
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..traced_layout.total_dim() {
                let td = traced_layout.digits(t);
                for (i, &slot) in keep.iter().enumerate() {
                    full[slot] = rd[i];
                }
                for (i, &slot) in traced.iter().enumerate() {
                    full[slot] = td[i];
                }
                let row_idx = layout.flat_index(&full);
                for (i, &slot) in keep.iter().enumerate() {
                    full[slot] = cd[i];
                }
                let col_idx = layout.flat_index(&full);
                acc += m[(row_idx, col_idx)];
            }
            out[(r, col)] = acc;
        }
    }
    Ok(out)
}

/// Traces out every slot not listed in `keep` (given in increasing order).
pub fn partial_trace(rho: &DensityMatrix, layout: &SpaceLayout, keep: &[usize]) -> Result<DensityMatrix> {
    let mat = partial_trace_matrix(&rho.mat, layout, keep)?;
    Ok(DensityMatrix { mat, weight: rho.weight })
}

/// Reorders tensor factors: slot `k` of the result is slot `order[k]` of the input.
pub fn permute_subsystems(m: &DMatrix<C64>, layout: &SpaceLayout, order: &[usize]) -> Result<DMatrix<C64>> {
    layout.check_dim(m.nrows())?;
    let mut seen = vec![false; layout.len()];
    if order.len() != layout.len() || order.iter().any(|&k| k >= layout.len() || std::mem::replace(&mut seen[k], true))
    {
        return Err(Error::InvalidSubsystems(format!("{order:?} is not a permutation of {} slots", layout.len())));
    }
    let new_layout = SpaceLayout { dims: order.iter().map(|&k| layout.dims[k]).collect() };
    let n = layout.total_dim();
    // old flat index for each new flat index
    let map: Vec<usize> = (0..n)
        .map(|new| {
            let nd = new_layout.digits(new);
            let mut od = vec![0; layout.len()];
            for (k, &src) in order.iter().enumerate() {
                od[src] = nd[k];
            }
            layout.flat_index(&od)
        })
        .collect();
    Ok(DMatrix::from_fn(n, n, |r, col| m[(map[r], map[col])]))
}

/// `PρP` without renormalization; the returned weight is `Tr(PρP)`.
pub fn project_postselect(rho: &DensityMatrix, proj: &Operator) -> Result<DensityMatrix> {
    if proj.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), actual: proj.dim() });
    }
    let err = proj.projector_error();
    if err > 1e-10 {
        return Err(Error::NotProjector(err));
    }
    let mat = &proj.mat * &rho.mat * &proj.mat;
    DensityMatrix::from_matrix_unchecked(mat)
}

pub fn pauli_x() -> Operator {
    Operator::from_fn(2, |i, j| if i != j { real(1.0) } else { real(0.0) })
}

pub fn pauli_y() -> Operator {
    Operator::from_fn(2, |i, j| match (i, j) {
        (0, 1) => c(0.0, -1.0),
        (1, 0) => c(0.0, 1.0),
        _ => real(0.0),
    })
}

pub fn pauli_z() -> Operator {
    Operator::diagonal(&[real(1.0), real(-1.0)])
}

/// Raising operator `|1⟩⟨0|` on a qubit.
pub fn sigma_plus() -> Operator {
    Operator::basis_op(2, 1, 0)
}

/// Phonon annihilation operator truncated to `n_max + 1` Fock states.
pub fn annihilation(n_max: usize) -> Operator {
    Operator::from_fn(n_max + 1, |i, j| if j == i + 1 { real((j as f64).sqrt()) } else { real(0.0) })
}

pub fn creation(n_max: usize) -> Operator {
    annihilation(n_max).adjoint()
}
