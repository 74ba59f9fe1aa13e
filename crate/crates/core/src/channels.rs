//! Amplitude damping: the exponential decay model and its Kraus representation.
//!
//! Note on the worked example often quoted alongside this model: with
//! `p = 1 − exp(−t/T1)` a time of `T1/10` gives `p ≈ 0.0952`, not `0.01`.
//! Everything here follows the exponential law.

use nalgebra::DMatrix;

use crate::error::{check_probability, Error, Result};
use crate::qops::{apply_kraus, completeness_error, real, DensityMatrix, Operator, C64, COMPLETENESS_TOL};

/// Exposure time and relaxation time, with the derived decay probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DampingParams {
    t: f64,
    t1: f64,
    p: f64,
}

impl DampingParams {
    pub fn new(t: f64, t1: f64) -> Result<Self> {
        let p = damping_probability(t, t1)?;
        Ok(Self { t, t1, p })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_bar(&self) -> f64 {
        1.0 - self.p
    }
}

/// `p = 1 − exp(−t/T1)`.
pub fn damping_probability(t: f64, t1: f64) -> Result<f64> {
    if t1.is_nan() || t1 <= 0.0 {
        return Err(Error::NonPositiveT1(t1));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(-(-t / t1).exp_m1())
}

/// A list of Kraus operators, optionally certified trace preserving.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    kraus: Vec<Operator>,
    trace_preserving: bool,
}

impl KrausChannel {
    pub fn new(kraus: Vec<Operator>, trace_preserving: bool) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::InvalidSubsystems("empty Kraus list".into()));
        };
        let d = first.dim();
        if let Some(bad) = kraus.iter().find(|k| k.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, actual: bad.dim() });
        }
        if trace_preserving {
            let err = completeness_error(&kraus);
            if err > COMPLETENESS_TOL {
                return Err(Error::Incomplete(err));
            }
        }
        Ok(Self { kraus, trace_preserving })
    }

    pub fn kraus(&self) -> &[Operator] {
        &self.kraus
    }

    pub fn trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].dim()
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        apply_kraus(rho, &self.kraus, self.trace_preserving)
    }
}

/// `K₀ = diag(1, √(1−p))`, `K₁ = √p |0⟩⟨1|`.
pub fn damping_kraus(p: f64) -> Result<KrausChannel> {
    check_probability(p)?;
    let k0 = Operator::diagonal(&[real(1.0), real((1.0 - p).sqrt())]);
    let k1 = Operator::from_rows(2, &[real(0.0), real(p.sqrt()), real(0.0), real(0.0)])?;
    KrausChannel::new(vec![k0, k1], true)
}

/// Single-qubit damping as an entrywise map on `(row, col)` index pairs:
/// returns the contributions of input entry `(a, b)` to the output.
fn damping_entry_map(p: f64, a: usize, b: usize) -> [(usize, usize, f64); 2] {
    let sqrt_pbar = (1.0 - p).sqrt();
    match (a, b) {
        (0, 0) => [(0, 0, 1.0), (0, 0, 0.0)],
        (1, 1) => [(1, 1, 1.0 - p), (0, 0, p)],
        _ => [(a, b, sqrt_pbar), (a, b, 0.0)],
    }
}

/// Closed-form action of independent damping on every qubit of an
/// `n`-qubit state; used as the reference for the Kraus route.
pub fn damping_direct(rho: &DensityMatrix, probs: &[f64]) -> Result<DensityMatrix> {
    let n = probs.len();
    let dim = 1usize << n;
    if rho.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: rho.dim() });
    }
    for &p in probs {
        check_probability(p)?;
    }
    let bit = |idx: usize, q: usize| (idx >> (n - 1 - q)) & 1;
    let mut current = rho.matrix().clone();
    for (q, &p) in probs.iter().enumerate() {
        let mut next = DMatrix::<C64>::zeros(dim, dim);
        for r in 0..dim {
            for s in 0..dim {
                let v = current[(r, s)];
                for (oa, ob, k) in damping_entry_map(p, bit(r, q), bit(s, q)) {
                    if k == 0.0 {
                        continue;
                    }
                    let mask = 1usize << (n - 1 - q);
                    let rr = (r & !mask) | (oa << (n - 1 - q));
                    let ss = (s & !mask) | (ob << (n - 1 - q));
                    next[(rr, ss)] += v * k;
                }
            }
        }
        current = next;
    }
    DensityMatrix::new(current)
}

/// Independent damping with probabilities `p1`, `p2` on the two qubits of `rho`.
pub fn two_qubit_damping(rho: &DensityMatrix, p1: f64, p2: f64) -> Result<DensityMatrix> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, actual: rho.dim() });
    }
    let k1 = damping_kraus(p1)?;
    let k2 = damping_kraus(p2)?;
    let joint: Vec<Operator> =
        k1.kraus().iter().flat_map(|a| k2.kraus().iter().map(move |b| crate::qops::tensor(a, b))).collect();
    apply_kraus(rho, &joint, true)
}
