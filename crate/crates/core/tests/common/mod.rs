#![allow(dead_code)]

use adfilter::qops::{DensityMatrix, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn from_entries(d: usize, xs: &[f64]) -> DensityMatrix {
    let g = DMatrix::from_fn(d, d, |r, c| C64::new(xs[2 * (r * d + c)], xs[2 * (r * d + c) + 1]));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m / C64::new(tr, 0.0)).expect("Ginibre state is valid")
}

/// Random full-rank density matrices of dimension `d`.
pub fn density_matrix(d: usize) -> impl Strategy<Value = DensityMatrix> {
    prop::collection::vec(-1.0..1.0f64, 2 * d * d)
        .prop_filter("degenerate sample", |xs| xs.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(move |xs| from_entries(d, &xs))
}

/// Deterministic list of random states for table-style checks.
pub fn seeded_states(d: usize, count: usize, seed: u64) -> Vec<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let xs: Vec<f64> = (0..2 * d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
            from_entries(d, &xs)
        })
        .collect()
}
