//! Seeded random instances for testing and benchmarks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::qmat::{dagger, ComplexMatrix, DimensionSplit, C64};
use crate::states::{DensityMatrix, Provenance, PureState};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed unitary: Gram-Schmidt on a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for c in &cols {
                let proj: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(c).for_each(|(x, a)| *x -= proj * a);
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    ComplexMatrix::from_fn(d, d, |r, c| cols[c][r])
}

pub fn random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureState {
    loop {
        let v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
        if let Ok(s) = PureState::normalized(v, DimensionSplit::single(d)) {
            return s;
        }
    }
}

/// `G G† / tr(G G†)` for a `d × rank` Ginibre matrix `G`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = ComplexMatrix::from_fn(d, rank.max(1), |_, _| gaussian(rng));
    let m = g.matmul(&dagger(&g)).expect("shapes agree");
    let tr = m.trace().re;
    DensityMatrix::from_numerical(&m * (1.0 / tr), DimensionSplit::single(d), Provenance::Unspecified)
        .expect("Wishart matrices are positive")
}

/// A random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |_, _| gaussian(rng)).hermitian_part()
}
