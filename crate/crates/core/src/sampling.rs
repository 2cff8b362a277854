//! Seeded random draws shared by the experiments.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Uniform point on the unit sphere of `Rⁿ`.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Haar-random `n×n` orthogonal matrix with determinant `+1`.
pub fn special_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let qr = gaussian_matrix(rng, n, n).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotations_are_special_orthogonal() {
        let mut rng = seeded(3);
        for n in 1..6 {
            let q = special_orthogonal(&mut rng, n);
            let err = (q.transpose() * &q - DMatrix::identity(n, n)).abs().max();
            assert!(err < 1e-13);
            assert!((q.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let a = unit_vector(&mut seeded(9), 5);
        let b = unit_vector(&mut seeded(9), 5);
        assert_eq!(a, b);
    }
}
