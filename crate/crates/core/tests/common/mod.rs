#![allow(dead_code)]

use ensep::operator::HermitianOperator;
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> HermitianOperator<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    HermitianOperator::new((&g + g.adjoint()).scale(0.5)).unwrap()
}

/// Random Hermitian operator scaled to unit trace norm.
pub fn random_unit_hermitian(d: usize, rng: &mut impl Rng) -> HermitianOperator<f64> {
    let h = random_hermitian(d, rng);
    let norm = h.trace_norm();
    h.scale(1.0 / norm)
}

/// Haar-random unitary from the QR decomposition of a complex Gaussian.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> DMatrix<Complex<f64>> {
    use rand_distr::{Distribution, StandardNormal};
    let g = DMatrix::from_fn(d, d, |_, _| {
        Complex::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = DMatrix::from_diagonal(&r.diagonal().map(|z: Complex<f64>| z / z.norm()));
    q * phases
}
