//! Haar-uniform sampling of unit vectors and of product pairs on the torus.
//!
//! Every sample is drawn from its own counter-based stream: sample `i` of a
//! set with seed `s` uses `ChaCha8Rng::seed_from_u64(s)` on stream `i`. Any
//! partition of the index range over workers therefore yields the same set.

use std::ops::Range;

use nalgebra::DVector;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::operator::{Dims, UnitVector};
use crate::{Error, Real, Result};

/// A `(seed, stream_id)` pair naming one reproducible random sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeedStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Draws a Haar-random unit vector from `rng`: `n` standard complex
/// Gaussians, normalized.
pub fn haar_unit_vector_with<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<UnitVector<T>> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    loop {
        let amps = DVector::from_fn(n, |_, _| Complex::new(T::standard_normal(rng), T::standard_normal(rng)));
        match UnitVector::normalize(amps) {
            Ok(v) => return Ok(v),
            // probability zero, but keep drawing rather than fail
            Err(Error::ZeroVector) => continue,
            Err(e) => return Err(e),
        }
    }
}

pub fn haar_unit_vector<T: Real>(n: usize, stream: SeedStream) -> Result<UnitVector<T>> {
    haar_unit_vector_with(n, &mut stream.rng())
}

/// A point `(phi, phi')` on the product of the two unit spheres.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSample<T: Real> {
    pub phi: UnitVector<T>,
    pub phi_prime: UnitVector<T>,
}

impl<T: Real> ProductSample<T> {
    /// `phi (x) phi'`
    pub fn product(&self) -> UnitVector<T> {
        self.phi.tensor(&self.phi_prime)
    }

    pub fn dims(&self) -> Dims {
        Dims { a: self.phi.dim(), b: self.phi_prime.dim() }
    }
}

pub fn torus_sample_with<T: Real, R: Rng + ?Sized>(dims: Dims, rng: &mut R) -> Result<ProductSample<T>> {
    let phi = haar_unit_vector_with(dims.a, rng)?;
    let phi_prime = haar_unit_vector_with(dims.b, rng)?;
    Ok(ProductSample { phi, phi_prime })
}

pub fn torus_sample<T: Real>(dims: Dims, stream: SeedStream) -> Result<ProductSample<T>> {
    torus_sample_with(dims, &mut stream.rng())
}

/// A deterministic, materialized discretization of the torus measure.
///
/// Alongside the factor pairs the set caches the product vectors
/// `phi (x) phi'` in one flat buffer, since every integral over the set
/// needs them.
#[derive(Clone, Debug)]
pub struct SampleSet<T: Real> {
    seed: u64,
    dims: Dims,
    start: usize,
    samples: Vec<ProductSample<T>>,
    products: Vec<Complex<T>>,
}

impl<T: Real> SampleSet<T> {
    /// Generates the samples with indices in `range`.
    pub fn from_range(seed: u64, range: Range<usize>, dims: Dims) -> Result<Self> {
        if range.is_empty() {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        Dims::new(dims.a, dims.b)?;
        let start = range.start;
        let samples = range
            .into_par_iter()
            .map(|i| torus_sample(dims, SeedStream::new(seed, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        let d = dims.total();
        let mut products = Vec::with_capacity(samples.len() * d);
        for s in &samples {
            products.extend_from_slice(s.product().amplitudes().as_slice());
        }
        Ok(Self { seed, dims, start, samples, products })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Index of the first sample (nonzero only for partial sets).
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn samples(&self) -> &[ProductSample<T>] {
        &self.samples
    }

    /// Amplitudes of `phi_i (x) phi'_i` for the `i`-th sample of this set.
    pub fn product_vector(&self, i: usize) -> &[Complex<T>] {
        let d = self.dims.total();
        &self.products[i * d..(i + 1) * d]
    }
}

/// Samples `0..count` for `seed`.
pub fn make_sample_set<T: Real>(seed: u64, count: usize, dims: Dims) -> Result<SampleSet<T>> {
    SampleSet::from_range(seed, 0..count, dims)
}

/// `E|<e|phi>|^{2m}` for Haar-random `phi` in dimension `n`, in log form:
/// `ln(m! (n-1)! / (m+n-1)!)`.
pub fn ln_haar_moment(n: usize, m: u64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let (n, m) = (n as f64, m as f64);
    ln_gamma(m + 1.0) + ln_gamma(n) - ln_gamma(m + n)
}

/// `E|<e|phi>|^{2a} |<f|phi>|^{2b}` for orthonormal `e, f` and Haar-random
/// `phi` in dimension `n >= 2`, in log form: `ln(a! b! (n-1)! / (a+b+n-1)!)`.
pub fn ln_haar_joint_moment(n: usize, a: u64, b: u64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let (n, a, b) = (n as f64, a as f64, b as f64);
    ln_gamma(a + 1.0) + ln_gamma(b + 1.0) + ln_gamma(n) - ln_gamma(a + b + n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::HermitianOperator;

    fn dims(a: usize, b: usize) -> Dims {
        Dims::new(a, b).unwrap()
    }

    #[test]
    fn vectors_are_normalized() {
        for i in 0..200 {
            let v: UnitVector<f64> = haar_unit_vector(3, SeedStream::new(7, i)).unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-12);
            let s: ProductSample<f64> = torus_sample(dims(2, 3), SeedStream::new(7, i)).unwrap();
            assert!((s.phi.norm() - 1.0).abs() < 1e-12);
            assert!((s.phi_prime.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_dimension_is_rejected() {
        assert!(matches!(haar_unit_vector::<f64>(0, SeedStream::new(1, 0)), Err(Error::ZeroDimension)));
        assert!(make_sample_set::<f64>(1, 0, dims(2, 2)).is_err());
    }

    #[test]
    fn same_seed_same_samples() {
        let a: SampleSet<f64> = make_sample_set(42, 500, dims(2, 2)).unwrap();
        let b: SampleSet<f64> = make_sample_set(42, 500, dims(2, 2)).unwrap();
        assert_eq!(a.samples(), b.samples());
        let c: SampleSet<f64> = make_sample_set(43, 500, dims(2, 2)).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn partitions_reassemble_to_the_full_set() {
        let full: SampleSet<f64> = make_sample_set(9, 1000, dims(2, 3)).unwrap();
        let mut joined = Vec::new();
        for r in [0..137, 137..600, 600..1000] {
            let part: SampleSet<f64> = SampleSet::from_range(9, r.clone(), dims(2, 3)).unwrap();
            assert_eq!(part.start(), r.start);
            joined.extend_from_slice(part.samples());
        }
        assert_eq!(joined, full.samples());
    }

    #[test]
    fn single_sample_set() {
        let s: SampleSet<f64> = make_sample_set(1, 1, dims(2, 2)).unwrap();
        assert_eq!(s.len(), 1);
        let v = s.product_vector(0);
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_vector_matches_kronecker() {
        let s: SampleSet<f64> = make_sample_set(3, 10, dims(2, 3)).unwrap();
        for (i, p) in s.samples().iter().enumerate() {
            assert_eq!(p.product().amplitudes().as_slice(), s.product_vector(i));
        }
    }

    #[test]
    fn haar_moment_closed_form() {
        // m!(n-1)!/(m+n-1)!: n = 2, m = 1 -> 1/2; n = 3, m = 2 -> 2*2/24
        assert!((ln_haar_moment(2, 1).exp() - 0.5).abs() < 1e-14);
        assert!((ln_haar_moment(3, 2).exp() - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn joint_moment_reduces_to_single() {
        for n in 2..5 {
            for m in 0..6 {
                assert!((ln_haar_joint_moment(n, m, 0) - ln_haar_moment(n, m)).abs() < 1e-12);
            }
        }
        // n = 2: |phi_0|^2 = t is uniform, so E t (1-t) = 1/6
        assert!((ln_haar_joint_moment(2, 1, 1).exp() - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn f32_samples() {
        let s: SampleSet<f32> = make_sample_set(5, 100, dims(2, 2)).unwrap();
        let p = HermitianOperator::projector(&s.samples()[0].product());
        assert!((p.trace() - 1.0).abs() < 1e-5);
    }
}
