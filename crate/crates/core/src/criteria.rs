//! The PPT oracle and a seeded zoo of test states.
//!
//! For dims `(2,2)` and `(2,3)` a positive partial transpose is equivalent
//! to separability; elsewhere it is only necessary.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::operator::{DensityMatrix, Dims, HermitianOperator, UnitVector};
use crate::sampling::{haar_unit_vector_with, SeedStream};
use crate::{Error, Real, Result};

/// Attempts before [`random_full_rank`] gives up on singular draws.
pub const MAX_DRAWS: usize = 16;

/// Smallest eigenvalue of the partial transpose over the second factor.
pub fn ppt_min_eigenvalue<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    Ok(rho.partial_transpose()?.min_eigenvalue())
}

fn check_unit_interval<T: Real>(name: &str, x: T) -> Result<()> {
    if x >= T::zero() && x <= T::one() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {x}")))
    }
}

fn mix_with_identity<T: Real>(pure: &UnitVector<T>, weight: T, dims: Dims) -> Result<DensityMatrix<T>> {
    let d = T::from_usize_lossy(dims.total());
    let op = HermitianOperator::projector(pure).scale(weight).shift((T::one() - weight) / d);
    DensityMatrix::new(op, dims)
}

/// The singlet `(|01> - |10>) / sqrt 2`.
pub fn singlet<T: Real>() -> UnitVector<T> {
    let h = T::FRAC_1_SQRT_2();
    let z = Complex::new(T::zero(), T::zero());
    let amps = [z, Complex::new(h, T::zero()), Complex::new(-h, T::zero()), z];
    UnitVector::normalize(nalgebra::DVector::from_column_slice(&amps)).expect("singlet has unit norm")
}

/// `w |psi-><psi-| + (1 - w) I/4` on two qubits; separable iff `w <= 1/3`.
pub fn werner<T: Real>(w: T) -> Result<DensityMatrix<T>> {
    check_unit_interval("w", w)?;
    mix_with_identity(&singlet(), w, Dims::square(2)?)
}

/// The pure singlet state.
pub fn bell<T: Real>() -> DensityMatrix<T> {
    werner(T::one()).expect("w = 1 is valid")
}

/// `p |Phi+><Phi+| + (1 - p) I/n^2` with `|Phi+> = sum_i |ii> / sqrt n`;
/// separable iff `p <= 1/(n+1)`.
pub fn isotropic<T: Real>(p: T, n: usize) -> Result<DensityMatrix<T>> {
    check_unit_interval("p", p)?;
    let dims = Dims::square(n)?;
    let amp = Complex::new(T::one() / T::from_usize_lossy(n).sqrt(), T::zero());
    let mut v = nalgebra::DVector::from_element(n * n, Complex::new(T::zero(), T::zero()));
    for i in 0..n {
        v[i * n + i] = amp;
    }
    mix_with_identity(&UnitVector::normalize(v)?, p, dims)
}

/// A Haar-random pure product state `|phi phi'><phi phi'|`.
pub fn pure_product<T: Real>(dims: Dims, seed: u64) -> Result<DensityMatrix<T>> {
    let mut rng = SeedStream::new(seed, 0).rng();
    let phi: UnitVector<T> = haar_unit_vector_with(dims.a, &mut rng)?;
    let phi_prime = haar_unit_vector_with(dims.b, &mut rng)?;
    DensityMatrix::pure(&phi.tensor(&phi_prime), dims)
}

/// A convex combination of `terms` Haar-random product projectors with
/// flat-Dirichlet weights.
pub fn random_separable<T: Real>(dims: Dims, terms: usize, seed: u64) -> Result<DensityMatrix<T>> {
    if terms == 0 {
        return Err(Error::InvalidArgument("terms must be at least 1".into()));
    }
    let mut rng = SeedStream::new(seed, 0).rng();
    let raw: Vec<f64> = (0..terms).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = raw.iter().sum();
    let d = dims.total();
    let mut acc = DMatrix::zeros(d, d);
    for w in raw {
        let phi: UnitVector<T> = haar_unit_vector_with(dims.a, &mut rng)?;
        let phi_prime = haar_unit_vector_with(dims.b, &mut rng)?;
        let p = HermitianOperator::projector(&phi.tensor(&phi_prime));
        acc += p.matrix() * Complex::new(T::c(w / total), T::zero());
    }
    let tr = acc.trace().re;
    DensityMatrix::new(HermitianOperator::new(acc.unscale(tr))?, dims)
}

/// `G G^dagger / tr(G G^dagger)` for a complex Gaussian `G`, redrawn on a
/// fresh stream if the result is numerically singular.
pub fn random_full_rank<T: Real>(dims: Dims, seed: u64) -> Result<DensityMatrix<T>> {
    let d = dims.total();
    for attempt in 0..MAX_DRAWS {
        let mut rng = SeedStream::new(seed, attempt as u64).rng();
        let g = DMatrix::from_fn(d, d, |_, _| Complex::new(T::standard_normal(&mut rng), T::standard_normal(&mut rng)));
        let gg = &g * g.adjoint();
        let tr = gg.trace().re;
        let op = HermitianOperator::new(gg.unscale(tr))?;
        if op.min_eigenvalue() > T::PSD_TOL {
            return DensityMatrix::new(op, dims);
        }
    }
    Err(Error::DegenerateDraw { attempts: MAX_DRAWS })
}

/// A diagonal state in the computational basis.
pub fn diagonal<T: Real>(dims: Dims, probs: &[T]) -> Result<DensityMatrix<T>> {
    if probs.len() != dims.total() {
        return Err(Error::DimensionMismatch { expected: dims.total(), actual: probs.len() });
    }
    DensityMatrix::new(HermitianOperator::from_real_diagonal(probs), dims)
}

/// A named, parameterized member of the state zoo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StateSpec {
    Werner { w: f64 },
    Bell,
    Isotropic { p: f64, n: usize },
    RandomFullRank { dims: Dims, seed: u64 },
    RandomSeparable { dims: Dims, terms: usize, seed: u64 },
    PureProduct { dims: Dims, seed: u64 },
    MaximallyMixed { dims: Dims },
    Diagonal { dims: Dims, probs: Vec<f64> },
}

impl StateSpec {
    pub fn build<T: Real>(&self) -> Result<DensityMatrix<T>> {
        match self {
            Self::Werner { w } => werner(T::c(*w)),
            Self::Bell => Ok(bell()),
            Self::Isotropic { p, n } => isotropic(T::c(*p), *n),
            Self::RandomFullRank { dims, seed } => random_full_rank(*dims, *seed),
            Self::RandomSeparable { dims, terms, seed } => random_separable(*dims, *terms, *seed),
            Self::PureProduct { dims, seed } => pure_product(*dims, *seed),
            Self::MaximallyMixed { dims } => Ok(DensityMatrix::maximally_mixed(Dims::new(dims.a, dims.b)?)),
            Self::Diagonal { dims, probs } => {
                let probs: Vec<T> = probs.iter().map(|&p| T::c(p)).collect();
                diagonal(*dims, &probs)
            }
        }
    }
}
