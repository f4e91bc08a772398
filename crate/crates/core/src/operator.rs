//! Dense complex operators on small Hilbert spaces.
//!
//! Composite indices always follow `i = i_a * dims.b + i_b`.

use std::ops::{Add, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Factor dimensions of a bipartite space. Single-party spaces use `b = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub a: usize,
    pub b: usize,
}

impl Dims {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Self { a, b })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn single(n: usize) -> Result<Self> {
        Self::new(n, 1)
    }

    pub fn total(&self) -> usize {
        self.a * self.b
    }

    pub fn is_single(&self) -> bool {
        self.b == 1
    }

    /// The common factor dimension, if both factors agree.
    pub fn equal_factor(&self) -> Result<usize> {
        if self.a == self.b {
            Ok(self.a)
        } else {
            Err(Error::UnequalFactors { a: self.a, b: self.b })
        }
    }
}

/// Which tensor factor an operation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// A self-adjoint operator stored as a dense `dim x dim` complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator<T: Real> {
    mat: DMatrix<Complex<T>>,
}

#[inline]
pub(crate) fn modulus<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

fn check_square<T: Real>(mat: &DMatrix<Complex<T>>) -> Result<()> {
    if mat.nrows() != mat.ncols() {
        return Err(Error::NotSquare { rows: mat.nrows(), cols: mat.ncols() });
    }
    if mat.nrows() == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok(())
}

fn max_asymmetry<T: Real>(mat: &DMatrix<Complex<T>>) -> (usize, usize, T) {
    let n = mat.nrows();
    let mut worst = (0, 0, T::zero());
    for i in 0..n {
        for j in i..n {
            let d = modulus(mat[(i, j)] - mat[(j, i)].conj());
            if d > worst.2 {
                worst = (i, j, d);
            }
        }
    }
    worst
}

fn symmetrize<T: Real>(mat: &mut DMatrix<Complex<T>>) {
    let half = T::c(0.5);
    let n = mat.nrows();
    for i in 0..n {
        mat[(i, i)] = Complex::new(mat[(i, i)].re, T::zero());
        for j in i + 1..n {
            let v = (mat[(i, j)] + mat[(j, i)].conj()).scale(half);
            mat[(i, j)] = v;
            mat[(j, i)] = v.conj();
        }
    }
}

impl<T: Real> HermitianOperator<T> {
    /// Validates Hermiticity within [`Real::HERMITIAN_TOL`] per entry, then
    /// symmetrizes exactly.
    pub fn new(mut mat: DMatrix<Complex<T>>) -> Result<Self> {
        check_square(&mat)?;
        let (row, col, deviation) = max_asymmetry(&mat);
        if deviation > T::HERMITIAN_TOL {
            return Err(Error::NotHermitian { row, col, deviation: deviation.as_f64() });
        }
        symmetrize(&mut mat);
        Ok(Self { mat })
    }

    /// Re-establishes Hermiticity after floating point accumulation.
    ///
    /// Panics if the input is further than [`Real::ACCUMULATION_TOL`] from
    /// Hermitian; callers only pass matrices that are Hermitian in exact
    /// arithmetic.
    pub(crate) fn from_accumulated(mut mat: DMatrix<Complex<T>>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        let (row, col, deviation) = max_asymmetry(&mat);
        let scale = mat.iter().fold(T::one(), |m, z| m.max(modulus(*z)));
        assert!(
            deviation <= T::ACCUMULATION_TOL * scale,
            "accumulated operator lost Hermiticity at ({row}, {col}): {deviation:e}"
        );
        symmetrize(&mut mat);
        Self { mat }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { mat: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: DMatrix::identity(dim, dim) }
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&d| Complex::new(d, T::zero())));
        Self { mat: DMatrix::from_diagonal(&v) }
    }

    /// `|v><v|`
    pub fn projector(v: &UnitVector<T>) -> Self {
        let a = v.amplitudes();
        Self { mat: a * a.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> T {
        (0..self.dim()).fold(T::zero(), |acc, i| acc + self.mat[(i, i)].re)
    }

    pub fn scale(&self, s: T) -> Self {
        Self { mat: self.mat.map(|z| z.scale(s)) }
    }

    /// `self + s * I`
    pub fn shift(&self, s: T) -> Self {
        let mut mat = self.mat.clone();
        for i in 0..self.dim() {
            mat[(i, i)].re += s;
        }
        Self { mat }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        let mut ev: Vec<T> = self.mat.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        ev
    }

    /// Eigenvalues (ascending) with the matching orthonormal eigenvectors.
    pub fn eigen(&self) -> Vec<(T, UnitVector<T>)> {
        let eig = self.mat.clone().symmetric_eigen();
        let mut pairs: Vec<(T, UnitVector<T>)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &val)| {
                let col = eig.eigenvectors.column(k).into_owned();
                (val, UnitVector::normalize(col).expect("eigenvector is nonzero"))
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite eigenvalues"));
        pairs
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> T {
        *self.eigenvalues().last().expect("dim >= 1")
    }

    /// Sum of absolute eigenvalues.
    pub fn trace_norm(&self) -> T {
        self.eigenvalues().into_iter().fold(T::zero(), |acc, e| acc + e.abs())
    }

    pub fn frobenius_norm(&self) -> T {
        self.mat.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    /// `<v|A|v>`, which is real for Hermitian `A`.
    pub fn expectation(&self, v: &UnitVector<T>) -> Result<T> {
        if v.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: v.dim() });
        }
        let z = quadratic_form(&self.mat, v.amplitudes().as_slice());
        assert!(
            z.im.abs() < T::EXPECTATION_IM_TOL,
            "expectation of a Hermitian operator has imaginary part {:e}",
            z.im
        );
        Ok(z.re)
    }

    /// Kronecker product with `self` as the first factor.
    pub fn tensor(&self, other: &Self) -> Self {
        Self { mat: self.mat.kronecker(&other.mat) }
    }

    /// Traces out `which` and returns the operator on the remaining factor.
    pub fn partial_trace(&self, dims: Dims, which: Subsystem) -> Result<Self> {
        self.check_dims(dims)?;
        let (na, nb) = (dims.a, dims.b);
        let m = &self.mat;
        let out = match which {
            Subsystem::First => DMatrix::from_fn(nb, nb, |ib, jb| {
                (0..na).fold(Complex::new(T::zero(), T::zero()), |acc, k| acc + m[(k * nb + ib, k * nb + jb)])
            }),
            Subsystem::Second => DMatrix::from_fn(na, na, |ia, ja| {
                (0..nb).fold(Complex::new(T::zero(), T::zero()), |acc, k| acc + m[(ia * nb + k, ja * nb + k)])
            }),
        };
        Ok(Self { mat: out })
    }

    /// Transposes the indices of the second factor.
    pub fn partial_transpose(&self, dims: Dims) -> Result<Self> {
        self.check_dims(dims)?;
        let nb = dims.b;
        let m = &self.mat;
        let out = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            let (ia, ib) = (i / nb, i % nb);
            let (ja, jb) = (j / nb, j % nb);
            m[(ia * nb + jb, ja * nb + ib)]
        });
        Ok(Self { mat: out })
    }

    fn check_dims(&self, dims: Dims) -> Result<()> {
        if dims.total() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: dims.total() });
        }
        Ok(())
    }
}

/// `v^dagger M v` over raw storage.
pub(crate) fn quadratic_form<T: Real>(m: &DMatrix<Complex<T>>, v: &[Complex<T>]) -> Complex<T> {
    let n = v.len();
    let mut acc = Complex::new(T::zero(), T::zero());
    for j in 0..n {
        let mut col = Complex::new(T::zero(), T::zero());
        for i in 0..n {
            col += v[i].conj() * m[(i, j)];
        }
        acc += col * v[j];
    }
    acc
}

impl<T: Real> Add for &HermitianOperator<T> {
    type Output = HermitianOperator<T>;

    /// Panics on dimension mismatch.
    fn add(self, rhs: Self) -> HermitianOperator<T> {
        HermitianOperator { mat: &self.mat + &rhs.mat }
    }
}

impl<T: Real> Sub for &HermitianOperator<T> {
    type Output = HermitianOperator<T>;

    /// Panics on dimension mismatch.
    fn sub(self, rhs: Self) -> HermitianOperator<T> {
        HermitianOperator { mat: &self.mat - &rhs.mat }
    }
}

/// A Hermitian operator with unit trace and no negative eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    op: HermitianOperator<T>,
    dims: Dims,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(op: HermitianOperator<T>, dims: Dims) -> Result<Self> {
        if dims.total() != op.dim() {
            return Err(Error::DimensionMismatch { expected: op.dim(), actual: dims.total() });
        }
        let trace = op.trace();
        if (trace - T::one()).abs() > T::TRACE_TOL {
            return Err(Error::TraceNotOne { trace: trace.as_f64() });
        }
        let min = op.min_eigenvalue();
        if min < -T::PSD_TOL {
            return Err(Error::NotPositive { min_eigenvalue: min.as_f64() });
        }
        Ok(Self { op, dims })
    }

    pub fn maximally_mixed(dims: Dims) -> Self {
        let d = dims.total();
        Self { op: HermitianOperator::identity(d).scale(T::one() / T::from_usize_lossy(d)), dims }
    }

    pub fn pure(v: &UnitVector<T>, dims: Dims) -> Result<Self> {
        Self::new(HermitianOperator::projector(v), dims)
    }

    pub fn op(&self) -> &HermitianOperator<T> {
        &self.op
    }

    pub fn into_op(self) -> HermitianOperator<T> {
        self.op
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn min_eigenvalue(&self) -> T {
        self.op.min_eigenvalue()
    }

    /// `rho^{T_II}`
    pub fn partial_transpose(&self) -> Result<HermitianOperator<T>> {
        if self.dims.b < 2 {
            return Err(Error::SingleParty);
        }
        self.op.partial_transpose(self.dims)
    }

    /// Reduced state of the factor that is kept (the other is traced out).
    pub fn reduced(&self, keep: Subsystem) -> Self {
        let (traced, dims) = match keep {
            Subsystem::First => (Subsystem::Second, Dims { a: self.dims.a, b: 1 }),
            Subsystem::Second => (Subsystem::First, Dims { a: self.dims.b, b: 1 }),
        };
        let op = self.op.partial_trace(self.dims, traced).expect("dims checked on construction");
        Self { op, dims }
    }

    /// Product of the two reduced states.
    pub fn product_of_marginals(&self) -> HermitianOperator<T> {
        self.reduced(Subsystem::First).op.tensor(&self.reduced(Subsystem::Second).op)
    }
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector<T: Real> {
    amps: DVector<Complex<T>>,
}

impl<T: Real> UnitVector<T> {
    pub fn new(amps: DVector<Complex<T>>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::ZeroDimension);
        }
        let norm = amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if (norm - T::one()).abs() > T::NORM_TOL {
            return Err(Error::NotNormalized { norm: norm.as_f64() });
        }
        Ok(Self { amps })
    }

    pub fn normalize(amps: DVector<Complex<T>>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::ZeroDimension);
        }
        let norm = amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if norm <= T::zero() || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self { amps: amps.map(|z| z.unscale(norm)) })
    }

    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if k >= dim {
            return Err(Error::InvalidArgument(format!("basis index {k} out of range for dim {dim}")));
        }
        let mut amps = DVector::zeros(dim);
        amps[k] = Complex::new(T::one(), T::zero());
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex<T>> {
        &self.amps
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amps.dotc(&other.amps)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { amps: self.amps.kronecker(&other.amps) }
    }

    pub fn norm(&self) -> T {
        self.amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }
}
