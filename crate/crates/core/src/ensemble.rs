//! Continuous-ensemble representations of density operators.
//!
//! Operator integrals over the unit sphere (or the torus of product states)
//! are estimated by plain averaging over a [`SampleSet`], which realizes the
//! normalized measure. Every estimate carries a noise floor: the Monte Carlo
//! standard error of the estimate on the trace-norm scale.
//!
//! # Reduction order
//!
//! Sample contributions are summed sequentially inside fixed chunks of
//! [`REDUCTION_CHUNK`] consecutive samples, chunks are evaluated in parallel,
//! and the chunk sums are then added left to right. The result is
//! bit-identical for any number of worker threads.

use nalgebra::DMatrix;
use num_complex::Complex;
use rayon::prelude::*;

use crate::operator::{modulus, quadratic_form, DensityMatrix, Dims, HermitianOperator, Subsystem, UnitVector};
use crate::params::ln_ck;
use crate::sampling::{ln_haar_joint_moment, ln_haar_moment, SampleSet};
use crate::{Error, Real, Result};

/// Number of consecutive samples summed sequentially before chunk sums are
/// combined.
pub const REDUCTION_CHUNK: usize = 1024;

/// Exponents above `ln(MAX) - EXPONENT_MARGIN` abort the estimate.
pub const EXPONENT_MARGIN: f64 = 10.0;

// tolerance on (K+1) n p0 >= 1 and on the product-state check
const POSITIVITY_SLACK: f64 = 1e-9;
const PRODUCT_TOL: f64 = 1e-9;

/// Smallest integer `K >= max(1, 1/(n p0) - 1)`, so that `(K+1) n >= 1/p0`.
pub fn choose_k(p0: f64, n: usize) -> Result<u64> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if p0.is_nan() || p0 <= 0.0 {
        return Err(Error::RankDeficient { min_eigenvalue: p0 });
    }
    if p0 > 1.0 / n as f64 + POSITIVITY_SLACK {
        return Err(Error::InvalidArgument(format!("p0 = {p0} exceeds 1/n for n = {n}")));
    }
    let raw = 1.0 / (n as f64 * p0) - 1.0;
    Ok((raw - POSITIVITY_SLACK).ceil().max(1.0) as u64)
}

/// An operator-valued Monte Carlo estimate.
#[derive(Clone, Debug)]
pub struct OperatorEstimate<T: Real> {
    pub estimate: HermitianOperator<T>,
    /// `sqrt(d * sum_ij SE_ij^2)`, a trace-norm-scale standard error.
    pub noise_floor: T,
}

/// A scalar Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// The smeared spectral decomposition of a full-rank single-party state:
/// `mu(phi) = C_K sum_k (p_k - 1/((K+1)n)) |<e_k|phi>|^{2Kn}`.
#[derive(Clone, Debug)]
pub struct SmearedSpectrum<T: Real> {
    n: usize,
    k: u64,
    probabilities: Vec<T>,
    eigenvectors: Vec<UnitVector<T>>,
    coefficients: Vec<T>,
    ln_ck: f64,
}

impl<T: Real> SmearedSpectrum<T> {
    pub fn new(k: u64, probabilities: Vec<T>, eigenvectors: Vec<UnitVector<T>>) -> Result<Self> {
        let n = probabilities.len();
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        if k == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if eigenvectors.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: eigenvectors.len() });
        }
        if let Some(v) = eigenvectors.iter().find(|v| v.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, actual: v.dim() });
        }
        for i in 0..n {
            for j in i + 1..n {
                let overlap = modulus(eigenvectors[i].inner(&eigenvectors[j]));
                if overlap > T::ACCUMULATION_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "eigenvectors {i} and {j} are not orthogonal (overlap {overlap:e})"
                    )));
                }
            }
        }
        let total = probabilities.iter().fold(T::zero(), |a, &p| a + p);
        if (total - T::one()).abs() > T::TRACE_TOL {
            return Err(Error::TraceNotOne { trace: total.as_f64() });
        }
        let p0 = probabilities.iter().fold(T::INFINITY, |a, &p| a.min(p)).as_f64();
        if p0 <= 0.0 {
            return Err(Error::RankDeficient { min_eigenvalue: p0 });
        }
        if ((k + 1) as f64) * (n as f64) * p0 < 1.0 - POSITIVITY_SLACK {
            return Err(Error::KTooSmall { k, n, p0 });
        }
        let offset = T::one() / T::c(((k + 1) as f64) * n as f64);
        let coefficients = probabilities.iter().map(|&p| (p - offset).max(T::zero())).collect();
        Ok(Self { n, k, probabilities, eigenvectors, coefficients, ln_ck: ln_ck(k, n) })
    }

    /// Decomposes a single-party state (`dims.b == 1`).
    pub fn from_density(rho: &DensityMatrix<T>, k: u64) -> Result<Self> {
        if !rho.dims().is_single() {
            return Err(Error::InvalidArgument("smeared spectrum needs a single-party state".into()));
        }
        let (probabilities, eigenvectors): (Vec<T>, Vec<UnitVector<T>>) = rho.op().eigen().into_iter().unzip();
        let p0 = probabilities[0];
        if p0 <= T::zero() {
            return Err(Error::RankDeficient { min_eigenvalue: p0.as_f64() });
        }
        // renormalize away eigensolver rounding
        let total = probabilities.iter().fold(T::zero(), |a, &p| a + p);
        let probabilities = probabilities.into_iter().map(|p| p / total).collect();
        Self::new(k, probabilities, eigenvectors)
    }

    /// Decomposition with `K = choose_k(p0, n)`.
    pub fn with_chosen_k(rho: &DensityMatrix<T>) -> Result<Self> {
        let k = choose_k(rho.min_eigenvalue().as_f64(), rho.dim())?;
        Self::from_density(rho, k)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn probabilities(&self) -> &[T] {
        &self.probabilities
    }

    pub fn eigenvectors(&self) -> &[UnitVector<T>] {
        &self.eigenvectors
    }

    /// `p_k - 1/((K+1)n)`, all nonnegative.
    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    /// `ln C_K`
    pub fn ln_scale(&self) -> f64 {
        self.ln_ck
    }

    /// `ln mu(phi)`, combining the factorial prefactor with the overlap powers
    /// before anything is exponentiated.
    pub fn ln_density(&self, phi: &UnitVector<T>) -> Result<f64> {
        if phi.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, actual: phi.dim() });
        }
        let power = (self.k * self.n as u64) as f64;
        let terms: Vec<f64> = self
            .eigenvectors
            .iter()
            .zip(&self.coefficients)
            .filter_map(|(e, &c)| {
                let overlap = e.inner(phi).norm_sqr().as_f64();
                let c = c.as_f64();
                (c > 0.0 && overlap > 0.0).then(|| c.ln() + power * overlap.ln())
            })
            .collect();
        Ok(self.ln_ck + log_sum_exp(&terms))
    }

    pub fn density(&self, phi: &UnitVector<T>) -> Result<T> {
        let ln_mu = self.ln_density(phi)?;
        if ln_mu > T::LN_MAX.as_f64() - EXPONENT_MARGIN {
            return Err(Error::DensityOverflow { k: self.k, ln_mu });
        }
        Ok(T::c(ln_mu.exp()))
    }

    /// `int mu dS` evaluated exactly with the Haar moment
    /// `E|<e|phi>|^{2m} = m!(n-1)!/(m+n-1)!`.
    pub fn normalization_closed(&self) -> f64 {
        let moment = ln_haar_moment(self.n, self.k * self.n as u64);
        self.coefficients.iter().map(|c| c.as_f64() * (self.ln_ck + moment).exp()).sum()
    }

    /// Exact `Var(mu)` under the Haar measure, from the joint overlap moments
    /// of orthonormal eigenvectors. The standard error of a `N`-sample mean
    /// is `sqrt(variance / N)`; for large `K` the density is sharply peaked
    /// and sample estimates of this spread run low.
    pub fn variance_closed(&self) -> f64 {
        let m = self.k * self.n as u64;
        let ln_c: Vec<f64> = self.coefficients.iter().map(|c| c.as_f64().ln()).collect();
        let mut terms = Vec::with_capacity(ln_c.len() * ln_c.len());
        for (i, &ci) in ln_c.iter().enumerate() {
            for (j, &cj) in ln_c.iter().enumerate() {
                let moment = if i == j { ln_haar_moment(self.n, 2 * m) } else { ln_haar_joint_moment(self.n, m, m) };
                terms.push(2.0 * self.ln_ck + ci + cj + moment);
            }
        }
        let second = log_sum_exp(&terms).exp();
        let first = self.normalization_closed();
        (second - first * first).max(0.0)
    }

    /// Log of the bounds `C_K n^{1-Kn} (p0 - 1/((K+1)n)) <= mu <= C_K (p1 - 1/((K+1)n))`.
    /// The lower bound is `-inf` when the smallest coefficient vanishes.
    pub fn ln_density_bounds(&self) -> (f64, f64) {
        let c_min = self.coefficients.iter().fold(f64::INFINITY, |a, c| a.min(c.as_f64()));
        let c_max = self.coefficients.iter().fold(0.0f64, |a, c| a.max(c.as_f64()));
        let m = (self.k * self.n as u64) as f64;
        let lower = self.ln_ck + (1.0 - m) * (self.n as f64).ln() + c_min.ln();
        (lower, self.ln_ck + c_max.ln())
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

struct Partial<T: Real> {
    sum: Vec<Complex<T>>,
    sum_w2: T,
}

fn accumulate_chunk<T: Real>(s: &SampleSet<T>, weights: &[T], range: std::ops::Range<usize>) -> Partial<T> {
    let d = s.dims().total();
    let mut sum = vec![Complex::new(T::zero(), T::zero()); d * d];
    let mut sum_w2 = T::zero();
    for i in range {
        let w = weights[i];
        let v = s.product_vector(i);
        sum_w2 += w * w;
        for r in 0..d {
            let wr = v[r].scale(w);
            for c in r..d {
                sum[r * d + c] += wr * v[c].conj();
            }
        }
    }
    Partial { sum, sum_w2 }
}

/// `scale * mean_i weights[i] |v_i><v_i|` with its noise floor.
fn weighted_projector_mean<T: Real>(s: &SampleSet<T>, weights: &[T], scale: T) -> OperatorEstimate<T> {
    let n = s.len();
    let d = s.dims().total();
    let chunks = n.div_ceil(REDUCTION_CHUNK);
    let partials: Vec<Partial<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| accumulate_chunk(s, weights, c * REDUCTION_CHUNK..((c + 1) * REDUCTION_CHUNK).min(n)))
        .collect();
    let mut total = Partial { sum: vec![Complex::new(T::zero(), T::zero()); d * d], sum_w2: T::zero() };
    for p in partials {
        for (t, x) in total.sum.iter_mut().zip(&p.sum) {
            *t += *x;
        }
        total.sum_w2 += p.sum_w2;
    }

    let count = T::from_usize_lossy(n);
    let mut mat = DMatrix::from_fn(d, d, |r, c| {
        if r <= c {
            total.sum[r * d + c].unscale(count)
        } else {
            total.sum[c * d + r].unscale(count).conj()
        }
    });
    let unit_mean = HermitianOperator::from_accumulated(mat.clone());
    // Sum_ij |w P_ij|^2 = w^2 because |v| = 1, so the entrywise variances
    // total mean(w^2) - ||mean||_F^2.
    let noise_floor = if n < 2 {
        T::INFINITY
    } else {
        let fro2 = unit_mean.frobenius_norm().powi(2);
        let var = (total.sum_w2 / count - fro2).max(T::zero());
        scale * (T::from_usize_lossy(d) * var / T::from_usize_lossy(n - 1)).sqrt()
    };
    mat.iter_mut().for_each(|z| *z = z.scale(scale));
    OperatorEstimate { estimate: HermitianOperator::from_accumulated(mat), noise_floor }
}

fn sample_weights<T, F>(s: &SampleSet<T>, f: F) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..s.len()).into_par_iter().map(f).collect()
}

/// `<phi (x) phi'| X |phi (x) phi'>` for every sample.
pub fn log_weights<T: Real>(x: &HermitianOperator<T>, s: &SampleSet<T>) -> Result<Vec<T>> {
    let d = s.dims().total();
    if x.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: x.dim() });
    }
    sample_weights(s, |i| Ok(quadratic_form(x.matrix(), s.product_vector(i)).re))
}

/// Monte Carlo estimate of `int e^{<phi|X|phi>} |phi><phi| dS` over the torus.
///
/// Weights are shifted by the largest exponent before summation, so the only
/// overflow possible is in the result itself; exponents beyond
/// `ln(MAX) - EXPONENT_MARGIN` are reported as [`Error::ExponentOverflow`].
pub fn estimate_image<T: Real>(x: &HermitianOperator<T>, s: &SampleSet<T>) -> Result<OperatorEstimate<T>> {
    let exponents = log_weights(x, s)?;
    let max = exponents.iter().copied().fold(-T::INFINITY, |a, e| a.max(e));
    if !max.is_finite() || max > T::LN_MAX - T::c(EXPONENT_MARGIN) {
        return Err(Error::ExponentOverflow { max_exponent: max.as_f64() });
    }
    let weights: Vec<T> = exponents.par_iter().map(|&e| (e - max).exp()).collect();
    Ok(weighted_projector_mean(s, &weights, max.exp()))
}

/// Monte Carlo reconstruction `int mu(phi) |phi><phi| dS` of a full-rank state.
///
/// Single-party states (`dims.b == 1`) need a sample set with dims `(n, 1)`.
/// Bipartite states must be products of their marginals; they are rebuilt
/// on the torus with the product density `mu_A(phi) mu_B(phi')`.
pub fn reconstruct<T: Real>(rho: &DensityMatrix<T>, k: u64, s: &SampleSet<T>) -> Result<OperatorEstimate<T>> {
    if s.dims() != rho.dims() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), actual: s.dims().total() });
    }
    let min = rho.min_eigenvalue();
    if min <= T::zero() {
        return Err(Error::RankDeficient { min_eigenvalue: min.as_f64() });
    }
    let dims = rho.dims();
    if dims.is_single() {
        let spec = SmearedSpectrum::from_density(rho, k)?;
        let weights = sample_weights(s, |i| spec.density(&s.samples()[i].phi))?;
        return Ok(weighted_projector_mean(s, &weights, T::one()));
    }
    let gap = (rho.op() - &rho.product_of_marginals()).trace_norm().as_f64();
    if gap > PRODUCT_TOL {
        return Err(Error::NotProduct { gap });
    }
    let spec_a = SmearedSpectrum::from_density(&rho.reduced(Subsystem::First), k)?;
    let spec_b = SmearedSpectrum::from_density(&rho.reduced(Subsystem::Second), k)?;
    let weights = sample_weights(s, |i| {
        let p = &s.samples()[i];
        Ok(spec_a.density(&p.phi)? * spec_b.density(&p.phi_prime)?)
    })?;
    Ok(weighted_projector_mean(s, &weights, T::one()))
}

/// Monte Carlo estimate of `int mu dS` for a single-party spectrum, using the
/// first factor of each sample.
pub fn density_mean<T: Real>(spec: &SmearedSpectrum<T>, s: &SampleSet<T>) -> Result<ScalarEstimate> {
    if s.dims().a != spec.n() {
        return Err(Error::DimensionMismatch { expected: spec.n(), actual: s.dims().a });
    }
    let values: Vec<f64> = (0..s.len())
        .into_par_iter()
        .map(|i| spec.density(&s.samples()[i].phi).map(|v| v.as_f64()))
        .collect::<Result<_>>()?;
    Ok(scalar_estimate(&values))
}

fn scalar_estimate(values: &[f64]) -> ScalarEstimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    ScalarEstimate { mean, std_error: (var / n).sqrt() }
}

/// `int <phi|A|phi> |phi><phi| dS = (A + I tr A) / (n(n+1))`
pub fn moment_single_closed<T: Real>(a: &HermitianOperator<T>) -> HermitianOperator<T> {
    let n = a.dim();
    a.shift(a.trace()).scale(T::one() / T::from_usize_lossy(n * (n + 1)))
}

/// `int int <phi|Y|phi> |phi><phi| dS dS'
///   = (Y + I (x) tr_I Y + tr_II Y (x) I + tr Y I) / (n^2 (n+1)^2)`
pub fn moment_bipartite_closed<T: Real>(y: &HermitianOperator<T>, dims: Dims) -> Result<HermitianOperator<T>> {
    let n = dims.equal_factor()?;
    let eye = HermitianOperator::identity(n);
    let left = eye.tensor(&y.partial_trace(dims, Subsystem::First)?);
    let right = y.partial_trace(dims, Subsystem::Second)?.tensor(&eye);
    let sum = (&(y + &left) + &right).shift(y.trace());
    Ok(sum.scale(T::one() / T::from_usize_lossy(n * n * (n + 1) * (n + 1))))
}

/// Monte Carlo estimate of `int <v|A|v> |v><v| dS` over the sample set's
/// product vectors. With dims `(n, 1)` this is the single-party integral.
pub fn moment_estimate<T: Real>(a: &HermitianOperator<T>, s: &SampleSet<T>) -> Result<OperatorEstimate<T>> {
    let weights = log_weights(a, s)?;
    Ok(weighted_projector_mean(s, &weights, T::one()))
}
