use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating point scalar the operator algebra is generic over: `f32` or `f64`.
///
/// Tolerances are per type. The `f64` values are the contract values; the
/// `f32` ones are loosened to what single precision can hold.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + FloatConst + Debug + Display + LowerExp + Send + Sync
{
    /// Per-entry absolute tolerance for `a[i][j] == conj(a[j][i])`.
    const HERMITIAN_TOL: Self;
    /// Post-accumulation Hermiticity check, before re-symmetrizing.
    const ACCUMULATION_TOL: Self;
    /// Unit trace tolerance for density matrices.
    const TRACE_TOL: Self;
    /// Smallest eigenvalue still accepted as positive semidefinite (negated).
    const PSD_TOL: Self;
    /// Unit norm tolerance.
    const NORM_TOL: Self;
    /// Largest imaginary part tolerated in `<v|A|v>`.
    const EXPECTATION_IM_TOL: Self;
    /// `ln` of the largest finite value.
    const LN_MAX: Self;
    const INFINITY: Self;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Literal conversion from `f64`.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f64 {
    const HERMITIAN_TOL: Self = 1e-12;
    const ACCUMULATION_TOL: Self = 1e-10;
    const TRACE_TOL: Self = 1e-10;
    const PSD_TOL: Self = 1e-10;
    const NORM_TOL: Self = 1e-12;
    const EXPECTATION_IM_TOL: Self = 1e-10;
    const LN_MAX: Self = 709.782_712_893_384;
    const INFINITY: Self = f64::INFINITY;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f32 {
    const HERMITIAN_TOL: Self = 1e-5;
    const ACCUMULATION_TOL: Self = 1e-4;
    const TRACE_TOL: Self = 1e-5;
    const PSD_TOL: Self = 1e-5;
    const NORM_TOL: Self = 1e-5;
    const EXPECTATION_IM_TOL: Self = 1e-4;
    const LN_MAX: Self = 88.722_84;
    const INFINITY: Self = f32::INFINITY;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}
