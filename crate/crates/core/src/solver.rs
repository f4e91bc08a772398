//! Fixed-point iteration of `F(X) = X + lambda (rho - E(X))`, where
//! `E(X) = int e^{<phi|X|phi>} |phi><phi| dS` over product states.
//!
//! Starting from `X = 0`, the iteration stops when the residual
//! `||rho - E(X)||_1` drops to `kappa` (separable within kappa), when
//! `||X||_1` leaves the bound (entanglement signal), or when the step budget
//! runs out (inconclusive).
//!
//! Practical mode additionally renormalizes the trace before every step:
//! `E(X + cI) = e^c E(X)`, so shifting `X` by `-ln tr E(X)` makes
//! `tr E(X) = 1` exactly. A fixed point has `tr E(X) = tr rho = 1` anyway,
//! so the shift does not move it, and it removes the stiffest direction of
//! the Jacobian (eigenvalue `1/n^2` along the identity) which otherwise
//! limits the usable step size.

use serde::{Deserialize, Serialize};

use crate::ensemble::{estimate_image, log_weights, OperatorEstimate};
use crate::operator::{DensityMatrix, HermitianOperator};
use crate::params::paper_params;
use crate::sampling::{make_sample_set, SampleSet};
use crate::{Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// `lambda`, bound and step budget taken verbatim from
    /// [`PaperParams`](crate::params::PaperParams).
    Paper,
    Practical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStrategy {
    /// One sample set for the whole run, which makes `F` deterministic.
    Fixed,
    /// A new sample set every step.
    Fresh,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    pub kappa: T,
    pub mode: StepMode,
    /// Practical step size; `None` selects [`default_practical_lambda`].
    pub lambda: Option<T>,
    pub sample_count: usize,
    pub sample_strategy: SampleStrategy,
    pub max_iters: usize,
    /// Trace-norm bound on `X`; `None` selects `50 n^2` in practical mode.
    pub bound: Option<T>,
    pub seed: u64,
    /// Halve `lambda` after `patience` steps without a new best residual.
    pub adaptive: bool,
    pub patience: usize,
    /// Shift `X` so that `tr E(X) = 1` before each step.
    pub renormalize: bool,
}

pub const DEFAULT_SAMPLE_COUNT: usize = 100_000;
pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_PATIENCE: usize = 5;

impl<T: Real> SolverConfig<T> {
    pub fn practical(kappa: T) -> Self {
        Self {
            kappa,
            mode: StepMode::Practical,
            lambda: None,
            sample_count: DEFAULT_SAMPLE_COUNT,
            sample_strategy: SampleStrategy::Fixed,
            max_iters: DEFAULT_MAX_ITERS,
            bound: None,
            seed: 0,
            adaptive: true,
            patience: DEFAULT_PATIENCE,
            renormalize: true,
        }
    }

    pub fn paper(kappa: T) -> Self {
        Self { mode: StepMode::Paper, adaptive: false, renormalize: false, ..Self::practical(kappa) }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if !(self.kappa > T::zero() && self.kappa < T::one()) {
            return bad("kappa must lie in (0, 1)");
        }
        if self.lambda.is_some_and(|l| l <= T::zero()) {
            return bad("lambda must be positive");
        }
        if self.bound.is_some_and(|b| b <= T::zero()) {
            return bad("bound must be positive");
        }
        if self.sample_count == 0 {
            return bad("sample count must be at least 1");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        Ok(())
    }
}

/// One row of the iteration trace, describing `X_step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<T> {
    pub step: usize,
    /// `||rho - E(X_step)||_1`
    pub residual: T,
    /// `||X_step||_1`
    pub x_norm: T,
    /// Step size used to produce `X_{step+1}`.
    pub lambda: T,
    pub noise_floor: T,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace<T> {
    records: Vec<StepRecord<T>>,
}

impl<T: Real> IterationTrace<T> {
    pub fn records(&self) -> &[StepRecord<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&StepRecord<T>> {
        self.records.last()
    }

    /// Running minimum of the residual column.
    pub fn best_residuals(&self) -> Vec<T> {
        self.records
            .iter()
            .scan(T::INFINITY, |best, r| {
                *best = best.min(r.residual);
                Some(*best)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    SeparableWithinKappa,
    EntangledSignal,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// The tolerance is below twice the Monte Carlo noise floor.
    KappaBelowNoiseFloor { kappa: f64, noise_floor: f64 },
    /// `<phi|X|phi>` left the float range; reported as an entanglement
    /// signal (the iterate escaped every reasonable domain).
    ExponentOverflow { step: usize, max_exponent: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict<T> {
    pub outcome: Outcome,
    pub final_residual: T,
    pub final_x_norm: T,
    pub steps_used: usize,
    pub noise_floor: T,
    pub warnings: Vec<Warning>,
}

/// Result of [`run`]: the verdict, the full trace and the last iterate.
#[derive(Clone, Debug)]
pub struct Run<T: Real> {
    pub verdict: Verdict<T>,
    pub trace: IterationTrace<T>,
    pub solution: HermitianOperator<T>,
}

#[derive(Clone, Debug)]
pub struct StepOutput<T: Real> {
    /// `F(x)`
    pub next: HermitianOperator<T>,
    /// `||rho - E(x)||_1`
    pub residual: T,
    pub noise_floor: T,
}

/// `lambda = 2 n^2 (n+1)^2 / (n + 2)`.
///
/// At `X = 0` the Jacobian of `E` restricted to traceless directions has
/// eigenvalues `1/(n^2 (n+1)^2)` and `1/(n^2 (n+1))`; this step size maps
/// both to contraction factors of equal magnitude `n / (n + 2)`.
pub fn default_practical_lambda(n: usize) -> f64 {
    let n = n as f64;
    2.0 * n * n * (n + 1.0) * (n + 1.0) / (n + 2.0)
}

fn check_shapes<T: Real>(x: &HermitianOperator<T>, rho: &DensityMatrix<T>, s: &SampleSet<T>) -> Result<()> {
    if s.dims() != rho.dims() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), actual: s.dims().total() });
    }
    if x.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), actual: x.dim() });
    }
    Ok(())
}

fn step_from_estimate<T: Real>(
    x: &HermitianOperator<T>,
    rho: &DensityMatrix<T>,
    estimate: &HermitianOperator<T>,
    lambda: T,
) -> HermitianOperator<T> {
    let update = (rho.op() - estimate).scale(lambda);
    HermitianOperator::from_accumulated((x + &update).into_matrix())
}

/// One application of `F` with the integral estimated on `s`.
pub fn apply_f<T: Real>(
    x: &HermitianOperator<T>,
    rho: &DensityMatrix<T>,
    lambda: T,
    s: &SampleSet<T>,
) -> Result<StepOutput<T>> {
    check_shapes(x, rho, s)?;
    let est = estimate_image(x, s)?;
    let residual = (rho.op() - &est.estimate).trace_norm();
    Ok(StepOutput { next: step_from_estimate(x, rho, &est.estimate, lambda), residual, noise_floor: est.noise_floor })
}

/// Shifts `x` by `-ln tr E(x)` and rescales the estimate to match.
pub fn renormalize_trace<T: Real>(
    x: &HermitianOperator<T>,
    est: &OperatorEstimate<T>,
) -> (HermitianOperator<T>, OperatorEstimate<T>) {
    let shift = -est.estimate.trace().ln();
    let factor = shift.exp();
    (
        x.shift(shift),
        OperatorEstimate { estimate: est.estimate.scale(factor), noise_floor: est.noise_floor * factor },
    )
}

/// `(1 - kappa) rho + kappa I / d`; the smallest eigenvalue becomes at
/// least `kappa / d`.
pub fn regularize<T: Real>(rho: &DensityMatrix<T>, kappa: T) -> Result<DensityMatrix<T>> {
    if !(kappa > T::zero() && kappa < T::one()) {
        return Err(Error::InvalidArgument("kappa must lie in (0, 1)".into()));
    }
    let d = T::from_usize_lossy(rho.dim());
    let op = rho.op().scale(T::one() - kappa).shift(kappa / d);
    DensityMatrix::new(op, rho.dims())
}

/// `max_i |<phi_i|X|phi_i>|` over a sample set.
pub fn max_abs_log_weight<T: Real>(x: &HermitianOperator<T>, s: &SampleSet<T>) -> Result<T> {
    Ok(log_weights(x, s)?.into_iter().fold(T::zero(), |m, w| m.max(w.abs())))
}

fn fresh_seed(seed: u64, step: usize) -> u64 {
    seed.wrapping_add((step as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn run<T: Real>(rho: &DensityMatrix<T>, cfg: &SolverConfig<T>) -> Result<Run<T>> {
    run_with_sink(rho, cfg, |_| Ok(()))
}

/// Runs the iteration, handing every trace row to `sink` as soon as it is
/// produced.
pub fn run_with_sink<T, F>(rho: &DensityMatrix<T>, cfg: &SolverConfig<T>, mut sink: F) -> Result<Run<T>>
where
    T: Real,
    F: FnMut(&StepRecord<T>) -> std::io::Result<()>,
{
    cfg.validate()?;
    let dims = rho.dims();
    let n = dims.equal_factor()?;
    if n < 2 {
        return Err(Error::InvalidArgument("solver needs factor dimension n >= 2".into()));
    }

    let (mut lambda, bound, max_iters) = match cfg.mode {
        StepMode::Paper => {
            let p = paper_params(n, cfg.kappa.as_f64())?;
            let lambda = p.lambda().ok_or(Error::LambdaUnderflow { ln_lambda: p.ln_lambda })?;
            (T::c(lambda), T::c(p.domain_bound), p.n_steps.max(1) as usize)
        }
        StepMode::Practical => (
            cfg.lambda.unwrap_or_else(|| T::c(default_practical_lambda(n))),
            cfg.bound.unwrap_or_else(|| T::from_usize_lossy(50 * n * n)),
            cfg.max_iters,
        ),
    };

    let fixed = match cfg.sample_strategy {
        SampleStrategy::Fixed => Some(make_sample_set(cfg.seed, cfg.sample_count, dims)?),
        SampleStrategy::Fresh => None,
    };

    let mut x = HermitianOperator::zeros(rho.dim());
    let mut trace = IterationTrace { records: Vec::new() };
    let mut warnings = Vec::new();
    let mut best = T::INFINITY;
    let mut stall = 0;

    for step in 0..=max_iters {
        let fresh;
        let s = match &fixed {
            Some(s) => s,
            None => {
                fresh = make_sample_set(fresh_seed(cfg.seed, step), cfg.sample_count, dims)?;
                &fresh
            }
        };
        let est = match estimate_image(&x, s) {
            Ok(est) => est,
            Err(Error::ExponentOverflow { max_exponent }) => {
                warnings.push(Warning::ExponentOverflow { step, max_exponent });
                let last = trace.last().copied();
                let verdict = Verdict {
                    outcome: Outcome::EntangledSignal,
                    final_residual: last.map_or(T::INFINITY, |r| r.residual),
                    final_x_norm: x.trace_norm(),
                    steps_used: step,
                    noise_floor: last.map_or(T::INFINITY, |r| r.noise_floor),
                    warnings,
                };
                return Ok(Run { verdict, trace, solution: x });
            }
            Err(e) => return Err(e),
        };
        let est = if cfg.renormalize {
            let (shifted, est) = renormalize_trace(&x, &est);
            x = shifted;
            est
        } else {
            est
        };

        let residual = (rho.op() - &est.estimate).trace_norm();
        let x_norm = x.trace_norm();
        if cfg.adaptive {
            if residual < best {
                best = residual;
                stall = 0;
            } else {
                stall += 1;
                if stall >= cfg.patience.max(1) {
                    lambda /= T::c(2.0);
                    stall = 0;
                }
            }
        }
        let record = StepRecord { step, residual, x_norm, lambda, noise_floor: est.noise_floor };
        sink(&record)?;
        trace.records.push(record);

        let outcome = if residual <= cfg.kappa {
            if cfg.kappa < T::c(2.0) * est.noise_floor {
                warnings.push(Warning::KappaBelowNoiseFloor {
                    kappa: cfg.kappa.as_f64(),
                    noise_floor: est.noise_floor.as_f64(),
                });
            }
            Some(Outcome::SeparableWithinKappa)
        } else if x_norm > bound {
            Some(Outcome::EntangledSignal)
        } else if step == max_iters {
            Some(Outcome::Inconclusive)
        } else {
            None
        };
        if let Some(outcome) = outcome {
            let verdict = Verdict {
                outcome,
                final_residual: residual,
                final_x_norm: x_norm,
                steps_used: step,
                noise_floor: est.noise_floor,
                warnings,
            };
            return Ok(Run { verdict, trace, solution: x });
        }
        x = step_from_estimate(&x, rho, &est.estimate, lambda);
    }
    unreachable!("the last step always yields an outcome")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::moment_bipartite_closed;
    use crate::operator::{Dims, UnitVector};
    use approx::assert_abs_diff_eq;

    fn dims2() -> Dims {
        Dims::square(2).unwrap()
    }

    fn quick(kappa: f64) -> SolverConfig<f64> {
        SolverConfig { sample_count: 20_000, ..SolverConfig::practical(kappa) }
    }

    #[test]
    fn apply_f_at_the_maximally_mixed_fixed_point() {
        let rho = DensityMatrix::<f64>::maximally_mixed(dims2());
        let s = make_sample_set(3, 20_000, dims2()).unwrap();
        let lambda = 18.0;
        let out = apply_f(&HermitianOperator::zeros(4), &rho, lambda, &s).unwrap();
        assert!(out.residual <= 3.0 * out.noise_floor);
        assert!(out.next.trace_norm() <= lambda * 3.0 * out.noise_floor);
    }

    #[test]
    fn apply_f_with_zero_step_is_identity() {
        let rho = DensityMatrix::<f64>::maximally_mixed(dims2());
        let s = make_sample_set(3, 1000, dims2()).unwrap();
        let x = HermitianOperator::from_real_diagonal(&[0.1, -0.3, 0.2, 0.0]);
        assert_eq!(apply_f(&x, &rho, 0.0, &s).unwrap().next, x);
    }

    #[test]
    fn apply_f_is_deterministic() {
        let rho = DensityMatrix::<f64>::maximally_mixed(dims2());
        let s = make_sample_set(3, 5000, dims2()).unwrap();
        let x = HermitianOperator::from_real_diagonal(&[0.1, -0.3, 0.2, 0.0]);
        let a = apply_f(&x, &rho, 7.0, &s).unwrap();
        let b = apply_f(&x, &rho, 7.0, &s).unwrap();
        assert_eq!(a.next, b.next);
        assert_eq!(a.residual.to_bits(), b.residual.to_bits());
    }

    #[test]
    fn apply_f_checks_dimensions() {
        let rho = DensityMatrix::<f64>::maximally_mixed(dims2());
        let s = make_sample_set(3, 10, Dims::square(3).unwrap()).unwrap();
        assert!(matches!(
            apply_f(&HermitianOperator::zeros(4), &rho, 1.0, &s),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn regularize_examples() {
        let mixed = DensityMatrix::<f64>::maximally_mixed(dims2());
        let r = regularize(&mixed, 0.3).unwrap();
        assert_abs_diff_eq!((r.op() - mixed.op()).frobenius_norm(), 0.0, epsilon = 1e-15);

        let pure = DensityMatrix::pure(&UnitVector::basis(4, 0).unwrap(), dims2()).unwrap();
        let r = regularize(&pure, 0.1).unwrap();
        assert_abs_diff_eq!(r.min_eigenvalue(), 0.025, epsilon = 1e-12);
        assert_abs_diff_eq!(r.op().trace(), 1.0, epsilon = 1e-14);
        assert!(regularize(&pure, 1.0).is_err());
    }

    #[test]
    fn default_lambda_examples() {
        assert_eq!(default_practical_lambda(2), 18.0);
        assert_abs_diff_eq!(default_practical_lambda(3), 57.6, epsilon = 1e-12);
    }

    #[test]
    fn one_linearized_step_contracts_traceless_directions() {
        // at rho = I/n^2, E(eps Y) ~ I/n^2 + eps M(Y), so a step maps eps Y to
        // eps (Y - lambda M(Y)); the identity part is removed by renormalization
        for n in [2usize, 3] {
            let dims = Dims::square(n).unwrap();
            let lambda = default_practical_lambda(n);
            let d = n * n;
            for seed in 0..5u64 {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let g = nalgebra::DMatrix::from_fn(d, d, |_, _| {
                    num_complex::Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                });
                let y = HermitianOperator::new((&g + g.adjoint()).scale(0.5)).unwrap();
                let y = y.shift(-y.trace() / d as f64);
                let stepped = &y - &moment_bipartite_closed(&y, dims).unwrap().scale(lambda);
                let ratio = stepped.frobenius_norm() / y.frobenius_norm();
                assert!(ratio < 1.0, "n = {n}: ratio {ratio}");
                assert!(ratio <= n as f64 / (n as f64 + 2.0) + 1e-12);
            }
        }
    }

    #[test]
    fn maximally_mixed_converges_immediately() {
        let rho = DensityMatrix::<f64>::maximally_mixed(dims2());
        let run = run(&rho, &quick(0.05)).unwrap();
        assert_eq!(run.verdict.outcome, Outcome::SeparableWithinKappa);
        assert!(run.verdict.steps_used <= 3);
        assert!(run.verdict.final_x_norm <= 0.5);
    }

    #[test]
    fn paper_mode_refuses_underflowing_lambda() {
        let rho = DensityMatrix::<f64>::maximally_mixed(dims2());
        let err = run(&rho, &SolverConfig::paper(0.1)).unwrap_err();
        assert!(matches!(err, Error::LambdaUnderflow { .. }));
    }

    #[test]
    fn paper_mode_runs_when_lambda_is_representable() {
        // kappa = 0.9, n = 2: ln lambda ~ -427, representable but useless
        let rho = DensityMatrix::<f64>::maximally_mixed(dims2());
        let cfg = SolverConfig { sample_count: 2000, ..SolverConfig::paper(0.9) };
        let run = run(&rho, &cfg).unwrap();
        assert_eq!(run.verdict.outcome, Outcome::SeparableWithinKappa);
    }

    #[test]
    fn config_validation() {
        let rho = DensityMatrix::<f64>::maximally_mixed(dims2());
        for cfg in [
            SolverConfig { kappa: 0.0, ..quick(0.1) },
            SolverConfig { lambda: Some(-1.0), ..quick(0.1) },
            SolverConfig { sample_count: 0, ..quick(0.1) },
            SolverConfig { max_iters: 0, ..quick(0.1) },
        ] {
            assert!(matches!(run(&rho, &cfg), Err(Error::InvalidArgument(_))));
        }
        let unequal = DensityMatrix::<f64>::maximally_mixed(Dims::new(2, 3).unwrap());
        assert!(matches!(run(&unequal, &quick(0.1)), Err(Error::UnequalFactors { .. })));
    }

    #[test]
    fn sink_sees_every_row_in_order() {
        let rho = regularize(&DensityMatrix::pure(&UnitVector::basis(4, 1).unwrap(), dims2()).unwrap(), 0.2).unwrap();
        let mut seen = Vec::new();
        let run = run_with_sink(&rho, &SolverConfig { max_iters: 5, ..quick(0.001) }, |r| {
            seen.push(*r);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen.as_slice(), run.trace.records());
        for (i, r) in seen.iter().enumerate() {
            assert_eq!(r.step, i);
        }
    }

    #[test]
    fn sink_errors_abort_the_run() {
        let rho = DensityMatrix::<f64>::maximally_mixed(dims2());
        let err = run_with_sink(&rho, &quick(0.05), |_| Err(std::io::Error::other("disk full"))).unwrap_err();
        assert!(matches!(err, Error::Sink(_)));
    }

    #[test]
    fn fresh_sampling_converges_for_a_product_state() {
        let v = UnitVector::basis(2, 0).unwrap().tensor(&UnitVector::basis(2, 1).unwrap());
        let rho = regularize(&DensityMatrix::pure(&v, dims2()).unwrap(), 0.5).unwrap();
        let cfg = SolverConfig { sample_strategy: SampleStrategy::Fresh, ..quick(0.05) };
        let run = run(&rho, &cfg).unwrap();
        assert_eq!(run.verdict.outcome, Outcome::SeparableWithinKappa);
    }

    #[test]
    fn huge_step_overflows_into_entangled_signal() {
        let v = UnitVector::basis(2, 0).unwrap().tensor(&UnitVector::basis(2, 1).unwrap());
        let rho = regularize(&DensityMatrix::pure(&v, dims2()).unwrap(), 0.1).unwrap();
        let cfg = SolverConfig { lambda: Some(1e5), bound: Some(1e9), adaptive: false, ..quick(0.01) };
        let run = run(&rho, &cfg).unwrap();
        assert_eq!(run.verdict.outcome, Outcome::EntangledSignal);
        assert!(run.verdict.warnings.iter().any(|w| matches!(w, Warning::ExponentOverflow { .. })));
    }

    #[test]
    fn single_precision_run() {
        let rho = DensityMatrix::<f32>::maximally_mixed(dims2());
        let cfg = SolverConfig { sample_count: 5000, ..SolverConfig::practical(0.1f32) };
        assert_eq!(run(&rho, &cfg).unwrap().verdict.outcome, Outcome::SeparableWithinKappa);
    }
}
