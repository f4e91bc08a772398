mod common;

use ensep::operator::{Dims, HermitianOperator, UnitVector};
use ensep::sampling::{ln_haar_moment, make_sample_set, SampleSet};
use nalgebra::DVector;

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn haar_moments_match_factorial_formula() {
    for n in [2usize, 3] {
        let s: SampleSet<f64> = make_sample_set(100 + n as u64, 100_000, Dims::single(n).unwrap()).unwrap();
        for m in 1..=3u64 {
            let values: Vec<f64> = s.samples().iter().map(|p| p.phi.amplitudes()[0].norm_sqr().powi(m as i32)).collect();
            let (mean, se) = mean_and_se(&values);
            let exact = ln_haar_moment(n, m).exp();
            assert!((mean - exact).abs() <= 4.0 * se, "n={n} m={m}: {mean} vs {exact} (se {se})");
        }
    }
}

#[test]
fn haar_moment_small_cases_by_hand() {
    // n = 2: E|phi_0|^{2m} = 1/(m+1)
    for m in 1..6u64 {
        assert!((ln_haar_moment(2, m).exp() - 1.0 / (m as f64 + 1.0)).abs() < 1e-13);
    }
}

#[test]
fn projector_average_is_maximally_mixed() {
    let s: SampleSet<f64> = make_sample_set(5, 50_000, Dims::new(2, 2).unwrap()).unwrap();
    let mut single = HermitianOperator::zeros(2);
    let mut product = HermitianOperator::zeros(4);
    for p in s.samples() {
        single = &single + &HermitianOperator::projector(&p.phi);
        product = &product + &HermitianOperator::projector(&p.product());
    }
    let k = s.len() as f64;
    let err1 = (&single.scale(1.0 / k) - &HermitianOperator::identity(2).scale(0.5)).trace_norm();
    let err2 = (&product.scale(1.0 / k) - &HermitianOperator::identity(4).scale(0.25)).trace_norm();
    assert!(err1 < 0.02, "{err1}");
    assert!(err2 < 0.03, "{err2}");
}

#[test]
fn factors_are_independent() {
    let (a, b) = (2usize, 3usize);
    let s: SampleSet<f64> = make_sample_set(6, 100_000, Dims::new(a, b).unwrap()).unwrap();
    let values: Vec<f64> = s
        .samples()
        .iter()
        .map(|p| p.phi.amplitudes()[0].norm_sqr() * p.phi_prime.amplitudes()[0].norm_sqr())
        .collect();
    let (mean, se) = mean_and_se(&values);
    let exact = 1.0 / (a * b) as f64;
    assert!((mean - exact).abs() <= 4.0 * se, "{mean} vs {exact}");
}

#[test]
fn overlap_with_a_rotated_vector_is_unbiased() {
    let mut rng = common::rng(9);
    let u = common::random_unitary(3, &mut rng);
    let e = UnitVector::normalize(DVector::from_column_slice(u.column(0).as_slice())).unwrap();
    let s: SampleSet<f64> = make_sample_set(7, 100_000, Dims::single(3).unwrap()).unwrap();
    for m in 1..=2u64 {
        let values: Vec<f64> = s.samples().iter().map(|p| e.inner(&p.phi).norm_sqr().powi(m as i32)).collect();
        let (mean, se) = mean_and_se(&values);
        let exact = ln_haar_moment(3, m).exp();
        assert!((mean - exact).abs() <= 4.0 * se, "m={m}: {mean} vs {exact}");
    }
}

#[test]
fn chunked_generation_is_thread_count_independent() {
    let dims = Dims::new(2, 2).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a: SampleSet<f64> = one.install(|| make_sample_set(3, 5000, dims)).unwrap();
    let b: SampleSet<f64> = four.install(|| make_sample_set(3, 5000, dims)).unwrap();
    assert_eq!(a.samples(), b.samples());
}
