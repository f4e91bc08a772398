use ensep::criteria::{ppt_min_eigenvalue, random_full_rank, random_separable, werner};
use ensep::operator::{DensityMatrix, Dims};

#[test]
fn werner_ppt_boundary_on_a_grid() {
    let grid: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
    let signs: Vec<bool> = grid.iter().map(|&w| ppt_min_eigenvalue(&werner(w).unwrap()).unwrap() < 0.0).collect();
    let first = signs.iter().position(|&neg| neg).unwrap();
    assert!(signs[first..].iter().all(|&neg| neg));
    assert!(grid[first] > 1.0 / 3.0 && grid[first - 1] <= 1.0 / 3.0);
}

#[test]
fn werner_ppt_eigenvalue_closed_form() {
    // partial transpose spectrum {(1+w)/4 (x3), (1-3w)/4}
    for i in 0..=20 {
        let w = i as f64 / 20.0;
        let got = ppt_min_eigenvalue(&werner(w).unwrap()).unwrap();
        assert!((got - (1.0 - 3.0 * w) / 4.0).abs() < 1e-12);
    }
}

#[test]
fn random_separable_qubit_pairs_are_ppt() {
    let dims = Dims::square(2).unwrap();
    for seed in 0..1000 {
        let rho: DensityMatrix<f64> = random_separable(dims, 1 + (seed as usize % 10), seed).unwrap();
        let min = ppt_min_eigenvalue(&rho).unwrap();
        assert!(min >= -1e-9, "seed {seed}: {min}");
    }
}

#[test]
fn random_full_rank_states_are_valid_and_distinct() {
    let dims = Dims::new(2, 3).unwrap();
    let a: DensityMatrix<f64> = random_full_rank(dims, 1).unwrap();
    let b: DensityMatrix<f64> = random_full_rank(dims, 2).unwrap();
    assert_ne!(a.op(), b.op());
    for rho in [a, b] {
        assert!((rho.op().trace() - 1.0).abs() < 1e-10);
        assert!(rho.min_eigenvalue() > 0.0);
    }
}
