use ensep::criteria::{ppt_min_eigenvalue, random_separable, werner};
use ensep::ensemble::{choose_k, estimate_image};
use ensep::operator::{DensityMatrix, Dims};
use ensep::params::{ln_ca, ln_ck};
use ensep::sampling::make_sample_set;
use ensep::solver::{max_abs_log_weight, regularize, run, Outcome, Run, SolverConfig};

fn practical(kappa: f64, max_iters: usize) -> SolverConfig<f64> {
    SolverConfig { max_iters, seed: 2024, ..SolverConfig::practical(kappa) }
}

fn check_trace_invariants(run: &Run<f64>) {
    let records = run.trace.records();
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r.step, i);
    }
    let best = run.trace.best_residuals();
    assert!(best.windows(2).all(|w| w[1] <= w[0]));
    if run.verdict.outcome == Outcome::SeparableWithinKappa {
        assert!(run.verdict.final_residual <= records.last().unwrap().residual);
    }
}

fn revalidate(rho: &DensityMatrix<f64>, cfg: &SolverConfig<f64>, run: &Run<f64>) {
    let fresh = make_sample_set(cfg.seed ^ 0xDEAD_BEEF, cfg.sample_count, rho.dims()).unwrap();
    let est = estimate_image(&run.solution, &fresh).unwrap();
    let residual = (rho.op() - &est.estimate).trace_norm();
    assert!(
        residual <= cfg.kappa + 3.0 * est.noise_floor,
        "re-evaluated residual {residual} vs kappa {} (floor {})",
        cfg.kappa,
        est.noise_floor
    );
}

#[test]
fn werner_family_agrees_with_ppt() {
    let cfg = practical(0.02, 200);
    for w in [0.1, 0.2, 0.3, 0.5, 0.8, 1.0] {
        let rho = werner(w).unwrap();
        let ppt = ppt_min_eigenvalue(&rho).unwrap();
        let run = run(&rho, &cfg).unwrap();
        check_trace_invariants(&run);
        if w < 1.0 / 3.0 {
            assert_eq!(run.verdict.outcome, Outcome::SeparableWithinKappa, "w = {w}");
            assert!(ppt >= 0.0);
            revalidate(&rho, &cfg, &run);
        } else {
            assert_ne!(run.verdict.outcome, Outcome::SeparableWithinKappa, "w = {w}");
            assert!(ppt < 0.0);
        }
    }
}

#[test]
fn random_separable_states_converge() {
    let kappa = 0.05;
    let cfg = practical(kappa, 300);
    let dims = Dims::square(2).unwrap();
    let mut hits = 0;
    for seed in 0..20 {
        let rho = regularize(&random_separable(dims, 10, seed).unwrap(), kappa).unwrap();
        assert!(ppt_min_eigenvalue(&rho).unwrap() >= 0.0);
        let run = run(&rho, &cfg).unwrap();
        check_trace_invariants(&run);
        match run.verdict.outcome {
            Outcome::SeparableWithinKappa => {
                hits += 1;
                revalidate(&rho, &cfg, &run);
                // weights stay inside the domain implied by the true smallest eigenvalue
                let k = choose_k(rho.min_eigenvalue(), 4).unwrap();
                let domain = 2.0 * (ln_ck(k, 2) + ln_ca(2, kappa));
                let s = make_sample_set(cfg.seed, cfg.sample_count, dims).unwrap();
                let w = max_abs_log_weight(&run.solution, &s).unwrap();
                assert!(w.is_finite() && w <= domain);
            }
            Outcome::Inconclusive => {}
            Outcome::EntangledSignal => panic!("seed {seed} flagged as entangled"),
        }
    }
    assert!(hits >= 18, "{hits}/20");
}

#[test]
fn runs_are_bit_reproducible() {
    let rho = werner(0.2).unwrap();
    let cfg = SolverConfig { sample_count: 20_000, ..practical(0.05, 50) };
    let a = run(&rho, &cfg).unwrap();
    let b = run(&rho, &cfg).unwrap();
    assert_eq!(a.verdict, b.verdict);
    let bits = |r: &Run<f64>| -> Vec<[u64; 4]> {
        r.trace
            .records()
            .iter()
            .map(|x| [x.residual.to_bits(), x.x_norm.to_bits(), x.lambda.to_bits(), x.noise_floor.to_bits()])
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn inconclusive_when_budget_is_tiny() {
    let rho = werner(0.3).unwrap();
    let cfg = SolverConfig { sample_count: 20_000, ..practical(0.001, 2) };
    let run = run(&rho, &cfg).unwrap();
    assert_eq!(run.verdict.outcome, Outcome::Inconclusive);
    assert_eq!(run.verdict.steps_used, 2);
    assert_eq!(run.trace.len(), 3);
}

#[test]
fn qutrit_pair_maximally_mixed() {
    let rho = DensityMatrix::<f64>::maximally_mixed(Dims::square(3).unwrap());
    let cfg = SolverConfig { sample_count: 50_000, ..practical(0.05, 10) };
    let run = run(&rho, &cfg).unwrap();
    assert_eq!(run.verdict.outcome, Outcome::SeparableWithinKappa);
}
