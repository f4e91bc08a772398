use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::time::Instant;

use ensep::criteria::{ppt_min_eigenvalue, random_full_rank, StateSpec};
use ensep::ensemble::{choose_k, moment_bipartite_closed, moment_estimate, moment_single_closed, reconstruct};
use ensep::params::{paper_params, PaperParams};
use ensep::sampling::make_sample_set;
use ensep::solver::{default_practical_lambda, regularize, run_with_sink, SampleStrategy, StepMode};
use ensep::{DensityMatrix, Dims, Error, HermitianOperator, Real, SolverConfig, StepRecord, Subsystem, Verdict};
use serde::{Deserialize, Serialize};

use crate::args::{Family, GenArgs, Mode, MomentArgs, PairDims, ParamsArgs, PptArgs, ReconstructArgs, TestArgs};
use crate::exit::{self, CliError};
use crate::state_file;

/// Accepted PPT deficit.
pub const PPT_TOL: f64 = 1e-9;

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("reports always serialize");
    writeln!(io::stdout(), "{text}").map_err(CliError::io)
}

/// `choose_K` from the smallest eigenvalue of a full-rank state, treating
/// the whole space as one party.
fn k_from_state(rho: &DensityMatrix) -> Option<u64> {
    choose_k(rho.min_eigenvalue(), rho.dim()).ok()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsReport {
    pub params: PaperParams,
    /// `K` from the input's true smallest eigenvalue, if one was given.
    pub k_true_p0: Option<u64>,
    pub min_eigenvalue: Option<f64>,
}

pub fn params(args: ParamsArgs) -> Result<u8, CliError> {
    let rho = args.input.as_deref().map(state_file::load).transpose()?;
    let n = match (args.n, &rho) {
        (Some(n), Some(rho)) if rho.dims() != Dims::square(n as usize)? => {
            return Err(CliError::Usage(format!("--n {n} disagrees with input dims {:?}", rho.dims())));
        }
        (Some(n), _) => n as usize,
        (None, Some(rho)) => rho.dims().equal_factor()?,
        (None, None) => return Err(CliError::Usage("give --n or --input".into())),
    };
    let report = ParamsReport {
        params: paper_params(n, args.kappa)?,
        k_true_p0: rho.as_ref().and_then(k_from_state),
        min_eigenvalue: rho.as_ref().map(|r| r.min_eigenvalue()),
    };
    if args.json {
        print_json(&report)?;
    } else {
        let p = &report.params;
        let mut out = io::stdout().lock();
        let lines = [
            format!("n                 {}", p.n),
            format!("kappa             {}", p.kappa),
            format!("K                 {}", p.k),
            format!("ln C_K            {:.6}", p.ln_ck),
            format!("ln C_A            {:.6}", p.ln_ca),
            format!("ln lambda         {:.6}", p.ln_lambda),
            format!("C                 {:.12}", p.contraction_c),
            format!("domain bound      {:.6}", p.domain_bound),
            format!("N                 {}", p.n_steps),
            format!("lambda_underflows {}", p.lambda_underflows),
        ];
        for line in lines {
            writeln!(out, "{line}").map_err(CliError::io)?;
        }
        if let (Some(k), Some(p0)) = (report.k_true_p0, report.min_eigenvalue) {
            writeln!(out, "K (true p0 = {p0:.6e}) {k}").map_err(CliError::io)?;
        }
    }
    Ok(exit::SEPARABLE)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub input: String,
    pub dims: Dims,
    pub regularized: bool,
    pub config: SolverConfig,
    /// Starting step size and bound after defaults are resolved.
    pub lambda: f64,
    pub bound: f64,
    pub params: PaperParams,
    pub k_true_p0: Option<u64>,
    pub ppt_min_eigenvalue: Option<f64>,
    pub verdict: Verdict,
    pub elapsed_seconds: f64,
}

#[derive(Serialize)]
struct TraceRow {
    step: usize,
    residual_l1: f64,
    x_norm_l1: f64,
    lambda: f64,
    noise_floor: f64,
}

impl From<&StepRecord> for TraceRow {
    fn from(r: &StepRecord) -> Self {
        Self { step: r.step, residual_l1: r.residual, x_norm_l1: r.x_norm, lambda: r.lambda, noise_floor: r.noise_floor }
    }
}

pub fn test(args: TestArgs) -> Result<u8, CliError> {
    let started = Instant::now();
    let mut rho = state_file::load(&args.input)?;
    if args.regularize {
        rho = regularize(&rho, args.kappa)?;
    }
    let n = rho.dims().equal_factor()?;
    let params = paper_params(n, args.kappa)?;

    let cfg = SolverConfig {
        kappa: args.kappa,
        mode: match args.mode {
            Mode::Practical => StepMode::Practical,
            Mode::Paper => StepMode::Paper,
        },
        lambda: args.lambda,
        sample_count: args.samples,
        sample_strategy: if args.fresh { SampleStrategy::Fresh } else { SampleStrategy::Fixed },
        max_iters: args.max_iters,
        bound: args.bound,
        seed: args.seed,
        adaptive: !args.no_adaptive && args.mode == Mode::Practical,
        patience: args.patience,
        renormalize: args.mode == Mode::Practical,
    };
    let (lambda, bound) = match cfg.mode {
        StepMode::Practical => (
            cfg.lambda.unwrap_or_else(|| default_practical_lambda(n)),
            cfg.bound.unwrap_or((50 * n * n) as f64),
        ),
        StepMode::Paper => {
            if params.lambda_underflows {
                return Err(CliError::Data(format!(
                    "paper mode refused: lambda = exp({:.1}) underflows f64 (K = {}, N = {}); use --mode practical",
                    params.ln_lambda, params.k, params.n_steps
                )));
            }
            (params.ln_lambda.exp(), params.domain_bound)
        }
    };

    let mut writer = match &args.trace {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::CantCreate(format!("{}: {e}", path.display())))?;
            Some(csv::Writer::from_writer(BufWriter::new(file)))
        }
        None => None,
    };
    let run = run_with_sink(&rho, &cfg, |record| match writer.as_mut() {
        Some(w) => {
            w.serialize(TraceRow::from(record)).map_err(io::Error::other)?;
            w.flush()
        }
        None => Ok(()),
    })
    .map_err(|e| match e {
        Error::LambdaUnderflow { ln_lambda } => {
            CliError::Data(format!("paper mode refused: lambda = exp({ln_lambda:.1}) underflows f64"))
        }
        other => other.into(),
    })?;
    if let Some(mut w) = writer {
        w.flush().map_err(CliError::io)?;
    }

    let code = exit::outcome_code(run.verdict.outcome);
    let report = RunReport {
        input: args.input.display().to_string(),
        dims: rho.dims(),
        regularized: args.regularize,
        config: cfg,
        lambda,
        bound,
        params,
        k_true_p0: k_from_state(&rho),
        ppt_min_eigenvalue: ppt_min_eigenvalue(&rho).ok(),
        verdict: run.verdict,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    };
    print_json(&report)?;
    Ok(code)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PptReport {
    pub ppt_min_eigenvalue: f64,
    pub ppt: bool,
}

pub fn ppt(args: PptArgs) -> Result<u8, CliError> {
    let rho = state_file::load(&args.input)?;
    let min = ppt_min_eigenvalue(&rho)?;
    let report = PptReport { ppt_min_eigenvalue: min, ppt: min >= -PPT_TOL };
    if args.json {
        print_json(&report)?;
    } else {
        writeln!(io::stdout(), "ppt_min_eigenvalue {min:.12e}\nppt {}", report.ppt).map_err(CliError::io)?;
    }
    Ok(if report.ppt { exit::SEPARABLE } else { exit::ENTANGLED })
}

fn dims_of(d: &PairDims) -> Result<Dims, CliError> {
    Ok(Dims::new(d.na, d.nb)?)
}

pub fn spec_for(family: &Family) -> Result<StateSpec, CliError> {
    Ok(match family {
        Family::Werner { w } => StateSpec::Werner { w: *w },
        Family::Bell => StateSpec::Bell,
        Family::Isotropic { p, n } => StateSpec::Isotropic { p: *p, n: *n },
        Family::RandomSeparable { dims, terms, seed } => {
            StateSpec::RandomSeparable { dims: dims_of(dims)?, terms: *terms, seed: *seed }
        }
        Family::RandomFullRank { dims, seed } => StateSpec::RandomFullRank { dims: dims_of(dims)?, seed: *seed },
        Family::PureProduct { dims, seed } => StateSpec::PureProduct { dims: dims_of(dims)?, seed: *seed },
        Family::MaximallyMixed { dims } => StateSpec::MaximallyMixed { dims: dims_of(dims)? },
        Family::Diagonal { dims, probs } => StateSpec::Diagonal { dims: dims_of(dims)?, probs: probs.clone() },
    })
}

pub fn gen(args: GenArgs) -> Result<u8, CliError> {
    let spec = spec_for(&args.family)?;
    let mut rho: DensityMatrix = spec.build().map_err(|e| match e {
        Error::InvalidArgument(m) => CliError::Usage(m),
        other => CliError::data(other),
    })?;
    if let Some(kappa) = args.regularize {
        rho = regularize(&rho, kappa)?;
    }
    state_file::save(&rho, args.output.as_deref())?;
    Ok(exit::SEPARABLE)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub identity: String,
    pub trial: usize,
    pub gap_l1: f64,
    pub noise_floor: f64,
    pub within_3_sigma: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<MomentCheck>,
    pub passed: bool,
}

/// An indefinite Hermitian operator of unit trace norm.
fn test_operator(dims: Dims, seed: u64) -> Result<HermitianOperator, CliError> {
    let a: DensityMatrix = random_full_rank(dims, seed)?;
    let b: DensityMatrix = random_full_rank(dims, seed ^ 0x5bd1_e995)?;
    let h = a.op() - &b.op().scale(0.5);
    Ok(h.scale(1.0 / h.trace_norm()))
}

pub fn check_moments(args: MomentArgs) -> Result<u8, CliError> {
    let n = args.n as usize;
    let single = Dims::single(n)?;
    let pair = Dims::square(n)?;
    let s1 = make_sample_set(args.seed, args.samples, single)?;
    let s2 = make_sample_set(args.seed, args.samples, pair)?;
    let mut checks = Vec::new();
    for trial in 0..args.trials {
        let op_seed = args.seed.wrapping_add(1 + trial as u64);
        let a = test_operator(single, op_seed)?;
        let est = moment_estimate(&a, &s1)?;
        let gap = (&est.estimate - &moment_single_closed(&a)).trace_norm();
        checks.push(("single", trial, gap, est.noise_floor));

        let y = test_operator(pair, op_seed)?;
        let est = moment_estimate(&y, &s2)?;
        let gap = (&est.estimate - &moment_bipartite_closed(&y, pair)?).trace_norm();
        checks.push(("bipartite", trial, gap, est.noise_floor));
    }
    let checks: Vec<MomentCheck> = checks
        .into_iter()
        .map(|(identity, trial, gap_l1, noise_floor)| MomentCheck {
            identity: identity.into(),
            trial,
            gap_l1,
            noise_floor,
            within_3_sigma: gap_l1 <= 3.0 * noise_floor,
        })
        .collect();
    let passed = checks.iter().all(|c| c.within_3_sigma);
    print_json(&MomentReport { n, samples: args.samples, seed: args.seed, checks, passed })?;
    Ok(if passed { exit::SEPARABLE } else { exit::ENTANGLED })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructReport {
    pub dims: Dims,
    pub k: u64,
    pub samples: usize,
    pub error_l1: f64,
    pub noise_floor: f64,
    pub within_3_sigma: bool,
}

fn rank_deficient(min: f64) -> CliError {
    CliError::Data(format!(
        "state is rank deficient (smallest eigenvalue {min:.3e}); regularize first, e.g. `ensep gen ... --regularize 0.05`"
    ))
}

pub fn reconstruct_cmd(args: ReconstructArgs) -> Result<u8, CliError> {
    let rho = state_file::load(&args.input)?;
    let dims = rho.dims();
    let k_for = |r: &DensityMatrix| -> Result<u64, CliError> {
        let min = r.min_eigenvalue();
        if min <= f64::PSD_TOL {
            return Err(rank_deficient(min));
        }
        Ok(choose_k(min, r.dim())?)
    };
    let k = if dims.is_single() {
        k_for(&rho)?
    } else {
        if rho.min_eigenvalue() <= f64::PSD_TOL {
            return Err(rank_deficient(rho.min_eigenvalue()));
        }
        k_for(&rho.reduced(Subsystem::First))?.max(k_for(&rho.reduced(Subsystem::Second))?)
    };
    let s = make_sample_set(args.seed, args.samples, dims)?;
    let est = reconstruct(&rho, k, &s)?;
    let error_l1 = (&est.estimate - rho.op()).trace_norm();
    let report = ReconstructReport {
        dims,
        k,
        samples: args.samples,
        error_l1,
        noise_floor: est.noise_floor,
        within_3_sigma: error_l1 <= 3.0 * est.noise_floor,
    };
    print_json(&report)?;
    Ok(if report.within_3_sigma { exit::SEPARABLE } else { exit::ENTANGLED })
}
