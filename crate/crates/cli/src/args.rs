use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Separability testing by fixed-point iteration over product-state ensembles.
///
/// Exit codes: 0 separable within kappa (or check passed), 1 entanglement
/// signal (or check failed), 2 inconclusive, 64 usage, 65 bad data or refused
/// run, 66 missing input, 73 cannot create output, 74 I/O failure.
#[derive(Debug, Parser)]
#[command(name = "ensep", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the convergence constants for a dimension and tolerance.
    Params(ParamsArgs),
    /// Run the fixed-point iteration on a state file.
    Test(TestArgs),
    /// Smallest eigenvalue of the partial transpose; exit 0 if PPT.
    Ppt(PptArgs),
    /// Write a state file from a named family.
    Gen(GenArgs),
    /// Compare Monte Carlo moment integrals with their closed forms.
    CheckMoments(MomentArgs),
    /// Rebuild a state from its smeared spectral density.
    Reconstruct(ReconstructArgs),
}

/// Parses a tolerance in the open interval (0, 1).
pub fn unit_open(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1)"))
    }
}

fn unit_closed(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not positive"))
    }
}

fn at_least_one(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        Ok(_) => Err("must be at least 1".into()),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    /// Factor dimension; taken from --input when omitted.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub n: Option<u64>,
    #[arg(long, value_parser = unit_open)]
    pub kappa: f64,
    /// Also report K from this state's smallest eigenvalue.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Practical,
    Paper,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.05, value_parser = unit_open)]
    pub kappa: f64,
    #[arg(long, value_enum, default_value_t = Mode::Practical)]
    pub mode: Mode,
    /// Monte Carlo samples per estimate.
    #[arg(long, env = "ENSEP_SAMPLES", default_value_t = ensep::solver::DEFAULT_SAMPLE_COUNT, value_parser = at_least_one)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = ensep::solver::DEFAULT_MAX_ITERS, value_parser = at_least_one)]
    pub max_iters: usize,
    /// Stream the iteration trace to this CSV file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Mix the input with the identity at weight kappa before iterating.
    #[arg(long)]
    pub regularize: bool,
    /// Step size; defaults to 2n^2(n+1)^2/(n+2).
    #[arg(long, value_parser = positive)]
    pub lambda: Option<f64>,
    /// Trace-norm bound on the iterate; defaults to 50 n^2.
    #[arg(long, value_parser = positive)]
    pub bound: Option<f64>,
    /// Draw a new sample set every step.
    #[arg(long)]
    pub fresh: bool,
    /// Keep lambda fixed.
    #[arg(long)]
    pub no_adaptive: bool,
    #[arg(long, default_value_t = ensep::solver::DEFAULT_PATIENCE)]
    pub patience: usize,
}

#[derive(Debug, Args)]
pub struct PptArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub family: Family,
    /// Output path; stdout when omitted.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Mix the state with the identity at this weight.
    #[arg(long, global = true, value_parser = unit_open)]
    pub regularize: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PairDims {
    #[arg(long, default_value_t = 2, value_parser = at_least_one)]
    pub na: usize,
    #[arg(long, default_value_t = 2, value_parser = at_least_one)]
    pub nb: usize,
}

#[derive(Debug, Subcommand)]
pub enum Family {
    /// w |psi-><psi-| + (1-w) I/4
    Werner {
        #[arg(long, value_parser = unit_closed)]
        w: f64,
    },
    /// The singlet.
    Bell,
    /// p |Phi+><Phi+| + (1-p) I/n^2
    Isotropic {
        #[arg(long, value_parser = unit_closed)]
        p: f64,
        #[arg(long, default_value_t = 2, value_parser = at_least_one)]
        n: usize,
    },
    RandomSeparable {
        #[command(flatten)]
        dims: PairDims,
        #[arg(long, default_value_t = 10, value_parser = at_least_one)]
        terms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    RandomFullRank {
        #[command(flatten)]
        dims: PairDims,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    PureProduct {
        #[command(flatten)]
        dims: PairDims,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    MaximallyMixed {
        #[command(flatten)]
        dims: PairDims,
    },
    /// Diagonal state; use --nb 1 for a single party.
    Diagonal {
        #[command(flatten)]
        dims: PairDims,
        #[arg(long, value_delimiter = ',', required = true)]
        probs: Vec<f64>,
    },
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, env = "ENSEP_SAMPLES", default_value_t = ensep::solver::DEFAULT_SAMPLE_COUNT, value_parser = at_least_one)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random operators tested per identity.
    #[arg(long, default_value_t = 5, value_parser = at_least_one)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 200_000, value_parser = at_least_one)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
