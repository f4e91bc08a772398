//! Convergence constants of the iterated map, all in log space.
//!
//! For any realistic input the raw constants lie thousands of orders of
//! magnitude outside the float range, so only logarithms are stored.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// `ln` of the smallest positive normal `f64`.
pub const LN_MIN_POSITIVE: f64 = -708.396_418_532_264_1;

// absorbs float noise in ratios such as 128 / 0.1 before taking a ceiling
const CEIL_SLACK: f64 = 1e-9;

fn ceil_u64(x: f64) -> u64 {
    (x - CEIL_SLACK * x.abs().max(1.0)).ceil().max(0.0) as u64
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("kappa must lie in (0, 1), got {kappa}")))
    }
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n >= min {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dimension must be at least {min}, got {n}")))
    }
}

/// Worst-case smearing order `K = ceil(n^7 / kappa)`, from the smallest
/// eigenvalue `kappa / n^8` a kappa-smoothed state can have.
pub fn paper_k(n: usize, kappa: f64) -> Result<u64> {
    check_kappa(kappa)?;
    check_n(n, 1)?;
    Ok(ceil_u64((n as f64).powi(7) / kappa))
}

/// `ln C_K` with `C_K = ((K+1)n)! / (K (Kn)! n!)`.
pub fn ln_ck(k: u64, n: usize) -> f64 {
    let (k, n) = (k as f64, n as f64);
    ln_gamma((k + 1.0) * n + 1.0) - k.ln() - ln_gamma(k * n + 1.0) - ln_gamma(n + 1.0)
}

/// `ln C_A` with `C_A = 2 n^14 n^(n^8/kappa) / kappa^2`.
pub fn ln_ca(n: usize, kappa: f64) -> f64 {
    let ln_n = (n as f64).ln();
    std::f64::consts::LN_2 + 14.0 * ln_n + (n as f64).powi(8) / kappa * ln_n - 2.0 * kappa.ln()
}

/// `(1 - 1/(n(n+1)))^2`
pub fn contraction_constant(n: usize) -> Result<f64> {
    check_n(n, 2)?;
    let m = (n * (n + 1)) as f64;
    Ok(((m - 1.0) * (m - 1.0)) / (m * m))
}

/// Steps after which a map contracting by `c` brings a domain of the given
/// diameter within `kappa`: `ceil((ln kappa - ln diameter) / ln c)`.
pub fn generic_steps(kappa: f64, diameter: f64, c: f64) -> Result<u64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("contraction constant must lie in (0, 1), got {c}")));
    }
    if !(diameter > 0.0 && kappa > 0.0) {
        return Err(Error::InvalidArgument("kappa and diameter must be positive".into()));
    }
    if kappa >= diameter {
        return Ok(0);
    }
    Ok(ceil_u64((kappa.ln() - diameter.ln()) / c.ln()))
}

/// `N = 2n(n+1)(ln(4 ln(C_A C_K)) + ln(1/kappa))` before rounding.
pub fn paper_n_unrounded(n: usize, kappa: f64, ln_ck: f64, ln_ca: f64) -> Result<f64> {
    check_kappa(kappa)?;
    let ln_prod = ln_ck + ln_ca;
    if ln_prod <= 0.0 {
        return Err(Error::InvalidArgument(format!("ln(C_A C_K) must be positive, got {ln_prod}")));
    }
    let nf = n as f64;
    Ok(2.0 * nf * (nf + 1.0) * ((4.0 * ln_prod).ln() - kappa.ln()))
}

pub fn paper_n(n: usize, kappa: f64, ln_ck: f64, ln_ca: f64) -> Result<u64> {
    paper_n_unrounded(n, kappa, ln_ck, ln_ca).map(ceil_u64)
}

/// Every constant of the procedure for a given `(n, kappa)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaperParams {
    pub n: usize,
    pub kappa: f64,
    pub k: u64,
    pub ln_ck: f64,
    pub ln_ca: f64,
    pub ln_lambda: f64,
    pub contraction_c: f64,
    /// Trace-norm bound `2 ln(C_K C_A)` on the iterate.
    pub domain_bound: f64,
    pub n_steps: u64,
    /// `lambda` is below the smallest normal `f64`.
    pub lambda_underflows: bool,
}

impl PaperParams {
    /// `lambda`, or `None` when it underflows.
    pub fn lambda(&self) -> Option<f64> {
        (!self.lambda_underflows).then(|| self.ln_lambda.exp())
    }

    /// Diameter `2 * domain_bound` of the domain ball.
    pub fn diameter(&self) -> f64 {
        2.0 * self.domain_bound
    }
}

pub fn paper_params(n: usize, kappa: f64) -> Result<PaperParams> {
    check_kappa(kappa)?;
    check_n(n, 2)?;
    let k = paper_k(n, kappa)?;
    let ln_ck = ln_ck(k, n);
    let ln_ca = ln_ca(n, kappa);
    let sum = ln_ck + ln_ca;
    let ln_lambda = -2.0 * sum;
    Ok(PaperParams {
        n,
        kappa,
        k,
        ln_ck,
        ln_ca,
        ln_lambda,
        contraction_c: contraction_constant(n)?,
        domain_bound: 2.0 * sum,
        n_steps: paper_n(n, kappa, ln_ck, ln_ca)?,
        lambda_underflows: ln_lambda < LN_MIN_POSITIVE,
    })
}
