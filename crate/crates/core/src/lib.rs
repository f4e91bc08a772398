//! Separability testing for bipartite density matrices by fixed-point
//! iteration over continuous ensembles of product states.
//!
//! The core types are generic over a [`Real`] scalar (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what the command-line
//! front end and most callers want.

pub mod criteria;
pub mod ensemble;
mod error;
pub mod operator;
pub mod params;
pub mod sampling;
mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use operator::{Dims, Subsystem};
pub use scalar::Real;

pub type HermitianOperator = operator::HermitianOperator<f64>;
pub type DensityMatrix = operator::DensityMatrix<f64>;
pub type UnitVector = operator::UnitVector<f64>;
pub type ProductSample = sampling::ProductSample<f64>;
pub type SampleSet = sampling::SampleSet<f64>;
pub type SmearedSpectrum = ensemble::SmearedSpectrum<f64>;
pub type OperatorEstimate = ensemble::OperatorEstimate<f64>;

pub type SolverConfig = solver::SolverConfig<f64>;
pub type Verdict = solver::Verdict<f64>;
pub type IterationTrace = solver::IterationTrace<f64>;
pub type StepRecord = solver::StepRecord<f64>;
