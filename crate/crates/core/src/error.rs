//! Error type shared by all solver stages.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("requested {requested} modes but the discretization only carries {capacity}")]
    DiscretizationTooSmall { requested: usize, capacity: usize },

    #[error("eigensolver failed on wavenumber block m={block}: {reason}")]
    EigSolveFailure { block: usize, reason: String },

    #[error("grid mismatch: field belongs to a different grid/basis (expected id {expected:#x}, got {got:#x})")]
    GridMismatch { expected: u64, got: u64 },

    #[error("boundary data violates the per-wall zero-flux (stringent outflow) condition: max wall flux {max_flux:e} > tol {tol:e}")]
    SocViolated { max_flux: f64, tol: f64 },

    #[error("epsilon {requested:e} needs a boundary layer below grid resolution; minimum achievable at this wall resolution is {min_epsilon:e}")]
    EpsilonUnreachable { requested: f64, min_epsilon: f64 },

    #[error("coefficient {name} must be positive, got {value}")]
    NonpositiveCoefficient { name: &'static str, value: f64 },

    #[error("time step rejected more than {limit} times at t={t}")]
    StepRejectionLimit { t: f64, limit: u32 },

    #[error("state became non-finite at t={t}")]
    NonFiniteState { t: f64 },

    #[error("{strategy} did not converge within {iterations} iterations (last gap {last_gap:e}, tol {tol:e}){hint}")]
    NotConverged {
        strategy: &'static str,
        iterations: usize,
        last_gap: f64,
        tol: f64,
        hint: String,
    },

    #[error("magnetic channel leaked: sup |h| = {sup_h:e} exceeds {bound:e} in a run that must keep h = 0")]
    MagneticLeak { sup_h: f64, bound: f64 },

    #[error("exponent triple (delta={delta}, theta={theta}, rho={rho}) violates {constraint}")]
    ParameterConstraintViolated {
        delta: f64,
        theta: f64,
        rho: f64,
        constraint: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
