use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value {value} outside sampled range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("no recession limit: {0}")]
    NoRecessionLimit(String),

    #[error("flux regularity: no epsilon down to 2^-40 satisfies the modulus bound 1/{n}")]
    FluxRegularity { n: u32 },

    #[error("range error: {0}")]
    Range(String),

    #[error("time step violates stability bound: dt = {dt}, limit = {limit}")]
    TimeStep { dt: f64, limit: f64 },

    #[error("instability at t = {time}: |value| = {magnitude} exceeds {bound}")]
    Instability { time: f64, magnitude: f64, bound: f64 },

    #[error("invalid test function #{index}: {reason}")]
    InvalidTestFunction { index: usize, reason: String },

    #[error("degenerate partition: {0}")]
    DegeneratePartition(String),

    #[error("growth condition violated at lambda = {lambda}: |g| = {value} > {bound}")]
    Growth { lambda: f64, value: f64, bound: f64 },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("vacuum formation at t = {time}: rho = {rho}")]
    Vacuum { time: f64, rho: f64 },

    #[error("subcritical population: integral of B is {integral} <= 1")]
    SubcriticalPopulation { integral: f64 },

    #[error("degenerate dual eigenfunction: normalization integral {0} <= 0")]
    DegenerateDual(f64),
}
