//! Scalar conservation law `∂_t u + ∂_x f(u) = 0` on the periodic grid:
//! parabolic regularization, a monotone reference solver, Kruzhkov entropy
//! pairs and the weak entropy inequality.

mod entropy;
mod flux;
mod reference;
mod viscous;

pub use entropy::{
    contraction_series, entropy_residual, eval_kruzhkov, stationary_expansion_shock, KruzhkovPair, ResidualEntry,
    TestFunction, TestFunctionBank, C_TOL,
};
pub use flux::{
    choose_epsilon_n, mollify_flux, mollify_on_demand, recession_slopes, FluxSpec, Mollifier, RecessionSlopes,
};
pub use reference::solve_reference;
pub use viscous::{solve_viscous, solve_viscous_ladder, ViscousRun};

use crate::error::{Error, Result};

/// CFL safety factor shared by the advective and diffusive bounds.
pub const C_SAFETY: f64 = 0.4;

/// Snapshot and time-step controls for the scalar solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Number of snapshot intervals over `[0, t_end]`.
    pub n_snapshots: usize,
    pub c_safety: f64,
    /// Fixed time step; must satisfy the stability bound.
    pub dt: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { n_snapshots: 32, c_safety: C_SAFETY, dt: None }
    }
}

impl RunOptions {
    pub fn with_snapshots(n_snapshots: usize) -> Self {
        Self { n_snapshots, ..Self::default() }
    }

    /// Splits each snapshot interval into equal substeps no longer than the
    /// stability limit. Returns `(substeps per interval, dt)`.
    pub(crate) fn substeps(&self, t_end: f64, dt_limit: f64) -> Result<(usize, f64)> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::Parameter(format!("t_end must be positive, got {t_end}")));
        }
        if self.n_snapshots == 0 {
            return Err(Error::Parameter("need at least one snapshot interval".into()));
        }
        let interval = t_end / self.n_snapshots as f64;
        let target = match self.dt {
            Some(dt) if dt > dt_limit => return Err(Error::TimeStep { dt, limit: dt_limit }),
            Some(dt) if dt <= 0.0 => return Err(Error::Parameter(format!("dt must be positive, got {dt}"))),
            Some(dt) => dt,
            None => dt_limit,
        };
        let steps = if target.is_finite() { (interval / target).ceil().max(1.0) as usize } else { 1 };
        Ok((steps, interval / steps as f64))
    }
}
