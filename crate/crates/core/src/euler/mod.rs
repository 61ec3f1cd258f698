//! One-dimensional isentropic Euler `∂_t ρ + ∂_x(ρu) = 0`,
//! `∂_t(ρu) + ∂_x(ρu² + ρ^γ) = 0` on the periodic grid, with the
//! relative-entropy functionals of the weak-strong uniqueness argument.

mod relative;

pub use relative::{
    bregman_density, four_term_density, gronwall_check, pressure_potential, rel_entropy_compressible,
    rel_entropy_incompressible, weak_strong_experiment, GronwallReport, LevelReport, VelocityEnsemble, VelocityField,
    WeakStrongReport, SHOCK_GRADIENT,
};

use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;

/// Densities below this abort the run.
pub const VACUUM_DENSITY: f64 = 1e-12;

/// Largest admissible Courant number.
pub const MAX_CFL: f64 = 0.5;

/// Conserved variables `(ρ, m = ρu)` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerState1D {
    grid: PeriodicGrid,
    rho: Vec<f64>,
    momentum: Vec<f64>,
    gamma: f64,
    time: f64,
}

impl EulerState1D {
    pub fn new(grid: PeriodicGrid, rho: Vec<f64>, momentum: Vec<f64>, gamma: f64, time: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::Parameter(format!("adiabatic exponent must exceed 1, got {gamma}")));
        }
        if rho.len() != grid.n_cells() || momentum.len() != grid.n_cells() {
            return Err(Error::Dimension(format!(
                "state has {} densities and {} momenta for {} cells",
                rho.len(),
                momentum.len(),
                grid.n_cells()
            )));
        }
        if let Some(&r) = rho.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::RejectedInput(format!("density must be positive and finite, got {r}")));
        }
        if momentum.iter().any(|m| !m.is_finite()) {
            return Err(Error::RejectedInput("momentum must be finite".into()));
        }
        Ok(Self { grid, rho, momentum, gamma, time })
    }

    /// Samples density and velocity at the cell centers.
    pub fn from_primitive(
        grid: PeriodicGrid,
        rho: impl Fn(f64) -> f64,
        u: impl Fn(f64) -> f64,
        gamma: f64,
    ) -> Result<Self> {
        let r = grid.sample(rho);
        let m = grid.cell_centers().iter().zip(&r).map(|(&x, &r)| r * u(x)).collect();
        Self::new(grid, r, m, gamma, 0.0)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn momentum(&self) -> &[f64] {
        &self.momentum
    }

    pub fn velocity(&self) -> Vec<f64> {
        self.momentum.iter().zip(&self.rho).map(|(m, r)| m / r).collect()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn total_mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn total_momentum(&self) -> f64 {
        self.momentum.iter().sum::<f64>() * self.grid.dx()
    }

    /// `max |u| + √(γ ρ^{γ-1})`.
    pub fn max_wave_speed(&self) -> f64 {
        self.rho.iter().zip(&self.momentum).map(|(&r, &m)| wave_speed(r, m, self.gamma)).fold(0.0, f64::max)
    }

    /// Centered-difference `max |∂_x u|`.
    pub fn max_velocity_gradient(&self) -> f64 {
        let u = self.velocity();
        let n = u.len();
        let dx = self.grid.dx();
        (0..n).map(|i| ((u[(i + 1) % n] - u[(i + n - 1) % n]) / (2.0 * dx)).abs()).fold(0.0, f64::max)
    }
}

fn wave_speed(rho: f64, m: f64, gamma: f64) -> f64 {
    (m / rho).abs() + (gamma * rho.powf(gamma - 1.0)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerOptions {
    pub cfl: f64,
    /// Number of snapshot intervals over `[0, t_end]`.
    pub n_snapshots: usize,
}

impl Default for EulerOptions {
    fn default() -> Self {
        Self { cfl: 0.45, n_snapshots: 32 }
    }
}

/// Conservative local Lax–Friedrichs (Rusanov) evolution with interface
/// dissipation `max(s_L, s_R)` and `s = |u| + √(γ ρ^{γ-1})`.
///
/// The step is recomputed from the current wave speed and shortened so that
/// every snapshot time is hit exactly. Returns `n_snapshots + 1` states.
pub fn lax_friedrichs_euler(initial: &EulerState1D, t_end: f64, opts: &EulerOptions) -> Result<Vec<EulerState1D>> {
    let dx = initial.grid.dx();
    if !(opts.cfl > 0.0) || opts.cfl > MAX_CFL {
        let s = initial.max_wave_speed();
        return Err(Error::TimeStep { dt: opts.cfl * dx / s, limit: MAX_CFL * dx / s });
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::Parameter(format!("t_end must be positive, got {t_end}")));
    }
    if opts.n_snapshots == 0 {
        return Err(Error::Parameter("need at least one snapshot interval".into()));
    }
    if let Some(&r) = initial.rho.iter().find(|r| !(**r >= VACUUM_DENSITY)) {
        return Err(Error::Vacuum { time: 0.0, rho: r });
    }
    let n = initial.grid.n_cells();
    let gamma = initial.gamma;
    let mut rho = initial.rho.clone();
    let mut mom = initial.momentum.clone();
    let mut speed = vec![0.0; n];
    let mut flux_rho = vec![0.0; n];
    let mut flux_mom = vec![0.0; n];
    let mut pressure_flux = vec![0.0; n];
    let mut states = vec![EulerState1D { time: 0.0, ..initial.clone() }];
    let mut t = 0.0;
    for k in 1..=opts.n_snapshots {
        let target = t_end * k as f64 / opts.n_snapshots as f64;
        while t < target {
            for i in 0..n {
                speed[i] = wave_speed(rho[i], mom[i], gamma);
                pressure_flux[i] = mom[i] * mom[i] / rho[i] + rho[i].powf(gamma);
            }
            let s_max = speed.iter().copied().fold(0.0, f64::max);
            let mut dt = opts.cfl * dx / s_max;
            if t + dt >= target {
                dt = target - t;
            }
            // Interface i sits between cells i and i + 1.
            for i in 0..n {
                let r = (i + 1) % n;
                let a = speed[i].max(speed[r]);
                flux_rho[i] = 0.5 * (mom[i] + mom[r]) - 0.5 * a * (rho[r] - rho[i]);
                flux_mom[i] = 0.5 * (pressure_flux[i] + pressure_flux[r]) - 0.5 * a * (mom[r] - mom[i]);
            }
            let ratio = dt / dx;
            for i in 0..n {
                let l = (i + n - 1) % n;
                rho[i] -= ratio * (flux_rho[i] - flux_rho[l]);
                mom[i] -= ratio * (flux_mom[i] - flux_mom[l]);
            }
            t = if t + dt >= target { target } else { t + dt };
            if let Some(&r) = rho.iter().find(|r| !(**r >= VACUUM_DENSITY)) {
                return Err(Error::Vacuum { time: t, rho: r });
            }
        }
        states.push(EulerState1D { grid: initial.grid, rho: rho.clone(), momentum: mom.clone(), gamma, time: target });
    }
    Ok(states)
}
