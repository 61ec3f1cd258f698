//! Parabolic regularization `∂_t w + ∂_x f_n(w) = (1/n) ∂_xx w` with the
//! mollified flux `f_n = f * η^{ε_n}`.

use rayon::prelude::*;

use super::{choose_epsilon_n, mollify_on_demand, FluxSpec, Mollifier, RunOptions};
use crate::error::{Error, Result};
use crate::grid::{ScalarField, Trajectory};

/// Table resolution for the mollified flux used by the scheme.
const FLUX_TABLE_INTERVALS: usize = 1 << 16;

/// One member of the vanishing-viscosity sequence.
#[derive(Debug, Clone)]
pub struct ViscousRun {
    /// Viscosity index; the viscosity is `1/n`.
    pub n: u32,
    pub epsilon_n: f64,
    pub flux_n: FluxSpec,
    pub trajectory: Trajectory,
    pub dt: f64,
}

impl ViscousRun {
    pub fn viscosity(&self) -> f64 {
        1.0 / self.n as f64
    }
}

/// Explicit conservative evolution of the regularized problem.
///
/// Convection uses the local Lax–Friedrichs flux built on `f_n`, diffusion the
/// centered second difference. The time step obeys both
/// `dt <= c·dx / max|f_n'|` and `dt <= c·dx²·n / 2`.
pub fn solve_viscous(u0: &ScalarField, flux: &FluxSpec, n: u32, t_end: f64, opts: &RunOptions) -> Result<ViscousRun> {
    let z_bound = u0.max_abs();
    let epsilon_n = choose_epsilon_n(flux, n, z_bound)?;
    let moll = Mollifier::new(epsilon_n)?;
    let flux_n = mollify_on_demand(flux, &moll, z_bound + 1.0, FLUX_TABLE_INTERVALS)?;

    let grid = *u0.grid();
    let dx = grid.dx();
    let nu = 1.0 / n as f64;
    let speed = flux_n.max_speed(u0.min(), u0.max());
    let advective = if speed > 0.0 { opts.c_safety * dx / speed } else { f64::INFINITY };
    let diffusive = opts.c_safety * dx * dx * n as f64 / 2.0;
    let (substeps, dt) = opts.substeps(t_end, advective.min(diffusive))?;

    let cells = grid.n_cells();
    let ratio = dt / dx;
    let diffusion = nu * dt / (dx * dx);
    let bound = 10.0 * z_bound.max(f64::MIN_POSITIVE);
    let mut w = u0.values().to_vec();
    let mut f = vec![0.0; cells];
    let mut speeds = vec![0.0; cells];
    let mut faces = vec![0.0; cells];
    let mut next = vec![0.0; cells];
    let mut snapshots = vec![ScalarField::new(grid, w.clone(), 0.0)?];
    for k in 1..=opts.n_snapshots {
        for _ in 0..substeps {
            for i in 0..cells {
                let (j, s) = flux_n.locate(w[i]);
                let (lo, hi) = (flux_n.samples()[j], flux_n.samples()[j + 1]);
                f[i] = lo + s * (hi - lo);
                speeds[i] = flux_n.slope(j).abs();
            }
            for i in 0..cells {
                let r = (i + 1) % cells;
                let alpha = speeds[i].max(speeds[r]);
                faces[i] = 0.5 * (f[i] + f[r]) - 0.5 * alpha * (w[r] - w[i]);
            }
            for i in 0..cells {
                let l = (i + cells - 1) % cells;
                let r = (i + 1) % cells;
                next[i] = w[i] - ratio * (faces[i] - faces[l]) + diffusion * (w[r] - 2.0 * w[i] + w[l]);
            }
            std::mem::swap(&mut w, &mut next);
        }
        let t = t_end * k as f64 / opts.n_snapshots as f64;
        if let Some(m) = w.iter().map(|v| v.abs()).find(|m| !(m <= &bound)) {
            return Err(Error::Instability { time: t, magnitude: m, bound });
        }
        snapshots.push(ScalarField::new(grid, w.clone(), t)?);
    }
    Ok(ViscousRun { n, epsilon_n, flux_n, trajectory: Trajectory::new(snapshots)?, dt })
}

/// Runs the viscosity ladder concurrently; results are ordered like `ns`.
pub fn solve_viscous_ladder(
    u0: &ScalarField,
    flux: &FluxSpec,
    ns: &[u32],
    t_end: f64,
    opts: &RunOptions,
) -> Result<Vec<ViscousRun>> {
    ns.par_iter().map(|&n| solve_viscous(u0, flux, n, t_end, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate, l1_distance, PeriodicGrid};

    #[test]
    fn constants_solve_the_regularized_problem() {
        let g = PeriodicGrid::new(64).unwrap();
        let u0 = ScalarField::constant(g, -0.4).unwrap();
        let flux = FluxSpec::burgers(2.0, 400).unwrap();
        let run = solve_viscous(&u0, &flux, 16, 0.5, &RunOptions::with_snapshots(4)).unwrap();
        for s in run.trajectory.snapshots() {
            assert!(s.values().iter().all(|&v| v == -0.4));
        }
    }

    #[test]
    fn time_step_respects_both_bounds() {
        let g = PeriodicGrid::new(128).unwrap();
        let u0 = ScalarField::from_fn(g, f64::sin).unwrap();
        let flux = FluxSpec::burgers(2.0, 400).unwrap();
        let run = solve_viscous(&u0, &flux, 8, 0.5, &RunOptions::default()).unwrap();
        let dx = g.dx();
        let speed = run.flux_n.max_speed(-1.0, 1.0);
        assert!(run.dt <= 0.4 * dx / speed * (1.0 + 1e-12));
        assert!(run.dt <= 0.4 * dx * dx * 8.0 / 2.0 * (1.0 + 1e-12));
        assert_eq!(run.epsilon_n, choose_epsilon_n(&flux, 8, 1.0).unwrap());
    }

    #[test]
    fn linear_transport_with_tiny_viscosity() {
        let g = PeriodicGrid::new(512).unwrap();
        let u0 = ScalarField::from_fn(g, f64::sin).unwrap();
        let flux = FluxSpec::linear(1.0, 2.0, 400).unwrap();
        let n = 1_000_000;
        let run = solve_viscous(&u0, &flux, n, 1.0, &RunOptions::with_snapshots(4)).unwrap();
        let exact = ScalarField::new(g, g.sample(|x| (x - 1.0).sin()), 1.0).unwrap();
        let err =
            l1_distance(&ScalarField::new(g, run.trajectory.last().values().to_vec(), 1.0).unwrap(), &exact).unwrap();
        // LLF numerical diffusion dominates: O(dx + 1/n) with a modest constant.
        assert!(err <= 4.0 * (g.dx() + 1.0 / n as f64), "err = {err}");
    }

    /// Solves u = sin(x - u t) by bisection on the bracket [-1, 1].
    fn burgers_characteristics(x: f64, t: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        let g = |u: f64| u - (x - u * t).sin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn pre_shock_burgers_matches_characteristics() {
        let t = 0.5;
        let flux = FluxSpec::burgers(2.0, 400).unwrap();
        let mut errs = Vec::new();
        for cells in [128usize, 256, 512] {
            let g = PeriodicGrid::new(cells).unwrap();
            let u0 = ScalarField::from_fn(g, f64::sin).unwrap();
            let n = 4 * cells as u32;
            let run = solve_viscous(&u0, &flux, n, t, &RunOptions::with_snapshots(2)).unwrap();
            let exact = ScalarField::new(g, g.sample(|x| burgers_characteristics(x, t)), t).unwrap();
            let err = l1_distance(run.trajectory.last(), &exact).unwrap();
            assert!(err <= 3.0 * (g.dx() + 1.0 / n as f64), "cells {cells}: err {err}");
            errs.push(err);
        }
        assert!(errs[2] < errs[1] && errs[1] < errs[0]);
    }

    #[test]
    fn conserves_mass_and_l1_norm() {
        let g = PeriodicGrid::new(256).unwrap();
        let u0 = ScalarField::from_fn(g, |x| 0.2 + x.sin()).unwrap();
        let flux = FluxSpec::burgers(2.0, 400).unwrap();
        let run = solve_viscous(&u0, &flux, 64, 1.5, &RunOptions::default()).unwrap();
        let m0 = integrate(&u0);
        let l1 = u0.l1_norm();
        for s in run.trajectory.snapshots() {
            assert!((integrate(s) - m0).abs() <= 1e-10 * m0.abs());
            assert!(s.l1_norm() <= l1 + 1e-10);
        }
    }

    #[test]
    fn ladder_preserves_order() {
        let g = PeriodicGrid::new(64).unwrap();
        let u0 = ScalarField::from_fn(g, f64::sin).unwrap();
        let flux = FluxSpec::burgers(2.0, 400).unwrap();
        let runs = solve_viscous_ladder(&u0, &flux, &[4, 16, 2], 0.2, &RunOptions::with_snapshots(2)).unwrap();
        assert_eq!(runs.iter().map(|r| r.n).collect::<Vec<_>>(), vec![4, 16, 2]);
    }
}
