//! Engquist–Osher finite-volume solver, used as the discrete entropy solution.

use super::{FluxSpec, RunOptions};
use crate::error::{Error, Result};
use crate::grid::{ScalarField, Trajectory};

/// Cumulative increasing and decreasing variation of the flux table, so that
/// `f(u) = f(λ_0) + P(u) + M(u)` and the EO flux is `f(λ_0) + P(a) + M(b)`.
struct EoTable<'a> {
    flux: &'a FluxSpec,
    up: Vec<f64>,
    down: Vec<f64>,
}

impl<'a> EoTable<'a> {
    fn new(flux: &'a FluxSpec) -> Self {
        let s = flux.samples();
        let mut up = Vec::with_capacity(s.len());
        let mut down = Vec::with_capacity(s.len());
        let (mut p, mut m) = (0.0, 0.0);
        up.push(p);
        down.push(m);
        for w in s.windows(2) {
            let d = w[1] - w[0];
            p += d.max(0.0);
            m += d.min(0.0);
            up.push(p);
            down.push(m);
        }
        Self { flux, up, down }
    }

    fn increasing(&self, u: f64) -> f64 {
        let (i, s) = self.flux.locate(u);
        self.up[i] + s * (self.up[i + 1] - self.up[i])
    }

    fn decreasing(&self, u: f64) -> f64 {
        let (i, s) = self.flux.locate(u);
        self.down[i] + s * (self.down[i + 1] - self.down[i])
    }

    fn numerical_flux(&self, a: f64, b: f64) -> f64 {
        self.flux.samples()[0] + self.increasing(a) + self.decreasing(b)
    }
}

/// Monotone conservative evolution of `u0` to `t_end`.
///
/// Being monotone, the scheme keeps `min u0 <= w <= max u0` and contracts
/// the discrete L¹ distance between any two runs.
pub fn solve_reference(u0: &ScalarField, flux: &FluxSpec, t_end: f64, opts: &RunOptions) -> Result<Trajectory> {
    let (lo, hi) = (u0.min(), u0.max());
    for v in [lo, hi] {
        if !flux.contains(v) {
            return Err(Error::OutOfRange { value: v, lo: -flux.half_range(), hi: flux.half_range() });
        }
    }
    let grid = *u0.grid();
    let dx = grid.dx();
    let speed = flux.max_speed(lo, hi);
    let dt_limit = if speed > 0.0 { opts.c_safety * dx / speed } else { f64::INFINITY };
    let (substeps, dt) = opts.substeps(t_end, dt_limit)?;
    let bound = 10.0 * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);

    let table = EoTable::new(flux);
    let n = grid.n_cells();
    let ratio = dt / dx;
    let mut w = u0.values().to_vec();
    let mut faces = vec![0.0; n];
    let mut snapshots = vec![ScalarField::new(grid, w.clone(), 0.0)?];
    for k in 1..=opts.n_snapshots {
        for _ in 0..substeps {
            // faces[i] is the flux through the right edge of cell i.
            for i in 0..n {
                faces[i] = table.numerical_flux(w[i], w[(i + 1) % n]);
            }
            for i in 0..n {
                let left = faces[(i + n - 1) % n];
                w[i] -= ratio * (faces[i] - left);
            }
        }
        let t = t_end * k as f64 / opts.n_snapshots as f64;
        if let Some(m) = w.iter().map(|v| v.abs()).find(|m| !(m <= &bound)) {
            return Err(Error::Instability { time: t, magnitude: m, bound });
        }
        snapshots.push(ScalarField::new(grid, w.clone(), t)?);
    }
    Trajectory::new(snapshots)
}
