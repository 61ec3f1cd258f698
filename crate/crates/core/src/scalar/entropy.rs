//! Kruzhkov entropy pairs and the entropy inequality tested against a bank
//! of non-negative space-time bumps.

use super::FluxSpec;
use crate::error::{Error, Result};
use crate::grid::{l1_distance, PeriodicGrid, Trajectory};

/// Multiplier in `tol_entropy = C_TOL · (dx + Δt_snap) · ‖φ‖_{C¹}`.
pub const C_TOL: f64 = 5.0;

/// Kruzhkov entropy `|λ - k|` with flux `sgn(λ - k)(f(λ) - f(k))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KruzhkovPair {
    pub k: f64,
}

impl KruzhkovPair {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::Parameter(format!("Kruzhkov constant must be finite, got {k}")));
        }
        Ok(Self { k })
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Returns `(η_k(u), q_k(u))`.
pub fn eval_kruzhkov(pair: KruzhkovPair, flux: &FluxSpec, u: f64) -> Result<(f64, f64)> {
    let fu = flux.eval(u)?;
    let fk = flux.eval(pair.k)?;
    Ok(((u - pair.k).abs(), sign(u - pair.k) * (fu - fk)))
}

/// `(1 - s²)³` on `|s| < 1`.
fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - s * s).powi(3)
    }
}

fn bump_derivative(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        -6.0 * s * (1.0 - s * s).powi(2)
    }
}

/// `max |b'|`, attained at `s = 1/√5`.
fn bump_derivative_max() -> f64 {
    let s = 1.0 / 5f64.sqrt();
    6.0 * s * (1.0 - s * s).powi(2)
}

/// Tensor-product bump `A · b((x - x_c)/h_x) · b((t - t_c)/h_t)`, periodic in `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub x_center: f64,
    pub x_half_width: f64,
    pub t_center: f64,
    pub t_half_width: f64,
    pub amplitude: f64,
}

impl TestFunction {
    fn offset(&self, x: f64, length: f64) -> f64 {
        let d = (x - self.x_center).rem_euclid(length);
        if d > 0.5 * length {
            d - length
        } else {
            d
        }
    }

    pub fn value(&self, x: f64, t: f64, length: f64) -> f64 {
        let sx = self.offset(x, length) / self.x_half_width;
        let st = (t - self.t_center) / self.t_half_width;
        self.amplitude * bump(sx) * bump(st)
    }

    /// `(∂_x φ, ∂_t φ)`.
    pub fn gradient(&self, x: f64, t: f64, length: f64) -> (f64, f64) {
        let sx = self.offset(x, length) / self.x_half_width;
        let st = (t - self.t_center) / self.t_half_width;
        let a = self.amplitude;
        (a * bump_derivative(sx) * bump(st) / self.x_half_width, a * bump(sx) * bump_derivative(st) / self.t_half_width)
    }

    /// `sup|φ| + sup|∂_x φ| + sup|∂_t φ|`.
    pub fn c1_norm(&self) -> f64 {
        let d = bump_derivative_max();
        self.amplitude.abs() * (1.0 + d / self.x_half_width + d / self.t_half_width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionBank {
    pub members: Vec<TestFunction>,
}

impl TestFunctionBank {
    /// 4×4 lattice: space centers `(i + ½)L/4` with half-width `L/4`, time
    /// centers `jT/4` with half-width `T/4`, so every member vanishes at `T`.
    pub fn lattice(length: f64, t_end: f64) -> Self {
        let mut members = Vec::with_capacity(16);
        for i in 0..4 {
            for j in 0..4 {
                members.push(TestFunction {
                    x_center: (i as f64 + 0.5) * length / 4.0,
                    x_half_width: length / 4.0,
                    t_center: j as f64 * t_end / 4.0,
                    t_half_width: t_end / 4.0,
                    amplitude: 1.0,
                });
            }
        }
        Self { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Every member must be non-negative and vanish at `t_end`.
    pub fn validate(&self, length: f64, t_end: f64) -> Result<()> {
        for (index, phi) in self.members.iter().enumerate() {
            let fail = |reason: String| Err(Error::InvalidTestFunction { index, reason });
            if !(phi.amplitude >= 0.0) {
                return fail(format!("negative amplitude {}", phi.amplitude));
            }
            if !(phi.x_half_width > 0.0 && phi.t_half_width > 0.0) {
                return fail("half-widths must be positive".into());
            }
            if phi.x_half_width > 0.5 * length {
                return fail("spatial support wraps the torus".into());
            }
            if phi.t_center + phi.t_half_width > t_end * (1.0 + 1e-12) {
                return fail(format!("does not vanish at t_end = {t_end}"));
            }
        }
        Ok(())
    }
}

/// One evaluation of the weak entropy inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualEntry {
    pub k: f64,
    pub phi_index: usize,
    pub residual: f64,
    pub tolerance: f64,
}

impl ResidualEntry {
    pub fn pass(&self) -> bool {
        self.residual >= -self.tolerance
    }
}

/// Discrete weak form of `∂_t|u - k| + ∂_x q(u, k) <= 0`:
///
/// `R(φ, k) = ∫∫ |w - k| ∂_t φ + q(w, k) ∂_x φ dx dt + ∫ |u0 - k| φ(·, 0) dx`,
///
/// midpoint in space, trapezoid over snapshots. An entropy solution has
/// `R >= -tol_entropy` for every member of the bank.
pub fn entropy_residual(
    traj: &Trajectory,
    flux: &FluxSpec,
    k: f64,
    bank: &TestFunctionBank,
) -> Result<Vec<ResidualEntry>> {
    let grid = *traj.grid();
    let length = grid.length();
    let t_end = traj.t_end();
    if traj.len() < 2 {
        return Err(Error::Parameter("entropy residual needs at least two snapshots".into()));
    }
    bank.validate(length, t_end)?;
    let pair = KruzhkovPair::new(k)?;
    let dx = grid.dx();
    let dt = traj.dt_snap();
    let last = traj.len() - 1;
    let xs = grid.cell_centers();

    // η and q are independent of φ; evaluate them once per sample.
    let mut eta = Vec::with_capacity(traj.len());
    let mut q = Vec::with_capacity(traj.len());
    for snap in traj.snapshots() {
        let mut e = Vec::with_capacity(xs.len());
        let mut f = Vec::with_capacity(xs.len());
        for &u in snap.values() {
            let (a, b) = eval_kruzhkov(pair, flux, u)?;
            e.push(a);
            f.push(b);
        }
        eta.push(e);
        q.push(f);
    }

    Ok(bank
        .members
        .iter()
        .enumerate()
        .map(|(phi_index, phi)| {
            let mut residual = 0.0;
            for (s, snap) in traj.snapshots().iter().enumerate() {
                let weight = if s == 0 || s == last { 0.5 * dt } else { dt };
                let t = snap.time();
                let mut slab = 0.0;
                for (i, &x) in xs.iter().enumerate() {
                    let (phi_x, phi_t) = phi.gradient(x, t, length);
                    slab += eta[s][i] * phi_t + q[s][i] * phi_x;
                }
                residual += weight * dx * slab;
            }
            let initial: f64 = xs.iter().enumerate().map(|(i, &x)| eta[0][i] * phi.value(x, 0.0, length)).sum();
            residual += dx * initial;
            ResidualEntry { k, phi_index, residual, tolerance: C_TOL * (dx + dt) * phi.c1_norm() }
        })
        .collect())
}

/// Stationary field `+A` on `(at, at + L/2)` and `-A` elsewhere, sampled at
/// `n_snapshots + 1` uniform times.
///
/// Both jumps have zero Rankine–Hugoniot speed for any even flux, so this is a
/// weak solution; the `-A → +A` jump at `at` is an expansion shock and breaks
/// the entropy inequality for convex fluxes.
pub fn stationary_expansion_shock(
    grid: PeriodicGrid,
    t_end: f64,
    n_snapshots: usize,
    amplitude: f64,
    at: f64,
) -> Result<Trajectory> {
    let length = grid.length();
    let times: Vec<f64> = (0..=n_snapshots).map(|i| t_end * i as f64 / n_snapshots as f64).collect();
    Trajectory::from_fn(
        grid,
        &times,
        |x, _| {
            if (x - at).rem_euclid(length) < 0.5 * length {
                amplitude
            } else {
                -amplitude
            }
        },
    )
}

/// `t ↦ ∫|a(t) - b(t)| dx` over shared snapshots.
pub fn contraction_series(a: &Trajectory, b: &Trajectory) -> Result<Vec<(f64, f64)>> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("{} vs {} snapshots", a.len(), b.len())));
    }
    a.snapshots()
        .iter()
        .zip(b.snapshots())
        .map(|(sa, sb)| {
            if (sa.time() - sb.time()).abs() > 1e-12 * (1.0 + sa.time().abs()) {
                return Err(Error::Dimension(format!("snapshot times {} vs {}", sa.time(), sb.time())));
            }
            Ok((sa.time(), l1_distance(sa, sb)?))
        })
        .collect()
}
