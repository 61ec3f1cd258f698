use rayon::prelude::*;

use super::{lax_friedrichs_euler, EulerOptions, EulerState1D};
use crate::error::{Error, Result};

/// `h(ρ) = ρ^γ / (γ - 1)`.
pub fn pressure_potential(rho: f64, gamma: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma > 1.0) {
        return Err(Error::Parameter(format!("adiabatic exponent must exceed 1, got {gamma}")));
    }
    if !(rho >= 0.0) {
        return Err(Error::RejectedInput(format!("density must be non-negative, got {rho}")));
    }
    Ok(rho.powf(gamma) / (gamma - 1.0))
}

/// Four-term integrand `ρ^γ/(γ-1) - γ/(γ-1) P^{γ-1} ρ + P^γ`.
pub fn four_term_density(rho: f64, p: f64, gamma: f64) -> f64 {
    rho.powf(gamma) / (gamma - 1.0) - gamma / (gamma - 1.0) * p.powf(gamma - 1.0) * rho + p.powf(gamma)
}

/// Convexity gap `h(ρ) - h(P) - h'(P)(ρ - P)`.
pub fn bregman_density(rho: f64, p: f64, gamma: f64) -> f64 {
    let h = |r: f64| r.powf(gamma) / (gamma - 1.0);
    let dh = gamma / (gamma - 1.0) * p.powf(gamma - 1.0);
    h(rho) - h(p) - dh * (rho - p)
}

/// `∫ ½ρ|u - U|² + h(ρ) - h(P) - h'(P)(ρ - P) dx` against the strong pair `(P, U)`.
///
/// Roundoff can push the convexity gap a few ulps below zero near
/// coincidence; such cells contribute zero.
pub fn rel_entropy_compressible(state: &EulerState1D, p: &[f64], u: &[f64]) -> Result<f64> {
    let n = state.grid().n_cells();
    if p.len() != n || u.len() != n {
        return Err(Error::Dimension(format!("strong fields have {} and {} values for {n} cells", p.len(), u.len())));
    }
    if let Some(&bad) = p.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Parameter(format!("strong density must be positive, got {bad}")));
    }
    let gamma = state.gamma();
    let sum: f64 = state
        .rho()
        .iter()
        .zip(state.momentum())
        .zip(p.iter().zip(u))
        .map(|((&r, &m), (&pp, &uu))| {
            let du = m / r - uu;
            0.5 * r * du * du + bregman_density(r, pp, gamma).max(0.0)
        })
        .sum();
    Ok(sum * state.grid().dx())
}

/// Velocity samples of `dim` components per point; `cell_measure` is the
/// quadrature weight of one point.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    dim: usize,
    cell_measure: f64,
    data: Vec<f64>,
}

impl VelocityField {
    pub fn new(dim: usize, cell_measure: f64, data: Vec<f64>) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Dimension(format!("velocity fields are 1D or 2D, got {dim}")));
        }
        if !data.len().is_multiple_of(dim) || data.is_empty() {
            return Err(Error::Dimension(format!("{} components do not split into {dim}-vectors", data.len())));
        }
        if !(cell_measure > 0.0) || data.iter().any(|v| !v.is_finite()) {
            return Err(Error::RejectedInput("velocity field needs finite data and positive cell measure".into()));
        }
        Ok(Self { dim, cell_measure, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn cell_measure(&self) -> f64 {
        self.cell_measure
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.data.len() == other.data.len() && self.cell_measure == other.cell_measure
    }
}

/// Empirical measure-valued velocity: `frames[t][member]` plus the
/// dissipation defect `D(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityEnsemble {
    frames: Vec<Vec<VelocityField>>,
    defect: Vec<f64>,
}

impl VelocityEnsemble {
    pub fn new(frames: Vec<Vec<VelocityField>>, defect: Vec<f64>) -> Result<Self> {
        if frames.is_empty() || frames.len() != defect.len() {
            return Err(Error::Dimension(format!("{} frames for {} defect values", frames.len(), defect.len())));
        }
        let reference =
            frames[0].first().ok_or_else(|| Error::Dimension("ensemble frames need at least one member".into()))?;
        for frame in &frames {
            if frame.is_empty() || frame.iter().any(|m| !m.same_shape(reference)) {
                return Err(Error::Dimension("ensemble members differ in shape".into()));
            }
        }
        if let Some(&d) = defect.iter().find(|d| !(**d >= 0.0)) {
            return Err(Error::RejectedInput(format!("dissipation defect must be non-negative, got {d}")));
        }
        Ok(Self { frames, defect })
    }

    /// One time level.
    pub fn single(members: Vec<VelocityField>, defect: f64) -> Result<Self> {
        Self::new(vec![members], vec![defect])
    }

    pub fn n_times(&self) -> usize {
        self.frames.len()
    }

    pub fn members(&self, t_index: usize) -> &[VelocityField] {
        &self.frames[t_index]
    }

    pub fn defect(&self) -> &[f64] {
        &self.defect
    }
}

/// `½ · mean_i ∫ |u_i - U|² dx + D(t)`.
pub fn rel_entropy_incompressible(ens: &VelocityEnsemble, strong: &VelocityField, t_index: usize) -> Result<f64> {
    if t_index >= ens.n_times() {
        return Err(Error::Dimension(format!("time index {t_index} beyond {} frames", ens.n_times())));
    }
    let members = ens.members(t_index);
    if !members[0].same_shape(strong) {
        return Err(Error::Dimension("strong field and ensemble differ in shape".into()));
    }
    let total: f64 = members
        .par_iter()
        .map(|m| m.data.iter().zip(&strong.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * strong.cell_measure)
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(0.5 * total / members.len() as f64 + ens.defect[t_index])
}

#[derive(Debug, Clone, PartialEq)]
pub struct GronwallReport {
    pub times: Vec<f64>,
    pub e_rel: Vec<f64>,
    /// `E_rel(0) · exp(c_g ∫₀^t g) + tol_g`.
    pub bound: Vec<f64>,
    pub pass: Vec<bool>,
}

impl GronwallReport {
    pub fn passed(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }

    /// First time where the bound is exceeded.
    pub fn first_failure(&self) -> Option<f64> {
        self.pass.iter().position(|p| !p).map(|i| self.times[i])
    }
}

/// Checks `E_rel(t) <= E_rel(0) exp(c_g ∫₀^t g) + tol_g` with
/// `tol_g = 1e-8 + 0.05 E_rel(0)`; the integral is the trapezoid rule on `times`.
pub fn gronwall_check(times: &[f64], e_rel: &[f64], gradient_norm: &[f64], c_g: f64) -> Result<GronwallReport> {
    if times.is_empty() || times.len() != e_rel.len() || times.len() != gradient_norm.len() {
        return Err(Error::Dimension(format!(
            "series lengths differ: {} times, {} values, {} gradients",
            times.len(),
            e_rel.len(),
            gradient_norm.len()
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::RejectedInput("times must increase".into()));
    }
    let e0 = e_rel[0];
    let tol = 1e-8 + 0.05 * e0;
    let mut integral = 0.0;
    let mut bound = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        if i > 0 {
            integral += 0.5 * (gradient_norm[i] + gradient_norm[i - 1]) * (times[i] - times[i - 1]);
        }
        bound.push(e0 * (c_g * integral).exp() + tol);
    }
    let pass = e_rel.iter().zip(&bound).map(|(e, b)| e <= b).collect();
    Ok(GronwallReport { times: times.to_vec(), e_rel: e_rel.to_vec(), bound, pass })
}

/// Shock proxy: the strong solution is abandoned once `max |∂_x U|` exceeds this.
pub const SHOCK_GRADIENT: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub n_cells: usize,
    /// Gronwall check over the pre-shock window.
    pub report: GronwallReport,
    /// `E_rel` at every snapshot, including post-shock ones.
    pub e_rel_full: Vec<f64>,
    pub max_e_rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakStrongReport {
    pub times: Vec<f64>,
    /// Strong-run `max |∂_x U|` per snapshot.
    pub gradient: Vec<f64>,
    /// First snapshot time at which the shock proxy fires.
    pub shock_time: Option<f64>,
    pub levels: Vec<LevelReport>,
    /// Strong run, for export.
    pub strong: Vec<EulerState1D>,
}

fn block_average(values: &[f64], factor: usize) -> Vec<f64> {
    values.chunks(factor).map(|c| c.iter().sum::<f64>() / factor as f64).collect()
}

fn inject(values: &[f64], factor: usize) -> Vec<f64> {
    values.iter().flat_map(|&v| std::iter::repeat_n(v, factor)).collect()
}

/// Runs the fine "strong" solution and a coarse ladder from its cell averages,
/// then measures `E_rel` of each coarse run (injected piecewise constant onto
/// the fine grid, a Dirac ensemble) against the strong run.
pub fn weak_strong_experiment(
    fine_initial: &EulerState1D,
    levels: &[usize],
    t_end: f64,
    opts: &EulerOptions,
    c_g: f64,
) -> Result<WeakStrongReport> {
    let fine_n = fine_initial.grid().n_cells();
    let length = fine_initial.grid().length();
    for &n in levels {
        if n == 0 || !fine_n.is_multiple_of(n) {
            return Err(Error::Parameter(format!("coarse level {n} does not divide the fine grid {fine_n}")));
        }
    }
    let strong = lax_friedrichs_euler(fine_initial, t_end, opts)?;
    let times: Vec<f64> = strong.iter().map(|s| s.time()).collect();
    let gradient: Vec<f64> = strong.iter().map(|s| s.max_velocity_gradient()).collect();
    let window = gradient.iter().position(|&g| g > SHOCK_GRADIENT).unwrap_or(times.len());
    let shock_time = (window < times.len()).then(|| times[window]);
    let strong_u: Vec<Vec<f64>> = strong.iter().map(|s| s.velocity()).collect();

    let level_reports = levels
        .par_iter()
        .map(|&n| {
            let factor = fine_n / n;
            let grid = crate::grid::PeriodicGrid::with_length(n, length)?;
            let init = EulerState1D::new(
                grid,
                block_average(fine_initial.rho(), factor),
                block_average(fine_initial.momentum(), factor),
                fine_initial.gamma(),
                0.0,
            )?;
            let run = lax_friedrichs_euler(&init, t_end, opts)?;
            let e_rel_full = run
                .iter()
                .zip(strong.iter().zip(&strong_u))
                .map(|(c, (s, su))| {
                    let lifted = EulerState1D::new(
                        *s.grid(),
                        inject(c.rho(), factor),
                        inject(c.momentum(), factor),
                        c.gamma(),
                        c.time(),
                    )?;
                    rel_entropy_compressible(&lifted, s.rho(), su)
                })
                .collect::<Result<Vec<f64>>>()?;
            let w = window.max(1);
            let report = gronwall_check(&times[..w], &e_rel_full[..w], &gradient[..w], c_g)?;
            let max_e_rel = report.e_rel.iter().copied().fold(0.0, f64::max);
            Ok(LevelReport { n_cells: n, report, e_rel_full, max_e_rel })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeakStrongReport { times, gradient, shock_time, levels: level_reports, strong })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    #[test]
    fn pressure_potential_examples() {
        assert_eq!(pressure_potential(0.0, 1.4).unwrap(), 0.0);
        assert_eq!(pressure_potential(1.0, 2.0).unwrap(), 1.0);
        assert!((pressure_potential(2.0, 1.4).unwrap() - 6.59753955386447).abs() < 1e-12);
        assert!(matches!(pressure_potential(1.0, 1.0), Err(Error::Parameter(_))));
    }

    fn state(rho: Vec<f64>, u: &[f64], gamma: f64) -> EulerState1D {
        let g = PeriodicGrid::new(rho.len()).unwrap();
        let m = rho.iter().zip(u).map(|(r, u)| r * u).collect();
        EulerState1D::new(g, rho, m, gamma, 0.0).unwrap()
    }

    #[test]
    fn compressible_examples() {
        let n = 16;
        let g = PeriodicGrid::new(n).unwrap();
        let p = g.sample(|x| 1.0 + 0.5 * x.sin());
        let u = g.sample(|x| 0.3 * x.cos());
        // Only the ρu/ρ round trip separates the state from (P, U).
        assert!(rel_entropy_compressible(&state(p.clone(), &u, 1.4), &p, &u).unwrap() <= 1e-30);

        let shifted: Vec<f64> = u.iter().map(|v| v + 0.2).collect();
        let e = rel_entropy_compressible(&state(p.clone(), &shifted, 1.4), &p, &u).unwrap();
        let expected = 0.5 * 0.04 * p.iter().sum::<f64>() * g.dx();
        assert!((e - expected).abs() < 1e-12);

        let e =
            rel_entropy_compressible(&state(vec![2.0; n], &vec![0.0; n], 2.0), &vec![1.0; n], &vec![0.0; n]).unwrap();
        assert!((e - TAU).abs() < 1e-12);
        assert_eq!(four_term_density(2.0, 1.0, 2.0), 1.0);
        assert_eq!(bregman_density(2.0, 1.0, 2.0), 1.0);

        assert!(matches!(
            rel_entropy_compressible(&state(vec![1.0; n], &vec![0.0; n], 2.0), &vec![0.0; n], &vec![0.0; n]),
            Err(Error::Parameter(_))
        ));
    }

    fn field(dim: usize, data: Vec<f64>) -> VelocityField {
        VelocityField::new(dim, 0.25, data).unwrap()
    }

    #[test]
    fn incompressible_examples() {
        let u = field(2, vec![1.0, 0.0, 0.5, -0.5, 0.0, 2.0, -1.0, 1.0]);
        let ens = VelocityEnsemble::single(vec![u.clone()], 0.0).unwrap();
        assert_eq!(rel_entropy_incompressible(&ens, &u, 0).unwrap(), 0.0);

        let c = [0.3, -0.4];
        let plus = field(2, u.data().iter().enumerate().map(|(i, v)| v + c[i % 2]).collect());
        let minus = field(2, u.data().iter().enumerate().map(|(i, v)| v - c[i % 2]).collect());
        let ens = VelocityEnsemble::single(vec![plus, minus], 0.0).unwrap();
        // ½ · |c|² · area, area = 4 points × 0.25.
        assert!((rel_entropy_incompressible(&ens, &u, 0).unwrap() - 0.5 * 0.25).abs() < 1e-15);

        let ens = VelocityEnsemble::single(vec![u.clone()], 0.7).unwrap();
        assert_eq!(rel_entropy_incompressible(&ens, &u, 0).unwrap(), 0.7);

        let one_d = field(1, vec![0.0; 8]);
        assert!(matches!(rel_entropy_incompressible(&ens, &one_d, 0), Err(Error::Dimension(_))));
        assert!(VelocityEnsemble::single(vec![u.clone(), one_d], 0.0).is_err());
        assert!(VelocityEnsemble::single(vec![u], -1.0).is_err());
    }

    #[test]
    fn gronwall_examples() {
        let times: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1).collect();
        let zero = vec![0.0; times.len()];
        let grad = vec![1.0; times.len()];
        assert!(gronwall_check(&times, &zero, &grad, 2.0).unwrap().passed());

        let exp = |kappa: f64| times.iter().map(|t| 0.1 * (kappa * t).exp()).collect::<Vec<_>>();
        assert!(gronwall_check(&times, &exp(2.0), &grad, 2.0).unwrap().passed());
        assert!(gronwall_check(&times, &exp(1.9), &grad, 2.0).unwrap().passed());
        assert!(!gronwall_check(&times, &exp(2.1), &grad, 2.0).unwrap().passed());

        let mut late = zero.clone();
        late[30] = 1e-6;
        let r = gronwall_check(&times, &late, &grad, 2.0).unwrap();
        assert!(!r.passed());
        assert_eq!(r.first_failure(), Some(times[30]));
        assert!(r.bound.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn coarse_equal_to_fine_gives_zero() {
        let g = PeriodicGrid::new(64).unwrap();
        let s = EulerState1D::from_primitive(g, |x| 1.0 + 0.2 * x.sin(), |x| 0.1 * x.cos(), 1.4).unwrap();
        let r = weak_strong_experiment(&s, &[64], 0.5, &EulerOptions { n_snapshots: 8, ..Default::default() }, 2.0)
            .unwrap();
        assert!(r.levels[0].e_rel_full.iter().all(|&e| e == 0.0));
        assert!(r.levels[0].report.passed());
        assert!(r.shock_time.is_none());
        assert!(weak_strong_experiment(&s, &[48], 0.5, &EulerOptions::default(), 2.0).is_err());
    }

    proptest! {
        #[test]
        fn bregman_identity_and_positivity(rho in 0.01..10.0f64, p in 0.01..10.0f64, gi in 0usize..3) {
            let gamma = [1.4, 2.0, 3.0][gi];
            let four = four_term_density(rho, p, gamma);
            let breg = bregman_density(rho, p, gamma);
            let scale = rho.powf(gamma) / (gamma - 1.0) + gamma / (gamma - 1.0) * p.powf(gamma - 1.0) * rho + p.powf(gamma);
            prop_assert!((four - breg).abs() <= 1e-12 * scale);
            prop_assert!(breg >= -1e-12 * scale);
            if (rho - p).abs() > 1e-3 {
                prop_assert!(breg > 0.0);
            }
            prop_assert_eq!(bregman_density(p, p, gamma), 0.0);
        }

        #[test]
        fn incompressible_scaling_is_quadratic(
            dev in prop::collection::vec(-2.0..2.0f64, 8),
            base in prop::collection::vec(-2.0..2.0f64, 8),
            alpha in -3.0..3.0f64,
            d in 0.0..1.0f64,
        ) {
            let strong = field(2, base.clone());
            let member = |a: f64| field(2, base.iter().zip(&dev).map(|(b, v)| b + a * v).collect());
            let e1 = rel_entropy_incompressible(&VelocityEnsemble::single(vec![member(1.0)], d).unwrap(), &strong, 0).unwrap();
            let ea = rel_entropy_incompressible(&VelocityEnsemble::single(vec![member(alpha)], d).unwrap(), &strong, 0).unwrap();
            prop_assert!(((ea - d) - alpha * alpha * (e1 - d)).abs() <= 1e-12 * (1.0 + e1));
            prop_assert!(e1 >= d);
        }

        #[test]
        fn gronwall_is_monotone_in_c_g(
            values in prop::collection::vec(0.0..2.0f64, 10),
            grads in prop::collection::vec(0.0..2.0f64, 10),
            c in 0.0..4.0f64,
            extra in 0.0..4.0f64,
        ) {
            let times: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
            let low = gronwall_check(&times, &values, &grads, c).unwrap();
            let high = gronwall_check(&times, &values, &grads, c + extra).unwrap();
            prop_assert!(!low.passed() || high.passed());
        }
    }
}
