//! Renewal (McKendrick–Von Foerster) equation in growth-rescaled form
//! `∂_t ñ + ∂_x ñ + λ₀ ñ = 0`, `ñ(t, 0) = ∫ B ñ`, with its primal and dual
//! eigenproblems and the general relative entropy `∫ φ |ñ - m₀ N|`.

use crate::error::{Error, Result};

/// Largest Simpson panel width used for integrals of `B`.
const QUAD_H: f64 = 2.5e-4;

/// Below this, `H` is treated as converged and excluded from rate fits.
pub const H_FLOOR: f64 = 1e-13;

/// Cell-centered age grid on `[0, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeGrid {
    x_max: f64,
    n_cells: usize,
}

impl AgeGrid {
    pub fn new(x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_max.is_finite() && x_max > 0.0) || n_cells < 2 {
            return Err(Error::RejectedInput(format!("age grid needs x_max > 0 and 2+ cells, got {x_max}, {n_cells}")));
        }
        Ok(Self { x_max, n_cells })
    }

    /// Grid with spacing as close to `dx` as divides `x_max`.
    pub fn with_spacing(x_max: f64, dx: f64) -> Result<Self> {
        Self::new(x_max, (x_max / dx).round() as usize)
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.x_max / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    /// Requires the truncated tail `e^{-λ₀ x_max}` of `N` below `1e-10`.
    pub fn validate_tail(&self, lambda0: f64) -> Result<()> {
        let tail = (-lambda0 * self.x_max).exp();
        if tail >= 1e-10 {
            return Err(Error::Range(format!(
                "x_max = {} leaves tail mass {tail:e} of N; need below 1e-10",
                self.x_max
            )));
        }
        Ok(())
    }

    fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.dx()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BirthKind {
    /// `amplitude · e^{-rate x}`.
    Exponential { amplitude: f64, rate: f64 },
    /// `height · 𝟙[lo, hi]`.
    Indicator { height: f64, lo: f64, hi: f64 },
    /// Piecewise linear through `(ages, values)`, zero outside.
    Table { ages: Vec<f64>, values: Vec<f64> },
}

/// Birth rate `B >= 0` with `∫ B > 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthRate {
    kind: BirthKind,
    sup: f64,
    integral: f64,
}

impl BirthRate {
    pub fn new(kind: BirthKind) -> Result<Self> {
        let (sup, integral) = match &kind {
            BirthKind::Exponential { amplitude, rate } => {
                if !(*amplitude >= 0.0 && *rate > 0.0 && amplitude.is_finite() && rate.is_finite()) {
                    return Err(Error::Parameter(format!(
                        "exponential birth rate needs a >= 0, rate > 0, got {amplitude}, {rate}"
                    )));
                }
                (*amplitude, amplitude / rate)
            }
            BirthKind::Indicator { height, lo, hi } => {
                if !(*height >= 0.0 && *lo >= 0.0 && hi > lo && hi.is_finite()) {
                    return Err(Error::Parameter(format!(
                        "indicator birth rate needs h >= 0, 0 <= lo < hi, got {height}, [{lo}, {hi}]"
                    )));
                }
                (*height, height * (hi - lo))
            }
            BirthKind::Table { ages, values } => {
                if ages.len() < 2 || ages.len() != values.len() {
                    return Err(Error::Parameter("birth table needs matching ages and values, at least two".into()));
                }
                if ages[0] < 0.0 || ages.windows(2).any(|w| !(w[1] > w[0])) || !ages[ages.len() - 1].is_finite() {
                    return Err(Error::Parameter("birth table ages must be non-negative and increasing".into()));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::Parameter("birth table values must be finite and non-negative".into()));
                }
                let integral =
                    ages.windows(2).zip(values.windows(2)).map(|(a, v)| 0.5 * (a[1] - a[0]) * (v[0] + v[1])).sum();
                (values.iter().copied().fold(0.0, f64::max), integral)
            }
        };
        if integral <= 1.0 {
            return Err(Error::SubcriticalPopulation { integral });
        }
        Ok(Self { kind, sup, integral })
    }

    pub fn exponential(amplitude: f64, rate: f64) -> Result<Self> {
        Self::new(BirthKind::Exponential { amplitude, rate })
    }

    pub fn indicator(height: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(BirthKind::Indicator { height, lo, hi })
    }

    pub fn table(ages: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(BirthKind::Table { ages, values })
    }

    pub fn kind(&self) -> &BirthKind {
        &self.kind
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.kind {
            BirthKind::Exponential { amplitude, rate } => amplitude * (-rate * x).exp(),
            BirthKind::Indicator { height, lo, hi } => {
                if x >= *lo && x <= *hi {
                    *height
                } else {
                    0.0
                }
            }
            BirthKind::Table { ages, values } => {
                if x < ages[0] || x > ages[ages.len() - 1] {
                    return 0.0;
                }
                let j = ages.partition_point(|&a| a <= x).clamp(1, ages.len() - 1);
                let s = (x - ages[j - 1]) / (ages[j] - ages[j - 1]);
                values[j - 1] + s * (values[j] - values[j - 1])
            }
        }
    }

    /// Points where `B` is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            BirthKind::Exponential { .. } => vec![],
            BirthKind::Indicator { lo, hi, .. } => vec![*lo, *hi],
            BirthKind::Table { ages, .. } => ages.clone(),
        }
    }

    /// End of the (numerical) support.
    pub fn support_end(&self) -> f64 {
        match &self.kind {
            BirthKind::Exponential { rate, .. } => 40.0 / rate,
            BirthKind::Indicator { hi, .. } => *hi,
            BirthKind::Table { ages, .. } => ages[ages.len() - 1],
        }
    }

    /// `∫_a^b B(s) g(s) ds` by composite Simpson split at the breakpoints of `B`.
    pub fn integrate_weighted(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
        let b = b.min(self.support_end());
        if b <= a {
            return 0.0;
        }
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints().into_iter().filter(|&p| p > a && p < b));
        cuts.push(b);
        cuts.windows(2)
            .map(|w| {
                // One-sided limits at breakpoints come from the interior nodes.
                let (lo, hi) = (w[0], w[1]);
                let panels = 2 * (((hi - lo) / QUAD_H / 2.0).ceil() as usize).max(1);
                let h = (hi - lo) / panels as f64;
                let eps = 1e-12 * h;
                let f = |x: f64| self.eval(x.clamp(lo + eps, hi - eps)) * g(x);
                let mut acc = f(lo) + f(hi);
                for k in 1..panels {
                    acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(lo + k as f64 * h);
                }
                acc * h / 3.0
            })
            .sum()
    }

    /// `∫₀^∞ B(y) e^{-λ y} dy`.
    pub fn laplace(&self, lambda: f64) -> f64 {
        self.integrate_weighted(0.0, f64::INFINITY, |y| (-lambda * y).exp())
    }
}

/// Malthus parameter: the root of `∫ B e^{-λy} dy = 1`, by bisection to `1e-12`.
pub fn solve_lambda0(birth: &BirthRate) -> Result<f64> {
    if birth.integral() <= 1.0 {
        return Err(Error::SubcriticalPopulation { integral: birth.integral() });
    }
    let f = |l: f64| birth.laplace(l) - 1.0;
    let mut lo = 1e-12;
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Range("no sign change below λ = 1e12".into()));
        }
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `N(x) = λ₀ e^{-λ₀ x}`.
pub fn n_profile(lambda0: f64, x: f64) -> f64 {
    lambda0 * (-lambda0 * x).exp()
}

/// `N` sampled at the cell centers.
pub fn compute_n(lambda0: f64, grid: &AgeGrid) -> Result<Vec<f64>> {
    if !(lambda0 > 0.0) {
        return Err(Error::Parameter(format!("λ₀ must be positive, got {lambda0}")));
    }
    Ok(grid.cell_centers().into_iter().map(|x| n_profile(lambda0, x)).collect())
}

/// Dual eigenfunction on the cell centers with its constants and boundary value.
#[derive(Debug, Clone, PartialEq)]
pub struct DualProfile {
    pub phi: Vec<f64>,
    /// `φ(0)`, equal to `c` when `λ₀` is consistent.
    pub phi0: f64,
    /// Discrete normalization: midpoint `∫ N φ = 1`.
    pub c: f64,
    /// `1 / (λ₀ ∫ s B(s) e^{-λ₀s} ds)`, the normalization of the exact `φ`.
    pub c_continuum: f64,
    /// `G(x) = ∫_x^∞ B e^{-λ₀s} ds` at the cell centers and one center past `x_max`.
    pub tail: Vec<f64>,
}

/// `φ(x) = c e^{λ₀x} ∫_x^∞ B e^{-λ₀s} ds` by backward cumulative quadrature,
/// with `c` fixed by the midpoint rule `∫ N φ = 1`.
pub fn compute_phi(birth: &BirthRate, lambda0: f64, grid: &AgeGrid) -> Result<DualProfile> {
    let moment = birth.integrate_weighted(0.0, f64::INFINITY, |s| s * (-lambda0 * s).exp());
    let norm = lambda0 * moment;
    if !(norm > 0.0) {
        return Err(Error::DegenerateDual(norm));
    }
    let dx = grid.dx();
    let n = grid.n_cells();
    let w = |s: f64| (-lambda0 * s).exp();
    let mut tail = vec![0.0; n + 1];
    tail[n] = birth.integrate_weighted(grid.center(n), f64::INFINITY, w);
    for i in (0..n).rev() {
        let x = grid.center(i);
        tail[i] = tail[i + 1]
            + birth.integrate_weighted(x + 0.5 * dx, x + dx, w)
            + birth.integrate_weighted(x, x + 0.5 * dx, w);
    }
    let head = tail[0] + birth.integrate_weighted(0.0, 0.5 * dx, w);
    let shape: Vec<f64> = (0..n).map(|i| (lambda0 * grid.center(i)).exp() * tail[i]).collect();
    let discrete = shape.iter().enumerate().map(|(i, p)| p * n_profile(lambda0, grid.center(i))).sum::<f64>() * dx;
    if !(discrete > 0.0) {
        return Err(Error::DegenerateDual(discrete));
    }
    let c = 1.0 / discrete;
    Ok(DualProfile { phi: shape.iter().map(|p| c * p).collect(), phi0: c * head, c, c_continuum: 1.0 / norm, tail })
}

/// Primal and dual eigen-data on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda0: f64,
    pub n: Vec<f64>,
    pub dual: DualProfile,
    /// `1 - e^{-λ₀ x_max}`.
    pub truncated_mass: f64,
}

impl EigenPair {
    pub fn phi(&self) -> &[f64] {
        &self.dual.phi
    }

    /// Midpoint `∫ N φ - 1` for `φ` carrying the continuum constant.
    pub fn normalization_error(&self) -> f64 {
        self.dual.c_continuum / self.dual.c - 1.0
    }

    /// Max interior centered residual of `N' + λ₀ N = 0`.
    pub fn primal_residual(&self, grid: &AgeGrid) -> f64 {
        let dx = grid.dx();
        (1..self.n.len() - 1)
            .map(|i| ((self.n[i + 1] - self.n[i - 1]) / (2.0 * dx) + self.lambda0 * self.n[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Max interior centered residual of `-φ' + λ₀ φ - φ(0) B`, with `B`
    /// averaged over the difference stencil.
    pub fn dual_residual(&self, birth: &BirthRate, grid: &AgeGrid) -> f64 {
        let dx = grid.dx();
        let phi = &self.dual.phi;
        (1..phi.len() - 1)
            .map(|i| {
                let b = birth.integrate_weighted(grid.center(i - 1), grid.center(i + 1), |_| 1.0) / (2.0 * dx);
                (-(phi[i + 1] - phi[i - 1]) / (2.0 * dx) + self.lambda0 * phi[i] - self.dual.phi0 * b).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Birth rate, grid and eigen-data for the rescaled evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalModel {
    pub grid: AgeGrid,
    pub birth: BirthRate,
    pub eigen: EigenPair,
    /// `e^{λ₀x_j} (G(x_j) - G(x_{j+1})) / G(x_0)`: births from cell `j` over
    /// the ages it sweeps in one cell-width step.
    boundary_weights: Vec<f64>,
}

impl RenewalModel {
    pub fn new(grid: AgeGrid, birth: BirthRate) -> Result<Self> {
        let lambda0 = solve_lambda0(&birth)?;
        grid.validate_tail(lambda0)?;
        if birth.support_end() > grid.x_max() && !matches!(birth.kind(), BirthKind::Exponential { .. }) {
            return Err(Error::Range(format!(
                "birth rate support ends at {} beyond x_max = {}",
                birth.support_end(),
                grid.x_max()
            )));
        }
        let n = compute_n(lambda0, &grid)?;
        let dual = compute_phi(&birth, lambda0, &grid)?;
        let g = &dual.tail;
        let boundary_weights =
            (0..grid.n_cells()).map(|j| (lambda0 * grid.center(j)).exp() * (g[j] - g[j + 1]) / g[0]).collect();
        let truncated_mass = 1.0 - (-lambda0 * grid.x_max()).exp();
        Ok(Self { grid, birth, eigen: EigenPair { lambda0, n, dual, truncated_mass }, boundary_weights })
    }

    pub fn lambda0(&self) -> f64 {
        self.eigen.lambda0
    }

    /// Boundary functional `∫ B ñ` on cell data.
    pub fn births(&self, n_tilde: &[f64]) -> f64 {
        self.boundary_weights.iter().zip(n_tilde).map(|(w, v)| w * v).sum()
    }

    /// `∫ φ ñ`.
    pub fn gre_mass(&self, n_tilde: &[f64]) -> f64 {
        self.grid.integrate(&self.eigen.dual.phi.iter().zip(n_tilde).map(|(p, v)| p * v).collect::<Vec<_>>())
    }

    /// `∫ φ |ñ - m₀ N|`.
    pub fn gre_distance(&self, n_tilde: &[f64], m0: f64) -> f64 {
        self.eigen
            .dual
            .phi
            .iter()
            .zip(n_tilde.iter().zip(&self.eigen.n))
            .map(|(p, (v, nn))| p * (v - m0 * nn).abs())
            .sum::<f64>()
            * self.grid.dx()
    }
}

/// One upwind step of the rescaled equation with exact decay factor `e^{-λ₀dt}`.
///
/// The birth boundary is evaluated on the old cells over the ages they are
/// transported through and fills a ghost cell at age `-dx/2` on the steady
/// profile. With `dt = dx` the step is an exact shift that keeps `N`
/// stationary and `∫ φ ñ` invariant.
pub fn step_renewal(n_tilde: &[f64], model: &RenewalModel, dt: f64) -> Result<Vec<f64>> {
    let dx = model.grid.dx();
    if n_tilde.len() != model.grid.n_cells() {
        return Err(Error::Dimension(format!("{} values for {} age cells", n_tilde.len(), model.grid.n_cells())));
    }
    if !(dt > 0.0) || dt > dx * (1.0 + 1e-12) {
        return Err(Error::TimeStep { dt, limit: dx });
    }
    if let Some(&v) = n_tilde.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::RejectedInput(format!("population density must be non-negative, got {v}")));
    }
    let nu = (dt / dx).min(1.0);
    let decay = (-model.lambda0() * dt).exp();
    let mut next = vec![0.0; n_tilde.len()];
    for i in 1..n_tilde.len() {
        next[i] = decay * ((1.0 - nu) * n_tilde[i] + nu * n_tilde[i - 1]);
    }
    let b = model.births(n_tilde);
    let ghost = b * (0.5 * model.lambda0() * dx).exp();
    next[0] = decay * ((1.0 - nu) * n_tilde[0] + nu * ghost);
    Ok(next)
}

/// Initial populations.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `mass · N`.
    Steady {
        mass: f64,
    },
    /// `N + amplitude · sin(π(x - lo)/(hi - lo))` on `[lo, hi]`.
    Perturbed {
        amplitude: f64,
        lo: f64,
        hi: f64,
    },
    /// Single-cell spike of total mass `mass` at `age`.
    Atom {
        age: f64,
        mass: f64,
    },
    Table(Vec<f64>),
}

pub fn initial_profile(model: &RenewalModel, init: &InitialData) -> Result<Vec<f64>> {
    let grid = &model.grid;
    let values = match init {
        InitialData::Steady { mass } => model.eigen.n.iter().map(|v| mass * v).collect(),
        InitialData::Perturbed { amplitude, lo, hi } => {
            if !(hi > lo) {
                return Err(Error::Parameter(format!("perturbation needs lo < hi, got [{lo}, {hi}]")));
            }
            grid.cell_centers()
                .iter()
                .zip(&model.eigen.n)
                .map(|(&x, &nn)| {
                    let bump =
                        if x >= *lo && x <= *hi { (std::f64::consts::PI * (x - lo) / (hi - lo)).sin() } else { 0.0 };
                    nn + amplitude * bump
                })
                .collect()
        }
        InitialData::Atom { age, mass } => {
            if !(*age >= 0.0 && *age < grid.x_max()) {
                return Err(Error::Range(format!("atom age {age} outside [0, {})", grid.x_max())));
            }
            let mut v = vec![0.0; grid.n_cells()];
            v[((age / grid.dx()) as usize).min(grid.n_cells() - 1)] = mass / grid.dx();
            v
        }
        InitialData::Table(v) => {
            if v.len() != grid.n_cells() {
                return Err(Error::Dimension(format!("{} initial values for {} cells", v.len(), grid.n_cells())));
            }
            v.clone()
        }
    };
    if let Some(&v) = values.iter().find(|v: &&f64| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::RejectedInput(format!("initial population must be finite and non-negative, got {v}")));
    }
    Ok(values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between records.
    pub record_every: usize,
}

/// Relative-entropy trace of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct DecaySeries {
    pub times: Vec<f64>,
    /// `H(t) = ∫ φ |ñ - m₀ N|`.
    pub h: Vec<f64>,
    /// `m(t) = ∫ φ ñ`.
    pub m: Vec<f64>,
    pub m0: f64,
    /// Rate fitted on the last half of `[0, t]`, per record.
    pub sigma_hat_running: Vec<f64>,
    pub sigma_hat: f64,
    pub fit_window: (f64, f64),
    /// Set when `H` fell below [`H_FLOOR`] and the fit window was shortened.
    pub early_convergence: bool,
    pub final_state: Vec<f64>,
}

impl DecaySeries {
    pub fn max_relative_drift(&self) -> f64 {
        self.m.iter().map(|m| (m - self.m0).abs()).fold(0.0, f64::max) / self.m0.abs()
    }

    /// `H(t_end) / H(0)`.
    pub fn decay_ratio(&self) -> f64 {
        self.h[self.h.len() - 1] / self.h[0]
    }

    /// `H` never grows by more than `rel · H(0)` between records after `t0`.
    pub fn nonincreasing_after(&self, t0: f64, rel: f64) -> bool {
        let slack = rel * self.h[0];
        self.times.windows(2).zip(self.h.windows(2)).filter(|(t, _)| t[0] >= t0).all(|(_, h)| h[1] <= h[0] + slack)
    }
}

/// Least-squares `-d log H / dt` over records in `[t_lo, t_hi]` above the floor.
fn fit_rate(times: &[f64], h: &[f64], t_lo: f64, t_hi: f64) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(h)
        .filter(|(t, v)| **t >= t_lo && **t <= t_hi && **v > H_FLOOR)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    (sxx > 0.0).then(|| (-sxy / sxx, pts[0].0, pts[pts.len() - 1].0))
}

/// Evolves `n0` and records `H`, `m` and the fitted decay rate.
pub fn decay_experiment(model: &RenewalModel, n0: &[f64], opts: &DecayOptions) -> Result<DecaySeries> {
    if !(opts.t_end > 0.0) || opts.record_every == 0 {
        return Err(Error::Parameter("decay run needs t_end > 0 and record_every >= 1".into()));
    }
    let steps = (opts.t_end / opts.dt).round() as usize;
    if steps == 0 || ((steps as f64 * opts.dt) - opts.t_end).abs() > 1e-9 * opts.t_end {
        return Err(Error::Parameter(format!("t_end = {} is not a multiple of dt = {}", opts.t_end, opts.dt)));
    }
    let m0 = model.gre_mass(n0);
    let mut state = n0.to_vec();
    let mut times = vec![0.0];
    let mut h = vec![model.gre_distance(&state, m0)];
    let mut m = vec![m0];
    let mut running = vec![f64::NAN];
    for k in 1..=steps {
        state = step_renewal(&state, model, opts.dt)?;
        if k % opts.record_every == 0 || k == steps {
            let t = k as f64 * opts.dt;
            times.push(t);
            h.push(model.gre_distance(&state, m0));
            m.push(model.gre_mass(&state));
            running.push(fit_rate(&times, &h, 0.5 * t, t).map_or(f64::NAN, |f| f.0));
        }
    }
    let t_end = *times.last().expect("recorded");
    let early_convergence = h.iter().any(|&v| v <= H_FLOOR);
    let (sigma_hat, lo, hi) = fit_rate(&times, &h, 0.5 * t_end, t_end)
        .or_else(|| fit_rate(&times, &h, 0.0, t_end))
        .unwrap_or((f64::NAN, 0.5 * t_end, t_end));
    Ok(DecaySeries {
        times,
        h,
        m,
        m0,
        sigma_hat_running: running,
        sigma_hat,
        fit_window: (lo, hi),
        early_convergence,
        final_state: state,
    })
}
