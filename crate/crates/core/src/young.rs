//! Empirical generalized Young measures `(ν, m, ν^∞)` built by pooling
//! fine-grid samples over a coarse space-time partition.
//!
//! Values with `|v| <= R` populate a histogram on `[-R, R]`; the clipped tail
//! is booked as concentration mass `m₁ += |v| · (sample measure)` with angle
//! weights `(w₊, w₋)` on `𝕊⁰ = {+1, -1}` given by the sign of the clipped values.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Trajectory;
use crate::scalar::TestFunctionBank;

/// Concentration below this is treated as absent; angle weights stay undefined.
pub const M1_THRESHOLD: f64 = 1e-14;

pub const DEFAULT_BINS: usize = 64;
pub const DEFAULT_COARSE: (usize, usize) = (16, 8);

/// A sequence `u_k` of trajectories on one grid with a declared uniform L¹ bound.
#[derive(Debug, Clone)]
pub struct MeasureSequenceInput {
    members: Vec<Trajectory>,
    l1_bound: f64,
}

impl MeasureSequenceInput {
    pub fn new(members: Vec<Trajectory>, l1_bound: f64) -> Result<Self> {
        let first =
            members.first().ok_or_else(|| Error::RejectedInput("measure sequence needs at least one member".into()))?;
        for (k, m) in members.iter().enumerate() {
            if m.grid() != first.grid() || m.len() != first.len() {
                return Err(Error::Dimension(format!("member {k} differs in grid or snapshot count")));
            }
            if m.times().iter().zip(first.times()).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs())) {
                return Err(Error::Dimension(format!("member {k} has different snapshot times")));
            }
            let sup = m.snapshots().iter().map(|s| s.l1_norm()).fold(0.0, f64::max);
            if sup > l1_bound {
                return Err(Error::RejectedInput(format!(
                    "member {k} has sup_t L1 norm {sup} above the declared bound {l1_bound}"
                )));
            }
        }
        Ok(Self { members, l1_bound })
    }

    pub fn members(&self) -> &[Trajectory] {
        &self.members
    }

    pub fn l1_bound(&self) -> f64 {
        self.l1_bound
    }

    pub fn last(&self) -> &Trajectory {
        self.members.last().expect("non-empty")
    }
}

/// Fine-sample index ranges of one coarse cell.
#[derive(Debug, Clone, PartialEq)]
struct CellRanges {
    cells: Vec<(usize, usize)>,
    snapshots: Vec<(usize, usize)>,
}

fn partition(n_fine: usize, n_coarse: usize, coord: impl Fn(usize) -> f64, extent: f64) -> Vec<(usize, usize)> {
    let mut ranges = vec![(usize::MAX, 0); n_coarse];
    for i in 0..n_fine {
        let c = ((coord(i) / extent * n_coarse as f64).floor() as usize).min(n_coarse - 1);
        let r = &mut ranges[c];
        r.0 = r.0.min(i);
        r.1 = r.1.max(i + 1);
    }
    ranges
}

fn cell_ranges(traj: &Trajectory, n_x: usize, n_t: usize) -> Result<CellRanges> {
    let grid = traj.grid();
    let cells = partition(grid.n_cells(), n_x, |i| grid.center(i), grid.length());
    let t_end = traj.t_end();
    let times = traj.times();
    let snapshots = if t_end > 0.0 {
        partition(times.len(), n_t, |s| times[s], t_end)
    } else {
        let mut r = vec![(usize::MAX, 0); n_t];
        r[0] = (0, times.len());
        r
    };
    for (what, ranges) in [("space", &cells), ("time", &snapshots)] {
        if let Some(c) = ranges.iter().position(|r| r.0 >= r.1) {
            return Err(Error::DegeneratePartition(format!("coarse {what} block {c} holds no fine samples")));
        }
    }
    Ok(CellRanges { cells, snapshots })
}

/// Per-cell histograms plus concentration data on an `n_x × n_t` partition.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalYoungMeasure {
    n_x: usize,
    n_t: usize,
    bins: usize,
    radius: f64,
    length: f64,
    t_end: f64,
    /// Cell `(ix, it)` occupies `weights[(it * n_x + ix) * bins ..][..bins]`.
    weights: Vec<f64>,
    m1: Vec<f64>,
    angles: Vec<Option<(f64, f64)>>,
    slab_times: Vec<f64>,
    slab_durations: Vec<f64>,
}

impl EmpiricalYoungMeasure {
    /// Assembles a measure from explicit per-cell histograms (cell-major,
    /// `it * n_x + ix`), with no concentration. Slabs split `[0, t_end]` evenly.
    pub fn from_histograms(
        n_x: usize,
        n_t: usize,
        radius: f64,
        length: f64,
        t_end: f64,
        histograms: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if histograms.len() != n_x * n_t || n_x == 0 || n_t == 0 {
            return Err(Error::Dimension(format!("{} histograms for a {n_x}×{n_t} partition", histograms.len())));
        }
        let bins = histograms[0].len();
        if bins == 0 || histograms.iter().any(|h| h.len() != bins) {
            return Err(Error::Dimension("histograms must share a non-empty bin grid".into()));
        }
        for (c, h) in histograms.iter().enumerate() {
            let mass: f64 = h.iter().sum();
            if h.iter().any(|&w| !(w >= 0.0)) || (mass - 1.0).abs() > 1e-12 {
                return Err(Error::RejectedInput(format!("histogram {c} is not a probability vector")));
            }
        }
        let slab = t_end / n_t as f64;
        Ok(Self {
            n_x,
            n_t,
            bins,
            radius,
            length,
            t_end,
            weights: histograms.concat(),
            m1: vec![0.0; n_x * n_t],
            angles: vec![None; n_x * n_t],
            slab_times: (0..n_t).map(|j| (j as f64 + 0.5) * slab).collect(),
            slab_durations: vec![slab; n_t],
        })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_cells(&self) -> usize {
        self.n_x * self.n_t
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn bin_width(&self) -> f64 {
        2.0 * self.radius / self.bins as f64
    }

    pub fn bin_edges(&self, b: usize) -> (f64, f64) {
        let w = self.bin_width();
        (-self.radius + b as f64 * w, -self.radius + (b + 1) as f64 * w)
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.bins).map(|b| -self.radius + (b as f64 + 0.5) * self.bin_width()).collect()
    }

    pub fn cell_index(&self, ix: usize, it: usize) -> usize {
        it * self.n_x + ix
    }

    pub fn histogram(&self, cell: usize) -> &[f64] {
        &self.weights[cell * self.bins..(cell + 1) * self.bins]
    }

    /// Concentration mass `m₁` per cell (space-time measure units).
    pub fn m1(&self) -> &[f64] {
        &self.m1
    }

    /// `(w₊, w₋)` where `m₁` exceeds [`M1_THRESHOLD`].
    pub fn angle_weights(&self) -> &[Option<(f64, f64)>] {
        &self.angles
    }

    /// Midpoint time of each coarse slab.
    pub fn slab_times(&self) -> &[f64] {
        &self.slab_times
    }

    pub fn slab_durations(&self) -> &[f64] {
        &self.slab_durations
    }

    pub fn coarse_dx(&self) -> f64 {
        self.length / self.n_x as f64
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Concentration paired with `q^∞` on `𝕊⁰`: `m₁ · (w₊ q^∞(1) + w₋ q^∞(-1))`.
    /// Bounded by `m₁ · max|q^∞|`, which is the domination of `m₂` by `m₁`.
    pub fn concentration_pairing(&self, recession_plus: f64, recession_minus: f64) -> Vec<f64> {
        self.m1
            .iter()
            .zip(&self.angles)
            .map(|(m, a)| match a {
                Some((wp, wm)) => m * (wp * recession_plus + wm * recession_minus),
                None => 0.0,
            })
            .collect()
    }

    fn same_layout(&self, other: &Self) -> bool {
        self.n_x == other.n_x
            && self.n_t == other.n_t
            && self.bins == other.bins
            && self.radius == other.radius
            && self.length == other.length
    }
}

/// Histogram, clipped mass and angle weights of one coarse cell.
type CellLaw = (Vec<f64>, f64, Option<(f64, f64)>);

/// Pools the last member of `input` over an `n_x × n_t` partition.
pub fn build_measure(
    input: &MeasureSequenceInput,
    bins: usize,
    radius: f64,
    (n_x, n_t): (usize, usize),
) -> Result<EmpiricalYoungMeasure> {
    if bins < 16 {
        return Err(Error::Parameter(format!("need at least 16 bins, got {bins}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Parameter(format!("truncation radius must be positive, got {radius}")));
    }
    if n_x == 0 || n_t == 0 {
        return Err(Error::DegeneratePartition("empty coarse partition".into()));
    }
    let traj = input.last();
    let ranges = cell_ranges(traj, n_x, n_t)?;
    let grid = traj.grid();
    let dt = traj.dt_snap();
    // Each fine sample stands for a dx × Δt_snap block (dx alone for a single snapshot).
    let sample_measure = grid.dx() * if dt > 0.0 { dt } else { 1.0 };
    let width = 2.0 * radius / bins as f64;

    let cells: Vec<CellLaw> = (0..n_x * n_t)
        .into_par_iter()
        .map(|cell| {
            let (ix, it) = (cell % n_x, cell / n_x);
            let (c0, c1) = ranges.cells[ix];
            let (s0, s1) = ranges.snapshots[it];
            let mut counts = vec![0usize; bins];
            let (mut plus, mut minus) = (0.0, 0.0);
            for snap in &traj.snapshots()[s0..s1] {
                for &v in &snap.values()[c0..c1] {
                    if v.abs() <= radius {
                        let b = (((v + radius) / width).floor() as usize).min(bins - 1);
                        counts[b] += 1;
                    } else if v > 0.0 {
                        plus += v * sample_measure;
                    } else {
                        minus += -v * sample_measure;
                    }
                }
            }
            let total: usize = counts.iter().sum();
            let m1 = plus + minus;
            let angle = (m1 > M1_THRESHOLD).then(|| (plus / m1, minus / m1));
            if total == 0 {
                return Err(Error::DegeneratePartition(format!(
                    "cell ({ix}, {it}) has every sample beyond R = {radius}"
                )));
            }
            let weights = counts.iter().map(|&c| c as f64 / total as f64).collect();
            Ok((weights, m1, angle))
        })
        .collect::<Result<_>>()?;

    let times = traj.times();
    let slab_times = ranges.snapshots.iter().map(|&(a, b)| 0.5 * (times[a] + times[b - 1])).collect();
    let slab_durations =
        ranges.snapshots.iter().map(|&(a, b)| (b - a) as f64 * if dt > 0.0 { dt } else { 1.0 }).collect();
    let mut weights = Vec::with_capacity(n_x * n_t * bins);
    let mut m1 = Vec::with_capacity(n_x * n_t);
    let mut angles = Vec::with_capacity(n_x * n_t);
    for (w, m, a) in cells {
        weights.extend(w);
        m1.push(m);
        angles.push(a);
    }
    Ok(EmpiricalYoungMeasure {
        n_x,
        n_t,
        bins,
        radius,
        length: grid.length(),
        t_end: traj.t_end(),
        weights,
        m1,
        angles,
        slab_times,
        slab_durations,
    })
}

/// Clipped L¹ mass `Σ |v| · (sample measure)` over `|v| > R` of the last member.
pub fn clipped_mass(input: &MeasureSequenceInput, radius: f64) -> f64 {
    let traj = input.last();
    let dt = traj.dt_snap();
    let sample_measure = traj.grid().dx() * if dt > 0.0 { dt } else { 1.0 };
    traj.snapshots()
        .iter()
        .flat_map(|s| s.values().iter())
        .filter(|v| v.abs() > radius)
        .map(|v| v.abs() * sample_measure)
        .sum()
}

/// `⟨ν, g⟩ = Σ_bins w · g(midpoint)` per cell; `g` is sampled at bin midpoints.
pub fn pair(measure: &EmpiricalYoungMeasure, g: &[f64]) -> Result<Vec<f64>> {
    if g.len() != measure.bins {
        return Err(Error::Dimension(format!("g has {} samples for {} bins", g.len(), measure.bins)));
    }
    Ok((0..measure.n_cells()).map(|c| measure.histogram(c).iter().zip(g).map(|(w, gv)| w * gv).sum()).collect())
}

/// [`pair`] with `g` sampled from a function.
pub fn pair_fn(measure: &EmpiricalYoungMeasure, g: impl Fn(f64) -> f64) -> Vec<f64> {
    let samples: Vec<f64> = measure.midpoints().into_iter().map(g).collect();
    pair(measure, &samples).expect("sampled at the measure's own midpoints")
}

/// Growth envelope `|g(λ)| <= C (1 + |λ|^q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBound {
    pub constant: f64,
    pub exponent: f64,
}

impl GrowthBound {
    fn check(&self, lambda: f64, value: f64) -> Result<()> {
        let bound = self.constant * (1.0 + lambda.abs().powf(self.exponent));
        if value.abs() > bound * (1.0 + 1e-12) {
            return Err(Error::Growth { lambda, value, bound });
        }
        Ok(())
    }
}

/// Gaps `max_φ |∫∫ g(u_k) φ - ∫∫ ⟨ν, g⟩ φ|` per sequence member.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub gaps: Vec<f64>,
    /// Gaps decrease in `k` up to 10% slack.
    pub decreasing: bool,
}

/// Compares weak limits of `g(u_k)` with the pairing against the measure
/// built from the last member, over the bump bank on the trajectory's domain.
pub fn fundamental_lemma_check(
    input: &MeasureSequenceInput,
    g: impl Fn(f64) -> f64 + Sync,
    growth: GrowthBound,
    bins: usize,
    radius: f64,
    coarse: (usize, usize),
) -> Result<LemmaReport> {
    let measure = build_measure(input, bins, radius, coarse)?;
    for lambda in measure.midpoints() {
        growth.check(lambda, g(lambda))?;
    }
    for traj in input.members() {
        for s in traj.snapshots() {
            for &v in s.values() {
                growth.check(v, g(v))?;
            }
        }
    }
    let paired = pair_fn(&measure, &g);
    let last = input.last();
    let grid = *last.grid();
    let ranges = cell_ranges(last, coarse.0, coarse.1)?;
    let xs = grid.cell_centers();
    let bank = TestFunctionBank::lattice(grid.length(), last.t_end().max(f64::MIN_POSITIVE));
    let dt = last.dt_snap();
    let w = grid.dx() * if dt > 0.0 { dt } else { 1.0 };

    // Coarse cell of every fine sample.
    let mut cell_of_x = vec![0; xs.len()];
    for (ix, &(a, b)) in ranges.cells.iter().enumerate() {
        cell_of_x[a..b].iter_mut().for_each(|c| *c = ix);
    }
    let mut slab_of_s = vec![0; last.len()];
    for (it, &(a, b)) in ranges.snapshots.iter().enumerate() {
        slab_of_s[a..b].iter_mut().for_each(|c| *c = it);
    }

    let limit: Vec<f64> = bank
        .members
        .iter()
        .map(|phi| {
            let mut acc = 0.0;
            for (s, snap) in last.snapshots().iter().enumerate() {
                for (i, &x) in xs.iter().enumerate() {
                    let cell = slab_of_s[s] * coarse.0 + cell_of_x[i];
                    acc += paired[cell] * phi.value(x, snap.time(), grid.length());
                }
            }
            acc * w
        })
        .collect();

    let gaps: Vec<f64> = input
        .members()
        .par_iter()
        .map(|traj| {
            bank.members
                .iter()
                .zip(&limit)
                .map(|(phi, lim)| {
                    let mut acc = 0.0;
                    for snap in traj.snapshots() {
                        for (i, &x) in xs.iter().enumerate() {
                            acc += g(snap.values()[i]) * phi.value(x, snap.time(), grid.length());
                        }
                    }
                    (acc * w - lim).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let decreasing = gaps.windows(2).all(|p| p[1] <= 1.1 * p[0] + 1e-12);
    Ok(LemmaReport { gaps, decreasing })
}

fn cell_distance(a: &[f64], b: &[f64], mid: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, &wa) in a.iter().enumerate() {
        if wa == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for (j, &wb) in b.iter().enumerate() {
            inner += wb * (mid[i] - mid[j]).abs();
        }
        acc += wa * inner;
    }
    acc
}

/// `A(t) = Σ_x Δx Σ_{i,j} w^ν_i w^σ_j |λ_i - μ_j|` per coarse time slab.
pub fn tensor_distance(nu: &EmpiricalYoungMeasure, sigma: &EmpiricalYoungMeasure) -> Result<Vec<(f64, f64)>> {
    if !nu.same_layout(sigma) {
        return Err(Error::Dimension("measures use different partitions or bin grids".into()));
    }
    let mid = nu.midpoints();
    let dx = nu.coarse_dx();
    Ok((0..nu.n_t)
        .map(|it| {
            let a: f64 = (0..nu.n_x)
                .map(|ix| {
                    let c = nu.cell_index(ix, it);
                    cell_distance(nu.histogram(c), sigma.histogram(c), &mid)
                })
                .sum();
            (nu.slab_times[it], dx * a)
        })
        .collect())
}

/// Relative slack allowed on the averaged contraction bound.
pub const CONTRACTION_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub slab_times: Vec<f64>,
    /// `A(ν,σ) - ½(A(ν,ν) + A(σ,σ))` per slab; zero when `ν = σ`.
    pub excess: Vec<f64>,
    /// `Σ_x (m₁^ν + m₁^σ)` per slab divided by the slab duration.
    pub concentration: Vec<f64>,
    /// `excess + concentration`.
    pub values: Vec<f64>,
    /// `(1 + slack) · values[0] + abs_tol`.
    pub bound: f64,
    pub violations: Vec<usize>,
}

impl ContractionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Discrete averaged contraction: every slab value is bounded by the first.
///
/// Pooling over coarse cells gives a non-Dirac measure positive self-distance,
/// so the mixed functional is taken relative to the self-distances. The
/// excess is the energy distance of the two cell laws and is non-negative.
pub fn contraction_check(
    nu: &EmpiricalYoungMeasure,
    sigma: &EmpiricalYoungMeasure,
    abs_tol: f64,
) -> Result<ContractionReport> {
    let cross = tensor_distance(nu, sigma)?;
    let self_nu = tensor_distance(nu, nu)?;
    let self_sigma = tensor_distance(sigma, sigma)?;
    let excess: Vec<f64> = cross
        .iter()
        .zip(self_nu.iter().zip(&self_sigma))
        .map(|(&(_, c), (&(_, a), &(_, b)))| c - 0.5 * (a + b))
        .collect();
    let concentration: Vec<f64> = (0..nu.n_t)
        .map(|it| {
            let m: f64 = (0..nu.n_x)
                .map(|ix| {
                    let c = nu.cell_index(ix, it);
                    nu.m1[c] + sigma.m1[c]
                })
                .sum();
            m / nu.slab_durations[it]
        })
        .collect();
    let values: Vec<f64> = excess.iter().zip(&concentration).map(|(a, b)| a + b).collect();
    let bound = (1.0 + CONTRACTION_SLACK) * values[0] + abs_tol;
    let violations = values.iter().enumerate().filter(|(_, &v)| v > bound).map(|(i, _)| i).collect();
    Ok(ContractionReport {
        slab_times: cross.iter().map(|&(t, _)| t).collect(),
        excess,
        concentration,
        values,
        bound,
        violations,
    })
}

/// Per-cell variance `Σ w_i (λ_i - mean)²`.
pub fn dirac_diagnostic(measure: &EmpiricalYoungMeasure) -> Vec<f64> {
    let mid = measure.midpoints();
    (0..measure.n_cells())
        .map(|c| {
            let h = measure.histogram(c);
            let mean: f64 = h.iter().zip(&mid).map(|(w, l)| w * l).sum();
            h.iter().zip(&mid).map(|(w, l)| w * (l - mean).powi(2)).sum()
        })
        .collect()
}
