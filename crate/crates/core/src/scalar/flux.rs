//! Sampled scalar fluxes, their recession slopes and mollifications.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type FluxFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Limits `f^∞(1) = lim f(λ)/λ` and `f^∞(-1) = lim f(-λ)/λ` as `λ → ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecessionSlopes {
    pub plus: f64,
    pub minus: f64,
    /// Larger of the two per-direction error estimates.
    pub error_estimate: f64,
}

/// A flux `f` tabulated on a uniform grid over `[-Λ, Λ]`, with on-demand
/// evaluation through the generating function.
#[derive(Clone)]
pub struct FluxSpec {
    eval: FluxFn,
    half_range: f64,
    spacing: f64,
    samples: Vec<f64>,
    sublinear_constant: f64,
    recession: Option<RecessionSlopes>,
}

impl fmt::Debug for FluxSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FluxSpec")
            .field("half_range", &self.half_range)
            .field("spacing", &self.spacing)
            .field("n_samples", &self.samples.len())
            .field("sublinear_constant", &self.sublinear_constant)
            .field("recession", &self.recession)
            .finish()
    }
}

impl FluxSpec {
    /// Tabulates `f` on `[-half_range, half_range]` with `n_intervals` uniform intervals.
    pub fn from_fn<F>(f: F, half_range: f64, n_intervals: usize) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_arc(Arc::new(f), half_range, n_intervals)
    }

    fn from_arc(eval: FluxFn, half_range: f64, n_intervals: usize) -> Result<Self> {
        if !(half_range.is_finite() && half_range > 0.0) {
            return Err(Error::Parameter(format!("flux sample range must be positive, got {half_range}")));
        }
        if n_intervals < 2 {
            return Err(Error::Parameter("flux table needs at least two intervals".into()));
        }
        let spacing = 2.0 * half_range / n_intervals as f64;
        let samples: Vec<f64> = (0..=n_intervals).map(|i| eval(-half_range + i as f64 * spacing)).collect();
        Self::assemble(eval, half_range, spacing, samples)
    }

    fn assemble(eval: FluxFn, half_range: f64, spacing: f64, samples: Vec<f64>) -> Result<Self> {
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::RejectedInput(format!(
                "flux sample {i} (lambda = {}) is not finite",
                -half_range + i as f64 * spacing
            )));
        }
        // Any finite table satisfies |f| <= C(1 + |λ|) on its range; C is the
        // tightest such constant over the samples.
        let sublinear_constant = samples
            .iter()
            .enumerate()
            .map(|(i, v)| v.abs() / (1.0 + (-half_range + i as f64 * spacing).abs()))
            .fold(0.0, f64::max);
        let recession = extrapolate_recession(eval.as_ref()).ok();
        Ok(Self { eval, half_range, spacing, samples, sublinear_constant, recession })
    }

    pub fn linear(c: f64, half_range: f64, n_intervals: usize) -> Result<Self> {
        Self::from_fn(move |u| c * u, half_range, n_intervals)
    }

    pub fn burgers(half_range: f64, n_intervals: usize) -> Result<Self> {
        Self::from_fn(|u| 0.5 * u * u, half_range, n_intervals)
    }

    pub fn half_range(&self) -> f64 {
        self.half_range
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn lambda(&self, i: usize) -> f64 {
        -self.half_range + i as f64 * self.spacing
    }

    pub fn sublinear_constant(&self) -> f64 {
        self.sublinear_constant
    }

    /// Recession slopes extrapolated at construction, if the limits exist.
    pub fn recession(&self) -> Option<RecessionSlopes> {
        self.recession
    }

    pub fn contains(&self, u: f64) -> bool {
        u.abs() <= self.half_range * (1.0 + 1e-14)
    }

    /// Evaluates the generating function, refusing to extrapolate.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !self.contains(u) {
            return Err(Error::OutOfRange { value: u, lo: -self.half_range, hi: self.half_range });
        }
        Ok((self.eval)(u))
    }

    /// Evaluates the generating function anywhere (on-demand semantics).
    pub fn eval_unbounded(&self, u: f64) -> f64 {
        (self.eval)(u)
    }

    /// Piecewise-linear interpolation of the table.
    pub fn interp(&self, u: f64) -> f64 {
        let (i, s) = self.locate(u);
        self.samples[i] + s * (self.samples[i + 1] - self.samples[i])
    }

    /// Interval index and fractional position of `u` in the table, clamped to range.
    pub(crate) fn locate(&self, u: f64) -> (usize, f64) {
        let last = self.samples.len() - 2;
        let pos = ((u + self.half_range) / self.spacing).max(0.0);
        let i = (pos.floor() as usize).min(last);
        (i, (pos - i as f64).clamp(0.0, 1.0))
    }

    /// Slope of the table on interval `i`.
    pub(crate) fn slope(&self, i: usize) -> f64 {
        (self.samples[i + 1] - self.samples[i]) / self.spacing
    }

    /// Largest `|f'|` of the table over the intervals meeting `[a, b]`.
    pub fn max_speed(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (i0, _) = self.locate(lo);
        let (i1, _) = self.locate(hi);
        (i0..=i1).map(|i| self.slope(i).abs()).fold(0.0, f64::max)
    }

    /// Re-tabulates the generating function over `[-half_range, half_range]` at `spacing`.
    pub fn resample(&self, half_range: f64, spacing: f64) -> Result<Self> {
        let n = (2.0 * half_range / spacing).round().max(2.0) as usize;
        Self::from_arc(self.eval.clone(), half_range, n)
    }
}

/// Ratios along which recession limits are extrapolated.
const RECESSION_LADDER: [f64; 3] = [1e1, 1e2, 1e3];

fn extrapolate_direction(f: &dyn Fn(f64) -> f64, sign: f64) -> Result<(f64, f64)> {
    let r: Vec<f64> = RECESSION_LADDER.iter().map(|&l| f(sign * l) / l).collect();
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoRecessionLimit("flux ratio not finite on the ladder".into()));
    }
    let d1 = r[1] - r[0];
    let d2 = r[2] - r[1];
    let scale = 1.0 + r[2].abs();
    let settled = d2.abs() <= 1e-13 * scale;
    if !settled && d2.abs() >= 0.5 * d1.abs() {
        return Err(Error::NoRecessionLimit(format!(
            "ratio f(λ)/λ does not settle: successive differences {d1:.3e}, {d2:.3e}"
        )));
    }
    // Richardson extrapolant under an O(1/λ) error model. It amplifies bounded
    // oscillations (f = sin), so the far ratio is the reported value and the
    // extrapolant only feeds the error estimate.
    let richardson = (10.0 * r[2] - r[1]) / 9.0;
    let estimate = (richardson - r[2]).abs().max(d2.abs() / 9.0);
    Ok((r[2], estimate))
}

fn extrapolate_recession(f: &dyn Fn(f64) -> f64) -> Result<RecessionSlopes> {
    let (plus, e_plus) = extrapolate_direction(f, 1.0)?;
    let (minus, e_minus) = extrapolate_direction(f, -1.0)?;
    Ok(RecessionSlopes { plus, minus, error_estimate: e_plus.max(e_minus) })
}

/// Extrapolates `(f^∞(1), f^∞(-1))` from on-demand evaluations at λ = 10, 10², 10³.
pub fn recession_slopes(flux: &FluxSpec) -> Result<RecessionSlopes> {
    extrapolate_recession(flux.eval.as_ref())
}

/// Largest `ε = 2^{-j}`, `j = 0..=40`, with `sup |f(z + h) - f(z)| <= 1/n`
/// over `|z| <= z_bound`, `|h| <= ε`. Ties are accepted.
pub fn choose_epsilon_n(flux: &FluxSpec, n: u32, z_bound: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Parameter("viscosity index n must be >= 1".into()));
    }
    if !(z_bound.is_finite() && z_bound >= 0.0) {
        return Err(Error::Parameter(format!("z_bound must be non-negative, got {z_bound}")));
    }
    const Z_SAMPLES: usize = 401;
    const H_SAMPLES: usize = 32;
    let target = 1.0 / n as f64;
    let zs: Vec<f64> = (0..Z_SAMPLES).map(|i| -z_bound + 2.0 * z_bound * i as f64 / (Z_SAMPLES - 1) as f64).collect();
    let fz: Vec<f64> = zs.iter().map(|&z| flux.eval_unbounded(z)).collect();
    for j in 0..=40 {
        let eps = 0.5f64.powi(j);
        let mut sup = 0.0f64;
        for (&z, &f0) in zs.iter().zip(&fz) {
            for k in 0..=H_SAMPLES {
                let h = -eps + 2.0 * eps * k as f64 / H_SAMPLES as f64;
                sup = sup.max((flux.eval_unbounded(z + h) - f0).abs());
            }
        }
        // Rounding in z + h perturbs an exact tie by a few ulps.
        if sup <= target * (1.0 + 1e-12) {
            return Ok(eps);
        }
    }
    Err(Error::FluxRegularity { n })
}

/// Symmetric unit-mass bump kernel `exp(-1/(1 - (s/ε)²))` supported in `(-ε, ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    epsilon: f64,
}

impl Mollifier {
    /// Minimum number of table intervals per ε.
    pub const MIN_SAMPLES_PER_EPSILON: usize = 16;

    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Parameter(format!("mollifier epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Unnormalized kernel value.
    pub fn kernel(&self, s: f64) -> f64 {
        let r = s / self.epsilon;
        if r.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - r * r)).exp()
        }
    }

    /// Discrete weights at offsets `j·h`, `j = -m..=m`, with `m = floor(ε/h)`,
    /// normalized to unit mass.
    pub fn weights(&self, h: f64) -> Vec<f64> {
        let m = (self.epsilon / h * (1.0 + 1e-12)).floor() as i64;
        let raw: Vec<f64> = (-m..=m).map(|j| self.kernel(j as f64 * h)).collect();
        let half = m as usize;
        // Symmetrize explicitly so the kernel is even bit-for-bit.
        let mut w = raw.clone();
        for j in 0..half {
            let avg = 0.5 * (raw[j] + raw[2 * half - j]);
            w[j] = avg;
            w[2 * half - j] = avg;
        }
        let mass: f64 = w.iter().sum();
        w.iter().map(|v| v / mass).collect()
    }
}

fn convolution(parent: FluxFn, weights: Vec<f64>, h: f64) -> FluxFn {
    let m = (weights.len() / 2) as f64;
    Arc::new(move |u: f64| weights.iter().enumerate().map(|(k, wk)| wk * parent(u + (m - k as f64) * h)).sum())
}

/// Discrete convolution `f_n = f * η^ε` on the flux table.
///
/// The output table lives on the interior `[-Λ + mh, Λ - mh]`, and its
/// generating function is the same discrete convolution of the parent's.
pub fn mollify_flux(flux: &FluxSpec, moll: &Mollifier) -> Result<FluxSpec> {
    let h = flux.spacing;
    let m = (moll.epsilon / h * (1.0 + 1e-12)).floor() as usize;
    if m < Mollifier::MIN_SAMPLES_PER_EPSILON {
        return Err(Error::Parameter(format!(
            "mollifier epsilon {} spans only {m} flux intervals (need >= {})",
            moll.epsilon,
            Mollifier::MIN_SAMPLES_PER_EPSILON
        )));
    }
    let n = flux.samples.len();
    if 2 * m + 3 > n {
        return Err(Error::Range(format!(
            "kernel support ±{} exceeds flux sample range ±{}",
            moll.epsilon, flux.half_range
        )));
    }
    let w = moll.weights(h);
    let samples: Vec<f64> =
        (m..n - m).map(|i| w.iter().enumerate().map(|(k, wk)| wk * flux.samples[i + m - k]).sum()).collect();
    let eval = convolution(flux.eval.clone(), w, h);
    let half_range = flux.half_range - m as f64 * h;
    let mut out = FluxSpec::assemble(eval, half_range, h, samples)?;
    // Compact mollification leaves f(λ)/λ limits unchanged.
    out.recession = flux.recession;
    Ok(out)
}

/// Tabulates `f * η^ε` on `[-half_range, half_range]` by evaluating the
/// convolution on demand, with the kernel resolved at `ε/16`.
///
/// Used when ε is too small for a table fine enough to convolve directly.
pub fn mollify_on_demand(flux: &FluxSpec, moll: &Mollifier, half_range: f64, n_intervals: usize) -> Result<FluxSpec> {
    let h = moll.epsilon / Mollifier::MIN_SAMPLES_PER_EPSILON as f64;
    let eval = convolution(flux.eval.clone(), moll.weights(h), h);
    let mut out = FluxSpec::from_arc(eval, half_range, n_intervals)?;
    out.recession = flux.recession;
    Ok(out)
}
