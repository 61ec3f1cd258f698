//! Periodic 1D grids, cell-averaged fields and snapshot trajectories.
//!
//! All quadrature is the midpoint (cell-average) rule, which matches the
//! finite-volume data and is second order for smooth periodic integrands.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Uniform cell-centered grid on the torus `[0, length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    n_cells: usize,
    length: f64,
}

impl PeriodicGrid {
    pub const MIN_CELLS: usize = 4;

    /// Grid on the standard torus of length 2π.
    pub fn new(n_cells: usize) -> Result<Self> {
        Self::with_length(n_cells, TAU)
    }

    pub fn with_length(n_cells: usize, length: f64) -> Result<Self> {
        if n_cells < Self::MIN_CELLS {
            return Err(Error::RejectedInput(format!(
                "periodic grid needs at least {} cells, got {n_cells}",
                Self::MIN_CELLS
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::RejectedInput(format!("grid length must be positive, got {length}")));
        }
        Ok(Self { n_cells, length })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    /// Samples `f` at the cell centers.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n_cells).map(|i| f(self.center(i))).collect()
    }
}

/// Cell averages of a scalar quantity at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: PeriodicGrid,
    values: Vec<f64>,
    time: f64,
}

impl ScalarField {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::Dimension(format!(
                "field has {} values for a grid of {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::RejectedInput(format!("non-finite value {} at cell {i}", values[i])));
        }
        if !time.is_finite() {
            return Err(Error::RejectedInput(format!("non-finite time {time}")));
        }
        Ok(Self { grid, values, time })
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.sample(f), 0.0)
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.n_cells()], 0.0)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `‖u‖_{L¹}` by midpoint quadrature.
    pub fn l1_norm(&self) -> f64 {
        self.grid.dx() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }
}

/// Midpoint quadrature of a field over the torus.
pub fn integrate(field: &ScalarField) -> f64 {
    field.grid.dx() * field.values.iter().sum::<f64>()
}

/// `∫|a - b| dx` on a shared grid.
pub fn l1_distance(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::Dimension(format!("grids differ: {} vs {} cells", a.grid.n_cells(), b.grid.n_cells())));
    }
    Ok(a.grid.dx() * a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Ordered snapshots on one grid, starting at `t = 0` with uniform spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    snapshots: Vec<ScalarField>,
}

impl Trajectory {
    pub fn new(snapshots: Vec<ScalarField>) -> Result<Self> {
        let first =
            snapshots.first().ok_or_else(|| Error::RejectedInput("trajectory needs at least one snapshot".into()))?;
        if first.time != 0.0 {
            return Err(Error::RejectedInput(format!("first snapshot at t = {}, expected 0", first.time)));
        }
        if snapshots.iter().any(|s| s.grid != first.grid) {
            return Err(Error::Dimension("snapshots live on different grids".into()));
        }
        if snapshots.len() > 1 {
            let dt = snapshots[1].time - snapshots[0].time;
            if dt <= 0.0 {
                return Err(Error::RejectedInput("snapshot times must increase".into()));
            }
            for (k, s) in snapshots.iter().enumerate() {
                let expected = k as f64 * dt;
                if (s.time - expected).abs() > 1e-9 * (1.0 + expected) {
                    return Err(Error::RejectedInput(format!(
                        "snapshot {k} at t = {} breaks uniform spacing {dt}",
                        s.time
                    )));
                }
            }
        }
        Ok(Self { snapshots })
    }

    /// Builds a trajectory from a space-time function sampled at `times`.
    pub fn from_fn(grid: PeriodicGrid, times: &[f64], f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let snapshots =
            times.iter().map(|&t| ScalarField::new(grid, grid.sample(|x| f(x, t)), t)).collect::<Result<Vec<_>>>()?;
        Self::new(snapshots)
    }

    pub fn snapshots(&self) -> &[ScalarField] {
        &self.snapshots
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.snapshots[0].grid
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    /// Snapshot spacing; zero for a single-snapshot trajectory.
    pub fn dt_snap(&self) -> f64 {
        if self.snapshots.len() < 2 {
            0.0
        } else {
            self.snapshots[1].time - self.snapshots[0].time
        }
    }

    pub fn initial(&self) -> &ScalarField {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &ScalarField {
        self.snapshots.last().expect("trajectory is non-empty")
    }

    pub fn t_end(&self) -> f64 {
        self.last().time
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_tiny_grids() {
        assert!(PeriodicGrid::new(3).is_err());
        assert!(PeriodicGrid::with_length(8, 0.0).is_err());
        let g = PeriodicGrid::new(4).unwrap();
        assert_eq!(g.cell_centers()[1], 1.5 * g.dx());
    }

    #[test]
    fn integrates_constant_to_length() {
        let g = PeriodicGrid::new(100).unwrap();
        let one = ScalarField::constant(g, 1.0).unwrap();
        assert!((integrate(&one) - 2.0 * PI).abs() < 4.0 * f64::EPSILON * 2.0 * PI);
    }

    #[test]
    fn integrates_sine_and_sine_squared() {
        let g = PeriodicGrid::new(256).unwrap();
        let s = ScalarField::from_fn(g, f64::sin).unwrap();
        assert!(integrate(&s).abs() < 1e-12);
        let s2 = ScalarField::from_fn(g, |x| x.sin().powi(2)).unwrap();
        assert!((integrate(&s2) - PI).abs() < 1e-10);
        // Same value at much higher resolution.
        let fine = PeriodicGrid::new(4096).unwrap();
        let s2f = ScalarField::from_fn(fine, |x| x.sin().powi(2)).unwrap();
        assert!((integrate(&s2) - integrate(&s2f)).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = PeriodicGrid::new(4).unwrap();
        let err = ScalarField::new(g, vec![0.0, f64::NAN, 0.0, 0.0], 0.0).unwrap_err();
        assert!(matches!(err, Error::RejectedInput(_)));
    }

    #[test]
    fn l1_distance_examples() {
        let g = PeriodicGrid::new(512).unwrap();
        let one = ScalarField::constant(g, 1.0).unwrap();
        let zero = ScalarField::constant(g, 0.0).unwrap();
        assert_eq!(l1_distance(&one, &one).unwrap(), 0.0);
        assert!((l1_distance(&one, &zero).unwrap() - 2.0 * PI).abs() < 1e-12);

        // Exact value of ∫|sin - cos| over a period is 4√2. The kinks at π/4
        // and 5π/4 sit on cell edges, so midpoint error is the Euler-Maclaurin
        // endpoint term dx² · 4√2 / 24.
        let s = ScalarField::from_fn(g, f64::sin).unwrap();
        let c = ScalarField::from_fn(g, f64::cos).unwrap();
        let exact = 4.0 * 2f64.sqrt();
        let bound = g.dx().powi(2) * exact / 24.0 + 1e-9;
        assert!((l1_distance(&s, &c).unwrap() - exact).abs() <= bound);
    }

    #[test]
    fn l1_distance_needs_shared_grid() {
        let a = ScalarField::constant(PeriodicGrid::new(8).unwrap(), 0.0).unwrap();
        let b = ScalarField::constant(PeriodicGrid::new(16).unwrap(), 0.0).unwrap();
        assert!(matches!(l1_distance(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn trajectory_validates_times() {
        let g = PeriodicGrid::new(8).unwrap();
        let f = |t| ScalarField::new(g, vec![0.0; 8], t).unwrap();
        assert!(Trajectory::new(vec![f(0.0), f(0.5), f(1.0)]).is_ok());
        assert!(Trajectory::new(vec![f(0.1), f(0.5)]).is_err());
        assert!(Trajectory::new(vec![f(0.0), f(0.5), f(1.2)]).is_err());
        assert!(Trajectory::new(vec![]).is_err());
    }

    fn field(values: Vec<f64>) -> ScalarField {
        ScalarField::new(PeriodicGrid::new(values.len()).unwrap(), values, 0.0).unwrap()
    }

    proptest! {
        #[test]
        fn integrate_is_linear(
            a in prop::collection::vec(-10.0..10.0f64, 16),
            b in prop::collection::vec(-10.0..10.0f64, 16),
            alpha in -3.0..3.0f64,
            beta in -3.0..3.0f64,
        ) {
            let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| alpha * x + beta * y).collect();
            let lhs = integrate(&field(combo));
            let rhs = alpha * integrate(&field(a)) + beta * integrate(&field(b));
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())) * 100.0);
        }

        #[test]
        fn l1_distance_is_a_metric(
            a in prop::collection::vec(-5.0..5.0f64, 12),
            b in prop::collection::vec(-5.0..5.0f64, 12),
            c in prop::collection::vec(-5.0..5.0f64, 12),
        ) {
            let (fa, fb, fc) = (field(a.clone()), field(b.clone()), field(c));
            let ab = l1_distance(&fa, &fb).unwrap();
            prop_assert_eq!(ab, l1_distance(&fb, &fa).unwrap());
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab == 0.0, a == b);
            let ac = l1_distance(&fa, &fc).unwrap();
            let cb = l1_distance(&fc, &fb).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
        }
    }
}
