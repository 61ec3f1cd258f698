//! CSV exports. Reals carry 17 significant digits so files round-trip exactly.

use std::io::{self, Write};

use crate::euler::{EulerState1D, GronwallReport};
use crate::grid::Trajectory;
use crate::renewal::{DecaySeries, RenewalModel};
use crate::scalar::ResidualEntry;
use crate::young::EmpiricalYoungMeasure;

/// Formats a real with 17 significant digits.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t,x,value`, row-major by snapshot then cell.
pub fn write_trajectory(mut w: impl Write, traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "t,x,value")?;
    let xs = traj.grid().cell_centers();
    for s in traj.snapshots() {
        for (x, v) in xs.iter().zip(s.values()) {
            writeln!(w, "{},{},{}", real(s.time()), real(*x), real(*v))?;
        }
    }
    Ok(())
}

/// `k,phi_index,residual,tolerance,pass`.
pub fn write_entropy_report(mut w: impl Write, entries: &[ResidualEntry]) -> io::Result<()> {
    writeln!(w, "k,phi_index,residual,tolerance,pass")?;
    for e in entries {
        writeln!(w, "{},{},{},{},{}", real(e.k), e.phi_index, real(e.residual), real(e.tolerance), e.pass())?;
    }
    Ok(())
}

/// `cell_x,cell_t,bin_lo,bin_hi,weight`, empty bins omitted.
pub fn write_measure(mut w: impl Write, m: &EmpiricalYoungMeasure) -> io::Result<()> {
    writeln!(w, "cell_x,cell_t,bin_lo,bin_hi,weight")?;
    for it in 0..m.n_t() {
        for ix in 0..m.n_x() {
            for (b, &weight) in m.histogram(m.cell_index(ix, it)).iter().enumerate() {
                if weight > 0.0 {
                    let (lo, hi) = m.bin_edges(b);
                    writeln!(w, "{ix},{it},{},{},{}", real(lo), real(hi), real(weight))?;
                }
            }
        }
    }
    Ok(())
}

/// `cell_x,cell_t,m1,w_plus,w_minus`; angle weights are empty where undefined.
pub fn write_measure_sidecar(mut w: impl Write, m: &EmpiricalYoungMeasure) -> io::Result<()> {
    writeln!(w, "cell_x,cell_t,m1,w_plus,w_minus")?;
    for it in 0..m.n_t() {
        for ix in 0..m.n_x() {
            let c = m.cell_index(ix, it);
            let (wp, wm) = match m.angle_weights()[c] {
                Some((p, q)) => (real(p), real(q)),
                None => (String::new(), String::new()),
            };
            writeln!(w, "{ix},{it},{},{wp},{wm}", real(m.m1()[c]))?;
        }
    }
    Ok(())
}

/// `t,x,rho,u`.
pub fn write_euler_trajectory(mut w: impl Write, states: &[EulerState1D]) -> io::Result<()> {
    writeln!(w, "t,x,rho,u")?;
    for s in states {
        let xs = s.grid().cell_centers();
        for ((x, r), u) in xs.iter().zip(s.rho()).zip(s.velocity()) {
            writeln!(w, "{},{},{},{}", real(s.time()), real(*x), real(*r), real(u))?;
        }
    }
    Ok(())
}

/// `t,E_rel,bound,pass`.
pub fn write_gronwall(mut w: impl Write, report: &GronwallReport) -> io::Result<()> {
    writeln!(w, "t,E_rel,bound,pass")?;
    for i in 0..report.times.len() {
        writeln!(
            w,
            "{},{},{},{}",
            real(report.times[i]),
            real(report.e_rel[i]),
            real(report.bound[i]),
            report.pass[i]
        )?;
    }
    Ok(())
}

/// `t,H,m,sigma_hat_running`; the running rate is `NaN` until it can be fitted.
pub fn write_decay(mut w: impl Write, series: &DecaySeries) -> io::Result<()> {
    writeln!(w, "t,H,m,sigma_hat_running")?;
    for i in 0..series.times.len() {
        writeln!(
            w,
            "{},{},{},{}",
            real(series.times[i]),
            real(series.h[i]),
            real(series.m[i]),
            real(series.sigma_hat_running[i])
        )?;
    }
    Ok(())
}

/// `x,N,phi` on the cell centers.
pub fn write_eigen(mut w: impl Write, model: &RenewalModel) -> io::Result<()> {
    writeln!(w, "x,N,phi")?;
    for (i, x) in model.grid.cell_centers().iter().enumerate() {
        writeln!(w, "{},{},{}", real(*x), real(model.eigen.n[i]), real(model.eigen.phi()[i]))?;
    }
    Ok(())
}
