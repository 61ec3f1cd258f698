//! The six experiments, their config keys and in-run invariants.

use std::f64::consts::TAU;

use entropy_lab::euler::{weak_strong_experiment, EulerOptions, EulerState1D};
use entropy_lab::grid::{integrate, l1_distance, PeriodicGrid, ScalarField, Trajectory};
use entropy_lab::io;
use entropy_lab::renewal::{
    decay_experiment, initial_profile, AgeGrid, BirthRate, DecayOptions, InitialData, RenewalModel,
};
use entropy_lab::scalar::{
    contraction_series, entropy_residual, solve_reference, solve_viscous, solve_viscous_ladder,
    stationary_expansion_shock, FluxSpec, RunOptions, TestFunctionBank,
};
use entropy_lab::young::{build_measure, dirac_diagnostic, MeasureSequenceInput, DEFAULT_BINS, DEFAULT_COARSE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::output::OutputDir;

pub struct Experiment {
    pub name: &'static str,
    pub description: &'static str,
    pub tag: &'static str,
    pub required: &'static [&'static str],
    pub optional: &'static [&'static str],
    pub run: fn(&mut Run) -> Result<()>,
}

impl Experiment {
    pub fn allowed(&self) -> Vec<&'static str> {
        self.required.iter().chain(self.optional).copied().collect()
    }
}

/// State shared by a single invocation.
pub struct Run {
    pub cfg: Config,
    pub out: OutputDir,
    pub seed: u64,
    pub summary: Vec<String>,
}

impl Run {
    fn note(&mut self, line: String) {
        self.summary.push(line);
    }
}

macro_rules! keys {
    ($($extra:literal),* $(,)?) => {
        &[
            "grid.length", "flux.kind", "flux.speed", "flux.half_range", "flux.intervals", "time.snapshots",
            "initial.kind", "initial.amplitude", "initial.mode", "initial.offset", "initial.value",
            "initial.left", "initial.right", "initial.at", $($extra),*
        ]
    };
}

pub const CATALOG: &[Experiment] = &[
    Experiment {
        name: "claw-converge",
        description: "vanishing-viscosity ladder against the monotone reference solver",
        tag: "[scalar laws: vanishing viscosity]",
        required: &["grid.n", "time.t_end"],
        optional: keys!("viscous.ladder"),
        run: claw_converge,
    },
    Experiment {
        name: "entropy-check",
        description: "Kruzhkov entropy residuals of a computed or prescribed solution",
        tag: "[scalar laws: entropy inequality]",
        required: &["grid.n", "time.t_end", "entropy.solution"],
        optional: keys!("entropy.ks", "entropy.n"),
        run: entropy_check,
    },
    Experiment {
        name: "young-measure",
        description: "empirical Young measures of the viscous ladder and their Dirac diagnostic",
        tag: "[measure-valued solutions: Young measures]",
        required: &["grid.n", "time.t_end", "viscous.ladder"],
        optional: keys!("measure.bins", "measure.radius", "measure.nx", "measure.nt"),
        run: young_measure,
    },
    Experiment {
        name: "contraction",
        description: "L1 distance between seeded random pairs of entropy solutions",
        tag: "[measure-valued solutions: L1 contraction]",
        required: &["grid.n", "time.t_end"],
        optional: &[
            "grid.length",
            "flux.kind",
            "flux.speed",
            "flux.half_range",
            "flux.intervals",
            "time.snapshots",
            "contraction.pairs",
            "contraction.modes",
        ],
        run: contraction,
    },
    Experiment {
        name: "euler-weak-strong",
        description: "relative entropy of coarse Euler runs against a fine strong run",
        tag: "[Euler: relative entropy and weak-strong uniqueness]",
        required: &["grid.n", "grid.levels", "time.t_end"],
        optional: &[
            "grid.length",
            "euler.gamma",
            "euler.cfl",
            "time.snapshots",
            "initial.rho_mean",
            "initial.rho_amp",
            "initial.u_amp",
            "initial.mode",
            "gronwall.c_g",
        ],
        run: euler_weak_strong,
    },
    Experiment {
        name: "renewal-decay",
        description: "generalized relative entropy decay for the linear renewal equation",
        tag: "[renewal equation: generalized relative entropy]",
        required: &["birth.kind", "birth.params", "grid.x_max", "grid.n", "time.dt", "time.t_end", "init.kind"],
        optional: &["init.params", "time.record_every"],
        run: renewal_decay,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    CATALOG.iter().find(|e| e.name == name)
}

pub fn catalog_text() -> String {
    let mut s = String::from("entropy-lab experiments:\n");
    for e in CATALOG {
        s.push_str(&format!("  {:<18} {} {}\n", e.name, e.tag, e.description));
        s.push_str(&format!("  {:<18} required: {}\n", "", e.required.join(", ")));
    }
    s.push_str("\nusage: entropy-lab <experiment> --config <path> [--out <dir>] [--seed <int>]\n");
    s
}

fn invariant(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Invariant(msg()))
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("`{key}`: {msg}"))
}

struct ScalarSetup {
    u0: ScalarField,
    flux: FluxSpec,
    t_end: f64,
    opts: RunOptions,
}

fn initial_field(cfg: &Config, grid: PeriodicGrid) -> Result<ScalarField> {
    let length = grid.length();
    let kind = cfg.string("initial.kind", "sin");
    let field = match kind.as_str() {
        "sin" => {
            let a: f64 = cfg.get("initial.amplitude", 1.0)?;
            let k: f64 = cfg.get("initial.mode", 1.0)?;
            let c: f64 = cfg.get("initial.offset", 0.0)?;
            ScalarField::from_fn(grid, |x| c + a * (TAU * k * x / length).sin())
        }
        "constant" => ScalarField::constant(grid, cfg.get("initial.value", 0.0)?),
        "riemann" => {
            let (l, r): (f64, f64) = (cfg.get("initial.left", 1.0)?, cfg.get("initial.right", -1.0)?);
            let at: f64 = cfg.get("initial.at", 0.5 * length)?;
            ScalarField::from_fn(grid, |x| if x < at { l } else { r })
        }
        other => return Err(bad("initial.kind", format!("expected sin, constant or riemann, got `{other}`"))),
    };
    Ok(field?)
}

fn scalar_setup(cfg: &Config) -> Result<ScalarSetup> {
    let n: usize = cfg.require("grid.n")?;
    let length: f64 = cfg.get("grid.length", TAU)?;
    let grid = PeriodicGrid::with_length(n, length)?;
    let u0 = initial_field(cfg, grid)?;
    let half_range: f64 = cfg.get("flux.half_range", (2.0 * u0.max_abs()).max(2.0))?;
    let intervals: usize = cfg.get("flux.intervals", 4000)?;
    let flux = match cfg.string("flux.kind", "burgers").as_str() {
        "burgers" => FluxSpec::burgers(half_range, intervals)?,
        "linear" => FluxSpec::linear(cfg.get("flux.speed", 1.0)?, half_range, intervals)?,
        other => return Err(bad("flux.kind", format!("expected burgers or linear, got `{other}`"))),
    };
    let t_end: f64 = cfg.require("time.t_end")?;
    let snapshots: usize = cfg.get("time.snapshots", 32)?;
    Ok(ScalarSetup { u0, flux, t_end, opts: RunOptions::with_snapshots(snapshots) })
}

fn ladder(cfg: &Config) -> Result<Vec<u32>> {
    let ns: Vec<u32> = cfg.list("viscous.ladder", &[32, 128, 512])?;
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("viscous.ladder", "needs a strictly increasing, non-empty list"));
    }
    Ok(ns)
}

fn trajectory_csv(out: &mut OutputDir, name: &str, traj: &Trajectory) -> Result<()> {
    out.csv(name, |w| io::write_trajectory(w, traj))
}

fn claw_converge(run: &mut Run) -> Result<()> {
    let s = scalar_setup(&run.cfg)?;
    let ns = ladder(&run.cfg)?;
    let reference = solve_reference(&s.u0, &s.flux, s.t_end, &s.opts)?;
    let runs = solve_viscous_ladder(&s.u0, &s.flux, &ns, s.t_end, &s.opts)?;
    let last = reference.last();
    let scale = last.l1_norm();
    let gaps: Vec<f64> =
        runs.iter().map(|r| l1_distance(r.trajectory.last(), last)).collect::<entropy_lab::Result<_>>()?;

    trajectory_csv(&mut run.out, "reference.csv", &reference)?;
    for r in &runs {
        trajectory_csv(&mut run.out, &format!("viscous_n{}.csv", r.n), &r.trajectory)?;
    }
    run.out.csv("ladder.csv", |w| {
        writeln!(w, "n,epsilon_n,dt,l1_gap,relative_gap")?;
        for (r, g) in runs.iter().zip(&gaps) {
            let rel = if scale > 0.0 { g / scale } else { *g };
            writeln!(w, "{},{},{},{},{}", r.n, io::real(r.epsilon_n), io::real(r.dt), io::real(*g), io::real(rel))?;
        }
        Ok(())
    })?;
    for (r, g) in runs.iter().zip(&gaps) {
        run.note(format!("n={} l1_gap={g:.6e}", r.n));
    }

    let mass0 = integrate(&s.u0);
    let drift = (integrate(last) - mass0).abs();
    invariant(drift <= 1e-9 * (1.0 + s.u0.l1_norm()), || format!("reference solver lost mass: drift {drift:e}"))?;
    let (lo, hi) = (s.u0.min() - 1e-12, s.u0.max() + 1e-12);
    invariant(reference.snapshots().iter().all(|f| f.min() >= lo && f.max() <= hi), || {
        "reference solver broke the maximum principle".into()
    })?;
    invariant(gaps.windows(2).all(|g| g[1] <= g[0] + 1e-12), || format!("viscous gaps do not decrease: {gaps:?}"))
}

fn entropy_check(run: &mut Run) -> Result<()> {
    let s = scalar_setup(&run.cfg)?;
    let ks: Vec<f64> = run.cfg.list("entropy.ks", &[-0.5, 0.0, 0.5])?;
    if ks.is_empty() {
        return Err(bad("entropy.ks", "needs at least one level"));
    }
    let solution = run.cfg.string("entropy.solution", "reference");
    let grid = *s.u0.grid();
    let traj = match solution.as_str() {
        "reference" => solve_reference(&s.u0, &s.flux, s.t_end, &s.opts)?,
        "viscous" => solve_viscous(&s.u0, &s.flux, run.cfg.get("entropy.n", 512)?, s.t_end, &s.opts)?.trajectory,
        "expansion" => stationary_expansion_shock(
            grid,
            s.t_end,
            s.opts.n_snapshots,
            run.cfg.get("initial.amplitude", 1.0)?,
            run.cfg.get("initial.at", 0.375 * grid.length())?,
        )?,
        other => {
            return Err(bad("entropy.solution", format!("expected reference, viscous or expansion, got `{other}`")))
        }
    };
    let bank = TestFunctionBank::lattice(grid.length(), traj.t_end());
    let mut entries = Vec::new();
    for &k in &ks {
        entries.extend(entropy_residual(&traj, &s.flux, k, &bank)?);
    }
    trajectory_csv(&mut run.out, "solution.csv", &traj)?;
    run.out.csv("entropy.csv", |w| io::write_entropy_report(w, &entries))?;

    let worst = entries
        .iter()
        .min_by(|a, b| (a.residual + a.tolerance).total_cmp(&(b.residual + b.tolerance)))
        .expect("non-empty bank");
    run.note(format!(
        "solution={solution} entries={} worst_margin={:.6e}",
        entries.len(),
        worst.residual + worst.tolerance
    ));
    invariant(entries.iter().all(|e| e.pass()), || {
        format!(
            "entropy inequality fails for k={} phi={}: residual {:e} below -{:e}",
            worst.k, worst.phi_index, worst.residual, worst.tolerance
        )
    })
}

fn young_measure(run: &mut Run) -> Result<()> {
    let s = scalar_setup(&run.cfg)?;
    let ns = ladder(&run.cfg)?;
    let bins: usize = run.cfg.get("measure.bins", DEFAULT_BINS)?;
    let radius: f64 = run.cfg.get("measure.radius", 1.25 * s.u0.max_abs().max(0.8))?;
    let coarse = (run.cfg.get("measure.nx", DEFAULT_COARSE.0)?, run.cfg.get("measure.nt", DEFAULT_COARSE.1)?);
    let members: Vec<Trajectory> =
        solve_viscous_ladder(&s.u0, &s.flux, &ns, s.t_end, &s.opts)?.into_iter().map(|r| r.trajectory).collect();
    let bound = members.iter().flat_map(|m| m.snapshots()).map(|f| f.l1_norm()).fold(0.0, f64::max) * (1.0 + 1e-9);

    let mut variances = Vec::with_capacity(ns.len());
    let mut finest = None;
    for k in 1..=members.len() {
        let input = MeasureSequenceInput::new(members[..k].to_vec(), bound)?;
        let measure = build_measure(&input, bins, radius, coarse)?;
        variances.push(dirac_diagnostic(&measure).into_iter().fold(0.0, f64::max));
        finest = Some(measure);
    }
    let measure = finest.expect("non-empty ladder");
    run.out.csv("measure.csv", |w| io::write_measure(w, &measure))?;
    run.out.csv("measure_sidecar.csv", |w| io::write_measure_sidecar(w, &measure))?;
    run.out.csv("variance.csv", |w| {
        writeln!(w, "n,max_variance")?;
        ns.iter().zip(&variances).try_for_each(|(n, v)| writeln!(w, "{n},{}", io::real(*v)))
    })?;
    for (n, v) in ns.iter().zip(&variances) {
        run.note(format!("n={n} max_variance={v:.6e}"));
    }
    let clipped: f64 = measure.m1().iter().sum();
    run.note(format!("clipped_mass={clipped:.6e}"));
    invariant(variances.windows(2).all(|v| v[1] <= v[0] + 1e-12), || {
        format!("cell variance grows under refinement: {variances:?}")
    })
}

/// Random trigonometric polynomial with `modes` terms and sup norm at most 1.
fn random_data(rng: &mut ChaCha8Rng, grid: PeriodicGrid, modes: usize) -> Result<ScalarField> {
    let coeffs: Vec<(f64, f64)> = (0..modes).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..TAU))).collect();
    let length = grid.length();
    let raw = grid.sample(|x| {
        coeffs.iter().enumerate().map(|(k, (a, p))| a * ((k + 1) as f64 * TAU * x / length + p).sin()).sum()
    });
    let sup = raw.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    Ok(ScalarField::new(grid, raw.into_iter().map(|v| v / sup).collect(), 0.0)?)
}

fn contraction(run: &mut Run) -> Result<()> {
    let n: usize = run.cfg.require("grid.n")?;
    let grid = PeriodicGrid::with_length(n, run.cfg.get("grid.length", TAU)?)?;
    let t_end: f64 = run.cfg.require("time.t_end")?;
    let opts = RunOptions::with_snapshots(run.cfg.get("time.snapshots", 32)?);
    let pairs: usize = run.cfg.get("contraction.pairs", 50)?;
    let modes: usize = run.cfg.get("contraction.modes", 4)?;
    if modes == 0 {
        return Err(bad("contraction.modes", "needs at least one mode"));
    }
    let half_range: f64 = run.cfg.get("flux.half_range", 2.0)?;
    let intervals: usize = run.cfg.get("flux.intervals", 4000)?;
    let flux = match run.cfg.string("flux.kind", "burgers").as_str() {
        "burgers" => FluxSpec::burgers(half_range, intervals)?,
        "linear" => FluxSpec::linear(run.cfg.get("flux.speed", 1.0)?, half_range, intervals)?,
        other => return Err(bad("flux.kind", format!("expected burgers or linear, got `{other}`"))),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let mut series = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let a = random_data(&mut rng, grid, modes)?;
        let b = random_data(&mut rng, grid, modes)?;
        let ta = solve_reference(&a, &flux, t_end, &opts)?;
        let tb = solve_reference(&b, &flux, t_end, &opts)?;
        series.push(contraction_series(&ta, &tb)?);
    }
    run.out.csv("contraction.csv", |w| {
        writeln!(w, "pair,t,distance")?;
        for (p, s) in series.iter().enumerate() {
            for (t, d) in s {
                writeln!(w, "{p},{},{}", io::real(*t), io::real(*d))?;
            }
        }
        Ok(())
    })?;
    let worst = series
        .iter()
        .map(|s| s.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::NEG_INFINITY, f64::max);
    run.note(format!("pairs={pairs} worst_increment={worst:.6e}"));
    invariant(worst <= 1e-12, || format!("L1 distance grew by {worst:e}"))
}

fn euler_weak_strong(run: &mut Run) -> Result<()> {
    let cfg = &run.cfg;
    let n: usize = cfg.require("grid.n")?;
    let length: f64 = cfg.get("grid.length", TAU)?;
    let grid = PeriodicGrid::with_length(n, length)?;
    let mut levels: Vec<usize> = cfg.list("grid.levels", &[])?;
    levels.sort_unstable();
    if levels.is_empty() {
        return Err(bad("grid.levels", "needs at least one coarse level"));
    }
    let t_end: f64 = cfg.require("time.t_end")?;
    let gamma: f64 = cfg.get("euler.gamma", 1.4)?;
    let opts = EulerOptions { cfl: cfg.get("euler.cfl", 0.45)?, n_snapshots: cfg.get("time.snapshots", 64)? };
    let (rho_mean, rho_amp, u_amp): (f64, f64, f64) =
        (cfg.get("initial.rho_mean", 1.0)?, cfg.get("initial.rho_amp", 0.3)?, cfg.get("initial.u_amp", 1.0)?);
    let k: f64 = cfg.get("initial.mode", 1.0)?;
    let c_g: f64 = cfg.get("gronwall.c_g", 2.0)?;
    let wave = move |x: f64| (TAU * k * x / length).sin();
    let initial = EulerState1D::from_primitive(grid, |x| rho_mean + rho_amp * wave(x), |x| u_amp * wave(x), gamma)?;
    let report = weak_strong_experiment(&initial, &levels, t_end, &opts, c_g)?;

    run.out.csv("strong.csv", |w| io::write_euler_trajectory(w, &report.strong))?;
    for level in &report.levels {
        run.out.csv(&format!("gronwall_n{}.csv", level.n_cells), |w| io::write_gronwall(w, &level.report))?;
    }
    run.out.csv("levels.csv", |w| {
        writeln!(w, "n,e_rel_initial,max_e_rel,gronwall_pass,first_failure")?;
        for l in &report.levels {
            let fail = l.report.first_failure().map(io::real).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{fail}",
                l.n_cells,
                io::real(l.e_rel_full[0]),
                io::real(l.max_e_rel),
                l.report.passed()
            )?;
        }
        Ok(())
    })?;
    match report.shock_time {
        Some(t) => run.note(format!("shock_time={t:.6e}")),
        None => run.note("shock_time=none".into()),
    }
    for l in &report.levels {
        let outcome = match l.report.first_failure() {
            None => "pass".to_string(),
            Some(t) => format!("fail (first exceedance at t={t:.4})"),
        };
        run.note(format!("n={} max_e_rel={:.6e} gronwall={outcome}", l.n_cells, l.max_e_rel));
    }

    let first = &report.strong[0];
    let last = report.strong.last().expect("snapshots");
    let mass_drift = (last.total_mass() - first.total_mass()).abs() / first.total_mass();
    invariant(mass_drift <= 1e-10, || format!("strong run lost mass: relative drift {mass_drift:e}"))?;
    let mom_drift = (last.total_momentum() - first.total_momentum()).abs();
    invariant(mom_drift <= 1e-10 * (1.0 + first.total_mass()), || {
        format!("strong run lost momentum: drift {mom_drift:e}")
    })?;
    let maxima: Vec<f64> = report.levels.iter().map(|l| l.max_e_rel).collect();
    invariant(maxima.windows(2).all(|m| m[1] <= m[0]), || format!("E_rel does not shrink under refinement: {maxima:?}"))
}

fn params(cfg: &Config, key: &str, default: &[f64], arity: Option<usize>) -> Result<Vec<f64>> {
    let p: Vec<f64> = cfg.list(key, default)?;
    if let Some(a) = arity {
        if p.len() != a {
            return Err(bad(key, format!("expected {a} values, got {}", p.len())));
        }
    }
    Ok(p)
}

fn renewal_decay(run: &mut Run) -> Result<()> {
    let cfg = &run.cfg;
    let birth = match cfg.string("birth.kind", "").as_str() {
        "exp" => {
            let p = params(cfg, "birth.params", &[], Some(2))?;
            BirthRate::exponential(p[0], p[1])?
        }
        "indicator" => {
            let p = params(cfg, "birth.params", &[], Some(3))?;
            BirthRate::indicator(p[0], p[1], p[2])?
        }
        "table" => {
            let p = params(cfg, "birth.params", &[], None)?;
            if p.len() < 4 || p.len() % 2 != 0 {
                return Err(bad("birth.params", "table needs age,value pairs"));
            }
            let (ages, values) = p.chunks(2).map(|c| (c[0], c[1])).unzip();
            BirthRate::table(ages, values)?
        }
        other => return Err(bad("birth.kind", format!("expected exp, indicator or table, got `{other}`"))),
    };
    let x_max: f64 = cfg.require("grid.x_max")?;
    let grid = AgeGrid::new(x_max, cfg.require("grid.n")?)?;
    let dt: f64 = cfg.require("time.dt")?;
    let t_end: f64 = cfg.require("time.t_end")?;
    let record_every: usize = cfg.get("time.record_every", 10)?;
    let init = match cfg.string("init.kind", "").as_str() {
        "steady" => InitialData::Steady { mass: params(cfg, "init.params", &[1.0], Some(1))?[0] },
        "perturbed" => {
            let p = params(cfg, "init.params", &[0.1, 0.0, 4.0], Some(3))?;
            InitialData::Perturbed { amplitude: p[0], lo: p[1], hi: p[2] }
        }
        "atom" => {
            let p = params(cfg, "init.params", &[1.0, 1.0], Some(2))?;
            InitialData::Atom { age: p[0], mass: p[1] }
        }
        "table" => InitialData::Table(params(cfg, "init.params", &[], Some(grid.n_cells()))?),
        other => return Err(bad("init.kind", format!("expected steady, perturbed, atom or table, got `{other}`"))),
    };
    let model = RenewalModel::new(grid, birth)?;
    let n0 = initial_profile(&model, &init)?;
    let series = decay_experiment(&model, &n0, &DecayOptions { dt, t_end, record_every })?;

    run.out.csv("decay.csv", |w| io::write_decay(w, &series))?;
    run.out.csv("eigen.csv", |w| io::write_eigen(w, &model))?;
    let drift = series.max_relative_drift();
    run.note(format!("lambda0={:.12e}", model.lambda0()));
    run.note(format!("normalization_error={:.6e}", model.eigen.normalization_error()));
    run.note(format!("m0={:.12e} max_relative_drift={drift:.6e}", series.m0));
    run.note(format!("H_ratio={:.6e} sigma_hat={:.6e}", series.decay_ratio(), series.sigma_hat));
    if series.early_convergence {
        run.note("early_convergence: H reached the floor; fit window shortened".into());
    }

    let dx = model.grid.dx();
    invariant(drift <= (dx + dt) * t_end, || format!("m(t) drifted by {drift:e}, above (dx + dt) t_end"))?;
    invariant(series.final_state.iter().all(|&v| v >= 0.0), || "population became negative".into())?;
    invariant(series.nonincreasing_after(x_max, 1e-9), || format!("H increased after t = {x_max}"))
}
