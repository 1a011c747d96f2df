//! Command implementations behind the `stifflab` binary.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{LoadedConfig, McConfig, Phase, Process};
use super::output::{
    event_rows, field_snapshot_rows, mass_rows, path_snapshot_rows, run_id, solution_rows, triplet_rows,
    OutputDir, QuantityRow, RunManifest,
};
use super::svg::{line_plot, Axes, Series};
use crate::assembly::{DiscreteForm, Grid, Interface, Side};
use crate::error::{Error, Result};
use crate::evolve::{bc_residual_of, resolvent, step_heat, BcResidual, HeatOptions, Scheme};
use crate::lab::{check_resolvent_identity, run_fdd_check, run_phase_sweep, BarrierProblem, Scenario};
use crate::mc::{estimate, run_ctmc, run_snob, CtmcConfig, Functional, PathEnsemble, SnobConfig};
use crate::probe::Probe;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveKind {
    Resolvent,
    Heat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve(SolveKind),
    Sweep,
    Mc,
    Check,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(SolveKind::Resolvent) => "solve resolvent",
            Command::Solve(SolveKind::Heat) => "solve heat",
            Command::Sweep => "sweep",
            Command::Mc => "mc",
            Command::Check => "check",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Overrides the seed in the config file.
    pub seed: Option<u64>,
    pub svg: bool,
}

/// Summary printed by the binary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub run_id: String,
    pub lines: Vec<String>,
    /// False when a check battery found a violated invariant.
    pub passed: bool,
    pub manifest: PathBuf,
}

/// The assembled problem described by a scenario and its phase.
struct Problem {
    form: DiscreteForm,
    /// Present for thin-barrier phases, to sample data through the shift map.
    barrier: Option<(BarrierProblem, Grid)>,
}

impl Problem {
    fn build(scenario: &Scenario, phase: Phase) -> Result<Self> {
        match phase {
            Phase::Interface(iface) => Ok(Problem {
                form: scenario.form(iface)?,
                barrier: None,
            }),
            Phase::Barrier {
                epsilon,
                family,
                cells,
            } => {
                let p = BarrierProblem::new(scenario, family.barrier(epsilon)?, cells)?;
                Ok(Problem {
                    form: p.form.clone(),
                    barrier: Some((p, scenario.grid(true)?)),
                })
            }
        }
    }

    fn sample(&self, f: &Probe) -> Vec<f64> {
        match &self.barrier {
            Some((p, limit)) => p.data(f, limit),
            None => f.sample(self.form.grid()),
        }
    }

    fn interface_rows(&self, u: &[f64]) -> Result<Vec<QuantityRow>> {
        if let Some((p, _)) = &self.barrier {
            let (jump, fm, fp) = p.interface(u);
            return Ok(vec![
                QuantityRow::new("barrier_epsilon", p.barrier.epsilon),
                QuantityRow::new("barrier_gamma_bar", p.barrier.total_resistance()),
                QuantityRow::new("jump", jump),
                QuantityRow::new("flux_minus", fm),
                QuantityRow::new("flux_plus", fp),
            ]);
        }
        Ok(match bc_residual_of(&self.form, u)? {
            BcResidual::Separate {
                flux_minus,
                flux_plus,
            } => vec![
                QuantityRow::new("flux_minus", flux_minus),
                QuantityRow::new("flux_plus", flux_plus),
            ],
            BcResidual::Snapping {
                residual_minus,
                residual_plus,
                jump,
            } => vec![
                QuantityRow::new("residual_minus", residual_minus),
                QuantityRow::new("residual_plus", residual_plus),
                QuantityRow::new("jump", jump),
            ],
            BcResidual::Continuous { gap } => vec![QuantityRow::new("gap", gap)],
        })
    }
}

/// Load, validate, execute, and write artifacts plus the manifest.
pub fn run(command: Command, loaded: &LoadedConfig, opts: &RunOptions) -> Result<Outcome> {
    let started = Instant::now();
    let cfg = &loaded.config;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let id = run_id(&loaded.bytes, seed);
    let base = loaded.base_dir();
    let (scenario, phase) = cfg.scenario.build(&base)?;

    let mut out = OutputDir::create(&opts.out_dir)?;
    let mut manifest = RunManifest::new(id.clone(), command.name(), &loaded.bytes, seed);
    manifest.inputs.push(loaded.path.display().to_string());
    for m in [&cfg.scenario.speed, &cfg.scenario.resistance] {
        if let Some(p) = m.input_path(&base) {
            manifest.inputs.push(p.display().to_string());
        }
    }

    let mut lines = vec![format!("run_id {id}")];
    let passed = match command {
        Command::Solve(kind) => solve(kind, loaded, &scenario, phase, opts, &mut out, &mut lines)?,
        Command::Sweep => sweep(loaded, &id, scenario, opts, &mut out, &mut lines)?,
        Command::Mc => mc(loaded, seed, &scenario, phase, &mut out, &mut lines)?,
        Command::Check => check(loaded, seed, &scenario, phase, &mut out, &mut lines)?,
    };
    manifest.passed = passed;
    let manifest_path = manifest.finish(&out, started.elapsed())?;
    lines.push(format!("manifest {}", manifest_path.display()));
    Ok(Outcome {
        run_id: id,
        lines,
        passed,
        manifest: manifest_path,
    })
}

fn solve(
    kind: SolveKind,
    loaded: &LoadedConfig,
    scenario: &Scenario,
    phase: Phase,
    opts: &RunOptions,
    out: &mut OutputDir,
    lines: &mut Vec<String>,
) -> Result<bool> {
    let problem = Problem::build(scenario, phase)?;
    let form = &problem.form;
    out.write_rows("triplets.csv", &triplet_rows(form))?;
    out.write_rows("masses.csv", &mass_rows(form))?;
    let grid = form.grid();
    match kind {
        SolveKind::Resolvent => {
            let rc = loaded
                .config
                .resolvent
                .as_ref()
                .ok_or_else(|| Error::config("resolvent", "`solve resolvent` needs a [resolvent] table"))?;
            if !(rc.alpha > 0.0) {
                return Err(Error::config("resolvent.alpha", format!("must be positive, got {}", rc.alpha)));
            }
            let f = problem.sample(&rc.f);
            let sol = resolvent(form, rc.alpha, &f)?;
            out.write_rows("solution.csv", &solution_rows(grid, &f, &sol.solution))?;
            let mut bc = vec![QuantityRow::new("relative_residual", sol.relative_residual)];
            bc.extend(problem.interface_rows(&sol.solution)?);
            out.write_rows("bc.csv", &bc)?;
            lines.push(format!(
                "resolvent alpha={} nodes={} relative_residual={:.3e}",
                rc.alpha,
                grid.len(),
                sol.relative_residual
            ));
            if opts.svg {
                out.write_text("solution.svg", &profile_svg("resolvent solution", grid, &sol.solution))?;
            }
        }
        SolveKind::Heat => {
            let hc = loaded
                .config
                .heat
                .as_ref()
                .ok_or_else(|| Error::config("heat", "`solve heat` needs a [heat] table"))?;
            if !(hc.dt > 0.0) {
                return Err(Error::config("heat.dt", format!("must be positive, got {}", hc.dt)));
            }
            if let Some(t) = hc.snapshots.iter().find(|t| !(**t >= 0.0 && **t <= hc.t_end)) {
                return Err(Error::config("heat.snapshots", format!("time {t} outside [0, {}]", hc.t_end)));
            }
            let u0 = problem.sample(&hc.u0);
            let mut ho = HeatOptions::new(hc.dt, hc.t_end, hc.scheme);
            ho.rannacher = hc.rannacher;
            ho.snapshot_times = hc.snapshots.clone();
            let run = step_heat(form, &u0, &ho)?;
            out.write_rows("snapshots.csv", &field_snapshot_rows(grid, &run.times, &run.snapshots))?;
            let ones = vec![1.0; form.len()];
            let m0 = form.inner(&ones, &u0);
            let m1 = form.inner(&ones, run.final_state());
            let mut report = vec![
                QuantityRow::new("mass_initial", m0),
                QuantityRow::new("mass_final", m1),
                QuantityRow::new("mass_defect", (m1 - m0).abs()),
                QuantityRow::new("total_killing", form.total_killing()),
                QuantityRow::new("weak_residual", run.weak_residual(form, &ones)),
                QuantityRow::new("steps", run.steps as f64),
            ];
            report.extend(problem.interface_rows(run.final_state())?);
            out.write_rows("bc.csv", &report)?;
            lines.push(format!(
                "heat scheme={} t_end={} steps={} mass_defect={:.3e}",
                match hc.scheme {
                    Scheme::ImplicitEuler => "implicit-euler",
                    Scheme::CrankNicolson => "crank-nicolson",
                },
                hc.t_end,
                run.steps,
                (m1 - m0).abs()
            ));
            if opts.svg {
                out.write_text("solution.svg", &profile_svg("heat solution at t_end", grid, run.final_state()))?;
            }
        }
    }
    Ok(true)
}

fn profile_svg(title: &str, grid: &Grid, u: &[f64]) -> String {
    let mut minus = Vec::new();
    let mut plus = Vec::new();
    for (i, &v) in u.iter().enumerate() {
        let p = grid.point(i);
        match p.side {
            Side::Minus => minus.push((p.x, v)),
            Side::Plus => plus.push((p.x, v)),
        }
    }
    line_plot(
        title,
        "x",
        "u",
        Axes::default(),
        &[
            Series {
                label: "x < 0".into(),
                points: minus,
            },
            Series {
                label: "x > 0".into(),
                points: plus,
            },
        ],
    )
}

#[derive(Debug, Serialize)]
struct SweepCsvRow<'a> {
    run_id: &'a str,
    n: u32,
    eps: f64,
    gamma_bar_n: f64,
    hypothesis_qty: f64,
    f_id: &'a str,
    alpha: f64,
    l2_error: f64,
    jump: f64,
    flux_res_plus: f64,
    flux_res_minus: f64,
    grid_h: f64,
    #[serde(rename = "box_L")]
    box_l: f64,
}

fn phase_name(i: &Interface) -> String {
    match i {
        Interface::Separate => "separate".into(),
        Interface::Continuous => "continuous".into(),
        Interface::Snapping { kappa } => format!("snapping(kappa={kappa})"),
        Interface::Skew { alpha_skew, kappa } => format!("skew(alpha={alpha_skew},kappa={kappa})"),
    }
}

fn sweep(
    loaded: &LoadedConfig,
    id: &str,
    scenario: Scenario,
    opts: &RunOptions,
    out: &mut OutputDir,
    lines: &mut Vec<String>,
) -> Result<bool> {
    let sc = loaded
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("sweep", "`sweep` needs a [sweep] table"))?;
    let spec = sc.build(scenario)?;
    let report = run_phase_sweep(&spec)?;
    let rows: Vec<SweepCsvRow> = report
        .rows
        .iter()
        .map(|r| SweepCsvRow {
            run_id: id,
            n: r.n,
            eps: r.eps,
            gamma_bar_n: r.gamma_bar_n,
            hypothesis_qty: r.hypothesis_qty,
            f_id: &r.f_id,
            alpha: r.alpha,
            l2_error: r.l2_error,
            jump: r.jump,
            flux_res_plus: r.flux_res_plus,
            flux_res_minus: r.flux_res_minus,
            grid_h: r.grid_h,
            box_l: r.box_l,
        })
        .collect();
    out.append_rows("sweep.csv", &rows)?;
    out.write_rows("verdicts.csv", &report.verdicts)?;
    if let Some(fdd) = &sc.fdd {
        let rows = run_fdd_check(&spec, (fdd.t1, fdd.t2), &fdd.f1, &fdd.f2, &fdd.density, fdd.dt)?;
        out.write_rows("fdd.csv", &rows)?;
        if let Some(last) = rows.last() {
            lines.push(format!("two-time functional difference at n={}: {:.3e}", last.n, last.difference));
        }
    }
    for v in &report.verdicts {
        lines.push(format!(
            "  f={} alpha={} final_error={:.3e} decreasing={} {}",
            v.f_id,
            v.alpha,
            v.final_error,
            v.decreasing,
            if v.pass { "PASS" } else { "FAIL" }
        ));
    }
    let target = phase_name(&report.target);
    let status = if !report.hypothesis_decreasing {
        "FLAGGED (hypothesis quantity not decreasing; no verdict)".to_string()
    } else if report.passed() {
        "PASS".to_string()
    } else {
        "FAIL".to_string()
    };
    lines.push(format!("verdict target={target}: {status}"));
    if opts.svg {
        let series: Vec<Series> = report
            .verdicts
            .iter()
            .map(|v| Series {
                label: format!("{} a={}", v.f_id, v.alpha),
                points: report
                    .rows
                    .iter()
                    .filter(|r| r.f_id == v.f_id && r.alpha == v.alpha)
                    .map(|r| (r.eps, r.l2_error))
                    .collect(),
            })
            .collect();
        let svg = line_plot(
            &format!("resolvent error towards {target}"),
            "eps",
            "L2 error",
            Axes {
                log_x: true,
                log_y: true,
            },
            &series,
        );
        out.write_text("sweep.svg", &svg)?;
    }
    Ok(report.hypothesis_decreasing && report.passed())
}

#[derive(Debug, Serialize)]
struct CrossCheckRow {
    f_id: String,
    time: f64,
    mc_mean: f64,
    std_err: f64,
    pde_value: f64,
    z_score: f64,
}

#[derive(Debug, Serialize)]
struct HitRow {
    x: f64,
    side: Side,
    probability: f64,
    std_err: f64,
}

fn mc(
    loaded: &LoadedConfig,
    seed: u64,
    scenario: &Scenario,
    phase: Phase,
    out: &mut OutputDir,
    lines: &mut Vec<String>,
) -> Result<bool> {
    let mcfg: &McConfig = loaded
        .config
        .mc
        .as_ref()
        .ok_or_else(|| Error::config("mc", "`mc` needs an [mc] table"))?;
    if mcfg.n_paths == 0 {
        return Err(Error::config("mc.n_paths", "needs at least one path"));
    }
    let mut snaps = mcfg.snapshots.clone();
    if let Some(cc) = &mcfg.cross_check {
        if !(cc.time > 0.0 && cc.time <= mcfg.horizon) {
            return Err(Error::config(
                "mc.cross_check.time",
                format!("must lie in (0, {}], got {}", mcfg.horizon, cc.time),
            ));
        }
        snaps.push(cc.time);
    }
    if snaps.is_empty() {
        snaps.push(mcfg.horizon);
    }
    let start = mcfg.start.point();
    let targets: Vec<_> = mcfg.targets.iter().map(|t| t.point()).collect();

    // the reference form for the cross-check and, for chains, the generator
    let (ens, form): (PathEnsemble, DiscreteForm) = match mcfg.process {
        Process::Snob => {
            let kappa = mcfg
                .kappa
                .ok_or_else(|| Error::config("mc.kappa", "snapping-out simulation needs `kappa`"))?;
            let step = mcfg
                .step
                .ok_or_else(|| Error::config("mc.step", "snapping-out simulation needs `step`"))?;
            let mut sc = SnobConfig::new(start, kappa, step, mcfg.horizon, mcfg.n_paths, seed);
            sc.snapshot_times = snaps;
            sc.targets = targets;
            let ens = run_snob(&sc)?;
            (ens, scenario.form(Interface::Snapping { kappa })?)
        }
        Process::Ctmc => {
            if !targets.is_empty() {
                return Err(Error::config("mc.targets", "hitting targets are recorded only for `snob`"));
            }
            let problem = Problem::build(scenario, phase)?;
            let cc = CtmcConfig {
                start: problem.form.grid().locate(start),
                horizon: mcfg.horizon,
                n_paths: mcfg.n_paths,
                seed,
                snapshot_times: snaps,
            };
            (run_ctmc(&problem.form, &cc)?, problem.form)
        }
    };
    out.write_rows("events.csv", &event_rows(&ens))?;
    out.write_rows("snapshots.csv", &path_snapshot_rows(&ens))?;
    let (rm, rp) = ens.rebirth_sides();
    let (cm, cp) = ens.count_events(crate::mc::EventKind::Crossing);
    lines.push(format!(
        "paths={} rebirths(minus,plus)=({rm},{rp}) crossings(minus,plus)=({cm},{cp})",
        ens.n_paths()
    ));
    if !ens.targets.is_empty() {
        let mut rows = Vec::new();
        for (k, t) in ens.targets.iter().enumerate() {
            let e = estimate(
                &ens,
                &Functional::Hitting {
                    target: k,
                    horizon: mcfg.horizon,
                },
            )?;
            rows.push(HitRow {
                x: t.x,
                side: t.side,
                probability: e.value,
                std_err: e.std_error,
            });
        }
        out.write_rows("hits.csv", &rows)?;
    }
    if let Some(cc) = &mcfg.cross_check {
        let f = cc.f.clone();
        let est = estimate(&ens, &Functional::mean(cc.time, move |p| f.eval(p)))?;
        let ho = HeatOptions::new(cc.dt, cc.time, Scheme::CrankNicolson);
        let run = step_heat(&form, &cc.f.sample(form.grid()), &ho)?;
        let pde_value = run.final_state()[form.grid().locate(start)];
        let row = CrossCheckRow {
            f_id: cc.f.id(),
            time: cc.time,
            mc_mean: est.value,
            std_err: est.std_error,
            pde_value,
            z_score: est.z_score(pde_value),
        };
        lines.push(format!(
            "cross-check f={} t={}: mc={:.5} ± {:.5} pde={:.5} z={:.2}",
            row.f_id, row.time, row.mc_mean, row.std_err, row.pde_value, row.z_score
        ));
        out.write_rows("crosscheck.csv", &[row])?;
    }
    Ok(true)
}

#[derive(Debug, Serialize)]
struct CheckRow {
    check: String,
    parameter: String,
    value: f64,
    tolerance: f64,
    pass: bool,
}

impl CheckRow {
    fn new(check: &str, parameter: String, value: f64, tolerance: f64) -> Self {
        CheckRow {
            check: check.into(),
            parameter,
            value,
            tolerance,
            pass: value.abs() <= tolerance,
        }
    }
}

fn check(
    loaded: &LoadedConfig,
    seed: u64,
    scenario: &Scenario,
    phase: Phase,
    out: &mut OutputDir,
    lines: &mut Vec<String>,
) -> Result<bool> {
    let cc = loaded.config.check.clone().unwrap_or_default();
    let mut rows = Vec::new();
    let problem = Problem::build(scenario, phase)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // unit contraction and symmetry of the configured form
    let form = &problem.form;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cc.symmetry_pairs {
        let u: Vec<f64> = (0..form.len()).map(|_| rng.gen_range(-1.0..2.0)).collect();
        let clipped: Vec<f64> = u.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let scale = form.energy(&u, &u).max(1.0);
        worst = worst.max((form.energy(&clipped, &clipped) - form.energy(&u, &u)) / scale);
    }
    rows.push(CheckRow {
        check: "unit_contraction".into(),
        parameter: format!("{} random vectors", cc.symmetry_pairs),
        value: worst,
        tolerance: 1e-12,
        pass: worst <= 1e-12,
    });
    let mut asym = 0.0f64;
    for _ in 0..cc.symmetry_pairs {
        let u: Vec<f64> = (0..form.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..form.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scale = (form.energy(&u, &u) * form.energy(&v, &v)).sqrt().max(1.0);
        asym = asym.max((form.energy(&u, &v) - form.energy(&v, &u)).abs() / scale);
    }
    rows.push(CheckRow::new("symmetry", format!("{} random pairs", cc.symmetry_pairs), asym, 1e-12));
    rows.push(CheckRow::new(
        "markov",
        "nonnegative conductances and killing".into(),
        if form.check_markov().is_ok() { 0.0 } else { 1.0 },
        0.0,
    ));

    // darning the separate form reproduces the continuous one bit for bit
    let separate = scenario.form(Interface::Separate)?;
    let darned = separate.darn()?;
    let continuous = scenario.form(Interface::Continuous)?;
    rows.push(CheckRow::new(
        "darning",
        "separate -> continuous".into(),
        if darned == continuous { 0.0 } else { 1.0 },
        0.0,
    ));

    // snapping resolvent through the elastic resolvent and the potential of the jump measure
    let data = Probe::Gaussian {
        center: 0.5,
        width: 1.0,
    }
    .sample(separate.grid());
    for &kappa in &cc.kappas {
        for &alpha in &cc.alphas {
            let r = check_resolvent_identity(&separate, kappa, alpha, &data)?;
            rows.push(CheckRow::new(
                "resolvent_identity",
                format!("kappa={kappa} alpha={alpha}"),
                r.max_abs_error,
                1e-8,
            ));
            rows.push(CheckRow::new(
                "potential_symmetry",
                format!("kappa={kappa} alpha={alpha}"),
                r.potential_symmetry,
                1e-8,
            ));
        }
    }

    // nested traces: tracing in two stages equals tracing at once
    let n = continuous.len();
    let keep_half: Vec<usize> = (0..n).step_by(2).collect();
    let keep_quarter: Vec<usize> = (0..n).step_by(4).collect();
    let pos_in_half: Vec<usize> = keep_quarter.iter().map(|i| i / 2).collect();
    let direct = continuous.trace_schur(&keep_quarter)?;
    let staged = continuous.trace_schur(&keep_half)?.trace_schur(&pos_in_half)?;
    let edge_gap = direct
        .edges()
        .iter()
        .zip(staged.edges())
        .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max);
    rows.push(CheckRow::new("nested_trace", "1/2 then 1/2 vs 1/4".into(), edge_gap, 1e-10));

    let passed = rows.iter().all(|r| r.pass);
    for r in rows.iter().filter(|r| !r.pass) {
        lines.push(format!("  violated {} ({}): {:.3e} > {:.1e}", r.check, r.parameter, r.value, r.tolerance));
    }
    lines.push(format!(
        "check battery: {}/{} passed {}",
        rows.iter().filter(|r| r.pass).count(),
        rows.len(),
        if passed { "PASS" } else { "FAIL" }
    ));
    out.write_rows("check.csv", &rows)?;
    Ok(passed)
}
