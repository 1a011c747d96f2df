//! Convergence experiments: barrier sweeps, the snapping-out resolvent
//! identity, continuity in the total resistance and two-time functionals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{dual_masses, BarrierGrid, DiscreteForm, Grid, Interface, Origin};
use crate::error::{Error, Result};
use crate::evolve::{resolvent, solve_raw, step_heat, HeatOptions, Scheme};
use crate::measures::{BarrierSpec, MonotoneMeasure};
use crate::probe::Probe;

/// Speed and resistance measures on a truncation box with a uniform grid.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub speed: MonotoneMeasure,
    pub resistance: MonotoneMeasure,
    pub half_width: f64,
    pub h: f64,
}

impl Scenario {
    /// Validate that both measures cover the box with room for a barrier.
    pub fn new(speed: MonotoneMeasure, resistance: MonotoneMeasure, half_width: f64, h: f64) -> Result<Self> {
        for (name, mu) in [("speed", &speed), ("resistance", &resistance)] {
            let (lo, hi) = mu.domain();
            if lo > -half_width || hi < half_width {
                return Err(Error::Domain(format!(
                    "{name} measure on [{lo}, {hi}] does not cover the box [-{half_width}, {half_width}]"
                )));
            }
        }
        Grid::uniform(half_width, h, false)?;
        Ok(Scenario {
            speed,
            resistance,
            half_width,
            h,
        })
    }

    /// Brownian case: Lebesgue speed and resistance measures.
    pub fn brownian(half_width: f64, h: f64) -> Result<Self> {
        let leb = MonotoneMeasure::lebesgue(-2.0 * half_width, 2.0 * half_width)?;
        Scenario::new(leb.clone(), leb, half_width, h)
    }

    pub fn grid(&self, doubled: bool) -> Result<Grid> {
        Grid::uniform(self.half_width, self.h, doubled)
    }

    /// Assemble the form with the given interface on the matching grid.
    pub fn form(&self, interface: Interface) -> Result<DiscreteForm> {
        let doubled = !matches!(interface, Interface::Continuous);
        DiscreteForm::assemble(&self.speed, &self.resistance, &self.grid(doubled)?, interface)
    }
}

/// A family of barriers indexed by their half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BarrierFamily {
    /// Density `(κε)^alpha_exponent` on `(-ε, ε)`; total resistance `2κ^a ε^{a+1}`.
    Lejay { kappa: f64, alpha_exponent: f64 },
    /// Fixed total resistance, uniformly spread.
    Uniform { gamma_bar: f64 },
}

impl BarrierFamily {
    pub fn barrier(&self, epsilon: f64) -> Result<BarrierSpec> {
        match *self {
            BarrierFamily::Lejay {
                kappa,
                alpha_exponent,
            } => BarrierSpec::lejay(kappa, epsilon, alpha_exponent),
            BarrierFamily::Uniform { gamma_bar } => BarrierSpec::uniform(gamma_bar, epsilon),
        }
    }

    /// `lim γ̄(ε)` as `ε → 0`, possibly infinite.
    pub fn limit_gamma_bar(&self) -> f64 {
        match *self {
            BarrierFamily::Lejay {
                kappa,
                alpha_exponent,
            } => {
                if alpha_exponent < -1.0 {
                    f64::INFINITY
                } else if alpha_exponent == -1.0 {
                    2.0 / kappa
                } else {
                    0.0
                }
            }
            BarrierFamily::Uniform { gamma_bar } => gamma_bar,
        }
    }

    /// Interface of the predicted limit form.
    pub fn target(&self) -> Result<Interface> {
        Interface::from_gamma_bar(self.limit_gamma_bar())
    }
}

/// Description of a barrier sweep.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub family: BarrierFamily,
    /// `ε_n = eps0 · 2^{-n}`.
    pub eps0: f64,
    pub levels: Vec<u32>,
    pub barrier_cells: usize,
    pub probes: Vec<Probe>,
    pub alphas: Vec<f64>,
    pub tolerance: f64,
}

impl SweepSpec {
    pub fn new(scenario: Scenario, family: BarrierFamily, eps0: f64, levels: Vec<u32>) -> Self {
        SweepSpec {
            scenario,
            family,
            eps0,
            levels,
            barrier_cells: 16,
            probes: Probe::defaults(),
            alphas: vec![0.5, 1.0, 4.0],
            tolerance: 1e-2,
        }
    }

    pub fn epsilon(&self, n: u32) -> f64 {
        self.eps0 * 0.5f64.powi(n as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u32,
    pub eps: f64,
    pub gamma_bar_n: f64,
    pub hypothesis_qty: f64,
    pub f_id: String,
    pub alpha: f64,
    pub l2_error: f64,
    pub jump: f64,
    pub flux_res_plus: f64,
    pub flux_res_minus: f64,
    pub grid_h: f64,
    #[serde(rename = "box_L")]
    pub box_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub f_id: String,
    pub alpha: f64,
    pub decreasing: bool,
    pub final_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub target: Interface,
    pub rows: Vec<SweepRow>,
    pub verdicts: Vec<Verdict>,
    /// Whether `γ̄(n)m*(n) + λ*(n)m*(n)` decreases along the sweep.
    pub hypothesis_decreasing: bool,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn errors_for(&self, f_id: &str, alpha: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.f_id == f_id && r.alpha == alpha)
            .map(|r| r.l2_error)
            .collect()
    }
}

/// Solution of the limit problem expanded to the doubled limit grid.
struct LimitSolver {
    grid: Grid,
    mass: Vec<f64>,
    form: DiscreteForm,
    continuous: bool,
}

impl LimitSolver {
    fn new(scenario: &Scenario, target: Interface) -> Result<Self> {
        let grid = scenario.grid(true)?;
        let mass = dual_masses(&scenario.speed, &grid)?;
        let continuous = matches!(target, Interface::Continuous);
        let form = scenario.form(target)?;
        Ok(LimitSolver {
            grid,
            mass,
            form,
            continuous,
        })
    }

    fn expand(&self, u: Vec<f64>) -> Vec<f64> {
        if !self.continuous {
            return u;
        }
        let z = match self.form.grid().origin() {
            Origin::Single(z) => z,
            _ => unreachable!("continuous limit grid has a single origin node"),
        };
        let mut out = u;
        out.insert(z, out[z]);
        out
    }

    /// Data on the limit grid. A single origin node carries the
    /// mass-weighted average of the two one-sided values, which is the
    /// `L²(m)` projection of data that jumps at the origin.
    fn data(&self, f: &Probe) -> Vec<f64> {
        if !self.continuous {
            return f.sample(self.form.grid());
        }
        let mut v = f.sample(&self.grid);
        let (zm, zp) = self.grid.zero_pair().expect("limit grid is doubled");
        let (a, b) = (self.mass[zm], self.mass[zp]);
        v[zm] = (a * v[zm] + b * v[zp]) / (a + b);
        v.remove(zp);
        v
    }

    fn resolvent(&self, alpha: f64, f: &Probe) -> Result<Vec<f64>> {
        Ok(self.expand(resolvent(&self.form, alpha, &self.data(f))?.solution))
    }

    fn l2_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass
            .iter()
            .zip(a.iter().zip(b))
            .map(|(m, (x, y))| m * (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// A thin-barrier form together with its grid bookkeeping.
pub struct BarrierProblem {
    pub grid: BarrierGrid,
    pub form: DiscreteForm,
    pub barrier: BarrierSpec,
}

impl BarrierProblem {
    pub fn new(scenario: &Scenario, barrier: BarrierSpec, cells: usize) -> Result<Self> {
        let limit = scenario.grid(true)?;
        if barrier.epsilon >= scenario.half_width {
            return Err(Error::Domain(format!(
                "barrier half-width {} is not smaller than the box half-width L = {}",
                barrier.epsilon, scenario.half_width
            )));
        }
        let grid = BarrierGrid::new(&limit, barrier.epsilon, cells)?;
        let form = DiscreteForm::assemble_barrier(&scenario.speed, &scenario.resistance, &barrier, &grid)?;
        Ok(BarrierProblem {
            grid,
            form,
            barrier,
        })
    }

    /// Sample a probe through the shift map.
    pub fn data(&self, f: &Probe, limit: &Grid) -> Vec<f64> {
        (0..self.form.len())
            .map(|i| f.eval(self.grid.limit_point(i, limit)))
            .collect()
    }

    /// Pull a vector on the barrier grid back to the limit grid.
    pub fn pull_back(&self, u: &[f64]) -> Vec<f64> {
        self.grid.image.iter().map(|&i| u[i]).collect()
    }

    /// Interface jump and one-sided λ-derivatives just outside the barrier.
    pub fn interface(&self, u: &[f64]) -> (f64, f64, f64) {
        let (l, r) = (self.grid.left, self.grid.right);
        let w = self.form.edges();
        let jump = u[r] - u[l];
        let flux_plus = 2.0 * w[r] * (u[r + 1] - u[r]);
        let flux_minus = 2.0 * w[l - 1] * (u[l] - u[l - 1]);
        (jump, flux_minus, flux_plus)
    }
}

fn decreasing_tail(errors: &[f64]) -> bool {
    let k = errors.len();
    k >= 3 && errors[k - 3] > errors[k - 2] && errors[k - 2] > errors[k - 1]
}

/// Resolvent errors of the thin-barrier forms against the predicted limit.
pub fn run_phase_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    if spec.levels.is_empty() {
        return Err(Error::Argument("sweep needs at least one level".into()));
    }
    if !(spec.eps0 > 0.0) {
        return Err(Error::Parameter(format!("eps0 must be positive, got {}", spec.eps0)));
    }
    let target = spec.family.target()?;
    let limit = LimitSolver::new(&spec.scenario, target)?;
    let mut limit_solutions = Vec::new();
    for f in &spec.probes {
        for &alpha in &spec.alphas {
            limit_solutions.push((f, alpha, limit.resolvent(alpha, f)?));
        }
    }
    let kappa_target = match target {
        Interface::Snapping { kappa } => Some(kappa),
        _ => None,
    };
    let per_level: Vec<Result<Vec<SweepRow>>> = spec
        .levels
        .par_iter()
        .map(|&n| {
            let eps = spec.epsilon(n);
            let barrier = spec.family.barrier(eps)?;
            let gamma_bar = barrier.total_resistance();
            let m_star = spec.scenario.speed.window_sup(eps);
            let l_star = spec.scenario.resistance.window_sup(eps);
            let hypothesis = gamma_bar * m_star + l_star * m_star;
            let problem = BarrierProblem::new(&spec.scenario, barrier, spec.barrier_cells)?;
            let mut rows = Vec::new();
            for (f, alpha, u_lim) in &limit_solutions {
                let data = problem.data(f, &limit.grid);
                let u = resolvent(&problem.form, *alpha, &data)?.solution;
                let l2_error = limit.l2_distance(&problem.pull_back(&u), u_lim);
                let (jump, fm, fp) = problem.interface(&u);
                let (res_minus, res_plus) = match (target, kappa_target) {
                    (_, Some(k)) => (fm - 0.5 * k * jump, fp - 0.5 * k * jump),
                    (Interface::Separate, _) => (fm, fp),
                    _ => (fp - fm, fp - fm),
                };
                rows.push(SweepRow {
                    n,
                    eps,
                    gamma_bar_n: gamma_bar,
                    hypothesis_qty: hypothesis,
                    f_id: f.id(),
                    alpha: *alpha,
                    l2_error,
                    jump,
                    flux_res_plus: res_plus,
                    flux_res_minus: res_minus,
                    grid_h: spec.scenario.h,
                    box_l: spec.scenario.half_width,
                });
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_level {
        rows.extend(r?);
    }
    let mut verdicts = Vec::new();
    for f in &spec.probes {
        for &alpha in &spec.alphas {
            let id = f.id();
            let errors: Vec<f64> = rows
                .iter()
                .filter(|r| r.f_id == id && r.alpha == alpha)
                .map(|r| r.l2_error)
                .collect();
            let decreasing = decreasing_tail(&errors);
            let final_error = *errors.last().expect("at least one level");
            verdicts.push(Verdict {
                f_id: id,
                alpha,
                decreasing,
                final_error,
                pass: decreasing && final_error < spec.tolerance,
            });
        }
    }
    let hyp: Vec<f64> = spec
        .levels
        .iter()
        .filter_map(|n| rows.iter().find(|r| r.n == *n).map(|r| r.hypothesis_qty))
        .collect();
    let hypothesis_decreasing = hyp.windows(2).all(|w| w[1] < w[0]);
    Ok(SweepReport {
        target,
        rows,
        verdicts,
        hypothesis_decreasing,
    })
}

/// Outcome of the snapping-out resolvent identity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    /// `max |R^s f − (R^μ f + <R^μ f, μ>/(|μ| − <U^μ μ, μ>) · U^μ μ)|`.
    pub max_abs_error: f64,
    /// `1 − <U^μ μ, μ>/|μ|`, positive by theory.
    pub denominator: f64,
    /// `|(U^μ μ, f)_m − <R^μ f, μ>|`.
    pub potential_symmetry: f64,
}

/// Compare the directly solved snapping resolvent with its expression through
/// the elastic (killed) resolvent and the potential of `μ = (κ/2)(δ₀₊ + δ₀₋)`.
pub fn check_resolvent_identity(form: &DiscreteForm, kappa: f64, alpha: f64, f: &[f64]) -> Result<IdentityReport> {
    let (zm, zp) = form.grid().zero_pair()?;
    let snapping = form.with_interface(Interface::Snapping { kappa })?;
    let elastic = form.elastic(kappa)?;
    let total = kappa;
    let direct = resolvent(&snapping, alpha, f)?.solution;
    let killed = resolvent(&elastic, alpha, f)?.solution;
    let mut load = vec![0.0; form.len()];
    load[zm] = 0.5 * kappa;
    load[zp] = 0.5 * kappa;
    let potential = solve_raw(&elastic, alpha, &load)?;
    let pair = |u: &[f64]| 0.5 * kappa * (u[zm] + u[zp]);
    let denominator = 1.0 - pair(&potential) / total;
    if !(denominator > 0.0) {
        return Err(Error::Invariant(format!(
            "1 - <U μ, μ>/|μ| = {denominator} is not positive"
        )));
    }
    let coef = pair(&killed) / (total * denominator);
    let max_abs_error = direct
        .iter()
        .zip(killed.iter().zip(&potential))
        .map(|(d, (k, p))| (d - (k + coef * p)).abs())
        .fold(0.0, f64::max);
    let potential_symmetry = (form.inner(&potential, f) - pair(&killed)).abs();
    Ok(IdentityReport {
        max_abs_error,
        denominator,
        potential_symmetry,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaRow {
    pub gamma_bar: f64,
    pub l2_error: f64,
    pub jump: f64,
}

/// Resolvent errors of snapping forms with `κ = 2/γ̄ˡ` against the form for
/// the limit `γ̄` (continuous for 0, separate for infinity).
pub fn run_gamma_continuity(
    scenario: &Scenario,
    gammas: &[f64],
    gamma_limit: f64,
    alpha: f64,
    f: &Probe,
) -> Result<(Vec<GammaRow>, f64)> {
    let limit = LimitSolver::new(scenario, Interface::from_gamma_bar(gamma_limit)?)?;
    let u_lim = limit.resolvent(alpha, f)?;
    let (zm, zp) = limit.grid.zero_pair()?;
    let data = f.sample(&limit.grid);
    let base = scenario.form(Interface::Separate)?;
    let rows = gammas
        .iter()
        .map(|&g| {
            let form = base.with_interface(Interface::from_gamma_bar(g)?)?;
            let u = resolvent(&form, alpha, &data)?.solution;
            Ok(GammaRow {
                gamma_bar: g,
                l2_error: limit.l2_distance(&u, &u_lim),
                jump: u[zp] - u[zm],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, u_lim[zp] - u_lim[zm]))
}

/// Two-time functional `∫ h · P_{t₁}(f₁ · P_{t₂−t₁} f₂) dm` with `h` normalized
/// to unit mass.
pub fn two_time_functional(
    form: &DiscreteForm,
    density: &[f64],
    f1: &[f64],
    f2: &[f64],
    t1: f64,
    t2: f64,
    dt: f64,
) -> Result<f64> {
    if !(t2 > t1) || !(t1 >= 0.0) {
        return Err(Error::Argument(format!("need 0 <= t1 < t2, got t1 = {t1}, t2 = {t2}")));
    }
    let inner = step_heat(form, f2, &HeatOptions::new(dt, t2 - t1, Scheme::CrankNicolson))?;
    let product: Vec<f64> = f1.iter().zip(inner.final_state()).map(|(a, b)| a * b).collect();
    let outer = if t1 > 0.0 {
        step_heat(form, &product, &HeatOptions::new(dt, t1, Scheme::CrankNicolson))?
            .final_state()
            .to_vec()
    } else {
        product
    };
    let ones = vec![1.0; form.len()];
    let norm = form.inner(density, &ones);
    if !(norm > 0.0) {
        return Err(Error::Argument("initial density has zero mass".into()));
    }
    Ok(form.inner(density, &outer) / norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FddRow {
    pub n: u32,
    pub eps: f64,
    pub barrier_value: f64,
    pub limit_value: f64,
    pub difference: f64,
}

/// Two-time functionals of the barrier forms against the limit form.
pub fn run_fdd_check(
    spec: &SweepSpec,
    times: (f64, f64),
    f1: &Probe,
    f2: &Probe,
    density: &Probe,
    dt: f64,
) -> Result<Vec<FddRow>> {
    let (t1, t2) = times;
    if !(t2 > t1) {
        return Err(Error::Argument(format!("need t1 < t2, got ({t1}, {t2})")));
    }
    let limit = LimitSolver::new(&spec.scenario, spec.family.target()?)?;
    let limit_value = two_time_functional(
        &limit.form,
        &limit.data(density),
        &limit.data(f1),
        &limit.data(f2),
        t1,
        t2,
        dt,
    )?;
    let limit_grid = spec.scenario.grid(true)?;
    spec.levels
        .par_iter()
        .map(|&n| {
            let eps = spec.epsilon(n);
            let p = BarrierProblem::new(&spec.scenario, spec.family.barrier(eps)?, spec.barrier_cells)?;
            let v = two_time_functional(
                &p.form,
                &p.data(density, &limit_grid),
                &p.data(f1, &limit_grid),
                &p.data(f2, &limit_grid),
                t1,
                t2,
                dt,
            )?;
            Ok(FddRow {
                n,
                eps,
                barrier_value: v,
                limit_value,
                difference: (v - limit_value).abs(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaLock {
    pub predicted: f64,
    pub best_index: i32,
    pub best_kappa: f64,
    /// `(j, κ_j, error)` over the scanned grid.
    pub scan: Vec<(i32, f64, f64)>,
}

/// Scan `κ_j = (2/γ̄(n)) · 2^{j/8}` and find the snapping form closest to the
/// barrier form at level `n`.
pub fn kappa_lock(spec: &SweepSpec, n: u32, js: std::ops::RangeInclusive<i32>, f: &Probe, alpha: f64) -> Result<KappaLock> {
    let eps = spec.epsilon(n);
    let barrier = spec.family.barrier(eps)?;
    let predicted = 2.0 / barrier.total_resistance();
    if !predicted.is_finite() {
        return Err(Error::Parameter("κ scan needs a barrier with positive resistance".into()));
    }
    let limit_grid = spec.scenario.grid(true)?;
    let problem = BarrierProblem::new(&spec.scenario, barrier, spec.barrier_cells)?;
    let u_eps = problem.pull_back(&resolvent(&problem.form, alpha, &problem.data(f, &limit_grid))?.solution);
    let base = spec.scenario.form(Interface::Separate)?;
    let mass = dual_masses(&spec.scenario.speed, &limit_grid)?;
    let data = f.sample(&limit_grid);
    let scan = js
        .map(|j| {
            let kappa = predicted * 2f64.powf(j as f64 / 8.0);
            let form = base.with_interface(Interface::Snapping { kappa })?;
            let u = resolvent(&form, alpha, &data)?.solution;
            let err = mass
                .iter()
                .zip(u.iter().zip(&u_eps))
                .map(|(m, (a, b))| m * (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            Ok((j, kappa, err))
        })
        .collect::<Result<Vec<_>>>()?;
    let best = scan
        .iter()
        .min_by(|a, b| a.2.partial_cmp(&b.2).expect("finite errors"))
        .copied()
        .ok_or_else(|| Error::Argument("empty κ scan".into()))?;
    Ok(KappaLock {
        predicted,
        best_index: best.0,
        best_kappa: best.1,
        scan,
    })
}

/// `L²(m)` distance between the limit resolvents of two interfaces.
pub fn limit_distance(scenario: &Scenario, a: Interface, b: Interface, alpha: f64, f: &Probe) -> Result<f64> {
    let la = LimitSolver::new(scenario, a)?;
    let lb = LimitSolver::new(scenario, b)?;
    Ok(la.l2_distance(&la.resolvent(alpha, f)?, &lb.resolvent(alpha, f)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_exact_and_vanishes_for_zero_data() {
        let s = Scenario::brownian(4.0, 0.01).unwrap();
        let form = s.form(Interface::Separate).unwrap();
        let f = Probe::Gaussian { center: 0.0, width: 1.0 }.sample(form.grid());
        let r = check_resolvent_identity(&form, 2.0, 1.0, &f).unwrap();
        assert!(r.max_abs_error < 1e-9, "{r:?}");
        assert!(r.potential_symmetry < 1e-10);
        assert!(r.denominator > 0.0 && r.denominator < 1.0);
        let zero = vec![0.0; form.len()];
        assert_eq!(check_resolvent_identity(&form, 2.0, 1.0, &zero).unwrap().max_abs_error, 0.0);
    }

    #[test]
    fn constant_gamma_has_zero_error() {
        let s = Scenario::brownian(4.0, 0.02).unwrap();
        let (rows, _) = run_gamma_continuity(&s, &[1.0, 1.0, 1.0], 1.0, 1.0, &Probe::OddExp).unwrap();
        assert!(rows.iter().all(|r| r.l2_error == 0.0));
    }

    #[test]
    fn growing_gamma_approaches_separate_jump() {
        let s = Scenario::brownian(4.0, 0.02).unwrap();
        let gammas: Vec<f64> = (0..8).map(|l| 2f64.powi(l)).collect();
        let (rows, limit_jump) = run_gamma_continuity(&s, &gammas, f64::INFINITY, 1.0, &Probe::OddExp).unwrap();
        assert!(rows.windows(2).all(|w| w[1].jump > w[0].jump));
        assert!(rows.iter().all(|r| r.jump < limit_jump));
        assert!((rows.last().unwrap().jump - limit_jump).abs() < 0.05 * limit_jump);
    }

    #[test]
    fn sweep_refuses_underresolved_barrier() {
        let s = Scenario::brownian(2.0, 0.05).unwrap();
        let mut spec = SweepSpec::new(s, BarrierFamily::Lejay { kappa: 1.0, alpha_exponent: -1.0 }, 0.1, vec![0]);
        spec.barrier_cells = 4;
        assert!(matches!(run_phase_sweep(&spec), Err(Error::Resolution { .. })));
    }

    #[test]
    fn fdd_with_constant_second_factor_is_one_time_marginal() {
        let s = Scenario::brownian(4.0, 0.02).unwrap();
        let form = s.form(Interface::Snapping { kappa: 2.0 }).unwrap();
        let g = form.grid();
        let dens = Probe::Gaussian { center: 0.5, width: 0.5 }.sample(g);
        let f1 = Probe::Indicator { a: 0.5, b: 1.5 }.sample(g);
        let ones = vec![1.0; form.len()];
        let two = two_time_functional(&form, &dens, &f1, &ones, 0.25, 0.75, 0.01).unwrap();
        let run = step_heat(&form, &f1, &HeatOptions::new(0.01, 0.25, Scheme::CrankNicolson)).unwrap();
        let one = form.inner(&dens, run.final_state()) / form.inner(&dens, &ones);
        assert!((two - one).abs() < 1e-12);
        assert!(two_time_functional(&form, &dens, &f1, &ones, 0.5, 0.5, 0.01).is_err());
    }

    #[test]
    fn limit_forms_differ_across_phases() {
        let s = Scenario::brownian(4.0, 0.02).unwrap();
        let f = Probe::OddExp;
        let sep = Interface::Separate;
        let snap = Interface::Snapping { kappa: 1.0 };
        let cont = Interface::Continuous;
        for (a, b) in [(sep, snap), (snap, cont), (sep, cont)] {
            assert!(limit_distance(&s, a, b, 1.0, &f).unwrap() > 0.05);
        }
    }
}
