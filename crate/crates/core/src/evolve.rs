//! Resolvents, heat semigroups and interface fluxes of discrete forms.

use serde::{Deserialize, Serialize};

use crate::assembly::{DiscreteForm, FormKind, Origin, Side};
use crate::error::{Error, Result};

/// LDLᵀ factorization of a symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pivots: Vec<f64>,
    multipliers: Vec<f64>,
}

impl Tridiagonal {
    /// Factor the matrix with diagonal `diag` and off-diagonal `off`.
    pub fn factor(diag: &[f64], off: &[f64]) -> Result<Self> {
        let n = diag.len();
        if off.len() + 1 != n {
            return Err(Error::Shape(format!(
                "tridiagonal: {} diagonal and {} off-diagonal entries",
                n,
                off.len()
            )));
        }
        let mut pivots = Vec::with_capacity(n);
        let mut multipliers = Vec::with_capacity(n.saturating_sub(1));
        let mut d = diag[0];
        for i in 0..n {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Numerical(format!(
                    "tridiagonal factorization broke down at row {i} (pivot {d:e})"
                )));
            }
            pivots.push(d);
            if i + 1 < n {
                let l = off[i] / d;
                multipliers.push(l);
                d = diag[i + 1] - l * off[i];
            }
        }
        Ok(Tridiagonal {
            pivots,
            multipliers,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.pivots.len();
        let mut y = rhs.to_vec();
        for i in 1..n {
            y[i] -= self.multipliers[i - 1] * y[i - 1];
        }
        for i in 0..n {
            y[i] /= self.pivots[i];
        }
        for i in (0..n - 1).rev() {
            y[i] -= self.multipliers[i] * y[i + 1];
        }
        y
    }
}

/// Factor `scale·M + shift·A` for a form.
fn factor_shifted(form: &DiscreteForm, scale: f64, shift: f64) -> Result<Tridiagonal> {
    let (diag, off) = form.tridiagonal();
    let diag: Vec<f64> = diag
        .iter()
        .zip(form.mass())
        .map(|(a, m)| scale * m + shift * a)
        .collect();
    let off: Vec<f64> = off.iter().map(|a| shift * a).collect();
    Tridiagonal::factor(&diag, &off)
}

/// Solution of `(αM + A) u = M f`.
#[derive(Debug, Clone)]
pub struct ResolventSolve {
    pub alpha: f64,
    pub rhs: Vec<f64>,
    pub solution: Vec<f64>,
    /// `‖(αM + A)u − Mf‖∞ / max(‖Mf‖∞, tiny)`.
    pub relative_residual: f64,
}

/// Solve `(αM + A) u = M f`.
pub fn resolvent(form: &DiscreteForm, alpha: f64, f: &[f64]) -> Result<ResolventSolve> {
    let mf: Vec<f64> = f.iter().zip(form.mass()).map(|(v, m)| v * m).collect();
    let solution = solve_raw(form, alpha, &mf)?;
    let relative_residual = residual(form, alpha, &solution, &mf);
    Ok(ResolventSolve {
        alpha,
        rhs: f.to_vec(),
        solution,
        relative_residual,
    })
}

/// Solve `(αM + A) u = b` for an arbitrary load vector `b`.
pub fn solve_raw(form: &DiscreteForm, alpha: f64, b: &[f64]) -> Result<Vec<f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Argument(format!(
            "resolvent rate must be positive, got {alpha}"
        )));
    }
    if b.len() != form.len() {
        return Err(Error::Shape(format!(
            "load vector has {} entries for {} nodes",
            b.len(),
            form.len()
        )));
    }
    let fac = factor_shifted(form, alpha, 1.0)?;
    let u = fac.solve(b);
    if let Some(i) = u.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite resolvent value at node {i}")));
    }
    Ok(u)
}

fn residual(form: &DiscreteForm, alpha: f64, u: &[f64], b: &[f64]) -> f64 {
    let au = form.apply(u);
    let r = au
        .iter()
        .zip(u.iter().zip(form.mass()))
        .zip(b)
        .map(|((a, (v, m)), rhs)| (alpha * m * v + a - rhs).abs())
        .fold(0.0, f64::max);
    let scale = b.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    r / scale
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ImplicitEuler,
    CrankNicolson,
}

/// Options for [`step_heat`].
#[derive(Debug, Clone)]
pub struct HeatOptions {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Replace the first Crank–Nicolson step by two implicit Euler half-steps.
    pub rannacher: bool,
    /// Times at which to store the solution; `t_end` is always stored.
    pub snapshot_times: Vec<f64>,
}

impl HeatOptions {
    pub fn new(dt: f64, t_end: f64, scheme: Scheme) -> Self {
        HeatOptions {
            dt,
            t_end,
            scheme,
            rannacher: true,
            snapshot_times: Vec::new(),
        }
    }
}

/// Result of a heat run.
#[derive(Debug, Clone)]
pub struct HeatRun {
    pub dt: f64,
    pub scheme: Scheme,
    pub initial: Vec<f64>,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    /// `∫₀ᵗ u(s) ds` at `t_end` as produced by the scheme's quadrature.
    pub time_integral: Vec<f64>,
    pub steps: usize,
}

impl HeatRun {
    pub fn final_state(&self) -> &[f64] {
        self.snapshots.last().expect("a heat run stores at least one snapshot")
    }

    pub fn snapshot_at(&self, t: f64) -> Result<&[f64]> {
        self.times
            .iter()
            .position(|s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|i| self.snapshots[i].as_slice())
            .ok_or_else(|| Error::Argument(format!("no snapshot stored at t = {t}")))
    }

    /// Discrete weak-form defect for a test vector `g`:
    /// `|(u₀ − u_T, g)_m − E(∫₀ᵀ u ds, g)|`.
    pub fn weak_residual(&self, form: &DiscreteForm, g: &[f64]) -> f64 {
        let du: Vec<f64> = self
            .initial
            .iter()
            .zip(self.final_state())
            .map(|(a, b)| a - b)
            .collect();
        (form.inner(&du, g) - form.energy(&self.time_integral, g)).abs()
    }
}

/// March `M u' = −A u` from `u0` to `t_end`.
///
/// Snapshot times that do not fall on the step lattice are reached with a
/// shortened step. Crank–Nicolson runs start with two implicit Euler
/// half-steps when `rannacher` is set, which damps the oscillation that
/// nonsmooth initial data would otherwise excite.
pub fn step_heat(form: &DiscreteForm, u0: &[f64], opts: &HeatOptions) -> Result<HeatRun> {
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(Error::Argument(format!("time step must be positive, got {}", opts.dt)));
    }
    if !(opts.t_end >= 0.0) || !opts.t_end.is_finite() {
        return Err(Error::Argument(format!("end time must be nonnegative, got {}", opts.t_end)));
    }
    if u0.len() != form.len() {
        return Err(Error::Shape(format!(
            "initial data has {} entries for {} nodes",
            u0.len(),
            form.len()
        )));
    }
    let mut stops: Vec<f64> = opts
        .snapshot_times
        .iter()
        .copied()
        .filter(|t| *t <= opts.t_end)
        .collect();
    if let Some(t) = opts.snapshot_times.iter().find(|t| !(**t >= 0.0) || **t > opts.t_end) {
        return Err(Error::Argument(format!(
            "snapshot time {t} outside [0, {}]",
            opts.t_end
        )));
    }
    stops.push(opts.t_end);
    stops.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    stops.dedup();

    let mut stepper = Stepper::new(form);
    let mut u = u0.to_vec();
    let mut integral = vec![0.0; u.len()];
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    let mut first = true;
    let tol = 1e-9 * opts.dt;

    for &stop in &stops {
        while stop - t > tol {
            let dt = opts.dt.min(stop - t);
            let rannacher = first && opts.rannacher && opts.scheme == Scheme::CrankNicolson;
            if rannacher {
                for _ in 0..2 {
                    let next = stepper.step(&u, 0.5 * dt, Scheme::ImplicitEuler)?;
                    accumulate(&mut integral, &u, &next, 0.5 * dt, Scheme::ImplicitEuler);
                    u = next;
                }
            } else {
                let next = stepper.step(&u, dt, opts.scheme)?;
                accumulate(&mut integral, &u, &next, dt, opts.scheme);
                u = next;
            }
            first = false;
            steps += 1;
            t = if stop - (t + dt) <= tol { stop } else { t + dt };
            if let Some(i) = u.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite value at node {i} after step {steps} (t = {t})"
                )));
            }
        }
        times.push(stop);
        snapshots.push(u.clone());
    }
    Ok(HeatRun {
        dt: opts.dt,
        scheme: opts.scheme,
        initial: u0.to_vec(),
        times,
        snapshots,
        time_integral: integral,
        steps,
    })
}

fn accumulate(acc: &mut [f64], old: &[f64], new: &[f64], dt: f64, scheme: Scheme) {
    match scheme {
        Scheme::ImplicitEuler => acc.iter_mut().zip(new).for_each(|(a, n)| *a += dt * n),
        Scheme::CrankNicolson => acc
            .iter_mut()
            .zip(old.iter().zip(new))
            .for_each(|(a, (o, n))| *a += 0.5 * dt * (o + n)),
    }
}

/// Caches the factorization of the last `(dt, scheme)` pair.
struct Stepper<'a> {
    form: &'a DiscreteForm,
    cached: Option<(f64, Scheme, Tridiagonal)>,
}

impl<'a> Stepper<'a> {
    fn new(form: &'a DiscreteForm) -> Self {
        Stepper { form, cached: None }
    }

    fn step(&mut self, u: &[f64], dt: f64, scheme: Scheme) -> Result<Vec<f64>> {
        let theta = match scheme {
            Scheme::ImplicitEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        };
        let hit = matches!(&self.cached, Some((d, s, _)) if *d == dt && *s == scheme);
        if !hit {
            let fac = factor_shifted(self.form, 1.0, theta * dt)?;
            self.cached = Some((dt, scheme, fac));
        }
        let au = self.form.apply(u);
        let rhs: Vec<f64> = u
            .iter()
            .zip(self.form.mass())
            .zip(&au)
            .map(|((v, m), a)| m * v - (1.0 - theta) * dt * a)
            .collect();
        let (_, _, fac) = self.cached.as_ref().expect("factorization cached above");
        Ok(fac.solve(&rhs))
    }
}

/// One-sided λ-derivative `du/dλ` at `0+` or `0-`, from the first cell.
///
/// For absolutely continuous λ this is `a(0±) u'(0±)`. The sign follows the
/// orientation of the line: positive when `u` increases with `x`.
pub fn flux_at(form: &DiscreteForm, u: &[f64], side: Side) -> Result<f64> {
    let (zm, zp) = form.grid().zero_pair()?;
    let w = form.edges();
    match side {
        Side::Plus => {
            if zp + 1 >= form.len() {
                return Err(Error::Shape("no cell to the right of 0+".into()));
            }
            Ok(2.0 * w[zp] * (u[zp + 1] - u[zp]))
        }
        Side::Minus => {
            if zm == 0 {
                return Err(Error::Shape("no cell to the left of 0-".into()));
            }
            Ok(2.0 * w[zm - 1] * (u[zm] - u[zm - 1]))
        }
    }
}

/// Boundary-condition residuals of a resolvent solution at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "kebab-case")]
pub enum BcResidual {
    /// Raw one-sided fluxes; both vanish in the limit.
    Separate { flux_minus: f64, flux_plus: f64 },
    /// `flux(0±) − (κ/2)(u(0+) − u(0-))` and the jump itself.
    Snapping {
        residual_minus: f64,
        residual_plus: f64,
        jump: f64,
    },
    /// `|u(0+) − u(0-)|`, zero by construction on a single origin node.
    Continuous { gap: f64 },
}

/// Solve the resolvent and evaluate the phase's boundary condition at 0.
pub fn bc_residual(form: &DiscreteForm, alpha: f64, f: &[f64]) -> Result<BcResidual> {
    let u = resolvent(form, alpha, f)?.solution;
    bc_residual_of(form, &u)
}

/// Boundary-condition residuals of a given vector.
pub fn bc_residual_of(form: &DiscreteForm, u: &[f64]) -> Result<BcResidual> {
    let kappa = match form.kind() {
        FormKind::Separate => None,
        FormKind::Snapping { kappa } => Some(*kappa),
        FormKind::Skew { alpha_skew, kappa } => Some(4.0 * alpha_skew * (1.0 - alpha_skew) * kappa),
        FormKind::Continuous => {
            return match form.grid().origin() {
                Origin::Doubled(z) => Ok(BcResidual::Continuous {
                    gap: (u[z + 1] - u[z]).abs(),
                }),
                _ => Ok(BcResidual::Continuous { gap: 0.0 }),
            }
        }
        other => {
            return Err(Error::Shape(format!(
                "boundary condition is defined for separate, snapping and continuous forms, not {other:?}"
            )))
        }
    };
    let flux_minus = flux_at(form, u, Side::Minus)?;
    let flux_plus = flux_at(form, u, Side::Plus)?;
    Ok(match kappa {
        None => BcResidual::Separate {
            flux_minus,
            flux_plus,
        },
        Some(k) => {
            let (zm, zp) = form.grid().zero_pair()?;
            let jump = u[zp] - u[zm];
            BcResidual::Snapping {
                residual_minus: flux_minus - 0.5 * k * jump,
                residual_plus: flux_plus - 0.5 * k * jump,
                jump,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{Grid, Interface, Point};
    use crate::measures::MonotoneMeasure;

    fn brownian(h: f64, l: f64, iface: Interface) -> DiscreteForm {
        let doubled = !matches!(iface, Interface::Continuous);
        let g = Grid::uniform(l, h, doubled).unwrap();
        let leb = MonotoneMeasure::lebesgue(-l, l).unwrap();
        DiscreteForm::assemble(&leb, &leb, &g, iface).unwrap()
    }

    fn sample(form: &DiscreteForm, f: impl Fn(Point) -> f64) -> Vec<f64> {
        form.grid().points().into_iter().map(f).collect()
    }

    #[test]
    fn tridiagonal_solve_matches_dense() {
        let diag = [4.0, 5.0, 6.0];
        let off = [-1.0, -2.0];
        let x = Tridiagonal::factor(&diag, &off).unwrap().solve(&[1.0, 2.0, 3.0]);
        let r0 = 4.0 * x[0] - x[1];
        let r1 = -x[0] + 5.0 * x[1] - 2.0 * x[2];
        let r2 = -2.0 * x[1] + 6.0 * x[2];
        assert!((r0 - 1.0).abs() < 1e-14 && (r1 - 2.0).abs() < 1e-14 && (r2 - 3.0).abs() < 1e-14);
    }

    #[test]
    fn constant_data_gives_one_over_alpha() {
        let f = brownian(0.1, 2.0, Interface::Snapping { kappa: 2.0 });
        let s = resolvent(&f, 2.5, &vec![1.0; f.len()]).unwrap();
        assert!(s.solution.iter().all(|v| (v - 0.4).abs() < 1e-14));
        assert!(s.relative_residual < 1e-12);
    }

    #[test]
    fn nonpositive_alpha_rejected() {
        let f = brownian(0.1, 2.0, Interface::Separate);
        assert!(matches!(resolvent(&f, 0.0, &vec![1.0; f.len()]), Err(Error::Argument(_))));
    }

    #[test]
    fn three_point_identity_holds_to_second_order() {
        // u = e^{−x²} solves αu − ½u'' = f with f = (α + 1 − 2x²) e^{−x²}.
        let alpha = 1.0;
        let mut errs = Vec::new();
        for h in [0.04, 0.02] {
            let f = brownian(h, 6.0, Interface::Continuous);
            let exact = |x: f64| (-x * x).exp();
            let data = sample(&f, |p| (alpha + 1.0 - 2.0 * p.x * p.x) * exact(p.x));
            let u = resolvent(&f, alpha, &data).unwrap().solution;
            let e = f
                .grid()
                .nodes()
                .iter()
                .zip(&u)
                .filter(|(x, _)| x.abs() < 3.0)
                .map(|(x, v)| (v - exact(*x)).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn killed_resolvent_is_strictly_below_at_origin() {
        let f = brownian(0.05, 4.0, Interface::Separate);
        let (zm, zp) = f.grid().zero_pair().unwrap();
        let k = f.elastic(2.0).unwrap();
        let data = sample(&f, |p| (-p.x * p.x).exp());
        let u = resolvent(&f, 1.0, &data).unwrap().solution;
        let v = resolvent(&k, 1.0, &data).unwrap().solution;
        assert!(v.iter().zip(&u).all(|(a, b)| *a <= *b + 1e-15));
        assert!(v[zm] < u[zm] && v[zp] < u[zp]);
    }

    #[test]
    fn maximum_principle_for_nonnegative_data() {
        let f = brownian(0.05, 3.0, Interface::Snapping { kappa: 1.5 });
        let data = sample(&f, |p| if p.x > 0.5 && p.x < 1.5 { 1.0 } else { 0.0 });
        let u = resolvent(&f, 2.0, &data).unwrap().solution;
        assert!(u.iter().all(|v| *v >= 0.0));
        assert!(2.0 * u.iter().fold(0.0f64, |a, b| a.max(*b)) <= 1.0 + 1e-12);
    }

    #[test]
    fn heat_preserves_constants() {
        let f = brownian(0.1, 2.0, Interface::Snapping { kappa: 1.0 });
        let run = step_heat(&f, &vec![3.0; f.len()], &HeatOptions::new(0.01, 0.5, Scheme::CrankNicolson))
            .unwrap();
        assert!(run.final_state().iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn separate_phase_keeps_mass_on_its_side() {
        let f = brownian(0.05, 4.0, Interface::Separate);
        let u0 = sample(&f, |p| if p.x >= 1.0 && p.x <= 2.0 { 1.0 } else { 0.0 });
        let run = step_heat(&f, &u0, &HeatOptions::new(0.01, 1.0, Scheme::CrankNicolson)).unwrap();
        let (zm, zp) = f.grid().zero_pair().unwrap();
        let side_mass = |u: &[f64], range: std::ops::Range<usize>| -> f64 {
            range.map(|i| f.mass()[i] * u[i]).sum()
        };
        let before = side_mass(&u0, zp..f.len());
        let after = side_mass(run.final_state(), zp..f.len());
        assert!((before - after).abs() < 1e-12);
        assert!(run.final_state()[..=zm].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn snapshots_hit_off_lattice_times_and_norm_decreases() {
        let f = brownian(0.05, 3.0, Interface::Snapping { kappa: 2.0 });
        let u0 = sample(&f, |p| if p.x >= 1.0 && p.x <= 2.0 { 1.0 } else { 0.0 });
        let mut opts = HeatOptions::new(0.03, 1.0, Scheme::CrankNicolson);
        opts.snapshot_times = vec![0.1, 0.25, 0.5];
        let run = step_heat(&f, &u0, &opts).unwrap();
        assert_eq!(run.times, vec![0.1, 0.25, 0.5, 1.0]);
        let mut last = f.norm(&u0);
        for s in &run.snapshots {
            let n = f.norm(s);
            assert!(n <= last + 1e-14);
            last = n;
        }
        assert!(run.snapshot_at(0.25).is_ok());
        assert!(run.snapshot_at(0.3).is_err());
    }

    #[test]
    fn weak_identity_holds_at_discrete_level() {
        let f = brownian(0.05, 3.0, Interface::Snapping { kappa: 2.0 });
        let u0 = sample(&f, |p| (-(p.x - 0.5).powi(2)).exp());
        let run = step_heat(&f, &u0, &HeatOptions::new(0.02, 0.7, Scheme::CrankNicolson)).unwrap();
        for g in [
            sample(&f, |p| (-p.x * p.x).exp()),
            sample(&f, |p| p.side.sign() * (-p.radius()).exp()),
        ] {
            assert!(run.weak_residual(&f, &g) < 1e-12);
        }
    }

    #[test]
    fn flux_of_constant_is_zero() {
        let f = brownian(0.1, 1.0, Interface::Snapping { kappa: 2.0 });
        let u = vec![2.0; f.len()];
        assert_eq!(flux_at(&f, &u, Side::Plus).unwrap(), 0.0);
        assert_eq!(flux_at(&f, &u, Side::Minus).unwrap(), 0.0);
        let c = brownian(0.1, 1.0, Interface::Continuous);
        assert!(matches!(flux_at(&c, &u, Side::Plus), Err(Error::Shape(_))));
    }

    #[test]
    fn continuous_phase_reports_zero_gap() {
        let f = brownian(0.1, 1.0, Interface::Continuous);
        let data = sample(&f, |p| p.x);
        assert_eq!(bc_residual(&f, 1.0, &data).unwrap(), BcResidual::Continuous { gap: 0.0 });
    }

    #[test]
    fn snapping_residual_shrinks_linearly() {
        let kappa = 2.0;
        let mut res = Vec::new();
        for h in [0.02, 0.01] {
            let f = brownian(h, 6.0, Interface::Snapping { kappa });
            let data = sample(&f, |p| p.side.sign() * (-p.radius()).exp());
            match bc_residual(&f, 1.0, &data).unwrap() {
                BcResidual::Snapping { residual_plus, .. } => res.push(residual_plus.abs()),
                other => panic!("unexpected {other:?}"),
            }
        }
        let ratio = res[1] / res[0];
        assert!(ratio > 0.4 && ratio < 0.6, "ratio {ratio}");
    }

    #[test]
    fn generator_matches_half_second_derivative() {
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let f = brownian(h, 6.0, Interface::Continuous);
            let u = sample(&f, |p| (-p.x * p.x).exp());
            let au = f.apply(&u);
            let err = (1..f.len() - 1)
                .map(|i| {
                    let x = f.grid().nodes()[i];
                    let exact = (2.0 * x * x - 1.0) * (-x * x).exp();
                    (-au[i] / f.mass()[i] - exact).abs()
                })
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn stiff_coupling_closes_the_jump() {
        let mut jumps = Vec::new();
        for kappa in [1e2, 1e3, 1e4] {
            let f = brownian(0.01, 6.0, Interface::Snapping { kappa });
            let data = sample(&f, |p| (-p.x * p.x).exp() + 0.5 * p.x);
            match bc_residual(&f, 1.0, &data).unwrap() {
                BcResidual::Snapping { jump, .. } => jumps.push(jump.abs()),
                other => panic!("unexpected {other:?}"),
            }
        }
        assert!(jumps.windows(2).all(|w| w[1] < w[0]), "{jumps:?}");
        assert!(jumps[2] < 1e-3, "{jumps:?}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn form(kind: u8) -> DiscreteForm {
            match kind % 3 {
                0 => brownian(0.1, 3.0, Interface::Continuous),
                1 => brownian(0.1, 3.0, Interface::Snapping { kappa: 1.5 }),
                _ => brownian(0.1, 3.0, Interface::Separate).elastic(2.0).unwrap(),
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn resolvent_equation(kind in 0u8..3, a in 0.1f64..10.0, b in 0.1f64..10.0, seed in prop::collection::vec(-1.0f64..1.0, 8)) {
                let f = form(kind);
                let data: Vec<f64> = (0..f.len()).map(|i| seed[i % 8] * (1.0 + i as f64 * 0.01).sin()).collect();
                let ra = resolvent(&f, a, &data).unwrap().solution;
                let rb = resolvent(&f, b, &data).unwrap().solution;
                let rab = resolvent(&f, a, &rb).unwrap().solution;
                let scale = ra.iter().chain(&rb).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
                for i in 0..f.len() {
                    let defect = (ra[i] - rb[i]) - (b - a) * rab[i];
                    prop_assert!(defect.abs() <= 1e-9 * scale, "defect {defect} at {i}");
                }
            }

            #[test]
            fn heat_is_contractive_and_sub_markov(kind in 0u8..3, vals in prop::collection::vec(0.0f64..1.0, 8), t in 0.05f64..1.0) {
                let f = form(kind);
                let u0: Vec<f64> = (0..f.len()).map(|i| vals[(i / 8) % 8]).collect();
                let mut opts = HeatOptions::new(0.01, t, Scheme::ImplicitEuler);
                opts.snapshot_times = vec![t / 2.0];
                let run = step_heat(&f, &u0, &opts).unwrap();
                let mut last = f.norm(&u0);
                for s in &run.snapshots {
                    let n = f.norm(s);
                    prop_assert!(n <= last * (1.0 + 1e-12));
                    last = n;
                    prop_assert!(s.iter().all(|v| *v >= -1e-14 && *v <= 1.0 + 1e-14));
                }
            }
        }
    }
}
