//! Speed measures, resistance measures and conductivities.
//!
//! Every measure is stored through a monotone distribution function, so
//! singular measures (Cantor) and absolutely continuous ones share one
//! representation. The mass of `[a, b]` is `F(b) - F(a)`; all measures here
//! are atomless, so open and closed intervals carry the same mass.

mod quad;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use quad::integrate;

/// Default truncation level of the Cantor function.
pub const DEFAULT_CANTOR_LEVEL: u32 = 20;

/// Relative tolerance used when integrating `1/a` numerically.
pub const RECIPROCAL_QUAD_TOL: f64 = 1e-10;

/// Cantor function truncated after `level` ternary digits.
///
/// Below `level` digits the remaining interval is interpolated linearly, so the
/// result is continuous, nondecreasing and within `2^-level` of the exact value.
pub fn cantor_function(x: f64, level: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let mut y = x;
    let mut acc = 0.0;
    let mut scale = 1.0;
    for _ in 0..level {
        let t = 3.0 * y;
        if t < 1.0 {
            y = t;
        } else if t < 2.0 {
            return acc + 0.5 * scale;
        } else {
            acc += 0.5 * scale;
            y = t - 2.0;
        }
        scale *= 0.5;
    }
    acc + scale * y
}

/// A positive conductivity `a(x)`; it induces the resistance `dλ = dx / a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Conductivity {
    /// `a ≡ 1`: the Brownian case.
    ConstOne,
    /// `a(x) = |x|^beta ∧ 1` with `0 < beta < 1`.
    PowerCusp { beta: f64 },
    /// Piecewise-linear `a` through `(nodes[i], values[i])`, constant beyond the ends.
    Table { nodes: Vec<f64>, values: Vec<f64> },
    /// `a = 1` outside `(-eps, eps)` and `kappa * eps` inside.
    Lejay { kappa: f64, eps: f64 },
}

impl Conductivity {
    pub fn const_one() -> Self {
        Conductivity::ConstOne
    }

    pub fn power_cusp(beta: f64) -> Result<Self> {
        let c = Conductivity::PowerCusp { beta };
        c.validate()?;
        Ok(c)
    }

    pub fn table(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let c = Conductivity::Table { nodes, values };
        c.validate()?;
        Ok(c)
    }

    pub fn lejay(kappa: f64, eps: f64) -> Result<Self> {
        let c = Conductivity::Lejay { kappa, eps };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Conductivity::ConstOne => Ok(()),
            Conductivity::PowerCusp { beta } => {
                if *beta > 0.0 && *beta < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!(
                        "power-cusp exponent beta = {beta} must lie in (0, 1)"
                    )))
                }
            }
            Conductivity::Table { nodes, values } => {
                if nodes.len() < 2 || nodes.len() != values.len() {
                    return Err(Error::Parameter(
                        "conductivity table needs at least two (x, a) pairs".into(),
                    ));
                }
                if nodes.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::Parameter(
                        "conductivity table nodes must be strictly increasing".into(),
                    ));
                }
                if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(Error::Parameter(
                        "conductivity table values must be positive and finite".into(),
                    ));
                }
                Ok(())
            }
            Conductivity::Lejay { kappa, eps } => {
                if *kappa > 0.0 && *eps > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!(
                        "Lejay barrier needs kappa > 0 and eps > 0 (got {kappa}, {eps})"
                    )))
                }
            }
        }
    }

    /// Pointwise value `a(x)`.
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Conductivity::ConstOne => 1.0,
            Conductivity::PowerCusp { beta } => x.abs().powf(*beta).min(1.0),
            Conductivity::Table { nodes, values } => interp(nodes, values, x),
            Conductivity::Lejay { kappa, eps } => {
                if x.abs() < *eps {
                    kappa * eps
                } else {
                    1.0
                }
            }
        }
    }

    /// `∫_0^x dy / a(y)`, the scale function anchored at the origin.
    pub fn scale(&self, x: f64) -> f64 {
        match self {
            Conductivity::ConstOne => x,
            Conductivity::PowerCusp { beta } => {
                let r = x.abs();
                let head = if r <= 1.0 {
                    r.powf(1.0 - beta) / (1.0 - beta)
                } else {
                    1.0 / (1.0 - beta) + (r - 1.0)
                };
                head.copysign(x)
            }
            Conductivity::Table { .. } => self.reciprocal_integral(0.0, x),
            Conductivity::Lejay { kappa, eps } => {
                let r = x.abs();
                let inner = r.min(*eps) / (kappa * eps);
                (inner + (r - eps).max(0.0)).copysign(x)
            }
        }
    }

    /// `∫_lo^hi dy / a(y)`.
    ///
    /// Closed forms are used where available; tables are integrated cell by
    /// cell with adaptive Gauss–Kronrod quadrature.
    pub fn reciprocal_integral(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Conductivity::Table { nodes, values } => {
                if hi < lo {
                    return -self.reciprocal_integral(hi, lo);
                }
                let mut breaks = vec![lo];
                breaks.extend(nodes.iter().copied().filter(|&x| x > lo && x < hi));
                breaks.push(hi);
                breaks
                    .windows(2)
                    .map(|w| {
                        integrate(
                            |y| 1.0 / interp(nodes, values, y),
                            w[0],
                            w[1],
                            RECIPROCAL_QUAD_TOL,
                        )
                    })
                    .sum()
            }
            _ => self.scale(hi) - self.scale(lo),
        }
    }

    /// Pointwise bounds `(delta, C)` of `a` over `[lo, hi]`.
    ///
    /// For the power cusp the lower bound is zero on any interval containing
    /// the origin; use [`Conductivity::grid_bounds`] for the grid-resolved value.
    pub fn pointwise_bounds(&self, lo: f64, hi: f64) -> (f64, f64) {
        match self {
            Conductivity::ConstOne => (1.0, 1.0),
            Conductivity::PowerCusp { .. } => {
                let near = if lo <= 0.0 && hi >= 0.0 {
                    0.0
                } else {
                    lo.abs().min(hi.abs())
                };
                let far = lo.abs().max(hi.abs());
                (self.value(near), self.value(far))
            }
            Conductivity::Table { nodes, values } => {
                let mut vals = vec![interp(nodes, values, lo), interp(nodes, values, hi)];
                vals.extend(
                    nodes
                        .iter()
                        .zip(values)
                        .filter(|(x, _)| **x > lo && **x < hi)
                        .map(|(_, v)| *v),
                );
                let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let max = vals.iter().copied().fold(0.0, f64::max);
                (min, max)
            }
            Conductivity::Lejay { kappa, eps } => {
                let inside = lo < *eps && hi > -*eps;
                let outside = lo <= -*eps || hi >= *eps;
                let ke = kappa * eps;
                match (inside, outside) {
                    (true, true) => (ke.min(1.0), ke.max(1.0)),
                    (true, false) => (ke, ke),
                    _ => (1.0, 1.0),
                }
            }
        }
    }

    /// Bounds of the cell-averaged conductivity `Δx / Δλ` over a grid.
    ///
    /// This is the lower bound the discretization actually sees: for the power
    /// cusp it is positive on every finite grid and shrinks as the grid is refined.
    pub fn grid_bounds(&self, nodes: &[f64]) -> (f64, f64) {
        nodes
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| (w[1] - w[0]) / self.reciprocal_integral(w[0], w[1]))
            .fold((f64::INFINITY, 0.0), |(lo, hi), a| (lo.min(a), hi.max(a)))
    }
}

fn interp(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    if x <= nodes[0] {
        return values[0];
    }
    if x >= nodes[n - 1] {
        return values[n - 1];
    }
    let k = nodes.partition_point(|&v| v <= x) - 1;
    let t = (x - nodes[k]) / (nodes[k + 1] - nodes[k]);
    values[k] + t * (values[k + 1] - values[k])
}

/// How a measure's distribution function is represented.
#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    /// Density linear between `(x, rho)` knots and constant beyond the ends.
    PiecewiseLinearDensity { knots: Vec<(f64, f64)> },
    /// `dλ = dx / a(x)`.
    ConductivityReciprocal(Conductivity),
    /// `weight · dx + dc` with `c` the Cantor function on `[0, 1]`.
    CantorSum { level: u32, lebesgue_weight: f64 },
    /// Distribution function given at nodes, linear in between.
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
    /// A base measure pushed outward by `eps` with a barrier measure inserted in the gap.
    Barrier {
        base: Box<MonotoneMeasure>,
        barrier: Box<BarrierSpec>,
    },
}

/// A nonnegative, atomless Radon measure on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneMeasure {
    lo: f64,
    hi: f64,
    repr: Representation,
}

impl MonotoneMeasure {
    pub fn new(lo: f64, hi: f64, repr: Representation) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!("invalid measure domain [{lo}, {hi}]")));
        }
        match &repr {
            Representation::PiecewiseLinearDensity { knots } => {
                if knots.is_empty() {
                    return Err(Error::Parameter("density needs at least one knot".into()));
                }
                if knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                    return Err(Error::Parameter(
                        "density knots must be strictly increasing".into(),
                    ));
                }
                if knots.iter().any(|k| !(k.1 >= 0.0) || !k.1.is_finite()) {
                    return Err(Error::Parameter("density values must be finite and >= 0".into()));
                }
            }
            Representation::ConductivityReciprocal(a) => a.validate()?,
            Representation::CantorSum {
                level,
                lebesgue_weight,
            } => {
                if *level == 0 || !(*lebesgue_weight >= 0.0) {
                    return Err(Error::Parameter(
                        "Cantor measure needs level >= 1 and a nonnegative Lebesgue weight".into(),
                    ));
                }
            }
            Representation::Tabulated { nodes, values } => {
                validate_table(nodes, values)?;
                if lo < nodes[0] || hi > nodes[nodes.len() - 1] {
                    return Err(Error::Domain(format!(
                        "tabulated measure covers [{}, {}] but domain is [{lo}, {hi}]",
                        nodes[0],
                        nodes[nodes.len() - 1]
                    )));
                }
            }
            Representation::Barrier { .. } => {}
        }
        Ok(MonotoneMeasure { lo, hi, repr })
    }

    /// Lebesgue measure on `[lo, hi]`.
    pub fn lebesgue(lo: f64, hi: f64) -> Result<Self> {
        Self::with_density(lo, hi, 1.0)
    }

    /// Constant density on `[lo, hi]`.
    pub fn with_density(lo: f64, hi: f64, density: f64) -> Result<Self> {
        Self::new(
            lo,
            hi,
            Representation::PiecewiseLinearDensity {
                knots: vec![(0.0, density)],
            },
        )
    }

    pub fn from_conductivity(lo: f64, hi: f64, a: Conductivity) -> Result<Self> {
        Self::new(lo, hi, Representation::ConductivityReciprocal(a))
    }

    /// `weight · dx + dc` on `[lo, hi]`, `c` the Cantor function truncated at `level`.
    pub fn cantor_sum(lo: f64, hi: f64, level: u32, lebesgue_weight: f64) -> Result<Self> {
        Self::new(
            lo,
            hi,
            Representation::CantorSum {
                level,
                lebesgue_weight,
            },
        )
    }

    pub fn tabulated(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        validate_table(&nodes, &values)?;
        let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
        Self::new(lo, hi, Representation::Tabulated { nodes, values })
    }

    /// Load a two-column `(x, cdf)` CSV with a header row.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Argument(format!(
                    "{}: expected two columns (x, cdf), found {}",
                    path.display(),
                    record.len()
                )));
            }
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| {
                    Error::Argument(format!("{}: bad number `{s}`: {e}", path.display()))
                })
            };
            nodes.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        Self::tabulated(nodes, values)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    /// Unnormalized monotone distribution function; only differences matter.
    pub fn distribution(&self, x: f64) -> f64 {
        match &self.repr {
            Representation::PiecewiseLinearDensity { knots } => density_primitive(knots, x),
            Representation::ConductivityReciprocal(a) => a.scale(x),
            Representation::CantorSum {
                level,
                lebesgue_weight,
            } => lebesgue_weight * x + cantor_function(x, *level),
            Representation::Tabulated { nodes, values } => interp(nodes, values, x),
            Representation::Barrier { base, barrier } => {
                let eps = barrier.epsilon;
                let gamma = |y: f64| barrier.gamma.distribution(y) - barrier.gamma.distribution(0.0);
                if x >= eps {
                    base.scale(x - eps) + gamma(eps)
                } else if x <= -eps {
                    base.scale(x + eps) + gamma(-eps)
                } else {
                    gamma(x)
                }
            }
        }
    }

    /// Distribution function normalized so that `cdf(lo) = 0`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.distribution(x) - self.distribution(self.lo)
    }

    /// Scale function anchored at the origin, `s(0) = 0`.
    pub fn scale(&self, x: f64) -> f64 {
        self.distribution(x) - self.distribution(0.0)
    }

    /// Mass of `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        if let Representation::ConductivityReciprocal(c @ Conductivity::Table { .. }) = &self.repr {
            return c.reciprocal_integral(a, b);
        }
        self.distribution(b) - self.distribution(a)
    }

    pub fn total_mass(&self) -> f64 {
        self.mass(self.lo, self.hi)
    }

    /// Approximate `sup_x μ([x, x + width])` over the domain.
    ///
    /// Windows are anchored on a lattice of spacing `width / 16`; the value is
    /// a lower estimate of the supremum and is used only for reporting.
    pub fn window_sup(&self, width: f64) -> f64 {
        let span = self.hi - self.lo;
        if width >= span {
            return self.total_mass();
        }
        let steps = ((span - width) / (width / 16.0)).ceil().min(2e6) as usize;
        (0..=steps)
            .map(|k| {
                let x = (self.lo + (span - width) * k as f64 / steps as f64).min(self.hi - width);
                self.mass(x, x + width)
            })
            .fold(0.0, f64::max)
    }

    fn contains(&self, x: f64) -> bool {
        let tol = 1e-12 * (1.0 + self.lo.abs().max(self.hi.abs()));
        x >= self.lo - tol && x <= self.hi + tol
    }
}

fn validate_table(nodes: &[f64], values: &[f64]) -> Result<()> {
    if nodes.len() < 2 || nodes.len() != values.len() {
        return Err(Error::Argument(
            "tabulated measure needs at least two (x, cdf) rows".into(),
        ));
    }
    if nodes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Argument(
            "tabulated measure: x column must be strictly increasing".into(),
        ));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Argument(
            "tabulated measure: cdf column must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Primitive of a piecewise-linear density, anchored at zero.
fn density_primitive(knots: &[(f64, f64)], x: f64) -> f64 {
    primitive_from_left(knots, x) - primitive_from_left(knots, 0.0)
}

// Integral of the density from knots[0].0 to x (negative when x lies left of it).
fn primitive_from_left(knots: &[(f64, f64)], x: f64) -> f64 {
    let (x0, r0) = knots[0];
    if x <= x0 {
        return r0 * (x - x0);
    }
    let mut acc = 0.0;
    for w in knots.windows(2) {
        let ((a, ra), (b, rb)) = (w[0], w[1]);
        if x <= b {
            let t = x - a;
            let slope = (rb - ra) / (b - a);
            return acc + ra * t + 0.5 * slope * t * t;
        }
        acc += 0.5 * (ra + rb) * (b - a);
    }
    let (xl, rl) = knots[knots.len() - 1];
    acc + rl * (x - xl)
}

/// Masses of the cells between consecutive `nodes`.
pub fn measure_increments(mu: &MonotoneMeasure, nodes: &[f64]) -> Result<Vec<f64>> {
    if nodes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Argument(
            "increment nodes must be strictly increasing".into(),
        ));
    }
    if let Some(x) = nodes.iter().find(|x| !mu.contains(**x)) {
        let (lo, hi) = mu.domain();
        return Err(Error::Domain(format!(
            "node {x} lies outside the measure domain [{lo}, {hi}]"
        )));
    }
    Ok(nodes.windows(2).map(|w| mu.mass(w[0], w[1])).collect())
}

/// A thin barrier `(-eps, eps)` carrying the resistance measure `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSpec {
    pub epsilon: f64,
    pub gamma: MonotoneMeasure,
}

impl BarrierSpec {
    pub fn new(epsilon: f64, gamma: MonotoneMeasure) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Parameter(format!(
                "barrier half-width must be positive, got {epsilon}"
            )));
        }
        let (lo, hi) = gamma.domain();
        let tol = 1e-12 * epsilon;
        if (lo + epsilon).abs() > tol || (hi - epsilon).abs() > tol {
            return Err(Error::Domain(format!(
                "barrier measure lives on [{lo}, {hi}], expected [-{epsilon}, {epsilon}]"
            )));
        }
        let mass = gamma.total_mass();
        if !mass.is_finite() || mass < 0.0 {
            return Err(Error::Parameter(format!(
                "barrier resistance must be finite and nonnegative, got {mass}"
            )));
        }
        Ok(BarrierSpec { epsilon, gamma })
    }

    /// Barrier with constant density `(kappa * eps)^alpha_exponent`.
    pub fn lejay(kappa: f64, epsilon: f64, alpha_exponent: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::Parameter(format!("kappa must be positive, got {kappa}")));
        }
        let density = (kappa * epsilon).powf(alpha_exponent);
        Self::new(
            epsilon,
            MonotoneMeasure::with_density(-epsilon, epsilon, density)?,
        )
    }

    /// Uniform barrier with prescribed total resistance.
    pub fn uniform(gamma_bar: f64, epsilon: f64) -> Result<Self> {
        Self::new(
            epsilon,
            MonotoneMeasure::with_density(-epsilon, epsilon, gamma_bar / (2.0 * epsilon))?,
        )
    }

    /// Barrier induced by a conductivity `b` on `(-eps, eps)`: `dγ = dx / b`.
    pub fn from_conductivity(b: Conductivity, epsilon: f64) -> Result<Self> {
        Self::new(
            epsilon,
            MonotoneMeasure::from_conductivity(-epsilon, epsilon, b)?,
        )
    }

    /// Total thermal resistance `γ̄(ε) = γ((-ε, ε))`.
    pub fn total_resistance(&self) -> f64 {
        self.gamma.total_mass()
    }
}

/// Push `lambda` outward by the barrier half-width and insert the barrier.
///
/// The result lives on `[lo - eps, hi + eps]` and has total mass
/// `lambda.total_mass() + barrier.total_resistance()`.
pub fn build_lambda_eps(lambda: &MonotoneMeasure, barrier: &BarrierSpec) -> Result<MonotoneMeasure> {
    let (lo, hi) = lambda.domain();
    let eps = barrier.epsilon;
    if !(lo < 0.0 && hi > 0.0) {
        return Err(Error::Domain(format!(
            "resistance measure domain [{lo}, {hi}] must contain the origin"
        )));
    }
    if eps >= -lo || eps >= hi {
        return Err(Error::Domain(format!(
            "barrier half-width {eps} is not smaller than the box [{lo}, {hi}]"
        )));
    }
    MonotoneMeasure::new(
        lo - eps,
        hi + eps,
        Representation::Barrier {
            base: Box::new(lambda.clone()),
            barrier: Box::new(barrier.clone()),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lebesgue_increments() {
        let mu = MonotoneMeasure::lebesgue(-1.0, 3.0).unwrap();
        assert_eq!(measure_increments(&mu, &[0.0, 1.0, 2.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn non_monotone_nodes_rejected() {
        let mu = MonotoneMeasure::lebesgue(-1.0, 3.0).unwrap();
        assert!(matches!(
            measure_increments(&mu, &[0.0, 2.0, 1.0]),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            measure_increments(&mu, &[0.0, 4.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn cantor_middle_third_is_flat() {
        let mu = MonotoneMeasure::cantor_sum(0.0, 1.0, DEFAULT_CANTOR_LEVEL, 0.0).unwrap();
        let inc = measure_increments(&mu, &[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]).unwrap();
        assert!((inc[0] - 0.5).abs() < 1e-15);
        assert_eq!(inc[1], 0.0);
        assert!((inc[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cusp_increment_matches_antiderivative() {
        let a = Conductivity::power_cusp(0.5).unwrap();
        let lam = MonotoneMeasure::from_conductivity(-2.0, 2.0, a).unwrap();
        let inc = measure_increments(&lam, &[0.25, 1.0]).unwrap();
        // ∫ x^{-1/2} = 2√x
        assert!((inc[0] - (2.0 * 1.0 - 2.0 * 0.5)).abs() < 1e-14);
    }

    #[test]
    fn power_cusp_values_and_range() {
        let a = Conductivity::power_cusp(0.5).unwrap();
        assert_eq!(a.value(2.0), 1.0);
        assert!((a.value(0.25) - 0.5).abs() < 1e-15);
        assert!(Conductivity::power_cusp(1.0).is_err());
        assert!(Conductivity::power_cusp(0.0).is_err());
        assert!(Conductivity::power_cusp(-0.3).is_err());
    }

    #[test]
    fn lejay_barrier_resistance_is_two_over_kappa() {
        let kappa = 2.0;
        let eps = 0.05;
        let a = Conductivity::lejay(kappa, eps).unwrap();
        assert!((a.reciprocal_integral(-eps, eps) - 2.0 / kappa).abs() < 1e-14);
        let b = BarrierSpec::lejay(kappa, eps, -1.0).unwrap();
        assert!((b.total_resistance() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_eps_total_mass() {
        let lam = MonotoneMeasure::lebesgue(-5.0, 5.0).unwrap();
        let bar = BarrierSpec::lejay(1.0, 0.1, -1.0).unwrap();
        assert!((bar.total_resistance() - 2.0).abs() < 1e-13);
        let le = build_lambda_eps(&lam, &bar).unwrap();
        assert_eq!(le.domain(), (-5.1, 5.1));
        assert!((le.total_mass() - 12.0).abs() < 1e-12);
        // outside the barrier the shifted measure is Lebesgue again
        assert!((le.mass(1.0, 2.5) - 1.5).abs() < 1e-14);
        assert!((le.mass(-0.1, 0.1) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn empty_barrier_gives_shifted_lambda() {
        let a = Conductivity::power_cusp(0.3).unwrap();
        let lam = MonotoneMeasure::from_conductivity(-3.0, 3.0, a).unwrap();
        let bar = BarrierSpec::uniform(0.0, 0.2).unwrap();
        let le = build_lambda_eps(&lam, &bar).unwrap();
        for &(x, y) in &[(0.2, 1.0), (0.5, 3.2), (-3.2, -0.2), (-1.0, 2.0)] {
            let shift = |v: f64| if v >= 0.2 { v - 0.2 } else if v <= -0.2 { v + 0.2 } else { 0.0 };
            assert_eq!(le.mass(x, y), lam.mass(shift(x), shift(y)));
        }
    }

    #[test]
    fn barrier_wider_than_box_is_domain_error() {
        let lam = MonotoneMeasure::lebesgue(-1.0, 1.0).unwrap();
        let bar = BarrierSpec::lejay(1.0, 1.5, -1.0).unwrap();
        assert!(matches!(build_lambda_eps(&lam, &bar), Err(Error::Domain(_))));
    }

    #[test]
    fn table_conductivity_matches_log_primitive() {
        // a(x) = 1 + x on [0, 2]; ∫ dx/(1+x) = ln 3
        let a = Conductivity::table(vec![0.0, 2.0], vec![1.0, 3.0]).unwrap();
        let v = a.reciprocal_integral(0.0, 2.0);
        assert!((v - 3f64.ln()).abs() < 1e-10 * 3f64.ln());
    }

    #[test]
    fn tabulated_measure_validation() {
        assert!(MonotoneMeasure::tabulated(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]).is_err());
        assert!(MonotoneMeasure::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.0]).is_err());
        let mu = MonotoneMeasure::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 2.0]).unwrap();
        // cdf(1.5) = 0.5 + 1.5·0.5, cdf(0.5) = 0.25
        assert!((mu.mass(0.5, 1.5) - (1.25 - 0.25)).abs() < 1e-15);
        assert_eq!(mu.cdf(0.0), 0.0);
    }

    #[test]
    fn piecewise_linear_density_primitive() {
        // density x on [0, 1], then 1
        let mu = MonotoneMeasure::new(
            -1.0,
            2.0,
            Representation::PiecewiseLinearDensity {
                knots: vec![(0.0, 0.0), (1.0, 1.0)],
            },
        )
        .unwrap();
        assert!((mu.mass(0.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((mu.mass(1.0, 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(mu.mass(-1.0, 0.0), 0.0);
    }

    #[test]
    fn window_sup_for_lebesgue() {
        let mu = MonotoneMeasure::lebesgue(-2.0, 2.0).unwrap();
        assert!((mu.window_sup(0.25) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn cantor_values_at_ternary_points() {
        // 1/4 = 0.0202…₃ maps to 0.0101…₂ = 1/3; the level caps the error at 2^-level
        let tol = 0.5f64.powi(DEFAULT_CANTOR_LEVEL as i32);
        assert!((cantor_function(0.25, DEFAULT_CANTOR_LEVEL) - 1.0 / 3.0).abs() <= tol);
        assert!((cantor_function(0.75, DEFAULT_CANTOR_LEVEL) - 2.0 / 3.0).abs() <= tol);
        assert_eq!(cantor_function(1.0 / 9.0, DEFAULT_CANTOR_LEVEL), 0.25);
        assert_eq!(cantor_function(-0.5, 12), 0.0);
        assert_eq!(cantor_function(1.5, 12), 1.0);
    }

    #[test]
    fn lebesgue_plus_cantor_on_wide_box() {
        let mu = MonotoneMeasure::cantor_sum(-2.0, 2.0, 12, 1.0).unwrap();
        let third = 1.0 / 3.0;
        let inc = measure_increments(&mu, &[-2.0, 0.0, third, 2.0 * third, 1.0, 2.0]).unwrap();
        let expected = [2.0, third + 0.5, third, third + 0.5, 1.0];
        for (a, b) in inc.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!((mu.total_mass() - 5.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn measure(kind: u8) -> MonotoneMeasure {
            match kind % 4 {
                0 => MonotoneMeasure::lebesgue(-3.0, 3.0).unwrap(),
                1 => MonotoneMeasure::cantor_sum(-3.0, 3.0, 12, 0.5).unwrap(),
                2 => MonotoneMeasure::from_conductivity(-3.0, 3.0, Conductivity::power_cusp(0.4).unwrap()).unwrap(),
                _ => MonotoneMeasure::from_conductivity(
                    -3.0,
                    3.0,
                    Conductivity::table(vec![-3.0, 0.0, 3.0], vec![2.0, 0.5, 1.0]).unwrap(),
                )
                .unwrap(),
            }
        }

        fn sorted(mut v: Vec<f64>) -> Vec<f64> {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup();
            v
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn refinement_increments_add_up(kind in 0u8..4, pts in prop::collection::vec(-3.0f64..3.0, 2..8), extra in prop::collection::vec(-3.0f64..3.0, 1..6)) {
                let mu = measure(kind);
                let coarse = sorted(pts);
                prop_assume!(coarse.len() >= 2);
                let (lo, hi) = (coarse[0], *coarse.last().unwrap());
                let mut all = coarse.clone();
                all.extend(extra.into_iter().filter(|x| *x > lo && *x < hi));
                let fine = sorted(all);
                let inc_c = measure_increments(&mu, &coarse).unwrap();
                let inc_f = measure_increments(&mu, &fine).unwrap();
                for (k, w) in coarse.windows(2).enumerate() {
                    let sum: f64 = fine
                        .windows(2)
                        .zip(&inc_f)
                        .filter(|(c, _)| c[0] >= w[0] && c[1] <= w[1])
                        .map(|(_, v)| v)
                        .sum();
                    prop_assert!((sum - inc_c[k]).abs() <= 1e-12 * inc_c[k].max(1.0));
                }
            }

            #[test]
            fn shifted_measure_stays_monotone(kind in 0u8..4, exponent in -2.0f64..0.5, eps in 0.01f64..0.5, pts in prop::collection::vec(-3.0f64..3.0, 2..12)) {
                let mu = measure(kind);
                let bar = BarrierSpec::lejay(1.0, eps, exponent).unwrap();
                let le = build_lambda_eps(&mu, &bar).unwrap();
                let xs = sorted(pts);
                let cdf: Vec<f64> = xs.iter().map(|&x| le.cdf(x)).collect();
                prop_assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
            }

            #[test]
            fn barrier_mass_matches_any_partition(exponent in -2.0f64..0.5, eps in 0.01f64..0.5, cuts in prop::collection::vec(0.0f64..1.0, 0..10)) {
                let bar = BarrierSpec::lejay(1.5, eps, exponent).unwrap();
                let mut nodes: Vec<f64> = cuts.iter().map(|c| -eps + 2.0 * eps * c).collect();
                nodes.push(-eps);
                nodes.push(eps);
                let nodes = sorted(nodes);
                let lam = MonotoneMeasure::lebesgue(-1.0, 1.0).unwrap();
                let le = build_lambda_eps(&lam, &bar).unwrap();
                let sum: f64 = measure_increments(&le, &nodes).unwrap().iter().sum();
                let total = bar.total_resistance();
                prop_assert!((sum - total).abs() <= 1e-12 * total);
            }

            #[test]
            fn conductivity_increments_respect_bounds(lo in -2.9f64..2.8, width in 0.01f64..0.2) {
                let hi = (lo + width).min(3.0);
                let a = Conductivity::table(vec![-3.0, 0.0, 3.0], vec![2.0, 0.5, 1.0]).unwrap();
                let lam = MonotoneMeasure::from_conductivity(-3.0, 3.0, a.clone()).unwrap();
                let inc = measure_increments(&lam, &[lo, hi]).unwrap()[0];
                let (amin, amax) = a.pointwise_bounds(lo, hi);
                let len = hi - lo;
                prop_assert!(inc >= len / amax * (1.0 - 1e-9));
                prop_assert!(inc <= len / amin * (1.0 + 1e-9));
            }
        }
    }
}
