use serde::{Deserialize, Serialize};

use super::grid::{BarrierGrid, Grid, Origin};
use crate::error::{Error, Result};
use crate::measures::{build_lambda_eps, BarrierSpec, MonotoneMeasure};

/// Coupling between the two half-lines at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Interface {
    /// No coupling: two independent reflecting diffusions.
    Separate,
    /// Snapping-out coupling; the interface term is `κ/4 (u(0+) - u(0-))²`.
    Snapping { kappa: f64 },
    /// Skew snapping-out coupling `α(1-α)κ (u(0+) - u(0-))²`.
    Skew { alpha_skew: f64, kappa: f64 },
    /// One node at the origin, no interface at all.
    Continuous,
}

impl Interface {
    /// Snapping coupling for a given total barrier resistance, `κ = 2/γ̄`.
    pub fn from_gamma_bar(gamma_bar: f64) -> Result<Self> {
        if gamma_bar == 0.0 {
            Ok(Interface::Continuous)
        } else if gamma_bar.is_infinite() && gamma_bar > 0.0 {
            Ok(Interface::Separate)
        } else if gamma_bar > 0.0 {
            Ok(Interface::Snapping {
                kappa: 2.0 / gamma_bar,
            })
        } else {
            Err(Error::Parameter(format!(
                "total resistance must be in [0, inf], got {gamma_bar}"
            )))
        }
    }

    /// Conductance placed on the `0-`/`0+` edge.
    pub fn coupling(&self) -> Result<f64> {
        match *self {
            Interface::Separate => Ok(0.0),
            Interface::Snapping { kappa } => {
                if kappa > 0.0 && kappa.is_finite() {
                    Ok(kappa / 4.0)
                } else {
                    Err(Error::Parameter(format!("kappa must be positive, got {kappa}")))
                }
            }
            Interface::Skew { alpha_skew, kappa } => {
                if !(alpha_skew > 0.0 && alpha_skew < 1.0) {
                    return Err(Error::Parameter(format!(
                        "skew parameter must lie in (0, 1), got {alpha_skew}"
                    )));
                }
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return Err(Error::Parameter(format!("kappa must be positive, got {kappa}")));
                }
                Ok(alpha_skew * (1.0 - alpha_skew) * kappa)
            }
            Interface::Continuous => Err(Error::Shape(
                "continuous interface cannot be placed on a doubled origin".into(),
            )),
        }
    }

    fn kind(&self) -> FormKind {
        match *self {
            Interface::Separate => FormKind::Separate,
            Interface::Snapping { kappa } => FormKind::Snapping { kappa },
            Interface::Skew { alpha_skew, kappa } => FormKind::Skew { alpha_skew, kappa },
            Interface::Continuous => FormKind::Continuous,
        }
    }
}

/// What a discrete form represents.
#[derive(Debug, Clone, PartialEq)]
pub enum FormKind {
    Separate,
    Snapping { kappa: f64 },
    Skew { alpha_skew: f64, kappa: f64 },
    Continuous,
    EpsBarrier { epsilon: f64, gamma_bar: f64 },
    Killed { base: Box<FormKind> },
    Trace,
    Custom,
}

impl FormKind {
    pub fn is_killed(&self) -> bool {
        matches!(self, FormKind::Killed { .. })
    }
}

/// Mass vector and path-graph stiffness of a discrete Dirichlet form.
///
/// The stiffness is stored as edge conductances between consecutive nodes
/// plus a diagonal killing vector. Off-diagonal entries are `-edge`, diagonal
/// entries are `left edge + right edge + killing`, always in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteForm {
    grid: Grid,
    mass: Vec<f64>,
    edges: Vec<f64>,
    killing: Vec<f64>,
    kind: FormKind,
}

fn check_inside(mu: &MonotoneMeasure, grid: &Grid, what: &str) -> Result<()> {
    let (lo, hi) = mu.domain();
    let nodes = grid.nodes();
    let (a, b) = (nodes[0], nodes[nodes.len() - 1]);
    let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    if a < lo - tol || b > hi + tol {
        return Err(Error::Domain(format!(
            "grid spans [{a}, {b}] but the {what} is defined on [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Node masses of the dual cells `(midpoint left, midpoint right)`.
pub fn dual_masses(speed: &MonotoneMeasure, grid: &Grid) -> Result<Vec<f64>> {
    check_inside(speed, grid, "speed measure")?;
    let x = grid.nodes();
    let n = x.len();
    let mut mass = Vec::with_capacity(n);
    for i in 0..n {
        let left = if i > 0 {
            speed.mass(0.5 * (x[i - 1] + x[i]), x[i])
        } else {
            0.0
        };
        let right = if i + 1 < n {
            speed.mass(x[i], 0.5 * (x[i] + x[i + 1]))
        } else {
            0.0
        };
        let m = left + right;
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Domain(format!(
                "speed measure gives mass {m} to the dual cell of node {i} (x = {})",
                x[i]
            )));
        }
        mass.push(m);
    }
    Ok(mass)
}

fn edge_weights(resistance: &MonotoneMeasure, grid: &Grid, coupling: Option<f64>) -> Result<Vec<f64>> {
    check_inside(resistance, grid, "resistance measure")?;
    let x = grid.nodes();
    let mut edges = Vec::with_capacity(x.len() - 1);
    for (i, w) in x.windows(2).enumerate() {
        if w[0] == w[1] {
            edges.push(coupling.ok_or_else(|| {
                Error::Shape("doubled origin without an interface coupling".into())
            })?);
            continue;
        }
        let dl = resistance.mass(w[0], w[1]);
        if !(dl > 0.0) || !dl.is_finite() {
            return Err(Error::Assembly {
                cell: i,
                left: w[0],
                right: w[1],
            });
        }
        edges.push(0.5 / dl);
    }
    Ok(edges)
}

impl DiscreteForm {
    /// Assemble the form `½∫ (du/dλ)² dλ` plus the interface term on `grid`.
    ///
    /// `speed` supplies the masses, `resistance` the edge conductances
    /// `1 / (2Δλ)`. Separate, snapping and skew interfaces need a doubled
    /// origin; the continuous interface needs a grid without one.
    pub fn assemble(
        speed: &MonotoneMeasure,
        resistance: &MonotoneMeasure,
        grid: &Grid,
        interface: Interface,
    ) -> Result<Self> {
        let coupling = match (grid.origin(), interface) {
            (Origin::Doubled(_), iface) => Some(iface.coupling()?),
            (_, Interface::Continuous) => None,
            _ => {
                return Err(Error::Shape(format!(
                    "{interface:?} interface needs a grid with a doubled origin"
                )))
            }
        };
        let mass = dual_masses(speed, grid)?;
        let edges = edge_weights(resistance, grid, coupling)?;
        Ok(DiscreteForm {
            grid: grid.clone(),
            killing: vec![0.0; mass.len()],
            mass,
            edges,
            kind: interface.kind(),
        })
    }

    /// Assemble the thin-barrier form with resistance `λ_ε` on a barrier grid.
    pub fn assemble_barrier(
        speed: &MonotoneMeasure,
        resistance: &MonotoneMeasure,
        barrier: &BarrierSpec,
        grid: &BarrierGrid,
    ) -> Result<Self> {
        if (grid.epsilon - barrier.epsilon).abs() > 1e-15 * barrier.epsilon {
            return Err(Error::Argument(format!(
                "barrier grid built for eps = {} but barrier has eps = {}",
                grid.epsilon, barrier.epsilon
            )));
        }
        let lambda_eps = build_lambda_eps(resistance, barrier)?;
        let mass = dual_masses(speed, &grid.grid)?;
        let edges = edge_weights(&lambda_eps, &grid.grid, None)?;
        Ok(DiscreteForm {
            grid: grid.grid.clone(),
            killing: vec![0.0; mass.len()],
            mass,
            edges,
            kind: FormKind::EpsBarrier {
                epsilon: barrier.epsilon,
                gamma_bar: barrier.total_resistance(),
            },
        })
    }

    /// Build a form from raw parts.
    ///
    /// Edges may be negative here so that broken forms can be represented
    /// and rejected downstream; [`DiscreteForm::check_markov`] tests the sign.
    pub fn from_parts(
        grid: Grid,
        mass: Vec<f64>,
        edges: Vec<f64>,
        killing: Vec<f64>,
        kind: FormKind,
    ) -> Result<Self> {
        let n = grid.len();
        if mass.len() != n || killing.len() != n || edges.len() + 1 != n {
            return Err(Error::Shape(format!(
                "form parts have lengths mass {}, edges {}, killing {} for {n} nodes",
                mass.len(),
                edges.len(),
                killing.len()
            )));
        }
        if mass.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::Argument("masses must be positive and finite".into()));
        }
        if edges.iter().chain(&killing).any(|v| !v.is_finite()) {
            return Err(Error::Argument("edges and killing must be finite".into()));
        }
        Ok(DiscreteForm {
            grid,
            mass,
            edges,
            killing,
            kind,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Conductance of edge `(i, i+1)`.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn killing(&self) -> &[f64] {
        &self.killing
    }

    pub fn kind(&self) -> &FormKind {
        &self.kind
    }

    /// Conductance of the `0-`/`0+` edge, if the origin is doubled.
    pub fn coupling(&self) -> Option<f64> {
        match self.grid.origin() {
            Origin::Doubled(z) => Some(self.edges[z]),
            _ => None,
        }
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        let left = if i > 0 { self.edges[i - 1] } else { 0.0 };
        let right = if i < self.edges.len() { self.edges[i] } else { 0.0 };
        left + right + self.killing[i]
    }

    /// Stiffness diagonal and off-diagonal (`off[i]` couples `i` and `i+1`).
    pub fn tridiagonal(&self) -> (Vec<f64>, Vec<f64>) {
        let diag = (0..self.len()).map(|i| self.diagonal(i)).collect();
        let off = self.edges.iter().map(|w| -w).collect();
        (diag, off)
    }

    /// Nonzero stiffness entries `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let n = self.len();
        let mut out = Vec::with_capacity(3 * n);
        for i in 0..n {
            if i > 0 && self.edges[i - 1] != 0.0 {
                out.push((i, i - 1, -self.edges[i - 1]));
            }
            out.push((i, i, self.diagonal(i)));
            if i + 1 < n && self.edges[i] != 0.0 {
                out.push((i, i + 1, -self.edges[i]));
            }
        }
        out
    }

    /// Stiffness times a vector.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diagonal(i) * u[i];
                if i > 0 {
                    v -= self.edges[i - 1] * u[i - 1];
                }
                if i + 1 < n {
                    v -= self.edges[i] * u[i + 1];
                }
                v
            })
            .collect()
    }

    /// Bilinear form `uᵀ A v`, written as a sum over edges and killing.
    pub fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        let edges: f64 = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, w)| w * (u[i + 1] - u[i]) * (v[i + 1] - v[i]))
            .sum();
        let kill: f64 = self
            .killing
            .iter()
            .zip(u.iter().zip(v))
            .map(|(c, (a, b))| c * a * b)
            .sum();
        edges + kill
    }

    /// Inner product in `L²(m)`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass
            .iter()
            .zip(u.iter().zip(v))
            .map(|(m, (a, b))| m * a * b)
            .sum()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    pub fn total_killing(&self) -> f64 {
        self.killing.iter().sum()
    }

    /// Fail with an invariant error if any conductance or killing weight is negative.
    pub fn check_markov(&self) -> Result<()> {
        if let Some(i) = self.edges.iter().position(|w| *w < 0.0) {
            return Err(Error::Invariant(format!(
                "edge ({i}, {}) has negative conductance {}",
                i + 1,
                self.edges[i]
            )));
        }
        if let Some(i) = self.killing.iter().position(|c| *c < 0.0) {
            return Err(Error::Invariant(format!(
                "node {i} has negative killing weight {}",
                self.killing[i]
            )));
        }
        Ok(())
    }

    /// Add killing weights: `E^μ(u, v) = E(u, v) + Σ μ_i u_i v_i`.
    pub fn kill(&self, weights: &[(usize, f64)]) -> Result<Self> {
        let mut out = self.clone();
        for &(i, w) in weights {
            if i >= self.len() {
                return Err(Error::Argument(format!(
                    "killing node {i} is outside a grid of {} nodes",
                    self.len()
                )));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Argument(format!(
                    "killing weight at node {i} must be finite and nonnegative, got {w}"
                )));
            }
            out.killing[i] += w;
        }
        if weights.iter().any(|&(_, w)| w > 0.0) && !out.kind.is_killed() {
            out.kind = FormKind::Killed {
                base: Box::new(self.kind.clone()),
            };
        }
        Ok(out)
    }

    /// Killed companion of a snapping form: weight `κ/2` at `0-` and at `0+`
    /// on the separate form.
    pub fn elastic(&self, kappa: f64) -> Result<Self> {
        let (zm, zp) = self.grid.zero_pair()?;
        let mut separate = self.clone();
        separate.edges[zm] = 0.0;
        separate.kind = FormKind::Separate;
        separate.kill(&[(zm, 0.5 * kappa), (zp, 0.5 * kappa)])
    }

    /// Replace the interface coupling of a doubled-origin form.
    pub fn with_interface(&self, interface: Interface) -> Result<Self> {
        let (zm, _) = self.grid.zero_pair()?;
        let mut out = self.clone();
        out.edges[zm] = interface.coupling()?;
        out.kind = interface.kind();
        Ok(out)
    }

    /// Merge `0-` and `0+` into one node.
    pub fn darn(&self) -> Result<Self> {
        let (zm, zp) = self.grid.zero_pair()?;
        let mut mass = self.mass.clone();
        mass[zm] = self.mass[zm] + self.mass[zp];
        mass.remove(zp);
        let mut killing = self.killing.clone();
        killing[zm] = self.killing[zm] + self.killing[zp];
        killing.remove(zp);
        let mut edges = self.edges.clone();
        edges.remove(zm);
        let kind = match &self.kind {
            FormKind::Killed { .. } => FormKind::Killed {
                base: Box::new(FormKind::Continuous),
            },
            _ => FormKind::Continuous,
        };
        Ok(DiscreteForm {
            grid: self.grid.merged()?,
            mass,
            edges,
            killing,
            kind,
        })
    }

    /// Trace of the form on `keep`: the Schur complement of the stiffness
    /// onto the kept nodes, with masses restricted to them.
    pub fn trace_schur(&self, keep: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut kept = vec![false; n];
        for &i in keep {
            if i >= n {
                return Err(Error::Argument(format!(
                    "kept node {i} is outside a grid of {n} nodes"
                )));
            }
            kept[i] = true;
        }
        if !kept.iter().any(|k| *k) {
            return Err(Error::Argument("trace needs at least one kept node".into()));
        }
        if kept.iter().all(|k| *k) {
            return Ok(self.clone());
        }
        let mut killing = self.killing.clone();
        // Eliminate nodes left to right. `carry` is the conductance between
        // the last kept node and the current node after earlier eliminations.
        let mut new_edges = Vec::new();
        let mut last_kept: Option<usize> = None;
        let mut carry = 0.0;
        for k in 0..n {
            let w_left = if k == 0 {
                0.0
            } else if kept[k - 1] {
                self.edges[k - 1]
            } else {
                carry
            };
            if kept[k] {
                if last_kept.is_some() {
                    new_edges.push(w_left);
                }
                last_kept = Some(k);
                continue;
            }
            let w_right = if k + 1 < n { self.edges[k] } else { 0.0 };
            let d = w_left + w_right + killing[k];
            let scale = w_left.abs() + w_right.abs() + killing[k].abs();
            if !(d > 1e-300) || d <= 1e-14 * scale {
                return Err(Error::Numerical(format!(
                    "eliminated block is singular at node {k}: pivot {d:e}, condition estimate {:e}",
                    if d > 0.0 { scale / d } else { f64::INFINITY }
                )));
            }
            if let Some(l) = last_kept {
                if w_left != 0.0 {
                    killing[l] += w_left * killing[k] / d;
                }
            }
            if k + 1 < n {
                killing[k + 1] += w_right * killing[k] / d;
            }
            carry = w_left * w_right / d;
            if last_kept.is_none() {
                carry = 0.0;
            }
        }
        let idx: Vec<usize> = (0..n).filter(|&i| kept[i]).collect();
        let grid = Grid::new(idx.iter().map(|&i| self.grid.nodes()[i]).collect())?;
        Ok(DiscreteForm {
            grid,
            mass: idx.iter().map(|&i| self.mass[i]).collect(),
            edges: new_edges,
            killing: idx.iter().map(|&i| killing[i]).collect(),
            kind: FormKind::Trace,
        })
    }
}
