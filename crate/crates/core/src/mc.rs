//! Path-level simulation of snapping-out processes.
//!
//! Brownian paths are advanced with an exact sampler of reflected Brownian
//! motion and its boundary local time. When the local time exceeds an
//! exponential threshold the path is reborn at `0-` or `0+` with equal
//! probability. General forms are simulated as the continuous-time Markov
//! chain generated by `-M⁻¹A`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{DiscreteForm, Origin, Point, Side};
use crate::error::{Error, Result};

/// Upper bound on `n_paths · steps` for one ensemble.
pub const MAX_WORK: f64 = 2e10;

/// Per-path random stream, independent of scheduling.
pub fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// One exact step of reflected Brownian motion started at `r ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectedStep {
    pub position: f64,
    /// Increment of the Skorokhod local time at 0.
    pub local_time: f64,
    /// Minimum of the reflected path over the step.
    pub minimum: f64,
}

/// Sample `(R_{t+h}, ΔL)` jointly from `R_t = r`.
///
/// The free endpoint `w ~ N(r, h)` and the minimum of the Brownian bridge
/// from `r` to `w` give `ΔL = max(0, -min)` and `R_{t+h} = w + ΔL`.
pub fn step_reflected<R: Rng + ?Sized>(r: f64, h: f64, rng: &mut R) -> ReflectedStep {
    let z: f64 = StandardNormal.sample(rng);
    let w = r + h.sqrt() * z;
    let u: f64 = 1.0 - rng.gen::<f64>();
    let d = w - r;
    let m = 0.5 * (r + w - (d * d - 2.0 * h * u.ln()).sqrt());
    let dl = (-m).max(0.0);
    ReflectedStep {
        position: w + dl,
        local_time: dl,
        minimum: m.max(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// Snapping-out rebirth at `0-` or `0+`.
    Rebirth,
    /// Chain jump across the `0-`/`0+` edge.
    Crossing,
    /// Jump to the cemetery.
    Killed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Side after the event (the side left behind for `Killed`).
    pub side: Side,
}

/// Everything recorded for one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub events: Vec<Event>,
    /// Position at each snapshot time; `None` once killed.
    pub snapshots: Vec<Option<Point>>,
    /// Grid node at each snapshot time (chain runs only).
    pub nodes: Option<Vec<Option<usize>>>,
    /// First hitting time of each target before the horizon.
    pub hits: Vec<Option<f64>>,
}

/// An ensemble of simulated paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub seed: u64,
    pub step: f64,
    pub horizon: f64,
    pub snapshot_times: Vec<f64>,
    pub targets: Vec<Point>,
    pub paths: Vec<PathRecord>,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    fn time_index(&self, t: f64) -> Result<usize> {
        self.snapshot_times
            .iter()
            .position(|s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or_else(|| Error::Argument(format!("no snapshot recorded at t = {t}")))
    }

    /// Rebirth counts `(onto 0-, onto 0+)` over all paths.
    pub fn rebirth_sides(&self) -> (usize, usize) {
        self.count_events(EventKind::Rebirth)
    }

    /// Counts of events of one kind, split by the side they end on.
    pub fn count_events(&self, kind: EventKind) -> (usize, usize) {
        let mut minus = 0;
        let mut plus = 0;
        for e in self.paths.iter().flat_map(|p| &p.events).filter(|e| e.kind == kind) {
            match e.side {
                Side::Minus => minus += 1,
                Side::Plus => plus += 1,
            }
        }
        (minus, plus)
    }
}

/// Parameters of a snapping-out Brownian motion ensemble.
#[derive(Debug, Clone)]
pub struct SnobConfig {
    pub start: Point,
    pub kappa: f64,
    pub step: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub snapshot_times: Vec<f64>,
    pub targets: Vec<Point>,
}

impl SnobConfig {
    pub fn new(start: Point, kappa: f64, step: f64, horizon: f64, n_paths: usize, seed: u64) -> Self {
        SnobConfig {
            start,
            kappa,
            step,
            horizon,
            n_paths,
            seed,
            snapshot_times: vec![horizon],
            targets: Vec::new(),
        }
    }
}

fn stops(snapshot_times: &[f64], horizon: f64) -> Result<Vec<f64>> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Argument(format!("horizon must be positive, got {horizon}")));
    }
    let mut s = snapshot_times.to_vec();
    if let Some(t) = s.iter().find(|t| !(**t >= 0.0) || **t > horizon) {
        return Err(Error::Argument(format!("snapshot time {t} outside [0, {horizon}]")));
    }
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    s.dedup();
    Ok(s)
}

/// Simulate snapping-out Brownian motion.
pub fn run_snob(cfg: &SnobConfig) -> Result<PathEnsemble> {
    if !(cfg.kappa > 0.0) || !cfg.kappa.is_finite() {
        return Err(Error::Parameter(format!("kappa must be positive, got {}", cfg.kappa)));
    }
    if !(cfg.step > 0.0) {
        return Err(Error::Argument(format!("step must be positive, got {}", cfg.step)));
    }
    let snaps = stops(&cfg.snapshot_times, cfg.horizon)?;
    let work = cfg.n_paths as f64 * (cfg.horizon / cfg.step).ceil();
    if !(work <= MAX_WORK) {
        return Err(Error::Resource(format!(
            "{} paths x {} steps exceeds the limit of {MAX_WORK:e} path-steps",
            cfg.n_paths,
            (cfg.horizon / cfg.step).ceil()
        )));
    }
    let killing = Exp::new(cfg.kappa).map_err(|e| Error::Parameter(e.to_string()))?;
    let paths = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| snob_path(cfg, &snaps, &killing, &mut path_rng(cfg.seed, i)))
        .collect();
    Ok(PathEnsemble {
        seed: cfg.seed,
        step: cfg.step,
        horizon: cfg.horizon,
        snapshot_times: snaps,
        targets: cfg.targets.clone(),
        paths,
    })
}

fn snob_path(cfg: &SnobConfig, snaps: &[f64], killing: &Exp<f64>, rng: &mut ChaCha8Rng) -> PathRecord {
    let mut side = cfg.start.side;
    let mut r = cfg.start.x.abs();
    let mut local = 0.0;
    let mut threshold: f64 = killing.sample(rng);
    let mut t = 0.0;
    let mut events = Vec::new();
    let mut snapshots = Vec::with_capacity(snaps.len());
    let mut hits: Vec<Option<f64>> = cfg
        .targets
        .iter()
        .map(|q| (q.side == side && q.x.abs() == r).then_some(0.0))
        .collect();
    let tol = 1e-9 * cfg.step;
    let mut schedule = snaps.to_vec();
    if schedule.last().map_or(true, |&s| s < cfg.horizon) {
        schedule.push(cfg.horizon);
    }
    for (k, &stop) in schedule.iter().enumerate() {
        while stop - t > tol {
            let dt = cfg.step.min(stop - t);
            let s = step_reflected(r, dt, rng);
            t = if stop - (t + dt) <= tol { stop } else { t + dt };
            for (q, hit) in cfg.targets.iter().zip(hits.iter_mut()) {
                if hit.is_none() && q.side == side {
                    let y = q.x.abs();
                    let reached = if y <= r { s.minimum <= y } else { s.position >= y };
                    if reached {
                        *hit = Some(t);
                    }
                }
            }
            r = s.position;
            local += s.local_time;
            if local > threshold {
                side = if rng.gen_bool(0.5) { Side::Plus } else { Side::Minus };
                r = 0.0;
                local = 0.0;
                threshold = killing.sample(rng);
                events.push(Event {
                    time: t,
                    kind: EventKind::Rebirth,
                    side,
                });
                for (q, hit) in cfg.targets.iter().zip(hits.iter_mut()) {
                    if hit.is_none() && q.side == side && q.x == 0.0 {
                        *hit = Some(t);
                    }
                }
            }
        }
        if k < snaps.len() {
            snapshots.push(Some(Point::new(side.sign() * r, side)));
        }
    }
    PathRecord {
        events,
        snapshots,
        nodes: None,
        hits,
    }
}

/// Parameters of a chain simulation.
#[derive(Debug, Clone)]
pub struct CtmcConfig {
    pub start: usize,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub snapshot_times: Vec<f64>,
}

/// Simulate the continuous-time Markov chain generated by `-M⁻¹A`.
///
/// Jump rates are `edge / mass` to each neighbour and `killing / mass` to
/// the cemetery.
pub fn run_ctmc(form: &DiscreteForm, cfg: &CtmcConfig) -> Result<PathEnsemble> {
    form.check_markov()?;
    if cfg.start >= form.len() {
        return Err(Error::Argument(format!(
            "start node {} outside a grid of {} nodes",
            cfg.start,
            form.len()
        )));
    }
    let snaps = stops(&cfg.snapshot_times, cfg.horizon)?;
    let max_rate = (0..form.len())
        .map(|i| form.diagonal(i) / form.mass()[i])
        .fold(0.0, f64::max);
    let work = cfg.n_paths as f64 * cfg.horizon * max_rate;
    if !(work <= MAX_WORK) {
        return Err(Error::Resource(format!(
            "expected up to {work:e} jumps, above the limit of {MAX_WORK:e}"
        )));
    }
    let paths = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| ctmc_path(form, cfg, &snaps, &mut path_rng(cfg.seed, i)))
        .collect();
    Ok(PathEnsemble {
        seed: cfg.seed,
        step: 0.0,
        horizon: cfg.horizon,
        snapshot_times: snaps,
        targets: Vec::new(),
        paths,
    })
}

fn ctmc_path(form: &DiscreteForm, cfg: &CtmcConfig, snaps: &[f64], rng: &mut ChaCha8Rng) -> PathRecord {
    let n = form.len();
    let zero = match form.grid().origin() {
        Origin::Doubled(z) => Some(z),
        _ => None,
    };
    let edges = form.edges();
    let mut node = Some(cfg.start);
    let mut t = 0.0;
    let mut events = Vec::new();
    let mut nodes = Vec::with_capacity(snaps.len());
    let mut next_snap = 0;
    while let Some(i) = node {
        let m = form.mass()[i];
        let left = if i > 0 { edges[i - 1] / m } else { 0.0 };
        let right = if i + 1 < n { edges[i] / m } else { 0.0 };
        let kill = form.killing()[i] / m;
        let total = left + right + kill;
        let hold = if total > 0.0 {
            -(1.0 - rng.gen::<f64>()).ln() / total
        } else {
            f64::INFINITY
        };
        let t_next = t + hold;
        while next_snap < snaps.len() && snaps[next_snap] < t_next {
            nodes.push(Some(i));
            next_snap += 1;
        }
        if t_next >= cfg.horizon {
            break;
        }
        t = t_next;
        let pick = rng.gen::<f64>() * total;
        if pick < left {
            node = Some(i - 1);
        } else if pick < left + right {
            node = Some(i + 1);
        } else {
            node = None;
            events.push(Event {
                time: t,
                kind: EventKind::Killed,
                side: form.grid().point(i).side,
            });
            continue;
        }
        if let (Some(z), Some(j)) = (zero, node) {
            if (i == z && j == z + 1) || (i == z + 1 && j == z) {
                events.push(Event {
                    time: t,
                    kind: EventKind::Crossing,
                    side: form.grid().point(j).side,
                });
            }
        }
    }
    while nodes.len() < snaps.len() {
        nodes.push(None);
    }
    let snapshots = nodes
        .iter()
        .map(|k| k.map(|i| form.grid().point(i)))
        .collect();
    PathRecord {
        events,
        snapshots,
        nodes: Some(nodes),
        hits: Vec::new(),
    }
}

/// A real function of a point.
pub type PointFn = Box<dyn Fn(Point) -> f64 + Send + Sync>;

/// Quantities estimated from an ensemble.
pub enum Functional {
    /// `E[f(Y_t)]`; killed paths contribute 0.
    Mean { time: f64, f: PointFn },
    /// `E[f₁(Y_{t₁}) ⋯ f_k(Y_{t_k})]`.
    Product { factors: Vec<(f64, PointFn)> },
    /// `P(σ_target ≤ horizon)` for a target registered in the ensemble.
    Hitting { target: usize, horizon: f64 },
    /// `E[(1/T) ∫₀ᵀ f(Y_u) du]`, as a Riemann sum over the snapshot times.
    Ergodic { until: f64, f: PointFn },
}

impl Functional {
    pub fn mean(time: f64, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Functional::Mean {
            time,
            f: Box::new(f),
        }
    }

    pub fn ergodic(until: f64, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Functional::Ergodic {
            until,
            f: Box::new(f),
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Estimate {
            value: mean,
            std_error: (var / n as f64).sqrt(),
            n,
        }
    }

    /// `(value - reference) / std_error`, or 0 when both agree exactly.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = self.value - reference;
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

fn value_at(p: &Option<Point>, f: &PointFn) -> f64 {
    p.map_or(0.0, |q| f(q))
}

pub fn estimate(ens: &PathEnsemble, functional: &Functional) -> Result<Estimate> {
    if ens.paths.is_empty() {
        return Err(Error::Argument("ensemble has no paths".into()));
    }
    let samples: Vec<f64> = match functional {
        Functional::Mean { time, f } => {
            let k = ens.time_index(*time)?;
            ens.paths.iter().map(|p| value_at(&p.snapshots[k], f)).collect()
        }
        Functional::Product { factors } => {
            let idx: Vec<usize> = factors
                .iter()
                .map(|(t, _)| ens.time_index(*t))
                .collect::<Result<_>>()?;
            ens.paths
                .iter()
                .map(|p| {
                    idx.iter()
                        .zip(factors)
                        .map(|(&k, (_, f))| value_at(&p.snapshots[k], f))
                        .product()
                })
                .collect()
        }
        Functional::Hitting { target, horizon } => {
            if *target >= ens.targets.len() {
                return Err(Error::Argument(format!(
                    "target {target} not registered ({} targets)",
                    ens.targets.len()
                )));
            }
            if *horizon > ens.horizon * (1.0 + 1e-12) {
                return Err(Error::Argument(format!(
                    "hitting horizon {horizon} beyond simulated horizon {}",
                    ens.horizon
                )));
            }
            ens.paths
                .iter()
                .map(|p| match p.hits[*target] {
                    Some(s) if s <= *horizon * (1.0 + 1e-12) => 1.0,
                    _ => 0.0,
                })
                .collect()
        }
        Functional::Ergodic { until, f } => {
            let last = ens.time_index(*until)?;
            if !(*until > 0.0) {
                return Err(Error::Argument("ergodic average needs a positive time".into()));
            }
            let times = &ens.snapshot_times[..=last];
            ens.paths
                .iter()
                .map(|p| {
                    let mut prev = 0.0;
                    let mut acc = 0.0;
                    for (k, &s) in times.iter().enumerate() {
                        acc += (s - prev) * value_at(&p.snapshots[k], f);
                        prev = s;
                    }
                    acc / until
                })
                .collect()
        }
    };
    Ok(Estimate::from_samples(&samples))
}
