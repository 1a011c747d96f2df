//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::assembly::{Interface, Point, Side};
use crate::error::{Error, Result};
use crate::evolve::Scheme;
use crate::lab::{BarrierFamily, Scenario, SweepSpec};
use crate::measures::{Conductivity, MonotoneMeasure, DEFAULT_CANTOR_LEVEL};
use crate::probe::Probe;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub resolvent: Option<ResolventConfig>,
    pub heat: Option<HeatConfig>,
    pub sweep: Option<SweepConfig>,
    pub mc: Option<McConfig>,
    pub check: Option<CheckConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub half_width: f64,
    /// Uniform spacing; exactly one of `h` and `nodes` is given.
    #[serde(default)]
    pub h: Option<f64>,
    /// Node count of the single-origin grid (odd, at least 3); the doubled
    /// grid has one node more.
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default = "MeasureConfig::lebesgue")]
    pub speed: MeasureConfig,
    #[serde(default = "MeasureConfig::lebesgue")]
    pub resistance: MeasureConfig,
    #[serde(default = "PhaseConfig::continuous")]
    pub phase: PhaseConfig,
}

/// Measure declarations; the domain is chosen to cover the box with room
/// for a barrier.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureConfig {
    Lebesgue,
    Density { value: f64 },
    Conductivity { conductivity: Conductivity },
    /// `weight·dx + dc`, `c` the Cantor function on `[0, 1]`.
    Cantor {
        #[serde(default = "default_level")]
        level: u32,
        #[serde(default = "one")]
        lebesgue_weight: f64,
    },
    /// Two-column `(x, cdf)` file, relative to the config file.
    Csv { path: PathBuf },
}

fn default_level() -> u32 {
    DEFAULT_CANTOR_LEVEL
}

fn one() -> f64 {
    1.0
}

impl MeasureConfig {
    fn lebesgue() -> Self {
        MeasureConfig::Lebesgue
    }

    pub fn build(&self, key: &str, lo: f64, hi: f64, base_dir: &Path) -> Result<MonotoneMeasure> {
        let wrap = |e: Error| Error::config(key, e.to_string());
        match self {
            MeasureConfig::Lebesgue => MonotoneMeasure::lebesgue(lo, hi).map_err(wrap),
            MeasureConfig::Density { value } => {
                if !(*value > 0.0) {
                    return Err(Error::config(format!("{key}.value"), "density must be positive"));
                }
                MonotoneMeasure::with_density(lo, hi, *value).map_err(wrap)
            }
            MeasureConfig::Conductivity { conductivity } => {
                MonotoneMeasure::from_conductivity(lo, hi, conductivity.clone()).map_err(wrap)
            }
            MeasureConfig::Cantor {
                level,
                lebesgue_weight,
            } => MonotoneMeasure::cantor_sum(lo, hi, *level, *lebesgue_weight).map_err(wrap),
            MeasureConfig::Csv { path } => {
                let full = base_dir.join(path);
                MonotoneMeasure::from_csv(&full).map_err(|e| match e {
                    Error::Csv(_) | Error::Io { .. } => e,
                    other => wrap(other),
                })
            }
        }
    }

    pub fn input_path(&self, base_dir: &Path) -> Option<PathBuf> {
        match self {
            MeasureConfig::Csv { path } => Some(base_dir.join(path)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhaseConfig {
    Separate,
    Continuous,
    /// Exactly one of `kappa` and `gamma_bar`; `κ = 2/γ̄`.
    Snapping {
        kappa: Option<f64>,
        gamma_bar: Option<f64>,
    },
    Skew { alpha_skew: f64, kappa: f64 },
    EpsBarrier {
        epsilon: f64,
        family: BarrierFamily,
        #[serde(default = "default_cells")]
        cells: usize,
    },
}

fn default_cells() -> usize {
    16
}

impl PhaseConfig {
    fn continuous() -> Self {
        PhaseConfig::Continuous
    }
}

/// Phase after validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phase {
    Interface(Interface),
    Barrier {
        epsilon: f64,
        family: BarrierFamily,
        cells: usize,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventConfig {
    pub alpha: f64,
    pub f: Probe,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "yes")]
    pub rannacher: bool,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    pub u0: Probe,
}

fn default_scheme() -> Scheme {
    Scheme::CrankNicolson
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: BarrierFamily,
    pub eps0: f64,
    pub levels: Vec<u32>,
    #[serde(default = "default_cells")]
    pub barrier_cells: usize,
    pub probes: Option<Vec<Probe>>,
    pub alphas: Option<Vec<f64>>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub fdd: Option<FddConfig>,
}

fn default_tolerance() -> f64 {
    1e-2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FddConfig {
    pub t1: f64,
    pub t2: f64,
    pub f1: Probe,
    pub f2: Probe,
    pub density: Probe,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Process {
    /// Snapping-out Brownian motion, simulated path by path.
    Snob,
    /// Markov chain of the scenario's discrete form.
    Ctmc,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartPoint {
    pub x: f64,
    #[serde(default = "plus")]
    pub side: Side,
}

fn plus() -> Side {
    Side::Plus
}

impl StartPoint {
    pub fn point(&self) -> Point {
        let side = if self.x == 0.0 {
            self.side
        } else if self.x < 0.0 {
            Side::Minus
        } else {
            Side::Plus
        };
        Point::new(self.x, side)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub process: Process,
    /// Snapping rate for `snob`; ignored for `ctmc`.
    pub kappa: Option<f64>,
    /// Time step for `snob`.
    pub step: Option<f64>,
    pub horizon: f64,
    pub n_paths: usize,
    pub start: StartPoint,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default)]
    pub targets: Vec<StartPoint>,
    pub cross_check: Option<CrossCheckConfig>,
}

/// Compare `E[f(Y_t)]` with the heat semigroup of the scenario form.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossCheckConfig {
    pub f: Probe,
    pub time: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_pairs")]
    pub symmetry_pairs: usize,
}

fn default_kappas() -> Vec<f64> {
    vec![0.5, 2.0, 8.0]
}

fn default_alphas() -> Vec<f64> {
    vec![0.5, 1.0, 4.0]
}

fn default_pairs() -> usize {
    20
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            kappas: default_kappas(),
            alphas: default_alphas(),
            symmetry_pairs: default_pairs(),
        }
    }
}

/// A parsed configuration together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
    pub config: Config,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| Error::config("<file>", "config is not valid UTF-8"))?;
        let config = parse(&text)?;
        Ok(LoadedConfig {
            path: path.to_path_buf(),
            bytes,
            config,
        })
    }

    pub fn base_dir(&self) -> PathBuf {
        self.path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

pub fn parse(text: &str) -> Result<Config> {
    toml::from_str(text).map_err(|e| {
        let key = e
            .span()
            .and_then(|s| text.get(..s.start))
            .map(key_before)
            .unwrap_or_else(|| "<root>".into());
        Error::config(key, e.message().to_string())
    })
}

// Best-effort dotted key path for a parse error: the last table header and key.
fn key_before(prefix: &str) -> String {
    let mut table = String::new();
    let mut key = String::new();
    for line in prefix.lines() {
        let t = line.trim();
        if t.starts_with('[') {
            table = t.trim_matches(|c| c == '[' || c == ']').to_string();
            key.clear();
        } else if let Some((k, _)) = t.split_once('=') {
            key = k.trim().to_string();
        }
    }
    if let Some((k, _)) = prefix.lines().last().unwrap_or("").split_once('=') {
        key = k.trim().to_string();
    }
    match (table.is_empty(), key.is_empty()) {
        (true, true) => "<root>".into(),
        (true, false) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}

impl ScenarioConfig {
    /// Grid spacing from `h` or `nodes`.
    pub fn spacing(&self) -> Result<f64> {
        let l = self.half_width;
        match (self.h, self.nodes) {
            (Some(h), None) => {
                if !(h > 0.0) || h >= l {
                    return Err(Error::config("scenario.h", format!("must lie in (0, L), got {h}")));
                }
                let ratio = l / h;
                if (ratio - ratio.round()).abs() > 1e-9 * ratio {
                    return Err(Error::config(
                        "scenario.h",
                        format!("box half-width L = {l} must be an integer multiple of h = {h}"),
                    ));
                }
                Ok(h)
            }
            (None, Some(n)) => {
                if n < 3 || n % 2 == 0 {
                    return Err(Error::config(
                        "scenario.nodes",
                        format!("must be odd and at least 3 so that 0 is a node, got {n}"),
                    ));
                }
                Ok(2.0 * l / (n - 1) as f64)
            }
            _ => Err(Error::config("scenario", "give exactly one of `h` and `nodes`")),
        }
    }

    /// Measures are built on `[-2L, 2L]` so thin barriers fit.
    pub fn build(&self, base_dir: &Path) -> Result<(Scenario, Phase)> {
        let l = self.half_width;
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::config("scenario.half_width", format!("must be positive, got {l}")));
        }
        let h = self.spacing()?;
        let speed = self.speed.build("scenario.speed", -2.0 * l, 2.0 * l, base_dir)?;
        let resistance = self
            .resistance
            .build("scenario.resistance", -2.0 * l, 2.0 * l, base_dir)?;
        let scenario = Scenario::new(speed, resistance, l, h)
            .map_err(|e| Error::config("scenario", e.to_string()))?;
        let phase = self.phase.validate(l)?;
        Ok((scenario, phase))
    }
}

impl PhaseConfig {
    pub fn validate(&self, half_width: f64) -> Result<Phase> {
        let key = "scenario.phase";
        Ok(match *self {
            PhaseConfig::Separate => Phase::Interface(Interface::Separate),
            PhaseConfig::Continuous => Phase::Interface(Interface::Continuous),
            PhaseConfig::Snapping { kappa, gamma_bar } => {
                let kappa = match (kappa, gamma_bar) {
                    (Some(k), None) => k,
                    (None, Some(g)) => {
                        if !(g > 0.0) || !g.is_finite() {
                            return Err(Error::config(
                                format!("{key}.gamma_bar"),
                                format!("must be positive and finite, got {g}"),
                            ));
                        }
                        2.0 / g
                    }
                    _ => {
                        return Err(Error::config(
                            key,
                            "snapping phase needs exactly one of `kappa` and `gamma_bar`",
                        ))
                    }
                };
                if !(kappa > 0.0) || !kappa.is_finite() {
                    return Err(Error::config(
                        format!("{key}.kappa"),
                        format!("must be positive, got {kappa}"),
                    ));
                }
                Phase::Interface(Interface::Snapping { kappa })
            }
            PhaseConfig::Skew { alpha_skew, kappa } => {
                let iface = Interface::Skew { alpha_skew, kappa };
                iface
                    .coupling()
                    .map_err(|e| Error::config(key, e.to_string()))?;
                Phase::Interface(iface)
            }
            PhaseConfig::EpsBarrier {
                epsilon,
                family,
                cells,
            } => {
                if !(epsilon > 0.0) {
                    return Err(Error::config(
                        format!("{key}.epsilon"),
                        format!("must be positive, got {epsilon}"),
                    ));
                }
                if epsilon >= half_width {
                    return Err(Error::config(
                        format!("{key}.epsilon"),
                        format!(
                            "barrier half-width {epsilon} is not smaller than the box half-width L = {half_width}"
                        ),
                    ));
                }
                family
                    .barrier(epsilon)
                    .map_err(|e| Error::config(format!("{key}.family"), e.to_string()))?;
                Phase::Barrier {
                    epsilon,
                    family,
                    cells,
                }
            }
        })
    }
}

impl SweepConfig {
    pub fn build(&self, scenario: Scenario) -> Result<SweepSpec> {
        if !(self.eps0 > 0.0) || self.eps0 >= scenario.half_width {
            return Err(Error::config(
                "sweep.eps0",
                format!(
                    "must lie in (0, L) with box half-width L = {}, got {}",
                    scenario.half_width, self.eps0
                ),
            ));
        }
        if self.levels.is_empty() {
            return Err(Error::config("sweep.levels", "needs at least one level"));
        }
        if let Some(a) = self.alphas.iter().flatten().find(|a| !(**a > 0.0)) {
            return Err(Error::config("sweep.alphas", format!("rates must be positive, got {a}")));
        }
        let mut spec = SweepSpec::new(scenario, self.family, self.eps0, self.levels.clone());
        spec.barrier_cells = self.barrier_cells;
        if let Some(p) = &self.probes {
            spec.probes = p.clone();
        }
        if let Some(a) = &self.alphas {
            spec.alphas = a.clone();
        }
        spec.tolerance = self.tolerance;
        Ok(spec)
    }
}
