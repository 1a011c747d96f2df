//! Test functions on the line with a doubled origin.

use serde::{Deserialize, Serialize};

use crate::assembly::{Grid, Point, Side};

/// A named function of a point, used as resolvent data, initial data or
/// Monte Carlo functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Probe {
    /// `exp(-((x - center)/width)²)`.
    Gaussian {
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// `1` on `[a, b]`, 0 elsewhere; the origin counts with its side.
    Indicator { a: f64, b: f64 },
    /// `sign(x)·exp(-|x|)`, with sign `-1` at `0-` and `+1` at `0+`.
    OddExp,
    /// `exp(-|x|)`.
    ExpAbs,
    /// Indicator of one half-line, origin included.
    Side { side: Side },
    Constant { value: f64 },
}

fn one() -> f64 {
    1.0
}

impl Probe {
    pub fn eval(&self, p: Point) -> f64 {
        match *self {
            Probe::Gaussian { center, width } => {
                let z = (p.x - center) / width;
                (-z * z).exp()
            }
            Probe::Indicator { a, b } => {
                let inside = p.x >= a && p.x <= b;
                // a closed interval ending at 0 covers only the matching copy of the origin
                let origin_ok = p.x != 0.0
                    || (a < 0.0 && b > 0.0)
                    || (b == 0.0 && p.side == Side::Minus)
                    || (a == 0.0 && p.side == Side::Plus);
                if inside && origin_ok {
                    1.0
                } else {
                    0.0
                }
            }
            Probe::OddExp => p.side.sign() * (-p.x.abs()).exp(),
            Probe::ExpAbs => (-p.x.abs()).exp(),
            Probe::Side { side } => {
                if p.side == side {
                    1.0
                } else {
                    0.0
                }
            }
            Probe::Constant { value } => value,
        }
    }

    /// Values at every node of a grid.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.points().into_iter().map(|p| self.eval(p)).collect()
    }

    /// Short identifier used in report columns.
    pub fn id(&self) -> String {
        match self {
            Probe::Gaussian { center, width } => {
                if *center == 0.0 && *width == 1.0 {
                    "gaussian".into()
                } else {
                    format!("gaussian({center},{width})")
                }
            }
            Probe::Indicator { a, b } => format!("indicator[{a},{b}]"),
            Probe::OddExp => "odd-exp".into(),
            Probe::ExpAbs => "exp-abs".into(),
            Probe::Side { side: Side::Minus } => "side-minus".into(),
            Probe::Side { side: Side::Plus } => "side-plus".into(),
            Probe::Constant { value } => format!("constant({value})"),
        }
    }

    /// Default sweep probes: smooth, rough and odd data.
    pub fn defaults() -> Vec<Probe> {
        vec![
            Probe::Gaussian {
                center: 0.0,
                width: 1.0,
            },
            Probe::Indicator { a: 0.5, b: 1.5 },
            Probe::OddExp,
        ]
    }
}
