use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which half-line a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Minus => Side::Plus,
            Side::Plus => Side::Minus,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Side::Minus => -1.0,
            Side::Plus => 1.0,
        }
    }
}

/// A point of the line with a doubled origin.
///
/// `x` is the signed coordinate; `side` tells `0-` from `0+` when `x == 0`
/// and otherwise agrees with the sign of `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub side: Side,
}

impl Point {
    pub fn new(x: f64, side: Side) -> Self {
        Point { x, side }
    }

    /// Point on the ordinary line; the origin is attached to the plus side.
    pub fn on_line(x: f64) -> Self {
        let side = if x < 0.0 { Side::Minus } else { Side::Plus };
        Point { x, side }
    }

    /// Distance from the origin of the point's own half-line.
    pub fn radius(&self) -> f64 {
        self.x.abs()
    }
}

/// How the origin appears in a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// No node sits at 0.
    Absent,
    /// One node at 0 (index given).
    Single(usize),
    /// Two logical nodes at 0: `0-` at the index given, `0+` right after it.
    Doubled(usize),
}

/// Ordered grid on a truncation box, optionally with a doubled origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    origin: Origin,
}

impl Grid {
    /// Build a grid from sorted nodes.
    ///
    /// Nodes must be strictly increasing except for at most one repeated pair,
    /// which must sit at 0 and marks the doubled origin.
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Argument("a grid needs at least two nodes".into()));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::Argument("grid nodes must be finite".into()));
        }
        let mut doubled = None;
        for (i, w) in nodes.windows(2).enumerate() {
            if w[0] == w[1] {
                if w[0] != 0.0 || doubled.is_some() {
                    return Err(Error::Argument(format!(
                        "repeated grid node {} at index {i}; only 0 may be doubled, once",
                        w[0]
                    )));
                }
                doubled = Some(i);
            } else if !(w[0] < w[1]) {
                return Err(Error::Argument(format!(
                    "grid nodes must be increasing (index {i}: {} then {})",
                    w[0], w[1]
                )));
            }
        }
        let origin = match doubled {
            Some(i) => Origin::Doubled(i),
            None => match nodes.iter().position(|&x| x == 0.0) {
                Some(i) => Origin::Single(i),
                None => Origin::Absent,
            },
        };
        Ok(Grid { nodes, origin })
    }

    /// Uniform grid `{-L, -L + h, ..., L}`; `L / h` must be an integer.
    pub fn uniform(half_width: f64, h: f64, doubled: bool) -> Result<Self> {
        if !(half_width > 0.0) || !(h > 0.0) {
            return Err(Error::Argument(format!(
                "uniform grid needs L > 0 and h > 0 (got L = {half_width}, h = {h})"
            )));
        }
        let ratio = half_width / h;
        let k = ratio.round();
        if (ratio - k).abs() > 1e-9 * ratio.max(1.0) || k < 1.0 {
            return Err(Error::Argument(format!(
                "box half-width {half_width} is not an integer multiple of h = {h}"
            )));
        }
        let k = k as i64;
        let mut nodes: Vec<f64> = (-k..=k).map(|i| i as f64 * h).collect();
        if doubled {
            nodes.insert(k as usize, 0.0);
        }
        Grid::new(nodes)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    /// Indices of `0-` and `0+` for a doubled grid.
    pub fn zero_pair(&self) -> Result<(usize, usize)> {
        match self.origin {
            Origin::Doubled(i) => Ok((i, i + 1)),
            _ => Err(Error::Shape(
                "operation needs a grid with a doubled origin".into(),
            )),
        }
    }

    pub fn half_width(&self) -> f64 {
        self.nodes[0].abs().max(self.nodes[self.len() - 1].abs())
    }

    /// Largest cell length.
    pub fn max_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn point(&self, i: usize) -> Point {
        let x = self.nodes[i];
        match self.origin {
            Origin::Doubled(z) if i == z => Point::new(0.0, Side::Minus),
            Origin::Doubled(z) if i == z + 1 => Point::new(0.0, Side::Plus),
            _ => Point::on_line(x),
        }
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Index of the node closest to `p`, respecting the side at a doubled origin.
    pub fn locate(&self, p: Point) -> usize {
        if let Origin::Doubled(z) = self.origin {
            if p.x == 0.0 {
                return if p.side == Side::Minus { z } else { z + 1 };
            }
        }
        let k = self.nodes.partition_point(|&v| v < p.x);
        if k == 0 {
            return 0;
        }
        if k == self.len() {
            return self.len() - 1;
        }
        if p.x - self.nodes[k - 1] <= self.nodes[k] - p.x {
            k - 1
        } else {
            k
        }
    }

    /// Same nodes with the doubled origin merged into one node.
    pub fn merged(&self) -> Result<Grid> {
        let (zm, _) = self.zero_pair()?;
        let mut nodes = self.nodes.clone();
        nodes.remove(zm);
        Grid::new(nodes)
    }

    /// Same nodes with the single origin split into `0-` and `0+`.
    pub fn split(&self) -> Result<Grid> {
        match self.origin {
            Origin::Single(z) => {
                let mut nodes = self.nodes.clone();
                nodes.insert(z, 0.0);
                Grid::new(nodes)
            }
            _ => Err(Error::Shape("operation needs a grid with a single origin node".into())),
        }
    }
}

/// A grid on `[-L-ε, L+ε]` obtained from a doubled grid by pushing each half
/// outward by `ε` and filling the gap with a uniform barrier mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierGrid {
    pub grid: Grid,
    pub epsilon: f64,
    /// Index of the node at `-ε` (image of `0-`).
    pub left: usize,
    /// Index of the node at `+ε` (image of `0+`).
    pub right: usize,
    /// For each node of the limit grid, its image in `grid`.
    pub image: Vec<usize>,
}

/// Minimum number of cells the barrier must be split into.
pub const MIN_BARRIER_CELLS: usize = 8;

impl BarrierGrid {
    pub fn new(limit: &Grid, epsilon: f64, barrier_cells: usize) -> Result<Self> {
        let (zm, zp) = limit.zero_pair()?;
        if barrier_cells < MIN_BARRIER_CELLS {
            return Err(Error::Resolution {
                cells: barrier_cells,
                required: MIN_BARRIER_CELLS,
            });
        }
        if !(epsilon > 0.0) {
            return Err(Error::Parameter(format!(
                "barrier half-width must be positive, got {epsilon}"
            )));
        }
        let src = limit.nodes();
        let mut nodes = Vec::with_capacity(src.len() + barrier_cells);
        let mut image = Vec::with_capacity(src.len());
        for &x in &src[..=zm] {
            image.push(nodes.len());
            nodes.push(x - epsilon);
        }
        let left = nodes.len() - 1;
        for k in 1..barrier_cells {
            let t = -1.0 + 2.0 * k as f64 / barrier_cells as f64;
            nodes.push(epsilon * t);
        }
        let right = nodes.len();
        for &x in &src[zp..] {
            image.push(nodes.len());
            nodes.push(x + epsilon);
        }
        Ok(BarrierGrid {
            grid: Grid::new(nodes)?,
            epsilon,
            left,
            right,
            image,
        })
    }

    /// Whether node `i` lies strictly inside the barrier.
    pub fn is_interior(&self, i: usize) -> bool {
        i > self.left && i < self.right
    }

    /// Point of the limit space a node of the barrier grid stands for.
    ///
    /// Nodes outside the barrier map back through the shift; interior nodes
    /// collapse onto `0-` or `0+` according to their sign.
    pub fn limit_point(&self, i: usize, limit: &Grid) -> Point {
        if i <= self.left {
            limit.point(i)
        } else if i >= self.right {
            limit.point(i - self.right + self.left + 1)
        } else if self.grid.nodes()[i] < 0.0 {
            Point::new(0.0, Side::Minus)
        } else {
            Point::new(0.0, Side::Plus)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_doubled_grid_layout() {
        let g = Grid::uniform(1.0, 0.5, true).unwrap();
        assert_eq!(g.nodes(), &[-1.0, -0.5, 0.0, 0.0, 0.5, 1.0]);
        assert_eq!(g.origin(), Origin::Doubled(2));
        assert_eq!(g.point(2).side, Side::Minus);
        assert_eq!(g.point(3).side, Side::Plus);
        assert_eq!(g.locate(Point::new(0.0, Side::Plus)), 3);
        assert_eq!(g.locate(Point::on_line(0.7)), 4);
    }

    #[test]
    fn non_integer_box_rejected() {
        assert!(Grid::uniform(1.0, 0.3, false).is_err());
    }

    #[test]
    fn repeated_nonzero_node_rejected() {
        assert!(Grid::new(vec![-1.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Grid::new(vec![-1.0, 0.0, 0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn barrier_grid_images_shift_exactly() {
        let g = Grid::uniform(1.0, 0.25, true).unwrap();
        let b = BarrierGrid::new(&g, 0.1, 8).unwrap();
        let n = b.grid.nodes();
        assert_eq!(n[b.left], 0.0 - 0.1);
        assert_eq!(n[b.right], 0.1);
        assert_eq!(b.right - b.left, 8);
        for (j, &i) in b.image.iter().enumerate() {
            let lp = b.limit_point(i, &g);
            assert_eq!(lp, g.point(j));
        }
        // the barrier midpoint sits exactly at zero
        assert_eq!(n[b.left + 4], 0.0);
    }

    #[test]
    fn barrier_grid_needs_resolution() {
        let g = Grid::uniform(1.0, 0.25, true).unwrap();
        assert!(matches!(
            BarrierGrid::new(&g, 0.1, 4),
            Err(Error::Resolution { cells: 4, required: 8 })
        ));
    }
}
