//! Uniform time grids and trajectories sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A uniform grid `s_i = i * h` on `[0, t_end]` with `n >= 3` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    t_end: f64,
    n: usize,
}

impl Grid {
    pub fn uniform(t_end: f64, n: usize) -> Result<Grid> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(invalid(format!("t_end must be positive and finite, got {t_end}")));
        }
        if n < 3 {
            return Err(invalid(format!("a grid needs at least 3 nodes, got {n}")));
        }
        Ok(Grid { t_end, n })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.t_end / (self.n - 1) as f64
    }

    /// The `i`-th node. The last node is exactly `t_end`.
    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.t_end
        } else {
            self.t_end * (i as f64) / ((self.n - 1) as f64)
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Halves the spacing: `n - 1` intervals become `2 (n - 1)`.
    pub fn refined(&self) -> Grid {
        Grid {
            t_end: self.t_end,
            n: 2 * (self.n - 1) + 1,
        }
    }

    /// Interior node indices `1..n-1`.
    pub fn interior(&self) -> std::ops::Range<usize> {
        1..self.n - 1
    }
}

/// Positions sampled on a [`Grid`]. Velocities are never stored; they are
/// derived by finite differences so that position and velocity variations
/// stay consistent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    grid: Grid,
    q: Vec<f64>,
}

impl Path {
    pub fn new(grid: Grid, q: Vec<f64>) -> Result<Path> {
        if q.len() != grid.len() {
            return Err(invalid(format!(
                "path has {} samples but the grid has {} nodes",
                q.len(),
                grid.len()
            )));
        }
        if let Some(i) = q.iter().position(|x| !x.is_finite()) {
            return Err(invalid(format!("non-finite position at node {i}")));
        }
        Ok(Path { grid, q })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Path> {
        let q = grid.nodes().into_iter().map(f).collect();
        Path::new(grid, q)
    }

    pub fn zeros(grid: Grid) -> Path {
        Path {
            grid,
            q: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn positions(&self) -> &[f64] {
        &self.q
    }

    pub fn into_positions(self) -> Vec<f64> {
        self.q
    }

    /// Second-order velocities: central differences inside, one-sided
    /// three-point stencils at both ends.
    pub fn velocity(&self) -> Vec<f64> {
        velocity(&self.grid, &self.q)
    }

    /// Second differences `(q[i-1] - 2 q[i] + q[i+1]) / h^2` at interior
    /// nodes; the returned vector is indexed by node with zeros at the ends.
    pub fn acceleration(&self) -> Vec<f64> {
        let h2 = self.grid.step().powi(2);
        let mut a = vec![0.0; self.q.len()];
        for i in self.grid.interior() {
            a[i] = (self.q[i - 1] - 2.0 * self.q[i] + self.q[i + 1]) / h2;
        }
        a
    }

    pub fn max_abs(&self) -> f64 {
        self.q.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Largest pointwise difference to another path on the same grid.
    pub fn max_difference(&self, other: &Path) -> Result<f64> {
        if self.grid != other.grid {
            return Err(invalid("paths live on different grids"));
        }
        Ok(self
            .q
            .iter()
            .zip(&other.q)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

pub(crate) fn velocity(grid: &Grid, q: &[f64]) -> Vec<f64> {
    let n = q.len();
    let h = grid.step();
    let mut v = vec![0.0; n];
    for i in 1..n - 1 {
        v[i] = (q[i + 1] - q[i - 1]) / (2.0 * h);
    }
    v[0] = (-3.0 * q[0] + 4.0 * q[1] - q[2]) / (2.0 * h);
    v[n - 1] = (3.0 * q[n - 1] - 4.0 * q[n - 2] + q[n - 3]) / (2.0 * h);
    v
}
