//! Memory kernels `alpha(t, s)` and the history integrals built from them.
//!
//! All grid integrals use the trapezoid rule restricted to the relevant
//! sub-range (`[0, s_j]`, `[s_i, t_end]` or the whole interval). Prefix
//! ranges always use trapezoid weights because Simpson parity cannot hold on
//! every prefix.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

/// Which kernel argument carries the integration variable in the
/// future-history term `int_s^t F(r) alpha(., .) q(r) dr` of the equation of
/// motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelArgumentOrder {
    /// `alpha(r, s)`: what the functional derivative of the action produces.
    #[default]
    IntegrationTimeFirst,
    /// `alpha(s, r)`: the published form of the equation of motion. Equal to
    /// the derived one for symmetric kernels only.
    EvaluationTimeFirst,
}

/// A two-time correlation function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MemoryKernel {
    /// `(gamma / 2) exp(-gamma |t - s|)`.
    Exponential { gamma: f64 },
    /// The `gamma -> infinity` limit of the exponential kernel. It has no
    /// pointwise values; history integrals evaluate operationally. A
    /// one-sided integral `int_0^s delta(s - r) q(r) dr` picks up `q(s) / 2`
    /// and a two-sided one picks up `q(s)`, which is what the exponential
    /// kernel converges to.
    DiracLimit,
    /// Values on a grid, bilinearly interpolated between nodes.
    Tabulated(TabulatedKernel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedKernel {
    grid: Grid,
    /// Row-major: `values[i * n + j] = alpha(s_i, s_j)`.
    values: Vec<f64>,
}

impl TabulatedKernel {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<TabulatedKernel> {
        let n = grid.len();
        if values.len() != n * n {
            return Err(invalid(format!(
                "tabulated kernel needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("tabulated kernel has non-finite entries"));
        }
        Ok(TabulatedKernel { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<TabulatedKernel> {
        let s = grid.nodes();
        let values = s
            .iter()
            .flat_map(|&t| s.iter().map(move |&r| (t, r)))
            .map(|(t, r)| f(t, r))
            .collect();
        TabulatedKernel::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn node_value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.len() + j]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.grid.len();
        (0..n).all(|i| (0..i).all(|j| (self.node_value(i, j) - self.node_value(j, i)).abs() <= tol))
    }

    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let t_end = self.grid.t_end();
        let slack = 1e-12 * t_end;
        if !(x >= -slack && x <= t_end + slack) {
            return Err(Error::Domain(format!(
                "{x} lies outside the tabulated range [0, {t_end}]"
            )));
        }
        let h = self.grid.step();
        let last = self.grid.len() - 2;
        let pos = (x.clamp(0.0, t_end) / h).max(0.0);
        let cell = (pos.floor() as usize).min(last);
        Ok((cell, (pos - cell as f64).clamp(0.0, 1.0)))
    }

    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        let (i, fx) = self.locate(t)?;
        let (j, fy) = self.locate(s)?;
        let v00 = self.node_value(i, j);
        let v10 = self.node_value(i + 1, j);
        let v01 = self.node_value(i, j + 1);
        let v11 = self.node_value(i + 1, j + 1);
        Ok(v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy + v11 * fx * fy)
    }
}

impl MemoryKernel {
    pub fn exponential(gamma: f64) -> Result<MemoryKernel> {
        let k = MemoryKernel::Exponential { gamma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MemoryKernel::Exponential { gamma } if !(gamma.is_finite() && *gamma > 0.0) => {
                Err(invalid(format!("kernel cutoff gamma must be positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    /// Pointwise value `alpha(t, s)`.
    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        match self {
            MemoryKernel::Exponential { gamma } => Ok(0.5 * gamma * (-gamma * (t - s).abs()).exp()),
            MemoryKernel::DiracLimit => Err(Error::Domain(
                "the Dirac-limit kernel has no pointwise values".into(),
            )),
            MemoryKernel::Tabulated(tab) => tab.eval(t, s),
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            MemoryKernel::Exponential { gamma } => Some(*gamma),
            _ => None,
        }
    }

    /// Value at a pair of grid nodes, bypassing interpolation for tables
    /// defined on the same grid.
    pub(crate) fn node_eval(&self, grid: &Grid, i: usize, j: usize) -> Result<f64> {
        match self {
            MemoryKernel::Tabulated(tab) if tab.grid == *grid => Ok(tab.node_value(i, j)),
            _ => self.eval(grid.node(i), grid.node(j)),
        }
    }

    /// `P_j = int_0^{s_j} alpha(s_j, r) x(r) dr` for every node.
    pub fn past_integrals(&self, grid: &Grid, x: &[f64]) -> Result<Vec<f64>> {
        check_len(grid, x)?;
        let n = grid.len();
        let h = grid.step();
        match self {
            MemoryKernel::Exponential { gamma } => {
                let rho = (-gamma * h).exp();
                let c = 0.5 * gamma * h;
                let mut out = vec![0.0; n];
                let mut acc = x[0];
                let mut first = x[0];
                for j in 1..n {
                    acc = rho * acc + x[j];
                    first *= rho;
                    out[j] = c * (acc - 0.5 * first - 0.5 * x[j]);
                }
                Ok(out)
            }
            MemoryKernel::DiracLimit => Ok(x.iter().map(|v| 0.5 * v).collect()),
            MemoryKernel::Tabulated(_) => {
                let mut out = vec![0.0; n];
                for (j, o) in out.iter_mut().enumerate().skip(1) {
                    let mut acc = 0.0;
                    for (l, xl) in x.iter().enumerate().take(j + 1) {
                        let w = if l == 0 || l == j { 0.5 * h } else { h };
                        acc += w * self.node_eval(grid, j, l)? * xl;
                    }
                    *o = acc;
                }
                Ok(out)
            }
        }
    }

    /// `U_i = int_{s_i}^{t_end} alpha(., .) x(r) dr` with the argument order
    /// given by `order`.
    pub fn future_integrals(
        &self,
        grid: &Grid,
        x: &[f64],
        order: KernelArgumentOrder,
    ) -> Result<Vec<f64>> {
        check_len(grid, x)?;
        let n = grid.len();
        let h = grid.step();
        match self {
            MemoryKernel::Exponential { gamma } => {
                let rho = (-gamma * h).exp();
                let c = 0.5 * gamma * h;
                let mut out = vec![0.0; n];
                let mut acc = x[n - 1];
                let mut last = x[n - 1];
                for i in (0..n - 1).rev() {
                    acc = rho * acc + x[i];
                    last *= rho;
                    out[i] = c * (acc - 0.5 * last - 0.5 * x[i]);
                }
                Ok(out)
            }
            MemoryKernel::DiracLimit => Ok(x.iter().map(|v| 0.5 * v).collect()),
            MemoryKernel::Tabulated(_) => {
                let mut out = vec![0.0; n];
                for (i, o) in out.iter_mut().enumerate().take(n - 1) {
                    let mut acc = 0.0;
                    for (l, xl) in x.iter().enumerate().skip(i) {
                        let w = if l == i || l == n - 1 { 0.5 * h } else { h };
                        let a = match order {
                            KernelArgumentOrder::IntegrationTimeFirst => self.node_eval(grid, l, i)?,
                            KernelArgumentOrder::EvaluationTimeFirst => self.node_eval(grid, i, l)?,
                        };
                        acc += w * a * xl;
                    }
                    *o = acc;
                }
                Ok(out)
            }
        }
    }

    /// `int_0^{t_end} alpha(s_i, r) x(r) dr` for every node.
    pub fn full_integrals(&self, grid: &Grid, x: &[f64]) -> Result<Vec<f64>> {
        let past = self.past_integrals(grid, x)?;
        let future = self.future_integrals(grid, x, KernelArgumentOrder::EvaluationTimeFirst)?;
        Ok(past.iter().zip(&future).map(|(a, b)| a + b).collect())
    }
}

fn check_len(grid: &Grid, x: &[f64]) -> Result<()> {
    if x.len() != grid.len() {
        return Err(invalid(format!(
            "{} samples for a grid of {} nodes",
            x.len(),
            grid.len()
        )));
    }
    Ok(())
}
