//! Quadrature on uniform grids, plus Gauss-Legendre rules for integrating
//! smooth closed-form integrands to near machine precision.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    #[default]
    Trapezoid,
    /// Composite Simpson; needs an odd number of nodes.
    Simpson,
}

impl QuadratureRule {
    pub fn weights(&self, grid: &Grid) -> Result<Vec<f64>> {
        let n = grid.len();
        let h = grid.step();
        match self {
            QuadratureRule::Trapezoid => Ok(trapezoid_weights(n, h)),
            QuadratureRule::Simpson => {
                if n % 2 == 0 {
                    return Err(invalid(format!(
                        "Simpson's rule needs an odd node count, got {n}"
                    )));
                }
                let mut w = vec![0.0; n];
                for (i, wi) in w.iter_mut().enumerate() {
                    *wi = if i == 0 || i == n - 1 {
                        h / 3.0
                    } else if i % 2 == 1 {
                        4.0 * h / 3.0
                    } else {
                        2.0 * h / 3.0
                    };
                }
                Ok(w)
            }
        }
    }

    pub fn integrate(&self, grid: &Grid, samples: &[f64]) -> Result<f64> {
        if samples.len() != grid.len() {
            return Err(invalid(format!(
                "{} samples for a grid of {} nodes",
                samples.len(),
                grid.len()
            )));
        }
        let w = self.weights(grid)?;
        Ok(dot(&w, samples))
    }
}

pub(crate) fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> GaussLegendre {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Composite rule: `panels` equal panels on `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        if b == a {
            return 0.0;
        }
        let width = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + width * p as f64;
            let mid = lo + 0.5 * width;
            let half = 0.5 * width;
            let mut acc = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc += w * f(mid + half * x);
            }
            total += half * acc;
        }
        total
    }
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t: f64, n: usize) -> Grid {
        Grid::uniform(t, n).unwrap()
    }

    #[test]
    fn constant_and_linear() {
        let g = grid(1.0, 11);
        let ones = vec![1.0; 11];
        assert!((QuadratureRule::Trapezoid.integrate(&g, &ones).unwrap() - 1.0).abs() < 1e-15);
        let lin: Vec<f64> = g.nodes();
        let v = QuadratureRule::Trapezoid.integrate(&g, &lin).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let g = grid(1.0, 5);
        let sq: Vec<f64> = g.nodes().iter().map(|s| s * s).collect();
        let v = QuadratureRule::Simpson.integrate(&g, &sq).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        let g = grid(2.0, 9);
        let cube: Vec<f64> = g.nodes().iter().map(|s| s * s * s - 2.0 * s).collect();
        let v = QuadratureRule::Simpson.integrate(&g, &cube).unwrap();
        assert!((v - 0.0).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_length() {
        for n in [3, 5, 101] {
            let g = grid(3.7, n);
            for rule in [QuadratureRule::Trapezoid, QuadratureRule::Simpson] {
                let w = rule.weights(&g).unwrap();
                let sum: f64 = w.iter().sum();
                assert!((sum - 3.7).abs() <= 1e-12 * 3.7);
                assert!(w.iter().all(|&x| x > 0.0));
            }
        }
    }

    #[test]
    fn errors() {
        let g = grid(1.0, 4);
        assert!(QuadratureRule::Simpson.weights(&g).is_err());
        assert!(QuadratureRule::Trapezoid.integrate(&g, &[1.0; 3]).is_err());
    }

    #[test]
    fn richardson_ratios() {
        let f = |s: f64| (2.0 * s).sin() + s.exp();
        let exact = (1.0 - 2.0_f64.cos()) / 2.0 + 1.0_f64.exp() - 1.0;
        for (rule, expected) in [(QuadratureRule::Trapezoid, 4.0), (QuadratureRule::Simpson, 16.0)] {
            let err = |n: usize| {
                let g = grid(1.0, n);
                let y: Vec<f64> = g.nodes().into_iter().map(f).collect();
                (rule.integrate(&g, &y).unwrap() - exact).abs()
            };
            let ratio = err(17) / err(33);
            assert!((ratio / expected - 1.0).abs() < 0.05, "{rule:?}: ratio {ratio}");
        }
    }

    #[test]
    fn gauss_legendre_polynomials_and_exp() {
        let gl = GaussLegendre::new(8);
        // Exact up to degree 15.
        let v = gl.integrate(0.0, 2.0, 1, |x| x.powi(15));
        assert!((v - 2.0_f64.powi(16) / 16.0).abs() < 1e-10);
        let v = gl.integrate(0.0, 3.0, 4, f64::exp);
        assert!((v - (3.0_f64.exp() - 1.0)).abs() < 1e-13);
        let w: f64 = GaussLegendre::new(21).weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }
}
