//! Euler-Lagrange residuals of the reduced and oscillator forms, and the
//! comparison with the numerical functional derivative of the action.
//!
//! Sign convention: residuals are written as equations of motion,
//! `m q'' + ... = 0`, so for every form
//!
//! ```text
//! dS/dq(s) = -residual(s)
//! ```
//!
//! and [`gradient_vs_analytic`] measures `|gradient + residual|`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{Grid, Path};
use crate::kernel::{KernelArgumentOrder, MemoryKernel};
use crate::lagrangian::{functional_gradient, Endpoints, Lagrangian, OscillatorParams, ReducedLagrangian, ToReduced};
use crate::quadrature::QuadratureRule;

/// Residual at the interior nodes `1..n-1`. Endpoints are left out: the
/// equation of motion only holds on the open interval, since the variation
/// vanishes at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualProfile {
    pub grid: Grid,
    /// `r[k]` belongs to node `k + 1`.
    pub r: Vec<f64>,
    pub norm_inf: f64,
    /// Discrete L2 norm with trapezoid weights over the interior nodes.
    pub norm_l2: f64,
}

impl ResidualProfile {
    pub fn new(grid: Grid, r: Vec<f64>) -> ResidualProfile {
        let h = grid.step();
        let norm_inf = r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let norm_l2 = (h * r.iter().map(|x| x * x).sum::<f64>()).sqrt();
        ResidualProfile {
            grid,
            r,
            norm_inf,
            norm_l2,
        }
    }

    /// Times of the residual samples.
    pub fn nodes(&self) -> Vec<f64> {
        self.grid.interior().map(|i| self.grid.node(i)).collect()
    }

    /// `s,residual` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,residual\n");
        for (s, r) in self.nodes().iter().zip(&self.r) {
            let _ = writeln!(out, "{s:.16e},{r:.16e}");
        }
        out
    }
}

/// Residual of the reduced equation of motion
///
/// ```text
/// m q'' + A' q + C' - 2 B q - D - P q(0) - Q q(t)
///   - F(s) int_0^s alpha(s, r) q(r) dr - int_s^t F(r) alpha(., .) q(r) dr
/// ```
///
/// with `q''` from second differences, `A'` and `C'` analytic, and the
/// argument order of the last kernel given by `order`.
pub fn el_residual_analytic(
    spec: &ReducedLagrangian,
    path: &Path,
    order: KernelArgumentOrder,
) -> Result<ResidualProfile> {
    spec.validate()?;
    let grid = *path.grid();
    let q = path.positions();
    let n = q.len();
    let acc = path.acceleration();
    let f = spec.f.sample(&grid);
    let fq: Vec<f64> = f.iter().zip(q).map(|(a, b)| a * b).collect();
    let past = spec.kernel.past_integrals(&grid, q)?;
    let future = spec.kernel.future_integrals(&grid, &fq, order)?;
    let ends = Endpoints {
        start: q[0],
        end: q[n - 1],
    };
    let r = grid
        .interior()
        .map(|i| {
            let s = grid.node(i);
            spec.m * acc[i] + spec.a.derivative(s) * q[i] + spec.c.derivative(s)
                - 2.0 * spec.b.value(s) * q[i]
                - spec.effective_forcing(s, ends)
                - f[i] * past[i]
                - future[i]
        })
        .collect();
    Ok(ResidualProfile::new(grid, r))
}

/// `m q'' + k q + k~ int_0^t alpha(s, r) q(r) dr` with the oscillator's
/// exponential kernel.
pub fn oscillator_residual(params: &OscillatorParams, path: &Path) -> Result<ResidualProfile> {
    oscillator_residual_with_kernel(params, &params.exponential_kernel(), path)
}

/// As [`oscillator_residual`] with the memory kernel replaced; `gamma` in
/// `params` is ignored.
pub fn oscillator_residual_with_kernel(
    params: &OscillatorParams,
    kernel: &MemoryKernel,
    path: &Path,
) -> Result<ResidualProfile> {
    params.validate()?;
    kernel.validate()?;
    let grid = *path.grid();
    let q = path.positions();
    let acc = path.acceleration();
    let mem = kernel.full_integrals(&grid, q)?;
    let r = grid
        .interior()
        .map(|i| params.m * acc[i] + params.k * q[i] + params.k_tilde * mem[i])
        .collect();
    Ok(ResidualProfile::new(grid, r))
}

/// Largest `|g_i + r_i|` over the unflagged interior nodes, where `g` is the
/// numerical functional derivative of the action of `form` and `r` the
/// analytic residual of its reduced form (derived kernel argument order).
///
/// General Lagrangians are differentiated through their own action, so this
/// checks the reduction and the equation of motion together. Use the
/// trapezoid rule: with Simpson weights the discrete gradient alternates
/// between even and odd nodes and has no pointwise continuum limit.
pub fn gradient_vs_analytic<L>(form: &L, path: &Path, rule: QuadratureRule) -> Result<f64>
where
    L: Lagrangian + ToReduced + ?Sized,
{
    let grid = path.grid();
    if grid.len() < 7 {
        return Err(invalid("gradient comparison needs at least 7 nodes"));
    }
    let reduced = form.to_reduced(grid.t_end())?;
    // The action is quadratic, so any step size gives the exact difference
    // quotient; a large one keeps rounding small.
    let h = 1e-2 * path.max_abs().max(1.0);
    let gradient = functional_gradient(form, path, rule, h)?;
    let residual = el_residual_analytic(&reduced, path, KernelArgumentOrder::IntegrationTimeFirst)?;
    Ok(gradient
        .clean_nodes()
        .map(|i| (gradient.values[i] + residual.r[i - 1]).abs())
        .fold(0.0, f64::max))
}
